package calc;

import java.util.Objects;

public class Calc {
  private final int base;

  public Calc(int base) { this.base = base; }

  public Calc() { this(0); }

  public int add(int x) { return base + x; }

  public int div(int x) {
    if (x == 0) throw new ArithmeticException("zero");
    return base / x;
  }

  public int neg() { return -base; }

  public String label(String prefix) { return Objects.requireNonNull(prefix) + base; }
}
