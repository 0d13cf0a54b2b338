// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "docprobe/io.hpp"
#include "docprobe/test_corpus.hpp"

using namespace docprobe;

namespace {

MethodSignature sig(std::string name, std::size_t arity) {
  MethodSignature s;
  s.name = std::move(name);
  s.arity = arity;
  s.parameter_types.assign(arity, "int");
  return s;
}

TestCase make_test(std::string file, std::string body, std::size_t pos = 0) {
  return TestCase{std::move(file), "t", std::move(body), {}, pos};
}

}  // namespace

TEST_CASE("label_test_relevance spec examples", "[test_corpus]") {
  auto both = label_test_relevance(make_test("T.java", "Foo f = new Foo(); f.bar(1, 2);"), "Foo",
                                   sig("bar", 2));
  CHECK(both == RelevanceLabel{true, true});

  auto nested = label_test_relevance(make_test("T.java", "f.bar(g(1,2));"), "Foo", sig("bar", 1));
  CHECK(nested.has_method_call);
  CHECK_FALSE(nested.has_class_ref);

  auto commented = label_test_relevance(make_test("T.java", "// Foo\nbaz();"), "Foo", sig("bar", 2));
  CHECK(commented == RelevanceLabel{false, false});
}

TEST_CASE("label_test_relevance matching details", "[test_corpus]") {
  // Whole identifiers only.
  CHECK_FALSE(label_test_relevance(make_test("T", "FooBar x = null;"), "Foo", sig("bar", 0))
                  .has_class_ref);
  // Zero arguments iff empty parens.
  CHECK(label_test_relevance(make_test("T", "x.bar();"), "Foo", sig("bar", 0)).has_method_call);
  CHECK_FALSE(label_test_relevance(make_test("T", "x.bar(a);"), "Foo", sig("bar", 0)).has_method_call);
  // Commas inside strings, arrays and lambdas do not count.
  CHECK(label_test_relevance(make_test("T", "x.bar(\"a,b\", new int[]{1,2}, y -> { f(1,2); });"),
                             "Foo", sig("bar", 3))
            .has_method_call);
  // Any call with the right arity is enough.
  CHECK(label_test_relevance(make_test("T", "bar(1); bar(1, 2);"), "Foo", sig("bar", 2))
            .has_method_call);
  // Class name inside a string literal is not a reference.
  CHECK_FALSE(label_test_relevance(make_test("T", "s = \"Foo\";"), "Foo", sig("bar", 0)).has_class_ref);
}

TEST_CASE("tier derivation", "[test_corpus]") {
  CHECK(tier({true, true}) == RelevanceTier::Both);
  CHECK(tier({true, false}) == RelevanceTier::ClassOnly);
  CHECK(tier({false, true}) == RelevanceTier::MethodOnly);
  CHECK(tier({false, false}) == RelevanceTier::None);
}

TEST_CASE("rank_relevant_tests orders by tier", "[test_corpus]") {
  const auto target = sig("bar", 1);
  std::vector<TestCase> tests = {
      make_test("m.java", "x.bar(1);"),
      make_test("b.java", "Foo f = new Foo(); f.bar(2);"),
      make_test("c.java", "Foo f = new Foo();"),
  };
  auto ranked = rank_relevant_tests(tests, "Foo", target, 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].file_path == "b.java");
  CHECK(ranked[1].file_path == "c.java");
  CHECK(ranked[2].file_path == "m.java");
}

TEST_CASE("rank_relevant_tests drops irrelevant tests and breaks ties stably", "[test_corpus]") {
  const auto target = sig("bar", 2);
  std::vector<TestCase> none = {make_test("a", "x();"), make_test("b", "y();")};
  CHECK(rank_relevant_tests(none, "Foo", target, 2).empty());

  std::vector<TestCase> ties = {make_test("b/T.java", "new Foo().bar(1, 2);"),
                                make_test("a/T.java", "new Foo().bar(1, 2);", 10),
                                make_test("a/T.java", "new Foo().bar(3, 4);", 5)};
  auto top = rank_relevant_tests(ties, "Foo", target, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].file_path == "a/T.java");
  CHECK(top[0].position == 5);
}

TEST_CASE("rank_relevant_tests signals an empty corpus", "[test_corpus]") {
  try {
    (void)rank_relevant_tests({}, "Foo", sig("bar", 0), 1);
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCorpus);
  }
}

TEST_CASE("rank_relevant_tests never puts a better tier after a worse one",
          "[test_corpus][property]") {
  std::mt19937 rng(2024);
  const std::vector<std::string> snippets = {"Foo f = new Foo();", "f.bar(1);", "f.bar(1, 2);",
                                             "Other o;", "bar();", "// Foo bar(1)"};
  std::uniform_int_distribution<std::size_t> pick(0, snippets.size() - 1);
  std::uniform_int_distribution<int> count(1, 30);
  const auto target = sig("bar", 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TestCase> tests;
    for (int i = count(rng); i > 0; --i) {
      std::string body = snippets[pick(rng)] + "\n" + snippets[pick(rng)];
      tests.push_back(make_test("f" + std::to_string(rng() % 4) + ".java", body, rng() % 100));
    }
    auto ranked = rank_relevant_tests(tests, "Foo", target, tests.size());
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      CHECK(tier(label_test_relevance(ranked[i - 1], "Foo", target)) <=
            tier(label_test_relevance(ranked[i], "Foo", target)));
    }
    for (const auto& t : ranked) {
      CHECK(tier(label_test_relevance(t, "Foo", target)) != RelevanceTier::None);
    }
    CHECK(ranked == rank_relevant_tests(tests, "Foo", target, tests.size()));
  }
}

TEST_CASE("sanitize_literals replaces strings and integers", "[test_corpus]") {
  CHECK(sanitize_literals("assertEquals(\"xK9\", f.g(42))") ==
        "assertEquals(\"str\", f.g(0))");
  CHECK(sanitize_literals("assertEquals(3.5, h(), 0.01)") == "assertEquals(3.5, h(), 0.01)");
  CHECK(sanitize_literals("long v = -123L; int h = 0x1F; boolean b = true; char c = 'x';") ==
        "long v = -0L; int h = 0; boolean b = true; char c = 'x';");
  CHECK(sanitize_literals("double d = 1e5; float f = 2f; double e = 1.;") ==
        "double d = 1e5; float f = 2f; double e = 1.;");
  CHECK(sanitize_literals("x = arr[3].length + v1;") == "x = arr[0].length + v1;");
  const std::string once = sanitize_literals("f(\"a\\\"b\", 7, \"\"\"\nblock\n\"\"\")");
  CHECK(once == "f(\"str\", 0, \"str\")");
  CHECK(sanitize_literals(once) == once);
}

TEST_CASE("sanitize_literals leaves no original literal and keeps token count",
          "[test_corpus][property]") {
  std::mt19937 rng(5);
  const std::vector<std::string> pieces = {"foo", "(", ")", ",", ";", "\"abc\"", "\"\"",
                                           "123", "0", "9L", "0xFF", "1.5", "2e3", "'c'",
                                           "true", "-", "+", "x1", "// 77\n", "/* \"s\" */"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::string src;
    for (int i = 0; i < 25; ++i) src += pieces[pick(rng)] + " ";
    const auto out = sanitize_literals(src);
    const auto before = lex::tokenize(src);
    const auto after = lex::tokenize(out);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < after.size(); ++i) {
      CHECK(before[i].kind == after[i].kind);
      if (after[i].kind == lex::TokenKind::StringLiteral) CHECK(after[i].text == "\"str\"");
      if (after[i].kind == lex::TokenKind::IntLiteral) {
        CHECK((after[i].text == "0" || after[i].text == "0L"));
      }
      if (after[i].kind != lex::TokenKind::StringLiteral &&
          after[i].kind != lex::TokenKind::IntLiteral) {
        CHECK(before[i].text == after[i].text);
      }
    }
    CHECK(sanitize_literals(out) == out);
  }
}

TEST_CASE("extract_test_cases recognizes test methods at depth 1", "[test_corpus]") {
  const std::string src = R"(package p;
import org.junit.Test;
import static org.junit.Assert.*;

public class FooTest {
  private Foo foo;

  @Before
  public void setUp() { foo = new Foo(); }

  @Test
  public void returnsSum() {
    assertEquals(3, foo.add(1, 2));
  }

  @org.junit.jupiter.api.Test
  void other() { }

  public void testLegacyStyle() throws Exception {
    Runnable r = new Runnable() { public void testInner() {} public void run() {} };
  }

  private int helper(int x) { return x; }
}
)";
  auto tests = extract_test_cases(src, "test/FooTest.java");
  REQUIRE(tests.size() == 3);
  CHECK(tests[0].method_name == "returnsSum");
  CHECK(tests[0].body.starts_with("@Test"));
  CHECK(tests[0].body.ends_with("}"));
  CHECK(tests[1].method_name == "other");
  CHECK(tests[2].method_name == "testLegacyStyle");
  CHECK(tests[0].imports ==
        std::vector<std::string>{"import org.junit.Test;", "import static org.junit.Assert.*;"});
  CHECK(tests[0].position < tests[1].position);
}

TEST_CASE("load_test_corpus walks test globs", "[test_corpus]") {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "docprobe_corpus_test";
  fs::remove_all(root);
  fs::create_directories(root / "test/a");
  fs::create_directories(root / "src");
  write_file(root / "test/a/ATest.java", "class ATest { @Test void t1() { new Foo(); } }");
  write_file(root / "test/BTest.java", "class BTest { @Test void t2() { } }");
  write_file(root / "src/Foo.java", "class Foo { @Test void notATestFile() {} }");
  auto corpus = load_test_corpus(root, {"test/**/*.java"});
  REQUIRE(corpus.files.size() == 2);
  CHECK(corpus.files[0] == "test/BTest.java");
  CHECK(corpus.files[1] == "test/a/ATest.java");
  REQUIRE(corpus.tests.size() == 2);
  CHECK(corpus.tests[1].file_path == "test/a/ATest.java");
  fs::remove_all(root);
}

TEST_CASE("glob_match semantics", "[test_corpus]") {
  CHECK(glob_match("test/**/*.java", "test/X.java"));
  CHECK(glob_match("test/**/*.java", "test/a/b/X.java"));
  CHECK_FALSE(glob_match("test/*.java", "test/a/X.java"));
  CHECK(glob_match("**/*Test.java", "x/FooTest.java"));
  CHECK_FALSE(glob_match("*.java", "a.jav"));
}
