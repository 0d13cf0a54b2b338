// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

#include <cctype>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace docprobe::lex {

enum class TokenKind {
  Identifier,  // includes keywords; callers compare text
  IntLiteral,
  FloatLiteral,
  StringLiteral,  // "..." and """text blocks"""
  CharLiteral,
  LineComment,
  BlockComment,
  Punct,
};

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::string_view text;

  [[nodiscard]] std::size_t end() const { return offset + text.size(); }
  [[nodiscard]] bool is(char c) const {
    return kind == TokenKind::Punct && text.size() == 1 && text[0] == c;
  }
  [[nodiscard]] bool is_ident(std::string_view s) const {
    return kind == TokenKind::Identifier && text == s;
  }
  [[nodiscard]] bool is_comment() const {
    return kind == TokenKind::LineComment || kind == TokenKind::BlockComment;
  }
};

inline bool is_ident_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || c == '$' || u >= 0x80;
}

inline bool is_ident_char(char c) {
  return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

namespace detail {

inline std::size_t scan_quoted(std::string_view src, std::size_t i, char quote) {
  // i points at the opening quote. Unterminated literals stop at end of line.
  std::size_t j = i + 1;
  while (j < src.size()) {
    char c = src[j];
    if (c == '\\' && j + 1 < src.size()) {
      j += 2;
      continue;
    }
    if (c == quote) return j + 1;
    if (c == '\n') return j;
    ++j;
  }
  return j;
}

inline std::size_t scan_text_block(std::string_view src, std::size_t i) {
  std::size_t j = i + 3;
  while (j < src.size()) {
    if (src[j] == '\\' && j + 1 < src.size()) {
      j += 2;
      continue;
    }
    if (src.compare(j, 3, R"(""")") == 0) return j + 3;
    ++j;
  }
  return j;
}

struct NumberScan {
  std::size_t end;
  bool is_float;
};

inline NumberScan scan_number(std::string_view src, std::size_t i) {
  auto at = [&](std::size_t k) -> char { return k < src.size() ? src[k] : '\0'; };
  auto isdig = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  auto ishex = [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t j = i;
  bool is_float = false;

  if (at(j) == '0' && (at(j + 1) == 'x' || at(j + 1) == 'X')) {
    j += 2;
    while (ishex(at(j)) || at(j) == '_') ++j;
    if (at(j) == '.') {
      is_float = true;
      ++j;
      while (ishex(at(j)) || at(j) == '_') ++j;
    }
    if (at(j) == 'p' || at(j) == 'P') {
      is_float = true;
      ++j;
      if (at(j) == '+' || at(j) == '-') ++j;
      while (isdig(at(j)) || at(j) == '_') ++j;
    }
  } else if (at(j) == '0' && (at(j + 1) == 'b' || at(j + 1) == 'B')) {
    j += 2;
    while (at(j) == '0' || at(j) == '1' || at(j) == '_') ++j;
  } else {
    while (isdig(at(j)) || at(j) == '_') ++j;
    if (at(j) == '.' && isdig(at(j + 1))) {
      is_float = true;
      ++j;
      while (isdig(at(j)) || at(j) == '_') ++j;
    } else if (at(j) == '.' && j > i && !is_ident_start(at(j + 1)) && at(j + 1) != '.') {
      // "1." is a double literal; "1.foo" and "1..2" are not.
      is_float = true;
      ++j;
    }
    if ((at(j) == 'e' || at(j) == 'E') &&
        (isdig(at(j + 1)) || ((at(j + 1) == '+' || at(j + 1) == '-') && isdig(at(j + 2))))) {
      is_float = true;
      j += 2;
      while (isdig(at(j)) || at(j) == '_') ++j;
    }
    if (at(j) == 'f' || at(j) == 'F' || at(j) == 'd' || at(j) == 'D') {
      is_float = true;
      ++j;
      return {j, is_float};
    }
  }
  if (!is_float && (at(j) == 'l' || at(j) == 'L')) ++j;
  return {j, is_float};
}

}  // namespace detail

/// Tokenizes Java-like source. Never fails: unknown bytes become single-char
/// punctuation, unterminated literals and comments run to end of line/input.
/// Whitespace is not emitted; offsets index into `src`.
inline std::vector<Token> tokenize(std::string_view src, bool keep_comments = true) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    if (!keep_comments && (kind == TokenKind::LineComment || kind == TokenKind::BlockComment)) {
      return;
    }
    out.push_back(Token{kind, begin, src.substr(begin, end - begin)});
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      std::size_t j = src.find('\n', i);
      if (j == std::string_view::npos) j = src.size();
      push(TokenKind::LineComment, i, j);
      i = j;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      std::size_t j = src.find("*/", i + 2);
      j = (j == std::string_view::npos) ? src.size() : j + 2;
      push(TokenKind::BlockComment, i, j);
      i = j;
      continue;
    }
    if (c == '"') {
      std::size_t j = src.compare(i, 3, R"(""")") == 0 ? detail::scan_text_block(src, i)
                                                       : detail::scan_quoted(src, i, '"');
      push(TokenKind::StringLiteral, i, j);
      i = j;
      continue;
    }
    if (c == '\'') {
      std::size_t j = detail::scan_quoted(src, i, '\'');
      push(TokenKind::CharLiteral, i, j);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      auto num = detail::scan_number(src, i);
      push(num.is_float ? TokenKind::FloatLiteral : TokenKind::IntLiteral, i, num.end);
      i = num.end;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      push(TokenKind::Identifier, i, j);
      i = j;
      continue;
    }
    if (src.compare(i, 3, "...") == 0) {
      push(TokenKind::Punct, i, i + 3);
      i += 3;
      continue;
    }
    push(TokenKind::Punct, i, i + 1);
    ++i;
  }
  return out;
}

/// Index of the token closing the bracket opened at `open`, or nullopt if
/// unbalanced. Handles (), [], {} and ignores other bracket kinds.
inline std::optional<std::size_t> matching_close(const std::vector<Token>& toks, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind != TokenKind::Punct || t.text.size() != 1) continue;
    char c = t.text[0];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') {
      if (--depth == 0) return i;
      if (depth < 0) return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace docprobe::lex
