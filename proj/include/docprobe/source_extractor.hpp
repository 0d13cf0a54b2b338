// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Lightweight extraction of method signatures, class names and constructors
// from Java source. This is a lexical scan with bracket-depth tracking, not a
// parser: it recovers just enough structure to build prompts.

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docprobe/error.hpp"
#include "docprobe/java_lexer.hpp"

namespace docprobe {

struct MethodSignature {
  std::string name;
  std::size_t arity = 0;
  std::vector<std::string> parameter_types;  // erased: generics/annotations dropped
  std::string return_type;                   // empty for constructors
  std::vector<std::string> modifiers;
  std::string raw_text;

  bool operator==(const MethodSignature&) const = default;
};

struct ClassInfo {
  std::string class_name;
  std::vector<MethodSignature> constructors;
  std::filesystem::path source_path;
};

/// Removes line and block comments. String, char and text-block literals are
/// copied verbatim. A single space is emitted in place of a block comment only
/// when deleting it would fuse a '/' with a following '/' or '*' into a new
/// comment opener, which keeps the function idempotent.
inline std::string strip_comments(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  std::size_t copied = 0;
  for (const auto& tok : lex::tokenize(src, /*keep_comments=*/true)) {
    if (!tok.is_comment()) continue;
    out.append(src.substr(copied, tok.offset - copied));
    copied = tok.end();
    if (tok.kind == lex::TokenKind::BlockComment && !out.empty() && out.back() == '/' &&
        copied < src.size() && (src[copied] == '/' || src[copied] == '*')) {
      out.push_back(' ');
    }
  }
  out.append(src.substr(copied));
  return out;
}

namespace detail {

inline bool is_modifier(std::string_view s) {
  static constexpr std::array<std::string_view, 13> kMods = {
      "public",   "protected", "private",  "static",       "final",   "abstract", "native",
      "synchronized", "transient", "volatile", "strictfp", "default", "sealed"};
  return std::find(kMods.begin(), kMods.end(), s) != kMods.end() || s == "non-sealed";
}

inline bool is_statement_keyword(std::string_view s) {
  static constexpr std::array<std::string_view, 20> kWords = {
      "if",   "for",   "while",  "switch", "catch", "synchronized", "try",
      "return", "new", "throw",  "else",   "case",  "assert",       "do",
      "super", "this", "yield",  "instanceof", "finally", "throws"};
  return std::find(kWords.begin(), kWords.end(), s) != kWords.end();
}

inline bool is_type_keyword(std::string_view s) {
  return s == "class" || s == "interface" || s == "enum" || s == "record";
}

/// Per-token brace depth (depth *before* the token; a '{' has the depth of
/// its enclosing scope).
inline std::vector<int> brace_depths(const std::vector<lex::Token>& toks) {
  std::vector<int> depth(toks.size());
  int d = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].is('}')) --d;
    depth[i] = d;
    if (toks[i].is('{')) ++d;
  }
  return depth;
}

// Index of the '(' that matches the ')' at `close`, scanning backwards.
inline std::optional<std::size_t> matching_open(const std::vector<lex::Token>& toks,
                                                std::size_t close) {
  int depth = 0;
  for (std::size_t i = close + 1; i-- > 0;) {
    if (toks[i].is(')')) ++depth;
    if (toks[i].is('(')) {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// A method or constructor declaration located in a token stream.
struct MethodDecl {
  std::size_t start;     // first token (annotations/modifiers included)
  std::size_t name;      // method name token
  std::size_t lparen;
  std::size_t rparen;
  std::size_t sig_end;   // last token of the signature (')' or throws clause)
  std::optional<std::size_t> body_open;  // '{' if the declaration has a body
  std::size_t end;       // '}' closing the body, or ';'
  int depth;             // brace depth of the declaration
};

/// Finds method and constructor declarations anywhere in `toks` (comments
/// must already be removed). Results are in textual order.
inline std::vector<MethodDecl> find_method_decls(const std::vector<lex::Token>& toks) {
  using lex::TokenKind;
  std::vector<MethodDecl> out;
  const auto depth = detail::brace_depths(toks);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    const auto& name = toks[i];
    if (name.kind != TokenKind::Identifier || !toks[i + 1].is('(')) continue;
    if (detail::is_statement_keyword(name.text) || detail::is_modifier(name.text) ||
        detail::is_type_keyword(name.text)) {
      continue;
    }
    auto rparen = lex::matching_close(toks, i + 1);
    if (!rparen) continue;

    // Optional throws clause, then '{' or ';'.
    std::size_t j = *rparen + 1;
    std::size_t sig_end = *rparen;
    if (j < toks.size() && toks[j].is_ident("throws")) {
      ++j;
      while (j < toks.size() && (toks[j].kind == TokenKind::Identifier || toks[j].is('.') ||
                                 toks[j].is(',') || toks[j].is('<') || toks[j].is('>'))) {
        sig_end = j;
        ++j;
      }
    }
    if (j >= toks.size() || !(toks[j].is('{') || toks[j].is(';'))) continue;
    const bool has_body = toks[j].is('{');

    bool typed = false;  // preceded by a return type
    if (i > 0) {
      const auto& prev = toks[i - 1];
      if (prev.is('.') || prev.is('@') || prev.is(':')) continue;
      if (prev.kind == TokenKind::Identifier) {
        if (detail::is_statement_keyword(prev.text) || detail::is_type_keyword(prev.text)) {
          continue;
        }
        typed = !detail::is_modifier(prev.text);
      } else if (prev.is('>') || prev.is(']')) {
        typed = true;
      } else if (prev.is(')')) {
        // Only an annotation argument list may directly precede a declaration.
        auto open = detail::matching_open(toks, i - 1);
        if (!open || *open < 2 || toks[*open - 1].kind != TokenKind::Identifier) continue;
        std::size_t k = *open - 1;
        while (k >= 2 && toks[k - 1].is('.') && toks[k - 2].kind == TokenKind::Identifier) k -= 2;
        if (k == 0 || !toks[k - 1].is('@')) continue;
      } else if (!(prev.is('{') || prev.is('}') || prev.is(';'))) {
        continue;
      }
    }
    if (!has_body && !typed) continue;  // a bare call statement like `foo();`

    // Walk back to the start of the declaration.
    std::size_t start = i;
    while (start > 0) {
      const auto& t = toks[start - 1];
      if (t.is(';') || t.is('{') || t.is('}')) break;
      if (t.is(')')) {
        auto open = detail::matching_open(toks, start - 1);
        if (!open) break;
        start = *open;
        continue;
      }
      --start;
    }

    std::size_t end = j;
    if (has_body) {
      auto close = lex::matching_close(toks, j);
      end = close ? *close : toks.size() - 1;
    }
    out.push_back(MethodDecl{start, i, i + 1, *rparen, sig_end,
                             has_body ? std::optional<std::size_t>(j) : std::nullopt, end,
                             depth[i]});
  }
  return out;
}

namespace detail {

inline std::string join_type_tokens(const std::vector<lex::Token>& toks, std::size_t from,
                                    std::size_t to) {
  // Erases generic arguments and annotations; keeps qualifiers, [] and ...
  std::string out;
  int angle = 0;
  for (std::size_t k = from; k < to; ++k) {
    const auto& t = toks[k];
    if (t.is('@') && k + 1 < to) {
      ++k;
      while (k + 2 < to && toks[k + 1].is('.')) k += 2;
      if (k + 1 < to && toks[k + 1].is('(')) {
        auto close = lex::matching_close(toks, k + 1);
        k = close ? *close : to;
      }
      continue;
    }
    if (t.is('<')) {
      ++angle;
      continue;
    }
    if (t.is('>')) {
      --angle;
      continue;
    }
    if (angle > 0) continue;
    if (t.is_ident("final")) continue;
    out.append(t.text);
  }
  return out;
}

inline std::vector<std::string> parse_parameter_types(const std::vector<lex::Token>& toks,
                                                      std::size_t lparen, std::size_t rparen) {
  std::vector<std::string> types;
  if (rparen == lparen + 1) return types;
  std::size_t from = lparen + 1;
  int depth = 0;
  for (std::size_t k = lparen + 1; k <= rparen; ++k) {
    const auto& t = toks[k];
    bool at_end = (k == rparen);
    if (!at_end) {
      if (t.is('(') || t.is('[') || t.is('{') || t.is('<')) ++depth;
      if (t.is(')') || t.is(']') || t.is('}') || t.is('>')) --depth;
    }
    if (at_end || (depth == 0 && t.is(','))) {
      // Drop trailing `[]` pairs after the name (C-style arrays) and the name.
      std::size_t stop = k;
      std::string dims;
      while (stop >= from + 2 && toks[stop - 1].is(']') && toks[stop - 2].is('[')) {
        dims += "[]";
        stop -= 2;
      }
      if (stop > from && toks[stop - 1].kind == lex::TokenKind::Identifier) --stop;
      types.push_back(join_type_tokens(toks, from, stop) + dims);
      from = k + 1;
    }
  }
  return types;
}

inline MethodSignature build_signature(std::string_view src, const std::vector<lex::Token>& toks,
                                       const MethodDecl& decl) {
  MethodSignature sig;
  sig.name = std::string(toks[decl.name].text);
  sig.parameter_types = parse_parameter_types(toks, decl.lparen, decl.rparen);
  sig.arity = sig.parameter_types.size();
  const auto begin = toks[decl.start].offset;
  sig.raw_text = std::string(src.substr(begin, toks[decl.sig_end].end() - begin));

  // Leading annotations, modifiers and type parameters; the rest is the return type.
  std::size_t k = decl.start;
  while (k < decl.name) {
    const auto& t = toks[k];
    if (t.is('@')) {
      ++k;
      while (k + 2 < decl.name && toks[k + 1].is('.')) k += 2;
      ++k;
      if (k < decl.name && toks[k].is('(')) {
        auto close = lex::matching_close(toks, k);
        k = close ? *close + 1 : decl.name;
      }
      continue;
    }
    if (t.kind == lex::TokenKind::Identifier && is_modifier(t.text)) {
      sig.modifiers.emplace_back(t.text);
      ++k;
      continue;
    }
    if (t.is('<')) {
      int angle = 0;
      for (; k < decl.name; ++k) {
        if (toks[k].is('<')) ++angle;
        if (toks[k].is('>') && --angle == 0) break;
      }
      ++k;
      continue;
    }
    break;
  }
  if (k < decl.name) {
    sig.return_type = std::string(
        src.substr(toks[k].offset, toks[decl.name - 1].end() - toks[k].offset));
  }
  return sig;
}

}  // namespace detail

/// First declaration (in textual order) named `method_name` with exactly
/// `arity` parameters. Overloads with equal arity resolve to the first one.
inline MethodSignature extract_method_signature(std::string_view source_text,
                                                std::string_view method_name, std::size_t arity) {
  const std::string stripped = strip_comments(source_text);
  const auto toks = lex::tokenize(stripped, false);
  for (const auto& decl : find_method_decls(toks)) {
    if (toks[decl.name].text != method_name) continue;
    auto sig = detail::build_signature(stripped, toks, decl);
    if (sig.arity == arity) return sig;
  }
  throw Error(ErrorCode::NotFound,
              std::string(method_name) + "/" + std::to_string(arity));
}

/// Comment-free text of the same declaration extract_method_signature picks,
/// body included.
inline std::string extract_method_source(std::string_view source_text, std::string_view method_name,
                                         std::size_t arity) {
  const std::string stripped = strip_comments(source_text);
  const auto toks = lex::tokenize(stripped, false);
  for (const auto& decl : find_method_decls(toks)) {
    if (toks[decl.name].text != method_name) continue;
    if (detail::parse_parameter_types(toks, decl.lparen, decl.rparen).size() != arity) continue;
    const auto begin = toks[decl.start].offset;
    return stripped.substr(begin, toks[decl.end].end() - begin);
  }
  throw Error(ErrorCode::NotFound,
              std::string(method_name) + "/" + std::to_string(arity));
}

/// A type declaration located in a token stream.
struct TypeDecl {
  std::size_t keyword;
  std::size_t name;
  std::size_t body_open;
  std::size_t body_close;
  int depth;
};

inline std::vector<TypeDecl> find_type_decls(const std::vector<lex::Token>& toks) {
  std::vector<TypeDecl> out;
  const auto depth = detail::brace_depths(toks);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].kind != lex::TokenKind::Identifier || !detail::is_type_keyword(toks[i].text)) {
      continue;
    }
    if (toks[i + 1].kind != lex::TokenKind::Identifier) continue;
    if (i > 0 && toks[i - 1].is('.')) continue;  // Foo.class
    std::size_t j = i + 2;
    while (j < toks.size() && !toks[j].is('{') && !toks[j].is(';')) {
      if (toks[j].is('(')) {  // record header
        auto close = lex::matching_close(toks, j);
        if (!close) break;
        j = *close;
      }
      ++j;
    }
    if (j >= toks.size() || !toks[j].is('{')) continue;
    auto close = lex::matching_close(toks, j);
    out.push_back(TypeDecl{i, i + 1, j, close ? *close : toks.size(), depth[i]});
  }
  return out;
}

/// Name of the first top-level type plus the constructors declared directly
/// inside it. An empty constructor list means the implicit default one.
inline ClassInfo extract_class_info(std::string_view source_text,
                                    const std::filesystem::path& source_path) {
  const std::string stripped = strip_comments(source_text);
  const auto toks = lex::tokenize(stripped, false);
  for (const auto& type : find_type_decls(toks)) {
    if (type.depth != 0) continue;
    ClassInfo info;
    info.class_name = std::string(toks[type.name].text);
    info.source_path = source_path;
    for (const auto& decl : find_method_decls(toks)) {
      if (decl.name <= type.body_open || decl.name >= type.body_close) continue;
      if (decl.depth != type.depth + 1 || !decl.body_open) continue;
      if (toks[decl.name].text != info.class_name) continue;
      info.constructors.push_back(detail::build_signature(stripped, toks, decl));
    }
    return info;
  }
  throw Error(ErrorCode::NoTypeDeclaration, source_path.string());
}

/// `package a.b.c;` declaration, if any.
inline std::optional<std::string> package_name(std::string_view source_text) {
  const std::string stripped = strip_comments(source_text);
  const auto toks = lex::tokenize(stripped, false);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (!toks[i].is_ident("package")) continue;
    std::string name;
    for (std::size_t k = i + 1; k < toks.size() && !toks[k].is(';'); ++k) name += toks[k].text;
    return name;
  }
  return std::nullopt;
}

}  // namespace docprobe
