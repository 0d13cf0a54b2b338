// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Prompt rendering, completion backends and response parsing for the two
// prompting stages: property extraction, then test generation per property.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "docprobe/error.hpp"
#include "docprobe/io.hpp"
#include "docprobe/java_lexer.hpp"
#include "docprobe/source_extractor.hpp"
#include "docprobe/test_corpus.hpp"
#include "json.hpp"

namespace docprobe {

enum class TemplateId { CommentGen, PropertyExtract, TestGen };

inline std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::CommentGen: return "comment_gen";
    case TemplateId::PropertyExtract: return "property_extract";
    case TemplateId::TestGen: return "test_gen";
  }
  return "unknown";
}

struct PromptTemplate {
  TemplateId id;
  int version;
  std::string_view system_text;
  std::string_view user_text;
};

// Prompt wording is versioned: changing any text here must bump the version,
// which also changes every digest and therefore every mock fixture name.
inline const PromptTemplate& prompt_template(TemplateId id) {
  static const PromptTemplate kCommentGen{
      TemplateId::CommentGen, 1,
      "You are an experienced Java developer who writes method documentation.",
      "Write a Javadoc comment for the following Java method. Describe what the method does, "
      "its parameters, its return value and the exceptions it throws.\n"
      "\n"
      "```java\n"
      "{{method_body}}\n"
      "```\n"
      "\n"
      "Return only the comment."};
  static const PromptTemplate kPropertyExtract{
      TemplateId::PropertyExtract, 1,
      "You are an experienced Java developer. You read method documentation and turn each "
      "behavioural claim into a property that a unit test can check.",
      "Here is the documentation comment of a Java method:\n"
      "\n"
      "{{comment}}\n"
      "\n"
      "The method signature is:\n"
      "\n"
      "{{signature}}\n"
      "\n"
      "List the testable properties stated in the comment, one per line, each in the form\n"
      "WHEN [condition], THEN the method [behavior]\n"
      "\n"
      "Include only properties the comment states. Decide yourself how many there are."};
  static const PromptTemplate kTestGen{
      TemplateId::TestGen, 1,
      "You are an experienced Java developer who writes JUnit tests.",
      "Class under test: {{class_name}}\n"
      "\n"
      "Constructors:\n"
      "{{constructors}}\n"
      "\n"
      "Method under test:\n"
      "{{signature}}\n"
      "\n"
      "Example tests from the existing test suite:\n"
      "{{example_tests}}\n"
      "\n"
      "Property to check:\n"
      "{{property}}\n"
      "\n"
      "Write three JUnit test methods that exercise this property with different inputs. "
      "Annotate each with @Test and put all of them, together with any import statements "
      "they need, in a single ```java code block."};
  switch (id) {
    case TemplateId::CommentGen: return kCommentGen;
    case TemplateId::PropertyExtract: return kPropertyExtract;
    case TemplateId::TestGen: return kTestGen;
  }
  return kPropertyExtract;
}

struct PromptBundle {
  TemplateId template_id = TemplateId::PropertyExtract;
  std::string system_text;
  std::string user_text;
  std::string digest;  // lowercase hex SHA-256
};

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "EVP_Digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

/// CRLF -> LF, trailing whitespace stripped from every line, trailing blank
/// lines dropped.
inline std::string canonicalize_text(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t nl = text.find('\n', i);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(i, nl - i);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
      line.remove_suffix(1);
    }
    out.append(line);
    out.push_back('\n');
    i = nl + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

inline std::string prompt_digest(TemplateId id, std::string_view system_text,
                                 std::string_view user_text) {
  const auto& tpl = prompt_template(id);
  std::string material = std::string(to_string(id)) + "/v" + std::to_string(tpl.version);
  material += '\x1f';
  material += canonicalize_text(system_text);
  material += '\x1f';
  material += canonicalize_text(user_text);
  return sha256_hex(material);
}

using PromptContext = std::map<std::string, std::string, std::less<>>;

/// Substitutes every {{name}} in the template. Values are inserted verbatim
/// and never rescanned for placeholders.
inline PromptBundle render_prompt(TemplateId id, const PromptContext& context) {
  const auto& tpl = prompt_template(id);
  auto substitute = [&](std::string_view text) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
      const auto open = text.find("{{", i);
      if (open == std::string_view::npos) {
        out.append(text.substr(i));
        break;
      }
      const auto close = text.find("}}", open + 2);
      if (close == std::string_view::npos) {
        out.append(text.substr(i));
        break;
      }
      out.append(text.substr(i, open - i));
      const auto name = text.substr(open + 2, close - open - 2);
      auto it = context.find(name);
      if (it == context.end()) throw Error(ErrorCode::MissingPlaceholder, std::string(name));
      out.append(it->second);
      i = close + 2;
    }
    return out;
  };
  PromptBundle bundle;
  bundle.template_id = id;
  bundle.system_text = substitute(tpl.system_text);
  bundle.user_text = substitute(tpl.user_text);
  bundle.digest = prompt_digest(id, bundle.system_text, bundle.user_text);
  return bundle;
}

// ---------------------------------------------------------------------------
// Response parsing

struct PropertySpec {
  std::size_t index = 0;  // 1-based, in response order
  std::string condition;
  std::string behavior;
  std::string raw_line;

  [[nodiscard]] std::string to_line() const { return "WHEN " + condition + ", THEN " + behavior; }
  bool operator==(const PropertySpec&) const = default;
};

inline constexpr std::size_t kDefaultPropertyCap = 10;

namespace detail {

inline std::string trim_markup(std::string s) {
  auto junk = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '_' || c == ':' ||
           c == ',';
  };
  while (!s.empty() && junk(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && junk(s[b])) ++b;
  return s.substr(b);
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

/// One property per line holding a WHEN marker followed by a THEN marker
/// (case-insensitive, whole words). The condition runs up to the first THEN.
inline std::vector<PropertySpec> parse_properties(std::string_view response,
                                                  std::size_t cap = kDefaultPropertyCap) {
  if (cap == 0) throw Error(ErrorCode::OutOfRange, "property cap must be >= 1");
  static const std::regex kPattern(R"(\bwhen\b(.*?)\bthen\b(.*))", std::regex::icase);
  std::vector<PropertySpec> out;
  std::size_t i = 0;
  while (i < response.size() && out.size() < cap) {
    std::size_t nl = response.find('\n', i);
    if (nl == std::string_view::npos) nl = response.size();
    const std::string line = detail::trim(response.substr(i, nl - i));
    i = nl + 1;
    std::smatch m;
    if (!std::regex_search(line, m, kPattern)) continue;
    PropertySpec spec;
    spec.condition = detail::trim_markup(m[1].str());
    spec.behavior = detail::trim_markup(m[2].str());
    if (spec.condition.empty() || spec.behavior.empty()) continue;
    spec.raw_line = line;
    spec.index = out.size() + 1;
    out.push_back(std::move(spec));
  }
  if (out.empty()) throw Error(ErrorCode::NoPropertiesFound, "");
  return out;
}

struct GeneratedTestSource {
  std::size_t property_index = 0;
  std::size_t ordinal = 0;  // 1..3
  std::string method_name;
  std::string source;
  std::vector<std::string> imports;

  bool operator==(const GeneratedTestSource&) const = default;
};

inline constexpr std::size_t kTestsPerProperty = 3;

/// Contents of ``` fenced blocks, or the whole response if there are none.
inline std::vector<std::string> fenced_blocks(std::string_view response) {
  std::vector<std::string> blocks;
  std::size_t i = 0;
  while (true) {
    auto open = response.find("```", i);
    if (open == std::string_view::npos) break;
    auto body = response.find('\n', open);
    if (body == std::string_view::npos) break;
    auto close = response.find("```", body + 1);
    if (close == std::string_view::npos) close = response.size();
    blocks.emplace_back(response.substr(body + 1, close - body - 1));
    i = close + 3;
    if (close == response.size()) break;
  }
  if (blocks.empty()) blocks.emplace_back(response);
  return blocks;
}

inline std::vector<GeneratedTestSource> parse_test_sources(std::string_view response,
                                                           std::size_t property_index) {
  std::vector<GeneratedTestSource> out;
  for (const auto& block : fenced_blocks(response)) {
    const auto toks = lex::tokenize(block, false);
    const auto imports = extract_imports(block);
    std::vector<MethodDecl> decls;
    for (const auto& d : find_method_decls(toks)) {
      if (d.body_open) decls.push_back(d);
    }
    if (decls.empty()) continue;
    // Bare methods sit at depth 0; methods inside a wrapper class at depth 1.
    const int depth = std::min_element(decls.begin(), decls.end(), [](const auto& a, const auto& b) {
                        return a.depth < b.depth;
                      })->depth;
    std::vector<MethodDecl> chosen;
    for (const auto& d : decls) {
      if (d.depth == depth && is_test_method(toks, d)) chosen.push_back(d);
    }
    if (chosen.empty()) {
      for (const auto& d : decls) {
        if (d.depth == depth) chosen.push_back(d);
      }
    }
    for (const auto& d : chosen) {
      if (out.size() == kTestsPerProperty) break;
      const auto begin = toks[d.start].offset;
      GeneratedTestSource t;
      t.property_index = property_index;
      t.ordinal = out.size() + 1;
      t.method_name = std::string(toks[d.name].text);
      t.source = block.substr(begin, toks[d.end].end() - begin);
      t.imports = imports;
      out.push_back(std::move(t));
    }
    if (out.size() == kTestsPerProperty) break;
  }
  if (out.empty()) throw Error(ErrorCode::NoTestsParsed, "property " + std::to_string(property_index));
  return out;
}

// ---------------------------------------------------------------------------
// Backends

enum class BackendKind { Http, Mock };

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint;  // Http: full URL of the chat completions route
  std::string model_name;
  std::string api_key_env = "DOCPROBE_LLM_API_KEY";
  double temperature = 0.7;
  std::chrono::milliseconds timeout{60'000};
  std::filesystem::path fixture_dir;  // Mock
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after each retry
  std::size_t max_in_flight = 4;
  bool dump_missing_prompts = false;  // Mock: write <digest>.prompt.txt on a miss

  /// Throws InvalidConfig when required fields for `kind` are missing.
  void validate() const {
    if (kind == BackendKind::Http && (endpoint.empty() || api_key_env.empty())) {
      throw Error(ErrorCode::InvalidConfig, "http backend requires endpoint and api_key_env");
    }
    if (kind == BackendKind::Mock && fixture_dir.empty()) {
      throw Error(ErrorCode::InvalidConfig, "mock backend requires fixture_dir");
    }
    if (max_in_flight == 0) throw Error(ErrorCode::InvalidConfig, "max_in_flight must be >= 1");
  }
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Raw assistant text for the prompt.
  virtual std::string complete(const PromptBundle& prompt) = 0;
};

/// Replays canned responses stored as <fixture_dir>/<digest>.txt.
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(std::filesystem::path fixture_dir, bool dump_missing_prompts = false)
      : fixture_dir_(std::move(fixture_dir)), dump_missing_prompts_(dump_missing_prompts) {}

  std::string complete(const PromptBundle& prompt) override {
    const auto path = fixture_dir_ / (prompt.digest + ".txt");
    if (!std::filesystem::exists(path)) {
      if (dump_missing_prompts_) {
        write_file_atomic(fixture_dir_ / (prompt.digest + ".prompt.txt"),
                          std::string(to_string(prompt.template_id)) + "\n--- system ---\n" +
                              prompt.system_text + "\n--- user ---\n" + prompt.user_text + "\n");
      }
      throw Error(ErrorCode::FixtureMissing, prompt.digest);
    }
    return read_file(path);
  }

 private:
  std::filesystem::path fixture_dir_;
  bool dump_missing_prompts_;
};

/// Appends one JSON object per call to a trace file, then forwards.
class TracingBackend : public CompletionBackend {
 public:
  TracingBackend(CompletionBackend& inner, std::filesystem::path trace_path)
      : inner_(inner), trace_path_(std::move(trace_path)) {}

  std::string complete(const PromptBundle& prompt) override {
    nlohmann::json record = {{"template_id", to_string(prompt.template_id)},
                             {"digest", prompt.digest},
                             {"system", prompt.system_text},
                             {"user", prompt.user_text}};
    try {
      auto text = inner_.complete(prompt);
      record["response"] = text;
      append(record);
      return text;
    } catch (const std::exception& e) {
      record["error"] = e.what();
      append(record);
      throw;
    }
  }

 private:
  void append(const nlohmann::json& record) {
    std::lock_guard lock(mu_);
    std::ofstream out(trace_path_, std::ios::app | std::ios::binary);
    out << record.dump() << '\n';
  }

  CompletionBackend& inner_;
  std::filesystem::path trace_path_;
  std::mutex mu_;
};

}  // namespace docprobe
