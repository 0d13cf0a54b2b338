// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Stage orchestration. Every stage writes one JSON artifact per comment under
// <runs_dir>/<run_id>/<stage>/<comment_id>.json; an existing artifact means
// the stage is done for that comment and is never recomputed. Wall-clock data
// lives only in manifest.json so artifacts stay byte-for-byte reproducible.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "docprobe/error.hpp"
#include "docprobe/estimator.hpp"
#include "docprobe/evalstats.hpp"
#include "docprobe/harness.hpp"
#include "docprobe/io.hpp"
#include "docprobe/llm_gateway.hpp"
#include "docprobe/source_extractor.hpp"
#include "docprobe/tally.hpp"
#include "docprobe/test_corpus.hpp"
#include "json.hpp"

namespace docprobe {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class Stage { Extract, Retrieve, Properties, GenTests, Execute, Score, Evaluate };

inline constexpr std::array<Stage, 6> kRunStages = {Stage::Extract,  Stage::Retrieve,
                                                    Stage::Properties, Stage::GenTests,
                                                    Stage::Execute,  Stage::Score};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Extract: return "extract";
    case Stage::Retrieve: return "retrieve";
    case Stage::Properties: return "properties";
    case Stage::GenTests: return "gentests";
    case Stage::Execute: return "execute";
    case Stage::Score: return "score";
    case Stage::Evaluate: return "evaluate";
  }
  return "unknown";
}

/// Comma-separated stage names; throws InvalidConfig on an unknown name.
inline std::set<Stage> parse_stages(std::string_view list) {
  std::set<Stage> out;
  std::size_t i = 0;
  while (i <= list.size()) {
    auto comma = list.find(',', i);
    if (comma == std::string_view::npos) comma = list.size();
    const auto name = detail::trim(list.substr(i, comma - i));
    i = comma + 1;
    if (name.empty()) continue;
    bool found = false;
    for (auto s : kRunStages) {
      if (to_string(s) == name) {
        out.insert(s);
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::InvalidConfig, "unknown stage '" + name + "'");
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no stages selected");
  return out;
}

// ---------------------------------------------------------------------------
// Inputs

struct PipelineKnobs {
  double w = kDefaultWeight;
  std::size_t property_cap = kDefaultPropertyCap;
  std::size_t example_k = 1;
  bool sanitize_examples = true;
  std::size_t workers = 4;
};

struct PipelineConfig {
  int schema_version = kSchemaVersion;
  std::string run_id;
  std::filesystem::path runs_dir = "runs";
  BackendConfig backend;
  ProjectConfig project;
  PipelineKnobs pipeline;

  [[nodiscard]] json to_json() const {
    json b = {{"kind", backend.kind == BackendKind::Http ? "http" : "mock"},
              {"endpoint", backend.endpoint},
              {"model_name", backend.model_name},
              {"api_key_env", backend.api_key_env},
              {"temperature", backend.temperature},
              {"timeout_s", std::chrono::duration<double>(backend.timeout).count()},
              {"fixture_dir", backend.fixture_dir.string()},
              {"max_retries", backend.max_retries},
              {"backoff_ms", backend.backoff.count()},
              {"max_in_flight", backend.max_in_flight}};
    return {{"schema_version", schema_version},
            {"run_id", run_id},
            {"runs_dir", runs_dir.string()},
            {"backend", b},
            {"project", project},
            {"pipeline",
             {{"w", pipeline.w},
              {"property_cap", pipeline.property_cap},
              {"example_k", pipeline.example_k},
              {"sanitize_examples", pipeline.sanitize_examples},
              {"workers", pipeline.workers}}}};
  }

  [[nodiscard]] std::string digest() const { return sha256_hex(to_json().dump()); }

  void validate() const {
    if (schema_version != kSchemaVersion) {
      throw Error(ErrorCode::InvalidConfig, "unsupported schema_version " + std::to_string(schema_version));
    }
    backend.validate();
    project.validate();
    if (!(pipeline.w > 0.0)) throw Error(ErrorCode::InvalidConfig, "pipeline.w must be positive");
    if (pipeline.property_cap == 0) throw Error(ErrorCode::InvalidConfig, "pipeline.property_cap must be >= 1");
    if (pipeline.example_k == 0) throw Error(ErrorCode::InvalidConfig, "pipeline.example_k must be >= 1");
    if (pipeline.workers == 0) throw Error(ErrorCode::InvalidConfig, "pipeline.workers must be >= 1");
  }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

template <typename T>
T field(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

}  // namespace detail

/// Parses a pipeline config; relative paths resolve against `base_dir`.
inline PipelineConfig parse_pipeline_config(const json& j, const std::filesystem::path& base_dir = {}) {
  try {
    PipelineConfig c;
    c.schema_version = detail::field(j, "schema_version", kSchemaVersion);
    c.run_id = detail::field<std::string>(j, "run_id", "");
    c.runs_dir = detail::resolve(base_dir, detail::field<std::string>(j, "runs_dir", "runs"));

    const json b = j.value("backend", json::object());
    const auto kind = detail::field<std::string>(b, "kind", "mock");
    if (kind != "http" && kind != "mock") throw Error(ErrorCode::InvalidConfig, "backend.kind must be http or mock");
    c.backend.kind = kind == "http" ? BackendKind::Http : BackendKind::Mock;
    c.backend.endpoint = detail::field<std::string>(b, "endpoint", "");
    c.backend.model_name = detail::field<std::string>(b, "model_name", "");
    c.backend.api_key_env = detail::field<std::string>(b, "api_key_env", c.backend.api_key_env);
    c.backend.temperature = detail::field(b, "temperature", c.backend.temperature);
    c.backend.timeout = std::chrono::milliseconds(
        static_cast<long long>(1000.0 * detail::field(b, "timeout_s", 60.0)));
    const auto fixtures = detail::field<std::string>(b, "fixture_dir", "");
    c.backend.fixture_dir = fixtures.empty() ? std::filesystem::path() : detail::resolve(base_dir, fixtures);
    c.backend.max_retries = detail::field(b, "max_retries", c.backend.max_retries);
    c.backend.backoff = std::chrono::milliseconds(detail::field<long long>(b, "backoff_ms", c.backend.backoff.count()));
    c.backend.max_in_flight = detail::field(b, "max_in_flight", c.backend.max_in_flight);

    if (!j.contains("project")) throw Error(ErrorCode::InvalidConfig, "missing project section");
    c.project = j.at("project").get<ProjectConfig>();
    c.project.root = detail::resolve(base_dir, c.project.root);

    const json p = j.value("pipeline", json::object());
    c.pipeline.w = detail::field(p, "w", c.pipeline.w);
    c.pipeline.property_cap = detail::field(p, "property_cap", c.pipeline.property_cap);
    c.pipeline.example_k = detail::field(p, "example_k", c.pipeline.example_k);
    c.pipeline.sanitize_examples = detail::field(p, "sanitize_examples", c.pipeline.sanitize_examples);
    c.pipeline.workers = detail::field(p, "workers", c.pipeline.workers);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return parse_pipeline_config(j, path.parent_path());
}

struct HumanLabel {
  bool accurate = true;
  std::optional<stats::Category> category;
  bool ambiguous = false;
};

struct CommentRecord {
  std::string comment_id;
  std::filesystem::path subject_file;  // relative to the project root
  std::string method_name;
  std::size_t arity = 0;
  std::string comment_text;  // empty: generate one from the method
  std::optional<HumanLabel> label;
  std::optional<std::string> reference_comment;  // for the BLEU baseline
};

namespace detail {

inline bool valid_comment_id(std::string_view id) {
  static const std::regex kId("[A-Za-z0-9][A-Za-z0-9._-]*");
  return std::regex_match(id.begin(), id.end(), kId);
}

inline HumanLabel parse_label(const json& j) {
  HumanLabel l;
  l.accurate = j.at("accurate").get<bool>();
  if (j.contains("category") && !j["category"].is_null()) {
    const auto name = j["category"].get<std::string>();
    l.category = stats::category_from_string(name);
    if (!l.category) throw Error(ErrorCode::InvalidConfig, "unknown category '" + name + "'");
    if ((*l.category == stats::Category::Accurate) != l.accurate) {
      throw Error(ErrorCode::InvalidConfig, "label: accurate must be true exactly when category is accurate");
    }
  }
  l.ambiguous = field(j, "ambiguous", false);
  return l;
}

inline const json& record_list(const json& j, const char* key) {
  if (j.is_array()) return j;
  if (j.is_object() && j.contains(key) && j[key].is_array()) return j[key];
  throw Error(ErrorCode::InvalidConfig, std::string("expected an array or an object with '") + key + "'");
}

}  // namespace detail

inline std::vector<CommentRecord> parse_comments(const json& j) {
  std::vector<CommentRecord> out;
  std::set<std::string> seen;
  try {
    for (const auto& r : detail::record_list(j, "comments")) {
      CommentRecord c;
      c.comment_id = r.at("comment_id").get<std::string>();
      if (!detail::valid_comment_id(c.comment_id)) {
        throw Error(ErrorCode::InvalidConfig, "comment_id '" + c.comment_id + "' is not filename-safe");
      }
      if (!seen.insert(c.comment_id).second) {
        throw Error(ErrorCode::InvalidConfig, "duplicate comment_id '" + c.comment_id + "'");
      }
      c.subject_file = r.at("subject_file").get<std::string>();
      c.method_name = r.at("method_name").get<std::string>();
      c.arity = r.at("arity").get<std::size_t>();
      c.comment_text = detail::field<std::string>(r, "comment_text", "");
      if (r.contains("label") && !r["label"].is_null()) c.label = detail::parse_label(r["label"]);
      if (r.contains("reference_comment") && !r["reference_comment"].is_null()) {
        c.reference_comment = r["reference_comment"].get<std::string>();
      }
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("comments: ") + e.what());
  }
  return out;
}

inline std::vector<CommentRecord> load_comments(const std::filesystem::path& path) {
  try {
    return parse_comments(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw Error(ErrorCode::InvalidConfig, e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Artifact (de)serialization

inline json signature_json(const MethodSignature& s) {
  return {{"name", s.name},
          {"arity", s.arity},
          {"parameter_types", s.parameter_types},
          {"return_type", s.return_type},
          {"modifiers", s.modifiers},
          {"raw_text", s.raw_text}};
}

inline PropertySpec property_from_json(const json& j) {
  PropertySpec p;
  p.index = j.at("index").get<std::size_t>();
  p.condition = j.at("condition").get<std::string>();
  p.behavior = j.at("behavior").get<std::string>();
  p.raw_line = j.at("raw_line").get<std::string>();
  return p;
}

inline json property_json(const PropertySpec& p) {
  return {{"index", p.index}, {"condition", p.condition}, {"behavior", p.behavior}, {"raw_line", p.raw_line}};
}

inline json generated_test_json(const GeneratedTestSource& t) {
  return {{"property_index", t.property_index},
          {"ordinal", t.ordinal},
          {"method_name", t.method_name},
          {"source", t.source},
          {"imports", t.imports}};
}

inline GeneratedTestSource generated_test_from_json(const json& j) {
  GeneratedTestSource t;
  t.property_index = j.at("property_index").get<std::size_t>();
  t.ordinal = j.at("ordinal").get<std::size_t>();
  t.method_name = j.at("method_name").get<std::string>();
  t.source = j.at("source").get<std::string>();
  t.imports = j.at("imports").get<std::vector<std::string>>();
  return t;
}

inline json tally_json(const TestTally& t) {
  return {{"n_pass", t.n_pass}, {"n_fail", t.n_fail}, {"n_nocompile", t.n_nocompile}, {"n_excluded", t.n_excluded}};
}

inline TestTally tally_from_json(const std::string& id, const json& j) {
  TestTally t;
  t.comment_id = id;
  t.n_pass = j.at("n_pass").get<std::size_t>();
  t.n_fail = j.at("n_fail").get<std::size_t>();
  t.n_nocompile = j.at("n_nocompile").get<std::size_t>();
  t.n_excluded = j.at("n_excluded").get<std::size_t>();
  return t;
}

// ---------------------------------------------------------------------------
// Run layout

class RunLayout {
 public:
  explicit RunLayout(std::filesystem::path run_dir) : dir_(std::move(run_dir)) {}

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] std::filesystem::path manifest() const { return dir_ / "manifest.json"; }
  [[nodiscard]] std::filesystem::path artifact(Stage s, const std::string& id) const {
    return dir_ / std::string(to_string(s)) / (id + ".json");
  }
  [[nodiscard]] bool has(Stage s, const std::string& id) const {
    return std::filesystem::exists(artifact(s, id));
  }
  [[nodiscard]] json read(Stage s, const std::string& id) const {
    return json::parse(read_file(artifact(s, id)));
  }
  void write(Stage s, const std::string& id, const json& j) const {
    write_file_atomic(artifact(s, id), j.dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp = std::chrono::system_clock::now()) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// ---------------------------------------------------------------------------
// Running

struct RunOptions {
  std::set<Stage> stages{kRunStages.begin(), kRunStages.end()};
  std::ostream* log = &std::cerr;
};

struct StageSummary {
  std::size_t done = 0;     // artifacts written by this invocation
  std::size_t skipped = 0;  // already complete
  std::size_t failed = 0;
};

struct RunSummary {
  std::map<Stage, StageSummary> stages;
  std::size_t failed_comments = 0;
  std::size_t harness_errors = 0;  // HarnessError outcomes produced now
  int exit_code = 0;
};

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

namespace detail {

inline std::string constructors_text(const json& class_info) {
  std::string out;
  for (const auto& c : class_info.at("constructors")) {
    if (!out.empty()) out += '\n';
    out += c.at("raw_text").get<std::string>();
  }
  return out.empty() ? "(implicit default constructor)" : out;
}

class Runner {
 public:
  Runner(const PipelineConfig& config, const std::vector<CommentRecord>& comments,
         const RunOptions& options, CompletionBackend& backend, CommandRunner& commands)
      : config_(config),
        comments_(comments),
        options_(options),
        backend_(backend),
        commands_(commands),
        layout_(config.runs_dir / config.run_id) {}

  RunSummary run() {
    open_manifest();
    for (auto stage : kRunStages) {
      if (!options_.stages.count(stage)) continue;
      run_stage(stage);
    }
    RunSummary summary = summary_;
    std::set<std::string> failed;
    for (const auto& [id, f] : failures_) failed.insert(id);
    summary.failed_comments = failed.size();
    summary.exit_code = summary.failed_comments > 0 || summary.harness_errors > 0 ? 1 : 0;
    log() << "run " << config_.run_id << ": " << summary.failed_comments << " comment(s) failed, "
          << summary.harness_errors << " harness error(s)\n";
    return summary;
  }

 private:
  std::ostream& log() { return *options_.log; }

  void open_manifest() {
    const auto digest = config_.digest();
    if (std::filesystem::exists(layout_.manifest())) {
      manifest_ = json::parse(read_file(layout_.manifest()));
      if (manifest_.value("config_digest", "") != digest) {
        throw Error(ErrorCode::InvalidConfig,
                    "run '" + config_.run_id + "' was created with a different configuration");
      }
    } else {
      manifest_ = {{"schema_version", kSchemaVersion},
                   {"run_id", config_.run_id},
                   {"config_digest", digest},
                   {"config", config_.to_json()},
                   {"created_at", utc_timestamp()},
                   {"stage_status", json::object()},
                   {"failures", json::object()},
                   {"durations", json::object()}};
    }
    std::filesystem::create_directories(layout_.dir());
    save_manifest();
  }

  void save_manifest() {
    std::lock_guard lock(mu_);
    write_file_atomic(layout_.manifest(), manifest_.dump(2) + "\n");
  }

  void record_failure(Stage stage, const std::string& id, const std::string& code, const std::string& message) {
    std::lock_guard lock(mu_);
    failures_[id] = stage;
    manifest_["failures"][id] = {{"stage", to_string(stage)}, {"code", code}, {"message", message}};
    log() << "  " << id << ": " << to_string(stage) << " failed: " << message << "\n";
  }

  void clear_failure(const std::string& id) {
    std::lock_guard lock(mu_);
    manifest_["failures"].erase(id);
  }

  void run_stage(Stage stage) {
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    StageSummary s;
    std::mutex s_mu;
    auto one = [&](std::size_t i) {
      const auto& c = comments_[i];
      if (layout_.has(stage, c.comment_id)) {
        std::lock_guard lock(s_mu);
        ++s.skipped;
        return;
      }
      if (stage != Stage::Extract) {
        const auto prev = kRunStages[static_cast<std::size_t>(stage) - 1];
        if (!layout_.has(prev, c.comment_id)) {
          bool failed_now;
          {
            std::lock_guard lock(mu_);
            failed_now = failures_.count(c.comment_id) > 0;
          }
          if (!failed_now) {
            record_failure(stage, c.comment_id, std::string(to_string(ErrorCode::StageNotComplete)),
                           std::string(to_string(prev)) + " has not completed");
          }
          std::lock_guard lock(s_mu);
          ++s.failed;
          return;
        }
      }
      try {
        process(stage, c);
        clear_failure(c.comment_id);
        std::lock_guard lock(s_mu);
        ++s.done;
      } catch (const Error& e) {
        record_failure(stage, c.comment_id, std::string(to_string(e.code())), e.what());
        std::lock_guard lock(s_mu);
        ++s.failed;
      } catch (const std::exception& e) {
        record_failure(stage, c.comment_id, "Exception", e.what());
        std::lock_guard lock(s_mu);
        ++s.failed;
      }
    };

    const bool uses_llm = stage == Stage::Extract || stage == Stage::Properties || stage == Stage::GenTests;
    if (stage == Stage::Execute) {
      // One working copy: executions never overlap.
      for (std::size_t i = 0; i < comments_.size(); ++i) one(i);
    } else {
      const std::size_t workers =
          uses_llm ? std::min(config_.pipeline.workers, config_.backend.max_in_flight) : config_.pipeline.workers;
      parallel_for(comments_.size(), workers, one);
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t complete = 0;
    for (const auto& c : comments_) complete += layout_.has(stage, c.comment_id);
    {
      std::lock_guard lock(mu_);
      manifest_["stage_status"][std::string(to_string(stage))] = {
          {"status", complete == comments_.size() ? "complete" : "partial"},
          {"completed", complete},
          {"total", comments_.size()},
          {"started_at", utc_timestamp(started)},
          {"finished_at", utc_timestamp()},
          {"duration_s", secs}};
    }
    save_manifest();
    summary_.stages[stage] = s;
    log() << "stage " << to_string(stage) << ": " << s.done << " done, " << s.skipped << " skipped, "
          << s.failed << " failed\n";
  }

  void process(Stage stage, const CommentRecord& c) {
    switch (stage) {
      case Stage::Extract: return extract(c);
      case Stage::Retrieve: return retrieve(c);
      case Stage::Properties: return properties(c);
      case Stage::GenTests: return gentests(c);
      case Stage::Execute: return execute(c);
      case Stage::Score: return score(c);
      case Stage::Evaluate: break;
    }
  }

  const TestCorpus& corpus() {
    std::call_once(corpus_once_, [&] {
      corpus_ = load_test_corpus(config_.project.root, config_.project.test_globs);
    });
    return corpus_;
  }

  json artifact_header(Stage stage, const CommentRecord& c) const {
    return {{"schema_version", kSchemaVersion}, {"stage", to_string(stage)}, {"comment_id", c.comment_id}};
  }

  void extract(const CommentRecord& c) {
    const auto source = read_file(config_.project.root / c.subject_file);
    const auto sig = extract_method_signature(source, c.method_name, c.arity);
    const auto info = extract_class_info(source, c.subject_file);
    auto j = artifact_header(Stage::Extract, c);
    j["subject_file"] = c.subject_file.generic_string();
    j["signature"] = signature_json(sig);
    json ctors = json::array();
    for (const auto& k : info.constructors) ctors.push_back(signature_json(k));
    j["class_info"] = {{"class_name", info.class_name}, {"constructors", ctors},
                       {"source_path", info.source_path.generic_string()}};
    j["package"] = package_name(source).value_or("");
    std::string comment = c.comment_text;
    bool generated = false;
    if (comment.empty()) {
      const auto prompt = render_prompt(TemplateId::CommentGen,
                                        {{"method_body", extract_method_source(source, c.method_name, c.arity)}});
      comment = detail::trim(backend_.complete(prompt));
      generated = true;
      j["comment_prompt_digest"] = prompt.digest;
    }
    j["comment_text"] = comment;
    j["comment_generated"] = generated;
    j["reference_comment"] = c.reference_comment ? json(*c.reference_comment) : json(nullptr);
    layout_.write(Stage::Extract, c.comment_id, j);
  }

  void retrieve(const CommentRecord& c) {
    const auto ex = layout_.read(Stage::Extract, c.comment_id);
    MethodSignature target;
    target.name = ex["signature"]["name"].get<std::string>();
    target.arity = ex["signature"]["arity"].get<std::size_t>();
    target.parameter_types = ex["signature"]["parameter_types"].get<std::vector<std::string>>();
    const auto class_name = ex["class_info"]["class_name"].get<std::string>();
    auto j = artifact_header(Stage::Retrieve, c);
    json examples = json::array();
    try {
      for (const auto& t : rank_relevant_tests(corpus().tests, class_name, target, config_.pipeline.example_k)) {
        examples.push_back({{"file_path", t.file_path},
                            {"method_name", t.method_name},
                            {"position", t.position},
                            {"tier", to_string(tier(label_test_relevance(t, class_name, target)))},
                            {"prompt_text", config_.pipeline.sanitize_examples ? sanitize_literals(t.body) : t.body}});
      }
      j["signal"] = nullptr;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyCorpus) throw;
      j["signal"] = to_string(e.code());
    }
    j["examples"] = examples;
    layout_.write(Stage::Retrieve, c.comment_id, j);
  }

  void properties(const CommentRecord& c) {
    const auto ex = layout_.read(Stage::Extract, c.comment_id);
    const auto prompt = render_prompt(
        TemplateId::PropertyExtract,
        {{"comment", ex["comment_text"].get<std::string>()}, {"signature", ex["signature"]["raw_text"].get<std::string>()}});
    const auto response = backend_.complete(prompt);
    auto j = artifact_header(Stage::Properties, c);
    j["prompt_digest"] = prompt.digest;
    j["response"] = response;
    json props = json::array();
    try {
      for (const auto& p : parse_properties(response, config_.pipeline.property_cap)) props.push_back(property_json(p));
      j["signal"] = nullptr;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoPropertiesFound) throw;
      j["signal"] = to_string(e.code());
    }
    j["properties"] = props;
    layout_.write(Stage::Properties, c.comment_id, j);
  }

  void gentests(const CommentRecord& c) {
    const auto ex = layout_.read(Stage::Extract, c.comment_id);
    const auto rt = layout_.read(Stage::Retrieve, c.comment_id);
    const auto pr = layout_.read(Stage::Properties, c.comment_id);
    std::string examples;
    for (const auto& e : rt["examples"]) {
      if (!examples.empty()) examples += "\n\n";
      examples += e["prompt_text"].get<std::string>();
    }
    if (examples.empty()) examples = "(no related tests found)";
    auto j = artifact_header(Stage::GenTests, c);
    json per_property = json::array();
    for (const auto& pj : pr["properties"]) {
      const auto prop = property_from_json(pj);
      const auto prompt = render_prompt(TemplateId::TestGen,
                                        {{"property", prop.to_line()},
                                         {"class_name", ex["class_info"]["class_name"].get<std::string>()},
                                         {"constructors", constructors_text(ex["class_info"])},
                                         {"example_tests", examples},
                                         {"signature", ex["signature"]["raw_text"].get<std::string>()}});
      const auto response = backend_.complete(prompt);
      json entry = {{"property_index", prop.index}, {"prompt_digest", prompt.digest}, {"response", response}};
      json tests = json::array();
      try {
        for (const auto& t : parse_test_sources(response, prop.index)) tests.push_back(generated_test_json(t));
        entry["signal"] = nullptr;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoTestsParsed) throw;
        entry["signal"] = to_string(e.code());
      }
      entry["tests"] = tests;
      per_property.push_back(entry);
    }
    j["properties"] = per_property;
    layout_.write(Stage::GenTests, c.comment_id, j);
  }

  const std::vector<HostCandidate>& hosts() {
    if (!hosts_) {
      hosts_.emplace();
      for (const auto& f : corpus().files) {
        hosts_->push_back({f, read_file(config_.project.root / f)});
      }
    }
    return *hosts_;
  }

  void execute(const CommentRecord& c) {
    const auto gt = layout_.read(Stage::GenTests, c.comment_id);
    auto j = artifact_header(Stage::Execute, c);
    json outcomes = json::array();
    double total_s = 0.0;
    for (const auto& prop : gt["properties"]) {
      for (const auto& tj : prop["tests"]) {
        const auto test = generated_test_from_json(tj);
        const TestId id{c.comment_id, test.property_index, test.ordinal};
        ExecutionOutcome out;
        std::string host_file;
        try {
          const auto host = choose_host_file(test, hosts());
          host_file = host.generic_string();
          const auto& contents =
              std::find_if(hosts().begin(), hosts().end(), [&](const auto& h) { return h.path == host; })->contents;
          const auto inj = inject_test(test, contents, host);
          out = execute_test(config_.project, inj.plan, inj.contents, commands_, id);
        } catch (const Error& e) {
          out.test_id = id;
          out.status = OutcomeStatus::HarnessError;
          out.log_excerpt = e.what();
        }
        total_s += out.duration_s;
        if (out.status == OutcomeStatus::HarnessError) ++summary_.harness_errors;
        outcomes.push_back({{"property_index", test.property_index},
                            {"ordinal", test.ordinal},
                            {"method_name", test.method_name},
                            {"host_file", host_file},
                            {"status", to_string(out.status)},
                            {"log_excerpt", out.log_excerpt}});
      }
    }
    j["outcomes"] = outcomes;
    layout_.write(Stage::Execute, c.comment_id, j);
    std::lock_guard lock(mu_);
    manifest_["durations"]["execute"][c.comment_id] = total_s;
  }

  void score(const CommentRecord& c) {
    const auto exj = layout_.read(Stage::Execute, c.comment_id);
    std::vector<ExecutionOutcome> outs;
    for (const auto& o : exj["outcomes"]) {
      ExecutionOutcome e;
      e.test_id = {c.comment_id, o["property_index"].get<std::size_t>(), o["ordinal"].get<std::size_t>()};
      e.status = *outcome_status_from_string(o["status"].get<std::string>());
      outs.push_back(e);
    }
    const auto tally = tally_outcomes(outs, c.comment_id);
    const auto s = correctness_score(tally, config_.pipeline.w);
    auto j = artifact_header(Stage::Score, c);
    j["tally"] = tally_json(tally);
    j["w"] = s.w;
    j["score"] = s.score;
    j["unverifiable"] = s.unverifiable;
    layout_.write(Stage::Score, c.comment_id, j);
  }

  const PipelineConfig& config_;
  const std::vector<CommentRecord>& comments_;
  const RunOptions& options_;
  CompletionBackend& backend_;
  CommandRunner& commands_;
  RunLayout layout_;
  json manifest_;
  std::mutex mu_;
  std::map<std::string, Stage> failures_;
  RunSummary summary_;
  std::once_flag corpus_once_;
  TestCorpus corpus_;
  std::optional<std::vector<HostCandidate>> hosts_;
};

}  // namespace detail

/// Runs the selected stages for every comment. Per-comment failures are
/// recorded in the manifest and never stop the batch; exit_code is 1 when
/// any comment failed or any test ended in HarnessError.
inline RunSummary run_pipeline(const PipelineConfig& config, const std::vector<CommentRecord>& comments,
                               const RunOptions& options, CompletionBackend& backend,
                               CommandRunner& commands) {
  config.validate();
  if (config.run_id.empty() || !detail::valid_comment_id(config.run_id)) {
    throw Error(ErrorCode::InvalidConfig, "run_id must be a non-empty filename-safe name");
  }
  detail::Runner runner(config, comments, options, backend, commands);
  return runner.run();
}

// ---------------------------------------------------------------------------
// Evaluation

struct LabelRecord {
  std::string comment_id;
  HumanLabel label;
};

/// Accepts a comments file (records carrying a "label" object) or a list of
/// flat {comment_id, accurate, category, ambiguous} records.
inline std::vector<LabelRecord> parse_labels(const json& j) {
  std::vector<LabelRecord> out;
  try {
    const json& list = j.is_object() && j.contains("labels") ? j["labels"] : detail::record_list(j, "comments");
    for (const auto& r : list) {
      LabelRecord l;
      l.comment_id = r.at("comment_id").get<std::string>();
      if (r.contains("label")) {
        if (r["label"].is_null()) continue;
        l.label = detail::parse_label(r["label"]);
      } else {
        l.label = detail::parse_label(r);
      }
      out.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("labels: ") + e.what());
  }
  return out;
}

inline std::vector<LabelRecord> load_labels(const std::filesystem::path& path) {
  try {
    return parse_labels(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

struct EvaluationOptions {
  std::optional<double> w;  // default: the weight the run was scored with
  bool sweep = false;       // add metrics along the 201-point w schedule
  double bin_width = 0.2;
};

/// Resolves a run name against `runs_dir`, or accepts a run directory path.
inline std::filesystem::path locate_run(const std::filesystem::path& runs_dir, const std::string& run) {
  const std::filesystem::path direct(run);
  if (std::filesystem::exists(direct / "manifest.json")) return direct;
  const auto dir = runs_dir / run;
  if (!std::filesystem::exists(dir / "manifest.json")) throw Error(ErrorCode::UnknownRun, run);
  return dir;
}

namespace detail {

struct ScoredComment {
  std::string comment_id;
  TestTally tally;
  double score = 0.0;
  double normalized = 0.0;
  std::optional<HumanLabel> label;
  std::optional<double> bleu;
};

inline json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct BinaryMetrics {
  std::optional<double> welch_t, welch_df, welch_p, pb_r, pb_p, auc, ap;
  std::vector<std::string> notes;
};

inline BinaryMetrics binary_metrics(const std::vector<double>& scores, const std::vector<bool>& labels) {
  BinaryMetrics m;
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
  auto attempt = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      m.notes.push_back(std::string(what) + ": " + e.what());
    }
  };
  attempt("welch", [&] {
    auto r = stats::welch_t_test(pos, neg);
    m.welch_t = r.statistic;
    m.welch_df = r.df;
    m.welch_p = r.p_value;
  });
  attempt("pointbiserial", [&] {
    auto r = stats::point_biserial(scores, labels);
    m.pb_r = r.statistic;
    m.pb_p = r.p_value;
  });
  attempt("roc_auc", [&] { m.auc = stats::roc_auc(scores, labels); });
  attempt("ap", [&] { m.ap = stats::average_precision(scores, labels); });
  return m;
}

inline json metrics_block(const BinaryMetrics& m) {
  return {{"welch_p", nullable(m.welch_p)},
          {"pointbiserial_r", nullable(m.pb_r)},
          {"pointbiserial_p", nullable(m.pb_p)},
          {"roc_auc", nullable(m.auc)},
          {"ap", nullable(m.ap)}};
}

inline std::string csv_number(const std::optional<double>& v) { return v ? json(*v).dump() : ""; }

}  // namespace detail

/// Metrics for one run. Writes <run>/evaluate/metrics.json and
/// <run>/evaluate/comparison.csv and returns the metrics document.
inline json evaluate_run(const std::filesystem::path& run_dir, const std::vector<LabelRecord>& labels,
                         const EvaluationOptions& options = {}) {
  if (!std::filesystem::exists(run_dir / "manifest.json")) throw Error(ErrorCode::UnknownRun, run_dir.string());
  RunLayout layout(run_dir);
  auto manifest = json::parse(read_file(layout.manifest()));
  const std::string run_id = manifest.value("run_id", run_dir.filename().string());

  std::map<std::string, HumanLabel> by_id;
  for (const auto& l : labels) by_id[l.comment_id] = l.label;

  std::vector<detail::ScoredComment> rows;
  std::optional<double> run_w;
  const auto score_dir = run_dir / "score";
  if (std::filesystem::exists(score_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(score_dir)) {
      if (entry.path().extension() != ".json") continue;
      const auto j = json::parse(read_file(entry.path()));
      detail::ScoredComment r;
      r.comment_id = j.at("comment_id").get<std::string>();
      r.tally = tally_from_json(r.comment_id, j.at("tally"));
      run_w = j.at("w").get<double>();
      if (auto it = by_id.find(r.comment_id); it != by_id.end()) r.label = it->second;
      if (layout.has(Stage::Extract, r.comment_id)) {
        const auto ex = layout.read(Stage::Extract, r.comment_id);
        if (ex.contains("reference_comment") && ex["reference_comment"].is_string()) {
          const auto cand = stats::whitespace_tokens(ex["comment_text"].get<std::string>());
          const auto ref = stats::whitespace_tokens(ex["reference_comment"].get<std::string>());
          if (!cand.empty() && !ref.empty()) r.bleu = stats::bleu(cand, ref);
        }
      }
      rows.push_back(std::move(r));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.comment_id < b.comment_id; });
  if (rows.empty()) throw Error(ErrorCode::StageNotComplete, "run " + run_id + " has no score artifacts");

  const double w = options.w.value_or(run_w.value_or(kDefaultWeight));
  std::vector<CorrectnessScore> scores;
  for (auto& r : rows) {
    scores.push_back(correctness_score(r.tally, w));
    r.score = scores.back().score;
  }
  scores = normalize_scores(std::move(scores));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].normalized = *scores[i].normalized;

  std::vector<const detail::ScoredComment*> labeled;
  std::size_t ambiguous = 0;
  for (const auto& r : rows) {
    if (!r.label) continue;
    if (r.label->ambiguous) {
      ++ambiguous;
      continue;
    }
    labeled.push_back(&r);
  }
  std::size_t n_acc = 0;
  for (const auto* r : labeled) n_acc += r->label->accurate;
  const std::size_t n_inacc = labeled.size() - n_acc;
  if (n_acc < 2 || n_inacc < 2) {
    throw Error(ErrorCode::InsufficientLabels, "need at least 2 accurate and 2 inaccurate labeled comments, have " +
                                                   std::to_string(n_acc) + " and " + std::to_string(n_inacc));
  }

  std::vector<double> est, norm, pass_rate;
  std::vector<bool> y;
  std::vector<NormalizedLabel> bin_input;
  bool all_bleu = true;
  std::vector<double> bleu_scores;
  for (const auto* r : labeled) {
    est.push_back(r->score);
    norm.push_back(r->normalized);
    const auto evidence = r->tally.n_pass + r->tally.n_fail;
    pass_rate.push_back(evidence == 0 ? 0.5 : static_cast<double>(r->tally.n_pass) / static_cast<double>(evidence));
    y.push_back(r->label->accurate);
    bin_input.push_back({r->normalized, r->label->accurate});
    if (r->bleu) {
      bleu_scores.push_back(*r->bleu);
    } else {
      all_bleu = false;
    }
  }

  const auto m = detail::binary_metrics(est, y);
  json doc = {{"schema_version", kSchemaVersion},
              {"run_id", run_id},
              {"w", w},
              {"n_comments", rows.size()},
              {"n_labeled", labeled.size()},
              {"n_ambiguous_excluded", ambiguous},
              {"positive_class", "accurate"},
              {"metrics", detail::metrics_block(m)},
              {"welch", {{"t", detail::nullable(m.welch_t)}, {"df", detail::nullable(m.welch_df)}}},
              {"notes", m.notes}};

  json bins = json::array();
  for (const auto& b : bin_accuracy(bin_input, options.bin_width)) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"n_total", b.n_total},
                    {"n_accurate", b.n_accurate},
                    {"accuracy", detail::nullable(b.accuracy)},
                    {"ci95", b.ci95 ? json::array({b.ci95->lo, b.ci95->hi}) : json(nullptr)}});
  }
  doc["bins"] = bins;

  // Dropping every comment whose normalized score is below the cutoff.
  json thresholds = json::array();
  for (int k = 0; k <= 10; ++k) {
    const double cutoff = k / 10.0;
    std::size_t inacc_removed = 0;
    std::size_t acc_kept = 0;
    for (std::size_t i = 0; i < norm.size(); ++i) {
      const bool removed = norm[i] < cutoff;
      if (!y[i] && removed) ++inacc_removed;
      if (y[i] && !removed) ++acc_kept;
    }
    thresholds.push_back({{"cutoff", cutoff},
                          {"inaccurate_removed", static_cast<double>(inacc_removed) / static_cast<double>(n_inacc)},
                          {"accurate_retained", static_cast<double>(acc_kept) / static_cast<double>(n_acc)}});
  }
  doc["thresholds"] = thresholds;

  std::vector<std::pair<std::string, detail::BinaryMetrics>> comparison = {{"estimator", m},
                                                                           {"pass_rate", detail::binary_metrics(pass_rate, y)}};
  if (all_bleu) comparison.emplace_back("bleu", detail::binary_metrics(bleu_scores, y));
  else doc["notes"].push_back("bleu: reference_comment missing for some labeled comments");
  json cmp = json::array();
  std::string csv = "method,roc_auc,ap,pointbiserial_r,pointbiserial_p,welch_p\n";
  for (const auto& [name, bm] : comparison) {
    auto block = detail::metrics_block(bm);
    block["method"] = name;
    cmp.push_back(block);
    csv += name + "," + detail::csv_number(bm.auc) + "," + detail::csv_number(bm.ap) + "," +
           detail::csv_number(bm.pb_r) + "," + detail::csv_number(bm.pb_p) + "," + detail::csv_number(bm.welch_p) + "\n";
  }
  doc["comparison"] = cmp;

  if (options.sweep) {
    json sweep = json::array();
    for (int i = 0; i <= 200; ++i) {
      const double wi = w_schedule(i);
      std::vector<double> s;
      for (const auto* r : labeled) s.push_back(correctness_score(r->tally, wi).score);
      const auto bm = detail::binary_metrics(s, y);
      sweep.push_back({{"i", i}, {"w", wi}, {"roc_auc", detail::nullable(bm.auc)}, {"ap", detail::nullable(bm.ap)}});
    }
    doc["w_sweep"] = sweep;
  }

  json records = json::array();
  for (const auto& r : rows) {
    records.push_back({{"comment_id", r.comment_id},
                       {"n_pass", r.tally.n_pass},
                       {"n_fail", r.tally.n_fail},
                       {"n_nocompile", r.tally.n_nocompile},
                       {"n_excluded", r.tally.n_excluded},
                       {"score", r.score},
                       {"normalized", r.normalized},
                       {"label", r.label ? json(r.label->accurate ? "accurate" : "inaccurate") : json(nullptr)},
                       {"category", r.label && r.label->category ? json(stats::to_string(*r.label->category)) : json(nullptr)},
                       {"ambiguous", r.label ? json(r.label->ambiguous) : json(nullptr)},
                       {"bleu", detail::nullable(r.bleu)},
                       {"unverifiable", !r.tally.scoreable()}});
  }
  doc["records"] = records;

  write_file_atomic(run_dir / "evaluate" / "metrics.json", doc.dump(2) + "\n");
  write_file_atomic(run_dir / "evaluate" / "comparison.csv", csv);
  manifest["stage_status"]["evaluate"] = {{"status", "complete"}, {"finished_at", utc_timestamp()}};
  write_file_atomic(layout.manifest(), manifest.dump(2) + "\n");
  return doc;
}

/// Evaluates each run and averages the headline metrics across runs.
inline json evaluate_runs(const std::vector<std::filesystem::path>& run_dirs, const std::vector<LabelRecord>& labels,
                          const EvaluationOptions& options = {}) {
  if (run_dirs.empty()) throw Error(ErrorCode::InvalidConfig, "no runs given");
  json runs = json::array();
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& dir : run_dirs) {
    auto doc = evaluate_run(dir, labels, options);
    for (const auto& [k, v] : doc["metrics"].items()) {
      if (v.is_number()) {
        sums[k].first += v.get<double>();
        ++sums[k].second;
      }
    }
    runs.push_back(std::move(doc));
  }
  json aggregate = json::object();
  for (const char* k : {"welch_p", "pointbiserial_r", "pointbiserial_p", "roc_auc", "ap"}) {
    auto it = sums.find(k);
    aggregate[k] = it == sums.end() ? json(nullptr) : json(it->second.first / static_cast<double>(it->second.second));
  }
  return {{"schema_version", kSchemaVersion}, {"n_runs", run_dirs.size()}, {"aggregate", aggregate}, {"runs", runs}};
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Csv, Json, Md };

inline std::optional<ReportFormat> report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  if (s == "md") return ReportFormat::Md;
  return std::nullopt;
}

inline constexpr std::string_view kReportCsvHeader =
    "comment_id,n_pass,n_fail,n_nocompile,n_excluded,score,normalized,label,category";

namespace detail {

inline std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// Per-property verdicts for one comment: property text plus the status of
/// each generated test.
inline json property_verdicts(const RunLayout& layout, const std::string& id) {
  json out = json::array();
  if (!layout.has(Stage::Execute, id)) return out;
  std::map<std::size_t, std::string> texts;
  if (layout.has(Stage::Properties, id)) {
    for (const auto& p : json(layout.read(Stage::Properties, id)["properties"])) {
      texts[p["index"].get<std::size_t>()] = p["raw_line"].get<std::string>();
    }
  }
  std::map<std::size_t, json> by_prop;
  for (const auto& o : json(layout.read(Stage::Execute, id)["outcomes"])) {
    by_prop[o["property_index"].get<std::size_t>()].push_back(o["status"]);
  }
  for (const auto& [idx, statuses] : by_prop) {
    out.push_back({{"property_index", idx}, {"property", texts.count(idx) ? json(texts[idx]) : json(nullptr)},
                   {"verdicts", statuses}});
  }
  return out;
}

inline std::string fence(std::string_view text) {
  std::string f = "```";
  while (text.find(f) != std::string_view::npos) f += '`';
  return f;
}

}  // namespace detail

inline constexpr std::size_t kMdExcerptBytes = 4096;

/// Writes <run>/report/report.<format> and returns its path.
inline std::filesystem::path write_report(const std::filesystem::path& run_dir, ReportFormat format) {
  if (!std::filesystem::exists(run_dir / "manifest.json")) throw Error(ErrorCode::UnknownRun, run_dir.string());
  const auto metrics_path = run_dir / "evaluate" / "metrics.json";
  if (!std::filesystem::exists(metrics_path)) {
    throw Error(ErrorCode::StageNotComplete, "run has not been evaluated: " + run_dir.string());
  }
  RunLayout layout(run_dir);
  const auto metrics = json::parse(read_file(metrics_path));
  std::string out;
  std::string ext;

  switch (format) {
    case ReportFormat::Csv: {
      ext = "csv";
      out = std::string(kReportCsvHeader) + "\n";
      for (const auto& r : metrics["records"]) {
        out += detail::cell(r["comment_id"]) + "," + detail::cell(r["n_pass"]) + "," + detail::cell(r["n_fail"]) + "," +
               detail::cell(r["n_nocompile"]) + "," + detail::cell(r["n_excluded"]) + "," + detail::cell(r["score"]) +
               "," + detail::cell(r["normalized"]) + "," + detail::cell(r["label"]) + "," + detail::cell(r["category"]) +
               "\n";
      }
      break;
    }
    case ReportFormat::Json: {
      ext = "json";
      json rows = json::array();
      for (auto r : metrics["records"]) {
        r["properties"] = detail::property_verdicts(layout, r["comment_id"].get<std::string>());
        rows.push_back(std::move(r));
      }
      json doc = {{"schema_version", kSchemaVersion},
                  {"run_id", metrics["run_id"]},
                  {"w", metrics["w"]},
                  {"columns", json::array({"comment_id", "n_pass", "n_fail", "n_nocompile", "n_excluded", "score",
                                           "normalized", "label", "category"})},
                  {"metrics", metrics["metrics"]},
                  {"comparison", metrics["comparison"]},
                  {"bins", metrics["bins"]},
                  {"thresholds", metrics["thresholds"]},
                  {"rows", rows}};
      out = doc.dump(2) + "\n";
      break;
    }
    case ReportFormat::Md: {
      ext = "md";
      std::ostringstream md;
      md << "# docprobe report: " << metrics["run_id"].get<std::string>() << "\n\n";
      md << "Scores use w = " << metrics["w"].dump() << ". Positive class: accurate comments.\n\n";
      md << "## Metrics\n\n| metric | value |\n|---|---|\n";
      for (const char* k : {"welch_p", "pointbiserial_r", "pointbiserial_p", "roc_auc", "ap"}) {
        md << "| " << k << " | " << detail::cell(metrics["metrics"][k]) << " |\n";
      }
      md << "\n## Comments\n\n| " << std::regex_replace(std::string(kReportCsvHeader), std::regex(","), " | ")
         << " |\n|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : metrics["records"]) {
        md << "| " << detail::cell(r["comment_id"]) << " | " << detail::cell(r["n_pass"]) << " | "
           << detail::cell(r["n_fail"]) << " | " << detail::cell(r["n_nocompile"]) << " | "
           << detail::cell(r["n_excluded"]) << " | " << detail::cell(r["score"]) << " | "
           << detail::cell(r["normalized"]) << " | " << detail::cell(r["label"]) << " | "
           << detail::cell(r["category"]) << " |\n";
      }
      md << "\n## Baselines\n\nBLEU is 4-gram, unsmoothed, against the single reference comment; any "
            "missing n-gram order gives 0. pass_rate is n_pass / (n_pass + n_fail), 0.5 without evidence.\n\n"
            "| method | roc_auc | ap | pointbiserial_r | welch_p |\n|---|---|---|---|---|\n";
      for (const auto& c : metrics["comparison"]) {
        md << "| " << detail::cell(c["method"]) << " | " << detail::cell(c["roc_auc"]) << " | " << detail::cell(c["ap"])
           << " | " << detail::cell(c["pointbiserial_r"]) << " | " << detail::cell(c["welch_p"]) << " |\n";
      }
      md << "\n## Unverifiable comments\n\nNo generated test passed or failed, so these score 0 without evidence.\n\n";
      bool any_unverifiable = false;
      for (const auto& r : metrics["records"]) {
        if (!r.value("unverifiable", false)) continue;
        any_unverifiable = true;
        md << "- " << detail::cell(r["comment_id"]) << "\n";
      }
      if (!any_unverifiable) md << "None.\n";
      md << "\n## Flagged comments\n\nComments with at least one failing generated test. Read the failing test "
            "before trusting or fixing the comment.\n";
      bool any = false;
      for (const auto& r : metrics["records"]) {
        if (r["n_fail"].get<std::size_t>() == 0) continue;
        const auto id = r["comment_id"].get<std::string>();
        if (!layout.has(Stage::Execute, id)) continue;
        any = true;
        md << "\n### " << id << "\n\n";
        if (layout.has(Stage::Extract, id)) {
          const auto ex = layout.read(Stage::Extract, id);
          md << "Method: `" << ex["signature"]["raw_text"].get<std::string>() << "`\n\n";
          const auto comment = ex["comment_text"].get<std::string>();
          md << "Comment:\n\n" << detail::fence(comment) << "\n" << comment << "\n" << detail::fence(comment) << "\n";
        }
        std::map<std::pair<std::size_t, std::size_t>, std::string> sources;
        std::map<std::size_t, std::string> props;
        if (layout.has(Stage::GenTests, id)) {
          for (const auto& p : json(layout.read(Stage::GenTests, id)["properties"])) {
            for (const auto& t : p["tests"]) {
              sources[{t["property_index"].get<std::size_t>(), t["ordinal"].get<std::size_t>()}] =
                  t["source"].get<std::string>();
            }
          }
        }
        if (layout.has(Stage::Properties, id)) {
          for (const auto& p : json(layout.read(Stage::Properties, id)["properties"])) {
            props[p["index"].get<std::size_t>()] = p["raw_line"].get<std::string>();
          }
        }
        for (const auto& o : json(layout.read(Stage::Execute, id)["outcomes"])) {
          if (o["status"] != "fail") continue;
          const auto pi = o["property_index"].get<std::size_t>();
          const auto ord = o["ordinal"].get<std::size_t>();
          md << "\nFailing test " << pi << "." << ord << " (`" << o["method_name"].get<std::string>() << "` in `"
             << o["host_file"].get<std::string>() << "`)";
          if (props.count(pi)) md << " for property: " << props[pi];
          md << "\n\n";
          if (sources.count({pi, ord})) {
            const auto& src = sources[{pi, ord}];
            md << detail::fence(src) << "java\n" << src << "\n" << detail::fence(src) << "\n\n";
          }
          const auto log = log_excerpt(o["log_excerpt"].get<std::string>(), kMdExcerptBytes);
          md << "Runner output:\n\n" << detail::fence(log) << "\n" << log << "\n" << detail::fence(log) << "\n";
        }
      }
      if (!any) md << "\nNone.\n";
      out = md.str();
      break;
    }
  }
  const auto path = run_dir / "report" / ("report." + ext);
  write_file_atomic(path, out);
  return path;
}

}  // namespace docprobe
