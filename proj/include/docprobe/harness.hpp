// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Injection of generated tests into the subject project's test files, and
// compile/run/classify against the project's own commands.

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "docprobe/error.hpp"
#include "docprobe/io.hpp"
#include "docprobe/java_lexer.hpp"
#include "docprobe/llm_gateway.hpp"
#include "docprobe/path_glob.hpp"
#include "docprobe/source_extractor.hpp"
#include "docprobe/tally.hpp"
#include "docprobe/test_corpus.hpp"
#include "json.hpp"

namespace docprobe {

// ---------------------------------------------------------------------------
// Host selection

/// Maximal runs of [A-Za-z0-9_].
inline std::set<std::string> word_tokens(std::string_view text) {
  std::set<std::string> out;
  std::size_t i = 0;
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < text.size()) {
    if (!word(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && word(text[j])) ++j;
    out.emplace(text.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Jaccard similarity of the two token sets; 1.0 when both are empty.
inline double token_similarity(std::string_view a, std::string_view b) {
  const auto ta = word_tokens(a);
  const auto tb = word_tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : ta) common += tb.count(t);
  return static_cast<double>(common) / static_cast<double>(ta.size() + tb.size() - common);
}

struct HostCandidate {
  std::filesystem::path path;
  std::string contents;
};

/// Most similar candidate; ties go to the lexicographically smallest path.
inline std::filesystem::path choose_host_file(const GeneratedTestSource& test,
                                              const std::vector<HostCandidate>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::NoTestFiles, "no candidate test files");
  const HostCandidate* best = nullptr;
  double best_sim = -1.0;
  for (const auto& c : candidates) {
    const double sim = token_similarity(test.source, c.contents);
    if (sim > best_sim || (sim == best_sim && c.path.generic_string() < best->path.generic_string())) {
      best = &c;
      best_sim = sim;
    }
  }
  return best->path;
}

/// Reads each file under `root` and picks the most similar one.
inline std::filesystem::path choose_host_file(const GeneratedTestSource& test,
                                              const std::vector<std::filesystem::path>& test_files,
                                              const std::filesystem::path& root = {}) {
  std::vector<HostCandidate> candidates;
  candidates.reserve(test_files.size());
  for (const auto& f : test_files) candidates.push_back({f, read_file(root / f)});
  return choose_host_file(test, candidates);
}

// ---------------------------------------------------------------------------
// Injection

struct InjectionPlan {
  GeneratedTestSource test;
  std::filesystem::path host_file;
  std::size_t insertion_offset = 0;  // in the host's original bytes
  std::vector<std::string> added_imports;
  std::string host_class;         // fully qualified
  std::string host_simple_class;
};

struct Injection {
  std::string contents;
  InjectionPlan plan;
};

namespace detail {

inline std::string squash_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Places the test method just before the closing brace of the host's last
/// top-level type, and adds the test's imports that the host lacks after the
/// package statement.
inline Injection inject_test(const GeneratedTestSource& test, std::string_view host_contents,
                             const std::filesystem::path& host_file = {}) {
  const auto toks = lex::tokenize(host_contents, false);
  int balance = 0;
  for (const auto& t : toks) {
    if (t.is('{')) ++balance;
    if (t.is('}')) --balance;
    if (balance < 0) break;
  }
  const auto types = find_type_decls(toks);
  const TypeDecl* last = nullptr;
  for (const auto& t : types) {
    if (t.depth == 0) last = &t;
  }
  if (balance != 0 || last == nullptr || last->body_close >= toks.size()) {
    throw Error(ErrorCode::UnbalancedHost, host_file.string());
  }

  InjectionPlan plan;
  plan.test = test;
  plan.host_file = host_file;
  plan.insertion_offset = toks[last->body_close].offset;
  plan.host_simple_class = std::string(toks[last->name].text);
  const auto pkg = package_name(host_contents);
  plan.host_class = pkg && !pkg->empty() ? *pkg + "." + plan.host_simple_class : plan.host_simple_class;

  std::set<std::string> present;
  for (const auto& imp : extract_imports(host_contents)) present.insert(detail::squash_spaces(imp));
  for (const auto& imp : test.imports) {
    if (present.insert(detail::squash_spaces(imp)).second) plan.added_imports.push_back(imp);
  }

  std::size_t import_offset = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!toks[i].is_ident("package")) continue;
    for (std::size_t j = i; j < toks.size(); ++j) {
      if (toks[j].is(';')) {
        import_offset = toks[j].end();
        break;
      }
    }
    break;
  }
  std::string import_text;
  for (const auto& imp : plan.added_imports) {
    if (import_offset > 0) import_text += '\n';
    import_text += imp;
    if (import_offset == 0) import_text += '\n';
  }

  std::string out;
  out.reserve(host_contents.size() + import_text.size() + test.source.size() + 4);
  out.append(host_contents.substr(0, import_offset));
  out.append(import_text);
  out.append(host_contents.substr(import_offset, plan.insertion_offset - import_offset));
  out.append("\n");
  out.append(test.source);
  out.append("\n");
  out.append(host_contents.substr(plan.insertion_offset));
  return {std::move(out), std::move(plan)};
}

// ---------------------------------------------------------------------------
// Project configuration

inline constexpr std::size_t kDefaultLogExcerptBytes = 16 * 1024;

struct ProjectConfig {
  std::filesystem::path root;
  std::vector<std::string> test_globs = {"src/test/**/*.java"};
  std::string compile_cmd;
  std::string test_cmd;  // placeholders: {class} {simple_class} {method} {file}
  // JUnit 4 text runner and JUnit Platform console summaries.
  std::string pass_regex = R"(OK \([1-9][0-9]* tests?\)|\[\s*[1-9][0-9]* tests successful\s*\])";
  std::string fail_regex =
      R"(FAILURES!!!|Tests run: *[0-9]+, *Failures: *[1-9]|\[\s*[1-9][0-9]* tests failed\s*\])";
  int timeout_s = 300;
  std::size_t max_log_bytes = kDefaultLogExcerptBytes;

  void validate() const {
    if (root.empty()) throw Error(ErrorCode::InvalidConfig, "project.root is required");
    if (test_cmd.empty()) throw Error(ErrorCode::InvalidConfig, "project.test_cmd is required");
    if (test_globs.empty()) throw Error(ErrorCode::InvalidConfig, "project.test_globs is empty");
    if (timeout_s <= 0) throw Error(ErrorCode::InvalidConfig, "project.timeout_s must be positive");
    try {
      std::regex a(pass_regex);
      std::regex b(fail_regex);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("bad project regex: ") + e.what());
    }
  }
};

inline void to_json(nlohmann::json& j, const ProjectConfig& c) {
  j = {{"root", c.root.string()},       {"test_globs", c.test_globs}, {"compile_cmd", c.compile_cmd},
       {"test_cmd", c.test_cmd},        {"pass_regex", c.pass_regex}, {"fail_regex", c.fail_regex},
       {"timeout_s", c.timeout_s},      {"max_log_bytes", c.max_log_bytes}};
}

inline void from_json(const nlohmann::json& j, ProjectConfig& c) {
  ProjectConfig d;
  c.root = j.at("root").get<std::string>();
  c.test_globs = j.value("test_globs", d.test_globs);
  c.compile_cmd = j.value("compile_cmd", d.compile_cmd);
  c.test_cmd = j.at("test_cmd").get<std::string>();
  c.pass_regex = j.value("pass_regex", d.pass_regex);
  c.fail_regex = j.value("fail_regex", d.fail_regex);
  c.timeout_s = j.value("timeout_s", d.timeout_s);
  c.max_log_bytes = j.value("max_log_bytes", d.max_log_bytes);
}

/// Replaces {class}, {simple_class}, {method} and {file}.
inline std::string expand_command(std::string_view tmpl, const InjectionPlan& plan) {
  const std::map<std::string_view, std::string> vars = {{"class", plan.host_class},
                                                        {"simple_class", plan.host_simple_class},
                                                        {"method", plan.test.method_name},
                                                        {"file", plan.host_file.generic_string()}};
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = vars.find(tmpl.substr(i + 1, close - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Command execution

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  bool spawn_failed = false;
  std::string output;  // stdout and stderr interleaved
  std::chrono::duration<double> duration{0};
};

class CommandRunner {
 public:
  virtual ~CommandRunner() = default;
  virtual CommandResult run(const std::string& command, const std::filesystem::path& cwd,
                            std::chrono::seconds timeout) = 0;
};

/// Runs `/bin/sh -c command` in its own process group; on timeout the whole
/// group is killed.
class ShellCommandRunner : public CommandRunner {
 public:
  static constexpr std::size_t kMaxCapture = 4 * 1024 * 1024;

  CommandResult run(const std::string& command, const std::filesystem::path& cwd,
                    std::chrono::seconds timeout) override {
    CommandResult result;
    const auto start = std::chrono::steady_clock::now();
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
      result.spawn_failed = true;
      result.output = std::string("pipe: ") + std::strerror(errno);
      return result;
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      result.spawn_failed = true;
      result.output = std::string("fork: ") + std::strerror(errno);
      return result;
    }
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(fds[1], STDOUT_FILENO);
      ::dup2(fds[1], STDERR_FILENO);
      const int devnull = ::open("/dev/null", O_RDONLY);
      if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
      if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(126);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(fds[1]);

    const auto deadline = start + timeout;
    char buf[8192];
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        result.timed_out = true;
        break;
      }
      pollfd pfd{fds[0], POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
      if (rc < 0 && errno == EINTR) continue;
      if (rc == 0) continue;
      const ssize_t n = ::read(fds[0], buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      if (result.output.size() < kMaxCapture) result.output.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fds[0]);
    if (result.timed_out) ::kill(-pid, SIGKILL);

    int status = 0;
    while (true) {
      if (!result.timed_out) {
        // Output closed; the shell may still be running if it detached its
        // descriptors, so keep honouring the deadline.
        const pid_t w = ::waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
          result.timed_out = true;
          ::kill(-pid, SIGKILL);
          continue;
        }
        ::usleep(1000);
        continue;
      }
      if (::waitpid(pid, &status, 0) >= 0 || errno != EINTR) break;
    }
    if (!result.timed_out) {
      if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
      } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
      }
    }
    result.duration = std::chrono::steady_clock::now() - start;
    return result;
  }
};

// ---------------------------------------------------------------------------
// Outcomes

enum class OutcomeStatus { Pass, Fail, CompileError, Timeout, HarnessError };

inline std::string_view to_string(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::Pass: return "pass";
    case OutcomeStatus::Fail: return "fail";
    case OutcomeStatus::CompileError: return "compile_error";
    case OutcomeStatus::Timeout: return "timeout";
    case OutcomeStatus::HarnessError: return "harness_error";
  }
  return "harness_error";
}

inline std::optional<OutcomeStatus> outcome_status_from_string(std::string_view s) {
  for (auto v : {OutcomeStatus::Pass, OutcomeStatus::Fail, OutcomeStatus::CompileError,
                 OutcomeStatus::Timeout, OutcomeStatus::HarnessError}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct TestId {
  std::string comment_id;
  std::size_t property_index = 0;
  std::size_t ordinal = 0;

  bool operator==(const TestId&) const = default;
};

struct ExecutionOutcome {
  TestId test_id;
  OutcomeStatus status = OutcomeStatus::HarnessError;
  std::string log_excerpt;
  double duration_s = 0.0;
};

/// Keeps the head and the tail of long logs, within `max_bytes`.
inline std::string log_excerpt(std::string_view log, std::size_t max_bytes) {
  if (log.size() <= max_bytes) return std::string(log);
  static constexpr std::string_view kCut = "\n[... truncated ...]\n";
  if (max_bytes <= kCut.size()) return std::string(log.substr(0, max_bytes));
  const std::size_t keep = max_bytes - kCut.size();
  const std::size_t head = keep / 2;
  const std::size_t tail = keep - head;
  std::string out(log.substr(0, head));
  out += kCut;
  out += log.substr(log.size() - tail);
  return out;
}

/// Saves the bytes of a file and puts them back on destruction. A file that
/// did not exist is removed again.
class FileSnapshot {
 public:
  explicit FileSnapshot(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) original_ = read_file(path_);
  }
  FileSnapshot(const FileSnapshot&) = delete;
  FileSnapshot& operator=(const FileSnapshot&) = delete;
  ~FileSnapshot() {
    try {
      if (original_) {
        write_file(path_, *original_);
      } else {
        std::filesystem::remove(path_);
      }
    } catch (...) {
    }
  }

 private:
  std::filesystem::path path_;
  std::optional<std::string> original_;
};

/// Writes the injected file, compiles, runs the single test and classifies
/// the result. The host file is restored before returning, whatever happens.
/// The caller must hold the working copy exclusively.
inline ExecutionOutcome execute_test(const ProjectConfig& project, const InjectionPlan& plan,
                                     std::string_view injected_contents, CommandRunner& runner,
                                     TestId id) {
  ExecutionOutcome out;
  out.test_id = std::move(id);
  const auto start = std::chrono::steady_clock::now();
  const auto timeout = std::chrono::seconds(project.timeout_s);
  std::string log;
  auto finish = [&](OutcomeStatus status) {
    out.status = status;
    out.log_excerpt = log_excerpt(log, project.max_log_bytes);
    out.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };
  try {
    FileSnapshot snapshot(project.root / plan.host_file);
    write_file(project.root / plan.host_file, injected_contents);

    if (!project.compile_cmd.empty()) {
      auto r = runner.run(expand_command(project.compile_cmd, plan), project.root, timeout);
      log += r.output;
      if (r.timed_out) return finish(OutcomeStatus::Timeout);
      // 126/127: the shell could not find or run the tool.
      if (r.spawn_failed || r.exit_code == 126 || r.exit_code == 127) {
        return finish(OutcomeStatus::HarnessError);
      }
      if (r.exit_code != 0) return finish(OutcomeStatus::CompileError);
    }

    auto r = runner.run(expand_command(project.test_cmd, plan), project.root, timeout);
    if (!log.empty() && !r.output.empty()) log += "\n";
    log += r.output;
    if (r.timed_out) return finish(OutcomeStatus::Timeout);
    if (r.spawn_failed) return finish(OutcomeStatus::HarnessError);
    if (std::regex_search(r.output, std::regex(project.fail_regex))) return finish(OutcomeStatus::Fail);
    if (r.exit_code == 0 && std::regex_search(r.output, std::regex(project.pass_regex))) {
      return finish(OutcomeStatus::Pass);
    }
    return finish(OutcomeStatus::HarnessError);
  } catch (const std::exception& e) {
    log += std::string("\nharness: ") + e.what();
    return finish(OutcomeStatus::HarnessError);
  }
}

/// Counts outcomes by status. `comment_id` names the tally when the list is
/// empty, and must match the outcomes otherwise.
inline TestTally tally_outcomes(const std::vector<ExecutionOutcome>& outcomes,
                                std::string comment_id = {}) {
  TestTally t;
  t.comment_id = outcomes.empty() ? std::move(comment_id) : outcomes.front().test_id.comment_id;
  if (!outcomes.empty() && !comment_id.empty() && comment_id != t.comment_id) {
    throw Error(ErrorCode::MixedComments, comment_id + " vs " + t.comment_id);
  }
  for (const auto& o : outcomes) {
    if (o.test_id.comment_id != t.comment_id) {
      throw Error(ErrorCode::MixedComments, o.test_id.comment_id + " vs " + t.comment_id);
    }
    switch (o.status) {
      case OutcomeStatus::Pass: ++t.n_pass; break;
      case OutcomeStatus::Fail: ++t.n_fail; break;
      case OutcomeStatus::CompileError: ++t.n_nocompile; break;
      case OutcomeStatus::Timeout:
      case OutcomeStatus::HarnessError: ++t.n_excluded; break;
    }
  }
  return t;
}

}  // namespace docprobe
