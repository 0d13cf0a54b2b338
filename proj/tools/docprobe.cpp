// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

// docprobe run | evaluate | report
//
// Exit status: 0 success, 1 partial failure or a runtime error (missing run,
// too few labels, ...), 2 bad usage or configuration.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "docprobe/http_backend.hpp"
#include "docprobe/pipeline.hpp"

namespace {

using namespace docprobe;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct RunArgs {
  std::string config;
  std::string comments;
  std::string stages;
  std::optional<double> w;
  std::string backend;
  std::string run_id;
  std::string trace;
  bool dump_prompts = false;
};

struct EvaluateArgs {
  std::vector<std::string> runs;
  std::string labels;
  std::optional<double> w;
  std::string runs_dir;
  std::string config;
  bool sweep = false;
  std::string out;
};

struct ReportArgs {
  std::string run;
  std::string format;
  std::string runs_dir;
  std::string config;
};

std::filesystem::path runs_dir_from(const std::string& runs_dir, const std::string& config) {
  if (!runs_dir.empty()) return runs_dir;
  if (!config.empty()) return load_pipeline_config(config).runs_dir;
  return "runs";
}

int cmd_run(const RunArgs& a, const CLI::App& sub) {
  RunOptions options;
  if (!a.stages.empty()) {
    try {
      options.stages = parse_stages(a.stages);
    } catch (const Error& e) {
      std::cerr << "docprobe: " << e.what() << "\n\n" << sub.help();
      return kExitConfig;
    }
  }
  auto config = load_pipeline_config(a.config);
  if (!a.run_id.empty()) config.run_id = a.run_id;
  if (a.w) config.pipeline.w = *a.w;
  if (a.backend == "http") config.backend.kind = BackendKind::Http;
  if (a.backend == "mock") config.backend.kind = BackendKind::Mock;
  config.backend.dump_missing_prompts = a.dump_prompts;
  const auto comments = load_comments(a.comments);

  config.validate();
  auto backend = make_backend(config.backend);
  std::optional<TracingBackend> tracer;
  if (!a.trace.empty()) tracer.emplace(*backend, a.trace);
  CompletionBackend& llm = tracer ? static_cast<CompletionBackend&>(*tracer) : *backend;
  ShellCommandRunner shell;
  const auto summary = run_pipeline(config, comments, options, llm, shell);
  std::cout << (config.runs_dir / config.run_id).string() << "\n";
  return summary.exit_code == 0 ? kExitOk : kExitPartial;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const auto runs_dir = runs_dir_from(a.runs_dir, a.config);
  std::vector<std::filesystem::path> dirs;
  for (const auto& r : a.runs) dirs.push_back(locate_run(runs_dir, r));
  EvaluationOptions options;
  options.w = a.w;
  options.sweep = a.sweep;
  const auto doc = evaluate_runs(dirs, load_labels(a.labels), options);
  json brief = {{"n_runs", doc["n_runs"]}, {"aggregate", doc["aggregate"]}};
  if (!a.out.empty()) write_file_atomic(a.out, doc.dump(2) + "\n");
  std::cout << brief.dump(2) << "\n";
  return kExitOk;
}

int cmd_report(const ReportArgs& a) {
  const auto format = report_format_from_string(a.format);
  if (!format) throw Error(ErrorCode::InvalidConfig, "unknown format '" + a.format + "'");
  const auto dir = locate_run(runs_dir_from(a.runs_dir, a.config), a.run);
  std::cout << write_report(dir, *format).string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"docprobe: check documentation comments by generating and running tests"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run pipeline stages for a batch of comments");
  run_cmd->add_option("--config", run.config, "Pipeline config JSON")->required();
  run_cmd->add_option("--comments", run.comments, "Comments JSON")->required();
  run_cmd->add_option("--stages", run.stages,
                      "Comma-separated subset of extract,retrieve,properties,gentests,execute,score");
  run_cmd->add_option("--w", run.w, "Weight of a failing test");
  run_cmd->add_option("--backend", run.backend, "Override the configured backend")
      ->check(CLI::IsMember({"http", "mock"}));
  run_cmd->add_option("--run-id", run.run_id, "Override the configured run id");
  run_cmd->add_option("--trace-llm", run.trace, "Append every prompt and response to this JSONL file");
  run_cmd->add_flag("--dump-prompts", run.dump_prompts,
                    "Mock backend: write <digest>.prompt.txt next to the fixtures for each miss");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Compare scores against human labels");
  ev_cmd->add_option("--run", ev.runs, "Run id or run directory (repeatable)")->required();
  ev_cmd->add_option("--labels", ev.labels, "Labels JSON (a comments file with labels works)")->required();
  ev_cmd->add_option("--w", ev.w, "Rescore with this weight");
  ev_cmd->add_option("--runs-dir", ev.runs_dir, "Directory holding runs");
  ev_cmd->add_option("--config", ev.config, "Take the runs directory from this config");
  ev_cmd->add_flag("--sweep", ev.sweep, "Also sweep w over the log-spaced schedule");
  ev_cmd->add_option("--out", ev.out, "Write the combined metrics document here");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Write a per-comment report for an evaluated run");
  rep_cmd->add_option("--run", rep.run, "Run id or run directory")->required();
  rep_cmd->add_option("--format", rep.format, "csv, json or md")->required();
  rep_cmd->add_option("--runs-dir", rep.runs_dir, "Directory holding runs");
  rep_cmd->add_option("--config", rep.config, "Take the runs directory from this config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run, *run_cmd);
    if (*ev_cmd) return cmd_evaluate(ev);
    if (*rep_cmd) return cmd_report(rep);
  } catch (const Error& e) {
    std::cerr << "docprobe: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidConfig ? kExitConfig : kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "docprobe: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitConfig;
}
