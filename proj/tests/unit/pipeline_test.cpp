// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "docprobe/pipeline.hpp"
#include "support/mock_project.hpp"

using namespace docprobe;
namespace fs = std::filesystem;

namespace {

struct Quiet {
  std::ostringstream sink;
  RunOptions opts;
  Quiet() { opts.log = &sink; }
};

RunSummary run_mock(const PipelineConfig& cfg, const std::vector<CommentRecord>& comments,
                    RunOptions opts = {}) {
  std::ostringstream sink;
  if (opts.log == &std::cerr) opts.log = &sink;
  MockBackend backend(cfg.backend.fixture_dir, false);
  ShellCommandRunner shell;
  return run_pipeline(cfg, comments, opts, backend, shell);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no docprobe::Error thrown");
  return ErrorCode::Io;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DOCPROBE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config paths resolve against the config directory") {
  auto p = mock::make_project("cfg", false);
  const auto& c = p.parsed;
  CHECK(c.runs_dir == p.dir / "runs");
  CHECK(c.project.root == p.dir / "repo");
  CHECK(c.backend.fixture_dir == p.dir / "fixtures");
  CHECK(c.backend.kind == BackendKind::Mock);
  CHECK(c.pipeline.w == 100.0);
  CHECK(c.pipeline.property_cap == 10);
  CHECK(c.pipeline.example_k == 1);
  CHECK(c.project.timeout_s == 30);
  CHECK_NOTHROW(c.validate());
  CHECK(c.digest() == parse_pipeline_config(json::parse(read_file(p.config)), p.dir).digest());
  fs::remove_all(p.dir);
}

TEST_CASE("config errors are InvalidConfig") {
  const json project = {{"root", "/tmp"}, {"test_cmd", "true"}};
  CHECK(code_of([&] { parse_pipeline_config(json{{"backend", {{"kind", "mock"}}}}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([&] { parse_pipeline_config(json{{"project", project}, {"backend", {{"kind", "gpt"}}}}); }) ==
        ErrorCode::InvalidConfig);
  CHECK(code_of([&] { parse_pipeline_config(json{{"project", {{"root", 3}}}}); }) == ErrorCode::InvalidConfig);
  auto c = parse_pipeline_config(json{{"project", project}, {"backend", {{"kind", "mock"}}}});
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);  // no fixture_dir
  c.backend.fixture_dir = "/tmp";
  CHECK_NOTHROW(c.validate());
  c.pipeline.w = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { load_pipeline_config("/nonexistent/config.json"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("project config round-trips through JSON") {
  ProjectConfig pc;
  pc.root = "/work/repo";
  pc.test_globs = {"a/**/*.java", "b/*Test.java"};
  pc.compile_cmd = "mvn -q test-compile";
  pc.test_cmd = "mvn -q test -Dtest={class}#{method}";
  pc.timeout_s = 42;
  const json j = pc;
  const auto back = j.get<ProjectConfig>();
  CHECK(back.root == pc.root);
  CHECK(back.test_globs == pc.test_globs);
  CHECK(back.compile_cmd == pc.compile_cmd);
  CHECK(back.test_cmd == pc.test_cmd);
  CHECK(back.pass_regex == pc.pass_regex);
  CHECK(back.fail_regex == pc.fail_regex);
  CHECK(back.timeout_s == 42);
  CHECK(json(back) == j);
}

TEST_CASE("comment records are validated") {
  const auto ok = parse_comments(json::array(
      {{{"comment_id", "a"}, {"subject_file", "A.java"}, {"method_name", "f"}, {"arity", 0}}}));
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].comment_text.empty());
  CHECK_FALSE(ok[0].label);
  const json dup = json::array({{{"comment_id", "a"}, {"subject_file", "A.java"}, {"method_name", "f"}, {"arity", 0}},
                                {{"comment_id", "a"}, {"subject_file", "A.java"}, {"method_name", "g"}, {"arity", 0}}});
  CHECK(code_of([&] { parse_comments(dup); }) == ErrorCode::InvalidConfig);
  const json unsafe = json::array(
      {{{"comment_id", "../x"}, {"subject_file", "A.java"}, {"method_name", "f"}, {"arity", 0}}});
  CHECK(code_of([&] { parse_comments(unsafe); }) == ErrorCode::InvalidConfig);
  const json bad_cat = json::array({{{"comment_id", "a"},
                                     {"subject_file", "A.java"},
                                     {"method_name", "f"},
                                     {"arity", 0},
                                     {"label", {{"accurate", false}, {"category", "nonsense"}}}}});
  CHECK(code_of([&] { parse_comments(bad_cat); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("stage lists") {
  CHECK(parse_stages("extract, score") == std::set<Stage>{Stage::Extract, Stage::Score});
  CHECK(parse_stages("gentests").count(Stage::GenTests) == 1);
  CHECK(code_of([] { parse_stages("extract,compile"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_stages(""); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("mock end-to-end run") {
  auto p = mock::make_project("e2e");
  const auto summary = run_mock(p.parsed, p.records);
  CHECK(summary.exit_code == 0);
  CHECK(summary.failed_comments == 0);
  CHECK(summary.harness_errors == 0);
  for (auto s : kRunStages) CHECK(summary.stages.at(s).done == 7);

  const RunLayout run(p.parsed.runs_dir / "r1");
  auto tally = [&](const std::string& id) { return tally_from_json(id, run.read(Stage::Score, id)["tally"]); };
  CHECK(tally("c01") == TestTally{"c01", 3, 0, 0, 0});
  CHECK(tally("c02") == TestTally{"c02", 3, 3, 0, 0});
  CHECK(tally("c03") == TestTally{"c03", 3, 0, 0, 0});
  CHECK(tally("c04") == TestTally{"c04", 5, 3, 1, 0});
  CHECK(tally("c05") == TestTally{"c05", 0, 0, 0, 0});
  CHECK(run.read(Stage::Score, "c05")["unverifiable"] == true);
  CHECK(run.read(Stage::Score, "c05")["score"] == 0.0);
  CHECK(run.read(Stage::Score, "c02")["score"] == Catch::Approx(3.0 - 300.0));

  // Signals are recorded, not failures.
  CHECK(run.read(Stage::Properties, "c05")["signal"] == "NoPropertiesFound");
  CHECK(run.read(Stage::GenTests, "c05")["properties"].empty());
  CHECK(run.read(Stage::Properties, "c04")["properties"].size() == 3);

  // Missing comment is generated from the method body.
  const auto ex = run.read(Stage::Extract, "c03");
  CHECK(ex["comment_generated"] == true);
  CHECK(ex["comment_text"] == "/** Returns the negation of the base value. */");
  CHECK(ex["signature"]["raw_text"] == "public int neg()");
  CHECK(ex["class_info"]["class_name"] == "Calc");
  CHECK(ex["class_info"]["constructors"].size() == 2);

  // One example, literals sanitized, from the test that touches Calc.add.
  const auto rt = run.read(Stage::Retrieve, "c01");
  REQUIRE(rt["examples"].size() == 1);
  CHECK(rt["examples"][0]["method_name"] == "addsToBase");
  CHECK(rt["examples"][0]["tier"] == "both");
  CHECK(rt["examples"][0]["prompt_text"].get<std::string>().find("c.add(3)") == std::string::npos);

  // The working copy is untouched after execution.
  CHECK(read_file(p.parsed.project.root / "src/test/java/calc/CalcTest.java") == mock::kHostTest);
  CHECK(read_file(p.parsed.project.root / "src/test/java/calc/LabelTest.java") == mock::kOtherTest);

  const auto outcomes = run.read(Stage::Execute, "c04")["outcomes"];
  std::map<std::string, int> by_status;
  for (const auto& o : outcomes) ++by_status[o["status"].get<std::string>()];
  CHECK(by_status == std::map<std::string, int>{{"pass", 5}, {"fail", 3}, {"compile_error", 1}});
  for (const auto& o : outcomes) CHECK_FALSE(o.contains("duration_s"));

  const auto manifest = read_json(run.manifest());
  CHECK(manifest["config_digest"] == p.parsed.digest());
  CHECK(manifest["stage_status"]["score"]["status"] == "complete");
  CHECK(manifest["failures"].empty());
  CHECK(manifest["durations"]["execute"].size() == 7);
  fs::remove_all(p.dir);
}

TEST_CASE("artifacts are byte-identical across runs") {
  auto p = mock::make_project("det");
  auto a = p.parsed;
  auto b = p.parsed;
  b.run_id = "r2";
  run_mock(a, p.records);
  RunOptions serial;
  run_mock(b, p.records, serial);
  const auto x = mock::stage_artifacts(a.runs_dir / "r1");
  const auto y = mock::stage_artifacts(b.runs_dir / "r2");
  CHECK(x.size() == 42);
  CHECK(x == y);
  fs::remove_all(p.dir);
}

TEST_CASE("resume skips finished work and recomputes only what is missing") {
  auto p = mock::make_project("resume");
  RunOptions first;
  first.stages = parse_stages("extract,retrieve");
  auto s1 = run_mock(p.parsed, p.records, first);
  CHECK(s1.exit_code == 0);
  const auto run_dir = p.parsed.runs_dir / "r1";
  CHECK_FALSE(fs::exists(run_dir / "properties"));

  auto s2 = run_mock(p.parsed, p.records);
  CHECK(s2.stages.at(Stage::Extract).skipped == 7);
  CHECK(s2.stages.at(Stage::Properties).done == 7);
  const auto before = mock::stage_artifacts(run_dir);

  auto s3 = run_mock(p.parsed, p.records);
  CHECK(s3.exit_code == 0);
  for (auto s : kRunStages) {
    CHECK(s3.stages.at(s).skipped == 7);
    CHECK(s3.stages.at(s).done == 0);
  }
  CHECK(mock::stage_artifacts(run_dir) == before);

  fs::remove(run_dir / "score" / "c02.json");
  fs::remove(run_dir / "gentests" / "c04.json");
  fs::remove(run_dir / "execute" / "c04.json");
  fs::remove(run_dir / "score" / "c04.json");
  auto s4 = run_mock(p.parsed, p.records);
  CHECK(s4.stages.at(Stage::GenTests).done == 1);
  CHECK(s4.stages.at(Stage::Execute).done == 1);
  CHECK(s4.stages.at(Stage::Score).done == 2);
  CHECK(mock::stage_artifacts(run_dir) == before);
  fs::remove_all(p.dir);
}

TEST_CASE("missing prerequisites and fixtures fail per comment") {
  auto p = mock::make_project("fail");
  RunOptions only_score;
  only_score.stages = {Stage::Score};
  auto s = run_mock(p.parsed, p.records, only_score);
  CHECK(s.exit_code == 1);
  CHECK(s.failed_comments == 7);
  auto manifest = read_json(p.parsed.runs_dir / "r1" / "manifest.json");
  CHECK(manifest["failures"]["c01"]["code"] == "StageNotComplete");
  CHECK(manifest["failures"]["c01"]["stage"] == "score");

  // Drop the fixture behind c07's property prompt: c07 alone fails.
  auto cfg = p.parsed;
  cfg.run_id = "r2";
  {
    auto full = run_mock(p.parsed, p.records);
    CHECK(full.exit_code == 0);
    const auto digest = RunLayout(p.parsed.runs_dir / "r1").read(Stage::Properties, "c07")["prompt_digest"];
    fs::remove(cfg.backend.fixture_dir / (digest.get<std::string>() + ".txt"));
  }
  auto s2 = run_mock(cfg, p.records);
  CHECK(s2.exit_code == 1);
  CHECK(s2.failed_comments == 1);
  CHECK(s2.stages.at(Stage::Score).done == 6);
  manifest = read_json(cfg.runs_dir / "r2" / "manifest.json");
  CHECK(manifest["failures"].size() == 1);
  CHECK(manifest["failures"]["c07"]["stage"] == "properties");
  CHECK(manifest["failures"]["c07"]["code"] == "FixtureMissing");
  CHECK(manifest["stage_status"]["score"]["status"] == "partial");
  fs::remove_all(p.dir);
}

TEST_CASE("a run refuses a changed configuration") {
  auto p = mock::make_project("digest");
  RunOptions one;
  one.stages = {Stage::Extract};
  run_mock(p.parsed, p.records, one);
  auto changed = p.parsed;
  changed.pipeline.w = 50;
  CHECK(code_of([&] { run_mock(changed, p.records, one); }) == ErrorCode::InvalidConfig);
  auto bad_id = p.parsed;
  bad_id.run_id = "";
  CHECK(code_of([&] { run_mock(bad_id, p.records, one); }) == ErrorCode::InvalidConfig);
  fs::remove_all(p.dir);
}

TEST_CASE("unscoreable harness problems surface as HarnessError") {
  auto p = mock::make_project("harness");
  auto cfg = p.parsed;
  cfg.project.test_globs = {"nothing/**/*.java"};  // no host files, no examples
  mock::FixtureRecorder recorder(cfg.backend.fixture_dir);
  ShellCommandRunner shell;
  Quiet q;
  const std::vector<CommentRecord> one(p.records.begin(), p.records.begin() + 1);
  auto s = run_pipeline(cfg, one, q.opts, recorder, shell);
  CHECK(s.harness_errors == 3);
  CHECK(s.exit_code == 1);
  const RunLayout run(cfg.runs_dir / "r1");
  CHECK(run.read(Stage::Retrieve, "c01")["signal"] == "EmptyCorpus");
  CHECK(run.read(Stage::Execute, "c01")["outcomes"][0]["status"] == "harness_error");
  CHECK(run.read(Stage::Score, "c01")["tally"]["n_excluded"] == 3);
  fs::remove_all(p.dir);
}

TEST_CASE("evaluate computes metrics over labeled comments") {
  auto p = mock::make_project("eval");
  run_mock(p.parsed, p.records);
  const auto run_dir = p.parsed.runs_dir / "r1";
  const auto labels = load_labels(p.comments);
  CHECK(labels.size() == 7);
  const auto doc = evaluate_run(run_dir, labels);
  CHECK(doc["n_comments"] == 7);
  CHECK(doc["n_labeled"] == 6);  // c05 is ambiguous
  CHECK(doc["n_ambiguous_excluded"] == 1);
  CHECK(doc["metrics"]["roc_auc"] == 1.0);
  CHECK(doc["metrics"]["ap"] == 1.0);
  CHECK(doc["metrics"]["pointbiserial_r"].get<double>() > 0.9);
  CHECK(doc["thresholds"][0]["cutoff"] == 0.0);
  CHECK(doc["thresholds"][0]["inaccurate_removed"] == 0.0);
  CHECK(doc["thresholds"][0]["accurate_retained"] == 1.0);
  CHECK(doc["thresholds"].size() == 11);
  CHECK(doc["bins"].size() == 5);
  REQUIRE(doc["comparison"].size() == 3);
  CHECK(doc["comparison"][1]["method"] == "pass_rate");
  CHECK(doc["comparison"][2]["method"] == "bleu");
  CHECK(fs::exists(run_dir / "evaluate" / "metrics.json"));
  CHECK(read_file(run_dir / "evaluate" / "comparison.csv").rfind("method,roc_auc,ap,", 0) == 0);
  for (const auto& r : doc["records"]) {
    const double n = r["normalized"].get<double>();
    CHECK(n >= 0.0);
    CHECK(n <= 1.0);
  }

  // Overriding w rescores without touching the run.
  EvaluationOptions o;
  o.w = 1.0;
  o.sweep = true;
  const auto doc2 = evaluate_run(run_dir, labels, o);
  CHECK(doc2["w"] == 1.0);
  CHECK(doc2["w_sweep"].size() == 201);
  CHECK(doc2["w_sweep"][0]["w"] == 0.01);
  CHECK(doc2["w_sweep"][200]["w"] == 100.0);

  // Two runs average to the single-run value when they agree.
  auto other = p.parsed;
  other.run_id = "r2";
  run_mock(other, p.records);
  const auto agg = evaluate_runs({run_dir, other.runs_dir / "r2"}, labels);
  CHECK(agg["n_runs"] == 2);
  CHECK(agg["aggregate"]["roc_auc"] == 1.0);
  CHECK(agg["aggregate"]["pointbiserial_r"].get<double>() ==
        Catch::Approx(doc["metrics"]["pointbiserial_r"].get<double>()).epsilon(1e-12));

  // Fewer than two of a class.
  std::vector<LabelRecord> few;
  for (const auto& l : labels) {
    if (l.comment_id != "c02" && l.comment_id != "c04") few.push_back(l);
  }
  CHECK(code_of([&] { evaluate_run(run_dir, few); }) == ErrorCode::InsufficientLabels);
  CHECK(code_of([&] { evaluate_run(p.dir / "runs" / "nope", labels); }) == ErrorCode::UnknownRun);
  fs::remove_all(p.dir);
}

TEST_CASE("reports") {
  auto p = mock::make_project("report");
  run_mock(p.parsed, p.records);
  const auto run_dir = p.parsed.runs_dir / "r1";
  CHECK(code_of([&] { write_report(p.parsed.runs_dir / "missing", ReportFormat::Csv); }) == ErrorCode::UnknownRun);
  CHECK(code_of([&] { write_report(run_dir, ReportFormat::Csv); }) == ErrorCode::StageNotComplete);
  evaluate_run(run_dir, load_labels(p.comments));

  const auto csv = read_file(write_report(run_dir, ReportFormat::Csv));
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "comment_id,n_pass,n_fail,n_nocompile,n_excluded,score,normalized,label,category");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 7);
  CHECK(csv.find("\nc04,5,3,1,0,") != std::string::npos);
  CHECK(csv.find(",inaccurate,hallucinating_intent\n") != std::string::npos);

  const auto js = read_json(write_report(run_dir, ReportFormat::Json));
  CHECK(js["rows"].size() == 7);
  CHECK(js["rows"][3]["comment_id"] == "c04");
  CHECK(js["rows"][3]["properties"].size() == 3);
  CHECK(js["rows"][3]["properties"][0]["verdicts"] == json::array({"fail", "fail", "fail"}));

  const auto md = read_file(write_report(run_dir, ReportFormat::Md));
  CHECK(md.find("## Flagged comments") != std::string::npos);
  CHECK(md.find("### c02") != std::string::npos);
  CHECK(md.find("### c01") == std::string::npos);
  CHECK(md.find("public void failsCase1()") != std::string::npos);
  CHECK(md.find("FAILURES!!!") != std::string::npos);
  CHECK(md.find("expected:<1> but was:<2>") != std::string::npos);
  CHECK(fs::exists(run_dir / "report" / "report.md"));
  fs::remove_all(p.dir);
}

TEST_CASE("command line") {
  auto p = mock::make_project("cli");
  const std::string base = "--config " + p.config.string() + " --comments " + p.comments.string();
  CHECK(run_cli("run " + base + " --stages extract,compile") == 2);
  CHECK(run_cli("run --config /nonexistent.json --comments " + p.comments.string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run " + base) == 0);
  CHECK(run_cli("run " + base) == 0);  // nothing left to do
  CHECK(run_cli("run " + base + " --w 5") == 2);  // config differs from the run's
  const std::string runs = " --runs-dir " + (p.dir / "runs").string();
  CHECK(run_cli("report --run r1 --format csv" + runs) == 1);  // not evaluated yet
  CHECK(run_cli("evaluate --run r1 --labels " + p.comments.string() + runs) == 0);
  CHECK(run_cli("report --run r1 --format md" + runs) == 0);
  CHECK(run_cli("report --run r1 --format pdf" + runs) == 2);
  CHECK(run_cli("report --run nope --format csv" + runs) == 1);
  CHECK(fs::exists(p.dir / "runs" / "r1" / "report" / "report.md"));
  CHECK(run_cli("run " + base + " --run-id r9 --stages score") == 1);

  // Tracing records each exchange as a JSON line.
  const auto trace = p.dir / "trace.jsonl";
  CHECK(run_cli("run " + base + " --run-id r3 --stages extract,retrieve,properties --trace-llm " + trace.string()) ==
        0);
  std::istringstream in(read_file(trace));
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) {
    const auto j = json::parse(l);
    CHECK(j.contains("digest"));
    ++n;
  }
  CHECK(n == 8);  // one comment generation plus seven property prompts
  fs::remove_all(p.dir);
}

TEST_CASE("evaluate over a simulated run separates the classes") {
  const auto dir = mock::fresh_dir("sim") / "sim";
  write_file_atomic(dir / "manifest.json", json{{"schema_version", 1}, {"run_id", "sim"}}.dump());
  std::vector<LabelRecord> labels;
  for (const auto& d : simulate_documents(0.9, 0.3, 1000, 10, 0.5, 7)) {
    write_file_atomic(dir / "score" / (d.tally.comment_id + ".json"),
                      json{{"comment_id", d.tally.comment_id}, {"tally", tally_json(d.tally)}, {"w", 100.0}}.dump());
    labels.push_back({d.tally.comment_id, {d.accurate, std::nullopt, false}});
  }
  const auto doc = evaluate_run(dir, labels);
  CHECK(doc["n_labeled"] == 1000);
  CHECK(doc["metrics"]["roc_auc"].get<double>() >= 0.95);
  CHECK(doc["thresholds"][0]["inaccurate_removed"] == 0.0);
  CHECK(doc["thresholds"][0]["accurate_retained"] == 1.0);
  fs::remove_all(dir.parent_path());
}

TEST_CASE("labels must agree with their category") {
  auto rec = [](json label) {
    return json::array(
        {{{"comment_id", "a"}, {"subject_file", "A.java"}, {"method_name", "f"}, {"arity", 0}, {"label", label}}});
  };
  CHECK(code_of([&] { parse_comments(rec({{"accurate", true}, {"category", "hallucinating_intent"}})); }) ==
        ErrorCode::InvalidConfig);
  CHECK(code_of([&] { parse_labels(json::array({{{"comment_id", "a"}, {"accurate", false}, {"category", "accurate"}}})); }) ==
        ErrorCode::InvalidConfig);
  CHECK_NOTHROW(parse_comments(rec({{"accurate", false}, {"category", "lacking_code_context"}})));
  const auto flat = parse_labels(json{{"labels", json::array({{{"comment_id", "z"}, {"accurate", false}}})}});
  REQUIRE(flat.size() == 1);
  CHECK_FALSE(flat[0].label.accurate);
}

TEST_CASE("reports flag unverifiable comments") {
  auto p = mock::make_project("unverifiable");
  run_mock(p.parsed, p.records);
  const auto run_dir = p.parsed.runs_dir / "r1";
  evaluate_run(run_dir, load_labels(p.comments));
  const auto js = read_json(write_report(run_dir, ReportFormat::Json));
  CHECK(js["rows"][4]["comment_id"] == "c05");
  CHECK(js["rows"][4]["unverifiable"] == true);
  CHECK(js["rows"][0]["unverifiable"] == false);
  const auto md = read_file(write_report(run_dir, ReportFormat::Md));
  const auto at = md.find("## Unverifiable comments");
  REQUIRE(at != std::string::npos);
  CHECK(md.find("- c05", at) != std::string::npos);
  CHECK(md.find("BLEU is 4-gram, unsmoothed") != std::string::npos);
  fs::remove_all(p.dir);
}
