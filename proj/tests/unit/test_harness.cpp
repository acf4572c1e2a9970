#include <gtest/gtest.h>

#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include "envsniff/errors.hpp"
#include "envsniff/harness.hpp"
#include "envsniff/process.hpp"
#include "fixtures.hpp"

using namespace envsniff;
using fixtures::TempDir;

namespace {

// Scripted executor: answers commands in order and records them.
class FakeExecutor : public Executor {
 public:
  std::deque<ProcessResult> answers;
  std::vector<std::string> commands;
  ProcessResult run(const std::string& command, std::chrono::seconds) override {
    commands.push_back(command);
    if (answers.empty()) return ProcessResult{0, false, ""};
    ProcessResult r = answers.front();
    answers.pop_front();
    return r;
  }
};

Resolution resolution_of(std::vector<std::pair<std::string, Constraint>> libs) {
  Resolution r;
  for (auto& [name, c] : libs) {
    VersionRange v;
    v.library = name;
    v.emitted = c;
    r.resolved.push_back(v);
  }
  return r;
}

EnvPlan plan_in(const TempDir& dir, std::vector<std::string> specs = {"toylib==2.0"}) {
  std::vector<Requirement> reqs;
  for (const auto& s : specs) {
    auto cut = s.find_first_of("=<>");
    reqs.push_back({s.substr(0, cut), cut == std::string::npos ? "" : s.substr(cut)});
  }
  return plan_environment(reqs, "3.10", (dir / "nb.ipynb").string(), true);
}

}  // namespace

TEST(Plan, ExactSpecifierPassesThrough) {
  auto p = plan_environment(resolution_of({{"pandas", {ConstraintKind::exact, "1.0", ""}}}), "3.8", "a/b.ipynb");
  EXPECT_EQ(p.specifiers, std::vector<std::string>{"pandas==1.0"});
  EXPECT_EQ(p.time_budget_s, 600);
  EXPECT_EQ(p.install_steps.size(), 3u);
  EXPECT_NE(p.env_name.find("b"), std::string::npos);
}

TEST(Plan, EmptyResolution) {
  EXPECT_THROW(plan_environment(Resolution{}, "3.8", "x.ipynb"), Error);
  auto p = plan_environment(Resolution{}, "3.8", "x.ipynb", true);
  EXPECT_TRUE(p.specifiers.empty());
  EXPECT_EQ(p.install_steps.size(), 2u);
}

TEST(Plan, ThreeLibrariesSortedInOneStep) {
  auto p = plan_environment(resolution_of({{"scipy", {ConstraintKind::at_least, "1.0", ""}},
                                           {"numpy", {ConstraintKind::any, "", ""}},
                                           {"pandas", {ConstraintKind::closed_interval, "1.0", "1.2"}}}),
                            "3.8", "x.ipynb");
  EXPECT_EQ(p.specifiers, (std::vector<std::string>{"numpy", "pandas>=1.0,<=1.2", "scipy>=1.0"}));
  int install_steps = 0;
  for (const auto& s : p.install_steps) install_steps += s.find("numpy") != std::string::npos;
  EXPECT_EQ(install_steps, 1);
}

TEST(Plan, UniqueEnvironmentNames) {
  std::set<std::string> names;
  std::vector<std::thread> threads;
  std::mutex mu;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        auto p = plan_environment(Resolution{}, "3.8", "same.ipynb", true);
        std::lock_guard<std::mutex> lock(mu);
        names.insert(p.env_name);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(names.size(), 200u);
}

TEST(InstallLog, Corpus) {
  for (const auto& c : fixtures::install_log_corpus()) {
    auto o = classify_install_log(c.log, c.exit_code);
    EXPECT_EQ(o.success, c.success) << c.name;
    std::set<std::string> got;
    for (auto m : o.matched_markers) got.insert(std::string(to_string(m)));
    EXPECT_EQ(got, c.markers) << c.name;
    // failure iff a marker matched or the exit code was nonzero
    EXPECT_EQ(!o.success, !o.matched_markers.empty() || c.exit_code != 0) << c.name;
  }
}

TEST(RuntimeError, VersionMismatchExamples) {
  auto a = classify_runtime_error(fixtures::traceback_module_not_found());
  EXPECT_EQ(a, (ErrorClass{"ModuleNotFoundError", true, false}));
  auto b = classify_runtime_error(fixtures::traceback_import_error());
  EXPECT_EQ(b, (ErrorClass{"ImportError", true, false}));
}

TEST(RuntimeError, Taxonomy) {
  EXPECT_EQ(classify_runtime_error("FileNotFoundError: [Errno 2] No such file: 'x.csv'"),
            (ErrorClass{"FileNotFoundError", false, false}));
  EXPECT_EQ(classify_runtime_error("NameError: name 'df' is not defined").label, "NameError");
  EXPECT_EQ(classify_runtime_error("urllib.error.HTTPError: HTTP Error 404: Not Found").label, "HTTPError");
  auto other = classify_runtime_error("Traceback (most recent call last):\nZeroDivisionError: division by zero\n");
  EXPECT_EQ(other.label, "ZeroDivisionError");
  EXPECT_TRUE(other.other);
  EXPECT_FALSE(other.environment_related);
  EXPECT_EQ(classify_runtime_error(""), (ErrorClass{"unknown", false, true}));
  EXPECT_EQ(classify_runtime_error("\x1b[0;31mImportError\x1b[0m: cannot import name 'x'").label, "ImportError");
}

TEST(RuntimeError, Pure) {
  std::string tb = fixtures::traceback_import_error();
  EXPECT_EQ(classify_runtime_error(tb), classify_runtime_error(tb));
}

TEST(Template, Placeholders) {
  EXPECT_EQ(render_template("{a} and {b} {unknown}", {{"a", "1"}, {"b", "2"}}), "1 and 2 {unknown}");
  EXPECT_EQ(shell_quote("it's"), "'it'\\''s'");
}

TEST(ConfigJson, KeysAndValidation) {
  auto c = harness_config_from_json({{"env_create_cmd", "mk {envdir}"}, {"time_budget_s", 5}, {"other", 1}});
  EXPECT_EQ(c.env_create_cmd, "mk {envdir}");
  EXPECT_EQ(c.time_budget_s, 5);
  EXPECT_THROW(harness_config_from_json({{"parallelism", 0}}), Error);
  EXPECT_THROW(harness_config_from_json(nlohmann::json::array()), Error);
}

TEST(RunValidation, AllCellsOk) {
  TempDir dir;
  FakeExecutor ex;
  HarnessConfig cfg;
  cfg.work_dir = dir.path();
  ex.answers = {{0, false, ""}, {0, false, "Successfully installed toylib-2.0\n"}, {0, false, "ENVSNIFF_ALL_CELLS_OK\n"}};
  auto r = run_validation(plan_in(dir), cfg, ex);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.execution.all_cells_ok);
  EXPECT_FALSE(r.error_class.has_value());
  ASSERT_EQ(ex.commands.size(), 3u);
  EXPECT_NE(ex.commands[1].find("'toylib==2.0'"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(r.install.raw_log_ref));
}

TEST(RunValidation, InstallFailureStopsEarly) {
  TempDir dir;
  FakeExecutor ex;
  HarnessConfig cfg;
  cfg.work_dir = dir.path();
  ex.answers = {{0, false, ""}, {1, false, "ERROR: No matching distribution found for toylib==2.0\n"}};
  auto r = run_validation(plan_in(dir), cfg, ex);
  EXPECT_FALSE(r.install.success);
  EXPECT_FALSE(r.execution.ran);
  EXPECT_EQ(ex.commands.size(), 2u);
}

TEST(RunValidation, FailedCellClassified) {
  TempDir dir;
  FakeExecutor ex;
  HarnessConfig cfg;
  cfg.work_dir = dir.path();
  ex.answers = {{0, false, ""},
                {0, false, ""},
                {3, false, "ENVSNIFF_CELL_FAILED 2\n" + fixtures::traceback_import_error()}};
  auto r = run_validation(plan_in(dir), cfg, ex);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.execution.failed_at_cell, std::optional<int>(2));
  ASSERT_TRUE(r.error_class.has_value());
  EXPECT_EQ(r.error_class->label, "ImportError");
  EXPECT_TRUE(r.error_class->environment_related);
  auto j = to_json(r);
  EXPECT_EQ(j["execution"]["failed_at_cell"], 2);
}

TEST(RunValidation, CreateFailureIsExecutorUnavailable) {
  TempDir dir;
  FakeExecutor ex;
  HarnessConfig cfg;
  cfg.work_dir = dir.path();
  ex.answers = {{127, false, "sh: conda: not found\n"}};
  EXPECT_THROW(run_validation(plan_in(dir), cfg, ex), ExecutorUnavailable);
}

TEST(RunValidation, RealRunnerTimeout) {
  TempDir dir;
  fixtures::write_file(dir / "nb.ipynb", fixtures::notebook_json({"import time\ntime.sleep(30)\n"}));
  HarnessConfig cfg;
  cfg.work_dir = dir / "work";
  cfg.env_create_cmd = "mkdir -p {envdir}";
  cfg.nb_exec_cmd = "python3 {runner} {notebook}";
  auto plan = plan_in(dir, {});
  plan.time_budget_s = 1;
  ShellExecutor ex;
  auto start = std::chrono::steady_clock::now();
  auto r = run_validation(plan, cfg, ex);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
  EXPECT_TRUE(r.execution.timed_out);
  EXPECT_FALSE(r.error_class.has_value());
  EXPECT_FALSE(std::filesystem::exists(dir / "work" / plan.env_name));
}

TEST(RunValidation, RealRunnerStopsAtFirstFailure) {
  TempDir dir;
  fixtures::write_file(dir / "nb.ipynb",
                       fixtures::notebook_json({"x = 1\n", "%matplotlib inline\ny = x + 1\n",
                                                "import no_such_module_here\n", "raise SystemExit('unreachable')\n"},
                                               {{1, "notes"}}));
  HarnessConfig cfg;
  cfg.work_dir = dir / "work";
  cfg.env_create_cmd = "mkdir -p {envdir}";
  cfg.nb_exec_cmd = "python3 {runner} {notebook}";
  cfg.keep_env = true;
  ShellExecutor ex;
  auto plan = plan_in(dir, {});
  auto r = run_validation(plan, cfg, ex);
  EXPECT_EQ(r.execution.failed_at_cell, std::optional<int>(2));
  ASSERT_TRUE(r.error_class.has_value());
  EXPECT_EQ(r.error_class->label, "ModuleNotFoundError");
  EXPECT_TRUE(std::filesystem::exists(dir / "work" / plan.env_name));
}

TEST(Process, ExitCodeAndOutput) {
  auto r = run_shell("echo out; echo err >&2; exit 4");
  EXPECT_EQ(r.exit_code, 4);
  EXPECT_NE(r.output.find("out"), std::string::npos);
  EXPECT_NE(r.output.find("err"), std::string::npos);
}

TEST(Process, TimeoutKillsGroup) {
  ProcessOptions o;
  o.timeout = std::chrono::milliseconds(300);
  auto start = std::chrono::steady_clock::now();
  auto r = run_shell("sleep 20 & sleep 20; wait", o);
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(Process, MissingProgram) {
  EXPECT_THROW(run_process({"/nonexistent/program"}), ExecutorUnavailable);
}

TEST(Process, EnvAndCwd) {
  TempDir dir;
  ProcessOptions o;
  o.cwd = dir.path();
  o.env = {{"ENVSNIFF_X", "42"}};
  auto r = run_shell("echo $ENVSNIFF_X; pwd", o);
  EXPECT_NE(r.output.find("42"), std::string::npos);
  EXPECT_NE(r.output.find(dir.path().filename().string()), std::string::npos);
}
