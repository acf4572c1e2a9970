#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "envsniff/process.hpp"
#include "envsniff/requirements.hpp"
#include "envsniff/resolver.hpp"

namespace envsniff {

inline constexpr int kDefaultTimeBudgetSeconds = 600;

/// External command templates. Placeholders: `{env}` environment name,
/// `{envdir}` its directory under the work dir, `{python}` interpreter line,
/// `{packages}` shell-quoted specifiers, `{notebook}`, `{runner}` the
/// generated cell runner, `{timeout}` seconds.
struct HarnessConfig {
  std::string env_create_cmd = "python3 -m venv {envdir}";
  std::string env_install_cmd = "{envdir}/bin/python -m pip install --disable-pip-version-check {packages}";
  std::string nb_exec_cmd = "{envdir}/bin/python {runner} {notebook}";
  std::string env_remove_cmd;  // empty: the env directory is deleted
  int parallelism = 1;
  int time_budget_s = kDefaultTimeBudgetSeconds;
  std::filesystem::path work_dir;  // empty: system temp dir
  bool keep_env = false;
};

/// Reads the config keys from a JSON object; unknown keys are ignored.
HarnessConfig harness_config_from_json(const nlohmann::json& j, HarnessConfig base = {});

struct EnvPlan {
  std::string env_name;  // unique per plan
  std::string interpreter_line;
  std::vector<std::string> specifiers;     // sorted
  std::vector<std::string> install_steps;  // human-readable, in order
  std::string notebook_path;
  int time_budget_s = kDefaultTimeBudgetSeconds;
};

/// Data only. Throws Error for an empty resolution unless `allow_empty`.
EnvPlan plan_environment(const Resolution& resolution, const std::string& interpreter_line,
                         const std::string& notebook_path, bool allow_empty = false);
EnvPlan plan_environment(const std::vector<Requirement>& requirements, const std::string& interpreter_line,
                         const std::string& notebook_path, bool allow_empty = false);

enum class InstallMarker : std::uint8_t { installation_error, generic_error, no_version_found };
std::string_view to_string(InstallMarker m);

struct InstallOutcome {
  bool success = true;
  std::set<InstallMarker> matched_markers;
  int exit_code = 0;
  std::string raw_log_ref;
};

/// Case-sensitive scan for `InstallationError`, `ERROR:` and
/// `cannot find a version for`.
InstallOutcome classify_install_log(std::string_view log, int exit_code);

struct ErrorClass {
  std::string label;
  bool environment_related = false;
  bool other = false;  // label outside the fixed taxonomy

  friend bool operator==(const ErrorClass&, const ErrorClass&) = default;
};

/// Label = last exception type named in the traceback.
ErrorClass classify_runtime_error(std::string_view traceback);

struct ExecutionOutcome {
  bool ran = false;
  bool all_cells_ok = false;
  std::optional<int> failed_at_cell;
  bool timed_out = false;
};

struct ValidationReport {
  std::string env_name;
  std::string notebook_path;
  InstallOutcome install;
  ExecutionOutcome execution;
  std::optional<ErrorClass> error_class;
  std::string traceback_excerpt;

  bool ok() const { return install.success && execution.all_cells_ok; }
};

nlohmann::json to_json(const ValidationReport& report);

/// Runs external commands; tests substitute their own.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual ProcessResult run(const std::string& command, std::chrono::seconds timeout) = 0;
};

class ShellExecutor : public Executor {
 public:
  ProcessResult run(const std::string& command, std::chrono::seconds timeout) override;
};

/// Source of the generated cell runner: executes code cells top-down in one
/// namespace and prints `ENVSNIFF_CELL_FAILED <position>` plus the traceback
/// at the first failure.
const std::string& cell_runner_source();

/// Substitutes `{key}` placeholders.
std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values);

/// Create, install, execute, tear down. Throws ExecutorUnavailable when the
/// environment cannot be created.
ValidationReport run_validation(const EnvPlan& plan, const HarnessConfig& config, Executor& executor);

}  // namespace envsniff
