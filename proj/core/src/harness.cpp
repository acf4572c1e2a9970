#include "envsniff/harness.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>

#include "envsniff/errors.hpp"

namespace envsniff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string run_token() {
  static std::mt19937_64 rng{std::random_device{}()};
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::ostringstream ss;
  ss << std::hex << (rng() & 0xffffffffffULL);
  return ss.str();
}

std::string env_name_for(const std::string& notebook_path) {
  std::string stem = fs::path(notebook_path).stem().string();
  std::string clean;
  for (char c : stem) clean += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
  if (clean.size() > 32) clean.resize(32);
  if (clean.empty()) clean = "nb";
  return "envsniff-" + clean + "-" + run_token();
}

std::string strip_ansi(std::string_view s) {
  static const std::regex ansi("\x1b\\[[0-9;]*[A-Za-z]");
  return std::regex_replace(std::string(s), ansi, "");
}

std::string last_lines(const std::string& text, std::size_t n) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) lines.push_back(l);
  std::size_t start = lines.size() > n ? lines.size() - n : 0;
  std::string out;
  for (std::size_t i = start; i < lines.size(); ++i) out += lines[i] + "\n";
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace

HarnessConfig harness_config_from_json(const json& j, HarnessConfig base) {
  if (!j.is_object()) throw Error("harness config must be a JSON object");
  base.env_create_cmd = j.value("env_create_cmd", base.env_create_cmd);
  base.env_install_cmd = j.value("env_install_cmd", base.env_install_cmd);
  base.nb_exec_cmd = j.value("nb_exec_cmd", base.nb_exec_cmd);
  base.env_remove_cmd = j.value("env_remove_cmd", base.env_remove_cmd);
  base.parallelism = j.value("parallelism", base.parallelism);
  base.time_budget_s = j.value("time_budget_s", base.time_budget_s);
  if (j.contains("work_dir")) base.work_dir = j["work_dir"].get<std::string>();
  base.keep_env = j.value("keep_env", base.keep_env);
  if (base.parallelism < 1) throw Error("parallelism must be at least 1");
  if (base.time_budget_s <= 0) throw Error("time_budget_s must be positive");
  return base;
}

namespace {

EnvPlan make_plan(std::vector<std::string> specs, const std::string& interpreter_line,
                  const std::string& notebook_path, bool allow_empty) {
  if (specs.empty() && !allow_empty) throw Error("nothing to install; pass allow_empty to validate anyway");
  std::sort(specs.begin(), specs.end());
  EnvPlan plan;
  plan.env_name = env_name_for(notebook_path);
  plan.interpreter_line = interpreter_line;
  plan.notebook_path = notebook_path;
  plan.specifiers = specs;
  plan.install_steps.push_back("create environment " + plan.env_name +
                               (interpreter_line.empty() ? "" : " (python " + interpreter_line + ")"));
  if (!specs.empty()) {
    std::string step = "install";
    for (const auto& s : specs) step += " " + s;
    plan.install_steps.push_back(step);
  }
  plan.install_steps.push_back("execute " + notebook_path + " top-down");
  return plan;
}

}  // namespace

EnvPlan plan_environment(const Resolution& resolution, const std::string& interpreter_line,
                         const std::string& notebook_path, bool allow_empty) {
  std::vector<std::string> specs;
  for (const auto& r : resolution.resolved) specs.push_back(requirement_line(r));
  return make_plan(std::move(specs), interpreter_line, notebook_path, allow_empty);
}

EnvPlan plan_environment(const std::vector<Requirement>& requirements, const std::string& interpreter_line,
                         const std::string& notebook_path, bool allow_empty) {
  std::vector<std::string> specs;
  for (const auto& r : requirements) specs.push_back(r.str());
  return make_plan(std::move(specs), interpreter_line, notebook_path, allow_empty);
}

std::string_view to_string(InstallMarker m) {
  switch (m) {
    case InstallMarker::installation_error:
      return "installation_error";
    case InstallMarker::generic_error:
      return "generic_error";
    case InstallMarker::no_version_found:
      return "no_version_found";
  }
  return "generic_error";
}

InstallOutcome classify_install_log(std::string_view log, int exit_code) {
  InstallOutcome o;
  o.exit_code = exit_code;
  if (log.find("InstallationError") != std::string_view::npos) o.matched_markers.insert(InstallMarker::installation_error);
  if (log.find("ERROR:") != std::string_view::npos) o.matched_markers.insert(InstallMarker::generic_error);
  if (log.find("cannot find a version for") != std::string_view::npos) {
    o.matched_markers.insert(InstallMarker::no_version_found);
  }
  o.success = exit_code == 0 && o.matched_markers.empty();
  return o;
}

ErrorClass classify_runtime_error(std::string_view traceback) {
  static const std::regex exc_line(R"(^([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)(?::.*)?$)");
  std::string text = strip_ansi(traceback);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(l);
  }
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const std::string& line = *it;
    if (line.empty() || line.front() == ' ' || line.front() == '\t') continue;
    if (line.starts_with("Traceback") || line.starts_with("ENVSNIFF_") || line.starts_with("During handling")) continue;
    std::smatch m;
    if (!std::regex_match(line, m, exc_line)) continue;
    std::string name = m[1].str();
    name = name.substr(name.rfind('.') == std::string::npos ? 0 : name.rfind('.') + 1);
    if (!std::isupper(static_cast<unsigned char>(name.front()))) continue;
    ErrorClass c;
    c.label = name;
    c.environment_related = name == "ModuleNotFoundError" || name == "ImportError";
    static const std::set<std::string> taxonomy{"ModuleNotFoundError", "ImportError", "FileNotFoundError",
                                                "NameError", "HTTPError"};
    c.other = !taxonomy.count(name);
    return c;
  }
  return {"unknown", false, true};
}

json to_json(const ValidationReport& r) {
  json markers = json::array();
  for (auto m : r.install.matched_markers) markers.push_back(std::string(to_string(m)));
  json j{{"env", r.env_name},
         {"notebook", r.notebook_path},
         {"install",
          {{"status", r.install.success ? "success" : "failure"},
           {"matched_markers", markers},
           {"exit_code", r.install.exit_code},
           {"log", r.install.raw_log_ref}}},
         {"execution",
          {{"ran", r.execution.ran},
           {"all_cells_ok", r.execution.all_cells_ok},
           {"failed_at_cell", r.execution.failed_at_cell ? json(*r.execution.failed_at_cell) : json()},
           {"timed_out", r.execution.timed_out}}}};
  if (r.error_class) {
    j["error_class"] = {{"label", r.error_class->label},
                        {"environment_related", r.error_class->environment_related},
                        {"other", r.error_class->other}};
  } else {
    j["error_class"] = nullptr;
  }
  j["traceback_excerpt"] = r.traceback_excerpt;
  return j;
}

ProcessResult ShellExecutor::run(const std::string& command, std::chrono::seconds timeout) {
  ProcessOptions opts;
  opts.timeout = timeout;
  return run_shell(command, opts);
}

const std::string& cell_runner_source() {
  static const std::string src = R"PY(import json
import os
import sys
import traceback

PASSTHROUGH = {"time", "timeit", "capture", "prun", "debug"}


def strip_kernel_syntax(src):
    head = src.lstrip()
    lines = src.split("\n")
    if head.startswith("%%"):
        rest = head[2:].split(None, 1)
        if not rest or rest[0] not in PASSTHROUGH:
            return ""
        lines = head.split("\n")[1:]
    kept = []
    for line in lines:
        s = line.lstrip()
        t = s.rstrip()
        help_line = s.startswith("?") or (t.endswith("?") and not any(c in t for c in "#'\""))
        if s.startswith(("%", "!")) or help_line:
            if len(s) != len(line):
                kept.append(line[: len(line) - len(s)] + "pass")
            continue
        kept.append(line)
    return "\n".join(kept)


class _Shell(object):
    def run_line_magic(self, *args, **kwargs):
        return None

    def run_cell_magic(self, *args, **kwargs):
        return None

    def system(self, *args, **kwargs):
        return None


def main():
    path = os.path.abspath(sys.argv[1])
    with open(path, encoding="utf-8") as f:
        nb = json.load(f)
    if "cells" in nb:
        cells = nb["cells"]
    else:
        cells = [c for ws in nb.get("worksheets", []) for c in ws.get("cells", [])]
    os.chdir(os.path.dirname(path))
    ns = {"__name__": "__main__", "display": print, "get_ipython": _Shell}
    pos = -1
    for cell in cells:
        if cell.get("cell_type") != "code":
            continue
        pos += 1
        src = cell.get("source", cell.get("input", ""))
        if isinstance(src, list):
            src = "".join(src)
        code = strip_kernel_syntax(src)
        try:
            exec(compile(code, "<cell %d>" % pos, "exec"), ns)
        except BaseException:
            sys.stderr.flush()
            print("ENVSNIFF_CELL_FAILED %d" % pos, flush=True)
            traceback.print_exc(file=sys.stdout)
            sys.stdout.flush()
            os._exit(3)
    print("ENVSNIFF_ALL_CELLS_OK", flush=True)


main()
)PY";
  return src;
}

std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

ValidationReport run_validation(const EnvPlan& plan, const HarnessConfig& config, Executor& executor) {
  fs::path work = config.work_dir.empty() ? fs::temp_directory_path() / "envsniff-runs" : config.work_dir;
  fs::create_directories(work);
  fs::path envdir = work / plan.env_name;
  fs::path runner = work / (plan.env_name + "-runner.py");
  fs::path install_log = work / (plan.env_name + "-install.log");
  write_text(runner, cell_runner_source());

  std::string packages;
  for (const auto& s : plan.specifiers) packages += (packages.empty() ? "" : " ") + shell_quote(s);
  int budget = plan.time_budget_s > 0 ? plan.time_budget_s : config.time_budget_s;
  std::map<std::string, std::string> values{{"env", plan.env_name},
                                            {"envdir", shell_quote(envdir.string())},
                                            {"python", plan.interpreter_line},
                                            {"packages", packages},
                                            {"notebook", shell_quote(fs::absolute(plan.notebook_path).string())},
                                            {"runner", shell_quote(runner.string())},
                                            {"timeout", std::to_string(budget)}};

  ValidationReport report;
  report.env_name = plan.env_name;
  report.notebook_path = plan.notebook_path;

  auto teardown = [&] {
    fs::remove(runner);
    if (config.keep_env) return;
    if (!config.env_remove_cmd.empty()) {
      executor.run(render_template(config.env_remove_cmd, values), std::chrono::seconds(budget));
    }
    std::error_code ec;
    fs::remove_all(envdir, ec);
  };

  ProcessResult created = executor.run(render_template(config.env_create_cmd, values), std::chrono::seconds(budget));
  if (created.exit_code != 0) {
    teardown();
    throw ExecutorUnavailable("environment creation failed (exit " + std::to_string(created.exit_code) +
                              "): " + last_lines(created.output, 5));
  }

  if (!plan.specifiers.empty()) {
    ProcessResult installed =
        executor.run(render_template(config.env_install_cmd, values), std::chrono::seconds(budget));
    write_text(install_log, installed.output);
    report.install = classify_install_log(installed.output, installed.timed_out ? -1 : installed.exit_code);
    report.install.raw_log_ref = install_log.string();
    if (!report.install.success) {
      teardown();
      return report;
    }
  }

  ProcessResult ran = executor.run(render_template(config.nb_exec_cmd, values), std::chrono::seconds(budget));
  report.execution.ran = true;
  if (ran.timed_out) {
    report.execution.timed_out = true;
    report.traceback_excerpt = last_lines(ran.output, 20);
    teardown();
    return report;
  }
  static const std::regex failed_re(R"(ENVSNIFF_CELL_FAILED (\d+))");
  std::smatch m;
  if (std::regex_search(ran.output, m, failed_re)) {
    report.execution.failed_at_cell = std::stoi(m[1].str());
    std::string tb = ran.output.substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
    report.traceback_excerpt = last_lines(tb, 40);
    report.error_class = classify_runtime_error(tb);
  } else if (ran.exit_code != 0) {
    report.traceback_excerpt = last_lines(ran.output, 40);
    report.error_class = classify_runtime_error(ran.output);
  } else {
    report.execution.all_cells_ok = true;
  }
  teardown();
  return report;
}

}  // namespace envsniff
