#include "envsniff/probe.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envsniff/errors.hpp"
#include "envsniff/process.hpp"

namespace envsniff {

namespace fs = std::filesystem;
using nlohmann::json;

void write_probe_request(const ProbeRequest& request, const fs::path& path) {
  if (request.names.empty()) throw Error("probe request without names");
  for (const auto& n : request.names) {
    if (n.find('.') == std::string::npos) throw Error("probe name needs at least two segments: " + n);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << json{{"names", request.names}, {"output_path", request.output_path}}.dump(2) << "\n";
}

ProbeResult read_probe_result(const fs::path& path, std::optional<std::size_t> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("probe produced no result at " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ProbeResult r;
  try {
    json j = json::parse(ss.str());
    for (const auto& e : j.at("results")) {
      ProbeOutcome o;
      o.name = e.at("name").get<std::string>();
      o.importable = e.at("importable").get<bool>();
      o.failed_segment = e.value("failed_segment", "");
      o.reason = e.value("reason", "");
      r.results.push_back(std::move(o));
    }
    const json& interp = j.at("interpreter");
    r.interpreter_version = interp.value("version", "");
    r.installed_releases = interp.value("releases", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(std::string("malformed probe result: ") + e.what());
  }
  if (expected && r.results.size() != *expected) {
    throw Error("probe returned " + std::to_string(r.results.size()) + " results for " + std::to_string(*expected) +
                " names");
  }
  return r;
}

const std::string& probe_source() {
  static const std::string src = R"PY(import importlib
import json
import sys


def first_line(exc):
    text = "%s: %s" % (type(exc).__name__, exc)
    return text.splitlines()[0] if text else type(exc).__name__


def probe(name):
    parts = name.split(".")
    module = None
    used = 0
    error = None
    for i in range(len(parts), 0, -1):
        try:
            module = importlib.import_module(".".join(parts[:i]))
            used = i
            break
        except ImportError as exc:
            if error is None or i == 1:
                error = exc
        except Exception as exc:
            error = exc
            break
    if module is None:
        return {"name": name, "importable": False, "failed_segment": parts[0],
                "reason": first_line(error) if error else "not importable"}
    obj = module
    for seg in parts[used:]:
        try:
            obj = getattr(obj, seg)
        except Exception as exc:
            reason = first_line(error) if error is not None and not isinstance(error, ModuleNotFoundError) else first_line(exc)
            return {"name": name, "importable": False, "failed_segment": seg, "reason": reason}
    return {"name": name, "importable": True, "failed_segment": "", "reason": ""}


def installed():
    try:
        from importlib import metadata
    except ImportError:
        return []
    out = []
    for dist in metadata.distributions():
        try:
            out.append("%s==%s" % (dist.metadata["Name"], dist.version))
        except Exception:
            pass
    return sorted(out)


def main():
    with open(sys.argv[1]) as f:
        request = json.load(f)
    results = []
    for name in request["names"]:
        try:
            results.append(probe(name))
        except BaseException as exc:
            results.append({"name": name, "importable": False, "failed_segment": "", "reason": first_line(exc)})
    out = {"results": results,
           "interpreter": {"version": sys.version.split()[0], "releases": installed()}}
    with open(request["output_path"], "w") as f:
        json.dump(out, f)


main()
)PY";
  return src;
}

ProbeResult run_probe(const std::string& interpreter, const std::vector<std::string>& names, const fs::path& work_dir) {
  fs::create_directories(work_dir);
  fs::path script = work_dir / "probe.py";
  {
    std::ofstream out(script, std::ios::binary | std::ios::trunc);
    out << probe_source();
  }
  fs::path request_path = work_dir / "probe-request.json";
  fs::path output = work_dir / "probe-result.json";
  fs::remove(output);
  write_probe_request({names, output.string()}, request_path);
  ProcessResult pr = run_process({interpreter, script.string(), request_path.string()});
  if (pr.exit_code != 0) throw Error("probe failed (exit " + std::to_string(pr.exit_code) + "): " + pr.output);
  return read_probe_result(output, names.size());
}

}  // namespace envsniff
