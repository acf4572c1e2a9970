#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace envsniff {

/// Request file: `{"names": [...], "output_path": "..."}`.
struct ProbeRequest {
  std::vector<std::string> names;  // each with at least two segments
  std::string output_path;
};

struct ProbeOutcome {
  std::string name;
  bool importable = false;
  std::string failed_segment;  // first segment that could not be reached
  std::string reason;          // first line of the exception
};

/// Response file: `{"results": [{"name","importable","failed_segment","reason"}],
/// "interpreter": {"version", "releases"}}`.
struct ProbeResult {
  std::vector<ProbeOutcome> results;  // request order
  std::string interpreter_version;
  std::vector<std::string> installed_releases;  // `name==version`
};

/// Throws Error when a name has fewer than two segments or names is empty.
void write_probe_request(const ProbeRequest& request, const std::filesystem::path& path);
/// Throws Error on malformed responses or when the result count differs
/// from `expected` (when given).
ProbeResult read_probe_result(const std::filesystem::path& path, std::optional<std::size_t> expected = std::nullopt);

/// Standalone probe program, standard library only.
const std::string& probe_source();

/// Writes probe.py and the request into `work_dir` and runs
/// `<interpreter> probe.py <request_path>`.
ProbeResult run_probe(const std::string& interpreter, const std::vector<std::string>& names,
                      const std::filesystem::path& work_dir);

}  // namespace envsniff
