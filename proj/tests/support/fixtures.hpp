#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "envsniff/api_bank.hpp"

namespace fixtures {

using FileMap = std::map<std::string, std::string>;

// Simplified pandas layout: read_excel defined in pandas.io.excel._base,
// re-exported by pandas.io.api and again by pandas.
FileMap pandas_files();

// toylib 1.0 .. 5.0. core.f, core.load and core.Widget(.run) in every release,
// f and load re-exported at top level. g exists in 2.0 and 3.0, h in 3.0 and
// 4.0, load gains `encoding` in 3.0.
FileMap toylib_files(int major);
std::string toylib_version(int major);
constexpr int kToylibReleases = 5;

// A pure wheel (zip) with minimal dist-info.
std::string make_wheel(const std::string& name, const std::string& version, const FileMap& files);
std::string wheel_filename(const std::string& name, const std::string& version);

// Notebook format 4 document. Markdown cells are inserted before the code
// cell at the matching index.
std::string notebook_json(const std::vector<std::string>& code_cells,
                          const std::map<int, std::string>& markdown_before = {});

envsniff::ReleaseApiSet ingest(const std::string& library, const std::string& version, const FileMap& files);
std::vector<std::shared_ptr<const envsniff::ReleaseApiSet>> toylib_releases();

struct TempDir {
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, const std::string& text);
std::string read_file(const std::filesystem::path& p);

struct LogCase {
  std::string name;
  std::string log;
  int exit_code = 0;
  bool success = true;
  std::set<std::string> markers;  // installation_error, generic_error, no_version_found
};
std::vector<LogCase> install_log_corpus();

// The two failure messages of the version-mismatch examples, as full tracebacks.
std::string traceback_module_not_found();
std::string traceback_import_error();

// Writes toylib wheels 1.0 .. 5.0 into `dir`.
void write_toylib_wheelhouse(const std::filesystem::path& dir);

}  // namespace fixtures
