#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envsniff/archive.hpp"
#include "envsniff/release_ingest.hpp"

namespace fixtures {

namespace fs = std::filesystem;

FileMap pandas_files() {
  return {
      {"pandas/__init__.py", "from pandas.io.api import read_excel\n"},
      {"pandas/io/__init__.py", ""},
      {"pandas/io/api.py", "from pandas.io.excel._base import read_excel\n"},
      {"pandas/io/excel/__init__.py", ""},
      {"pandas/io/excel/_base.py",
       "import os\n"
       "\n"
       "def read_excel(io, sheet_name=0, header=0):\n"
       "    return None\n"
       "\n"
       "class ExcelFile:\n"
       "    def __init__(self, path_or_buffer, engine=None):\n"
       "        self.path = path_or_buffer\n"
       "\n"
       "    def parse(self, sheet_name=0):\n"
       "        return None\n"},
  };
}

std::string toylib_version(int major) { return std::to_string(major) + ".0"; }

FileMap toylib_files(int major) {
  std::string core =
      "def f(x):\n"
      "    return x + 1\n"
      "\n";
  if (major >= 3) {
    core +=
        "def load(path, mode='r', encoding=None):\n"
        "    return (path, mode, encoding)\n"
        "\n";
  } else {
    core +=
        "def load(path, mode='r'):\n"
        "    return (path, mode)\n"
        "\n";
  }
  core +=
      "class Widget:\n"
      "    def run(self, speed=1):\n"
      "        return speed\n";
  if (major == 2 || major == 3) {
    core +=
        "\n"
        "def g(x):\n"
        "    return x * 2\n";
  }
  if (major == 3 || major == 4) {
    core +=
        "\n"
        "def h(x, y):\n"
        "    return x - y\n";
  }
  return {
      {"toylib/__init__.py", "from toylib.core import f\nfrom toylib.core import load\n"},
      {"toylib/core.py", core},
  };
}

std::string wheel_filename(const std::string& name, const std::string& version) {
  return name + "-" + version + "-py3-none-any.whl";
}

std::string make_wheel(const std::string& name, const std::string& version, const FileMap& files) {
  std::vector<envsniff::archive::Entry> entries;
  for (const auto& [p, d] : files) entries.push_back({p, d, false});
  std::string info = name + "-" + version + ".dist-info/";
  entries.push_back({info + "METADATA", "Metadata-Version: 2.1\nName: " + name + "\nVersion: " + version + "\n", false});
  entries.push_back({info + "WHEEL", "Wheel-Version: 1.0\nGenerator: fixtures\nRoot-Is-Purelib: true\nTag: py3-none-any\n", false});
  entries.push_back({info + "RECORD", "", false});
  return envsniff::archive::write_zip(entries);
}

std::string notebook_json(const std::vector<std::string>& code_cells, const std::map<int, std::string>& markdown_before) {
  nlohmann::json cells = nlohmann::json::array();
  int count = 1;
  for (std::size_t i = 0; i < code_cells.size(); ++i) {
    if (auto it = markdown_before.find(static_cast<int>(i)); it != markdown_before.end()) {
      cells.push_back({{"cell_type", "markdown"}, {"metadata", nlohmann::json::object()}, {"source", it->second}});
    }
    // sources are stored as line lists, like the notebook editor writes them
    nlohmann::json lines = nlohmann::json::array();
    std::string cur;
    for (char c : code_cells[i]) {
      cur += c;
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) lines.push_back(cur);
    cells.push_back({{"cell_type", "code"},
                     {"execution_count", count++},
                     {"metadata", nlohmann::json::object()},
                     {"outputs", nlohmann::json::array()},
                     {"source", lines}});
  }
  nlohmann::json nb{{"nbformat", 4},
                    {"nbformat_minor", 5},
                    {"metadata", {{"language_info", {{"name", "python"}, {"version", "3.10.12"}}}}},
                    {"cells", cells}};
  return nb.dump(1);
}

envsniff::ReleaseApiSet ingest(const std::string& library, const std::string& version, const FileMap& files) {
  return envsniff::ingest_files(library, version, files);
}

std::vector<std::shared_ptr<const envsniff::ReleaseApiSet>> toylib_releases() {
  std::vector<std::shared_ptr<const envsniff::ReleaseApiSet>> out;
  for (int v = 1; v <= kToylibReleases; ++v) {
    out.push_back(std::make_shared<envsniff::ReleaseApiSet>(ingest("toylib", toylib_version(v), toylib_files(v))));
  }
  return out;
}

TempDir::TempDir() {
  std::random_device rd;
  std::ostringstream name;
  name << "envsniff-test-" << std::hex << rd() << rd();
  path_ = fs::temp_directory_path() / name.str();
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<LogCase> install_log_corpus() {
  return {
      {"clean pip log",
       "Collecting pandas==1.0.5\n  Downloading pandas-1.0.5.tar.gz (5.0 MB)\n"
       "Installing collected packages: pandas\nSuccessfully installed pandas-1.0.5\n",
       0, true, {}},
      {"clean log with warnings",
       "WARNING: Running pip as the 'root' user can result in broken permissions\n"
       "Successfully installed numpy-1.19.5\n",
       0, true, {}},
      {"empty log", "", 0, true, {}},
      {"generic error marker",
       "Collecting sklearn==0.99\nERROR: No matching distribution found for sklearn==0.99\n", 1, false,
       {"generic_error"}},
      {"installation error marker",
       "Traceback (most recent call last):\n"
       "pip._internal.exceptions.InstallationError: Command errored out with exit status 1\n",
       1, false, {"installation_error"}},
      {"no version marker",
       "Solving environment: failed\nPackagesNotFoundError: cannot find a version for torch==0.1.0\n", 1, false,
       {"no_version_found"}},
      {"two markers",
       "ERROR: Could not build wheels\nInstallationError: failed building wheel for lxml\n", 1, false,
       {"generic_error", "installation_error"}},
      {"marker with zero exit", "ERROR: pip's dependency resolver does not currently take into account\n", 0, false,
       {"generic_error"}},
      {"nonzero exit without marker", "Killed\n", 137, false, {}},
      {"lowercase is not a marker", "error: no such option\ninstallationerror\n", 0, true, {}},
  };
}

std::string traceback_module_not_found() {
  return "---------------------------------------------------------------------------\n"
         "ModuleNotFoundError                       Traceback (most recent call last)\n"
         "<ipython-input-3-2f1d6c7e> in <module>\n"
         "----> 1 from sklearn.grid_search import GridSearchCV\n"
         "\n"
         "ModuleNotFoundError: No module named 'sklearn.grid_search'\n";
}

std::string traceback_import_error() {
  return "Traceback (most recent call last):\n"
         "  File \"<cell 4>\", line 2, in <module>\n"
         "    from astroquery.visualization import scale_image\n"
         "ImportError: cannot import name 'scale_image' from 'astroquery.visualization' "
         "(/opt/conda/lib/python3.8/site-packages/astroquery/visualization/__init__.py)\n";
}

void write_toylib_wheelhouse(const fs::path& dir) {
  fs::create_directories(dir);
  for (int v = 1; v <= kToylibReleases; ++v) {
    write_file(dir / wheel_filename("toylib", toylib_version(v)),
               make_wheel("toylib", toylib_version(v), toylib_files(v)));
  }
}

}  // namespace fixtures
