#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "envsniff/bank_store.hpp"
#include "fixture_index.hpp"
#include "fixtures.hpp"

using namespace envsniff;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = envsniff::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void make_bank(const fs::path& dir, std::vector<std::shared_ptr<const ReleaseApiSet>> releases) {
  for (const auto& r : releases) save_release(dir, *r);
  save_index(ApiBankIndex::build(releases), dir);
}

std::vector<std::shared_ptr<const ReleaseApiSet>> pandas_and_toylib() {
  auto rs = fixtures::toylib_releases();
  rs.push_back(std::make_shared<const ReleaseApiSet>(fixtures::ingest("pandas", "1.0.0", fixtures::pandas_files())));
  return rs;
}

}  // namespace

TEST(CliBankAdd, FixtureIndex) {
  fixtures::FixtureIndex index;
  fixtures::add_toylib_releases(index);
  index.start();
  TempDir dir;
  std::vector<std::string> base = {"--bank", (dir / "bank").string(), "--cache", (dir / "cache").string(),
                                   "--index-url", index.base_url()};
  auto args = base;
  args.insert(args.end(), {"bank", "add", "toylib"});
  auto r = invoke(args);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("3 ingested, 0 cached"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("skipped toylib==3.1"), std::string::npos);
  EXPECT_EQ(load_bank(dir / "bank").index.releases().size(), 3u);

  r = invoke(args);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0 ingested, 3 cached"), std::string::npos) << r.out;

  args = base;
  args.insert(args.end(), {"bank", "add", "nonexistent"});
  r = invoke(args);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("unindexed_modules: nonexistent"), std::string::npos);
  EXPECT_EQ(load_bank(dir / "bank").index.releases().size(), 3u);
}

TEST(CliBankAdd, VersionSelector) {
  fixtures::FixtureIndex index;
  fixtures::add_toylib_releases(index);
  index.start();
  TempDir dir;
  auto r = invoke({"--bank", (dir / "bank").string(), "--cache", (dir / "cache").string(), "--index-url",
                index.base_url(), "bank", "add", "toylib", "--versions", "1.0,3.0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("2 ingested"), std::string::npos) << r.out;
}

TEST(CliInfer, PandasNotebook) {
  TempDir dir;
  make_bank(dir / "bank", pandas_and_toylib());
  fixtures::write_file(dir / "nb/a.ipynb",
                       fixtures::notebook_json({"import pandas\n", "pandas.read_excel('a.xlsx', sheet_name=1)\n"}));
  auto r = invoke({"--bank", (dir / "bank").string(), "infer", (dir / "nb/a.ipynb").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  std::string req = fixtures::read_file(dir / "nb/requirements.txt");
  int libs = 0;
  std::istringstream in(req);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') {
      ++libs;
      EXPECT_EQ(line.rfind("pandas", 0), 0u) << line;
    }
  }
  EXPECT_EQ(libs, 1);
  EXPECT_TRUE(fs::exists(dir / "nb/Pipfile"));
}

TEST(CliInfer, StdlibOnlyAndAbsentApi) {
  TempDir dir;
  make_bank(dir / "bank", pandas_and_toylib());
  fixtures::write_file(dir / "s.ipynb", fixtures::notebook_json({"import os\nos.getcwd()\n"}));
  auto r = invoke({"--bank", (dir / "bank").string(), "infer", (dir / "s.ipynb").string(), "--format", "requirements"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("no third-party"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "Pipfile"));

  fixtures::write_file(dir / "u.ipynb", fixtures::notebook_json({"import toylib\ntoylib.nothing_here(1)\n"}));
  r = invoke({"--bank", (dir / "bank").string(), "infer", (dir / "u.ipynb").string(), "-o", (dir / "out").string()});
  EXPECT_EQ(r.code, 2) << r.out << r.err;
  EXPECT_NE(fixtures::read_file(dir / "out/requirements.txt").find("# unresolved: toylib.nothing_here"),
            std::string::npos);
}

TEST(CliInfer, BatchDirectoryAndExplain) {
  TempDir dir;
  make_bank(dir / "bank", pandas_and_toylib());
  fixtures::write_file(dir / "nbs/one.ipynb", fixtures::notebook_json({"from toylib.core import g\ng(1)\n"}));
  fixtures::write_file(dir / "nbs/sub/two.ipynb", fixtures::notebook_json({"import toylib\ntoylib.f(1)\n"}));
  fixtures::write_file(dir / "nbs/.ipynb_checkpoints/one-checkpoint.ipynb", "broken");
  auto r = invoke({"--bank", (dir / "bank").string(), "--parallel", "2", "infer", (dir / "nbs").string(), "--explain"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(fixtures::read_file(dir / "nbs/one.requirements.txt").find("toylib>=2.0,<=3.0"), std::string::npos);
  EXPECT_NE(fixtures::read_file(dir / "nbs/sub/two.requirements.txt").find("\ntoylib\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "nbs/sub/two.Pipfile"));
  EXPECT_NE(r.out.find("\"diagnostics\""), std::string::npos);
}

TEST(CliInfer, EmptyBankAndMissingNotebook) {
  TempDir dir;
  fixtures::write_file(dir / "a.ipynb", fixtures::notebook_json({"import toylib\n"}));
  auto r = invoke({"--bank", (dir / "nobank").string(), "infer", (dir / "a.ipynb").string()});
  EXPECT_EQ(r.code, 1);
  r = invoke({"--bank", (dir / "nobank").string(), "infer", (dir / "missing.ipynb").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(CliValidate, MissingRequirementsFile) {
  TempDir dir;
  fixtures::write_file(dir / "a.ipynb", fixtures::notebook_json({"x = 1\n"}));
  auto r = invoke({"validate", (dir / "a.ipynb").string(), (dir / "requirements.txt").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("requirements"), std::string::npos);
}

TEST(CliValidate, RunsWithConfiguredHarness) {
  TempDir dir;
  fixtures::write_file(dir / "a.ipynb", fixtures::notebook_json({"x = 1\n", "assert x == 1\n"}));
  fixtures::write_file(dir / "requirements.txt", "# nothing\n");
  nlohmann::json cfg{{"harness",
                      {{"env_create_cmd", "mkdir -p {envdir}"},
                       {"nb_exec_cmd", "python3 {runner} {notebook}"},
                       {"work_dir", (dir / "work").string()}}}};
  fixtures::write_file(dir / "cfg.json", cfg.dump());
  auto r = invoke({"--config", (dir / "cfg.json").string(), "validate", (dir / "a.ipynb").string(),
                (dir / "requirements.txt").string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("\"all_cells_ok\": true"), std::string::npos) << r.out;
}

TEST(CliValidate, GoodPairAndShiftedPin) {
  TempDir dir;
  fixtures::write_toylib_wheelhouse(dir / "wheels");
  fixtures::write_file(dir / "a.ipynb", fixtures::notebook_json({"from toylib.core import g\n", "print(g(2))\n"}));
  fixtures::write_file(dir / "good.txt", "toylib>=2.0,<=3.0\n");
  fixtures::write_file(dir / "bad.txt", "toylib==1.0\n");
  nlohmann::json cfg{{"harness",
                      {{"env_create_cmd", "mkdir -p {envdir}"},
                       {"env_install_cmd", "python3 -m pip install --disable-pip-version-check --no-index --find-links " +
                                               (dir / "wheels").string() + " --target {envdir} {packages}"},
                       {"nb_exec_cmd", "PYTHONPATH={envdir} python3 {runner} {notebook}"},
                       {"work_dir", (dir / "work").string()}}}};
  fixtures::write_file(dir / "cfg.json", cfg.dump());
  auto good = invoke({"--config", (dir / "cfg.json").string(), "validate", (dir / "a.ipynb").string(),
                      (dir / "good.txt").string()});
  EXPECT_EQ(good.code, 0) << good.out << good.err;
  auto bad = invoke({"--config", (dir / "cfg.json").string(), "validate", (dir / "a.ipynb").string(),
                     (dir / "bad.txt").string()});
  EXPECT_EQ(bad.code, 2) << bad.out << bad.err;
  EXPECT_NE(bad.out.find("\"environment_related\": true"), std::string::npos) << bad.out;
}

TEST(CliDiff, AddedAndSwapped) {
  TempDir dir;
  make_bank(dir / "bank", pandas_and_toylib());
  auto r = invoke({"--bank", (dir / "bank").string(), "diff", "toylib", "1.0", "2.0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("1 added, 0 removed, 0 param_changed"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("+ toylib.core.g"), std::string::npos);

  r = invoke({"--bank", (dir / "bank").string(), "diff", "toylib", "1.0", "1.0"});
  EXPECT_NE(r.out.find("0 added, 0 removed, 0 param_changed"), std::string::npos);

  r = invoke({"--bank", (dir / "bank").string(), "diff", "toylib", "2.0", "1.0"});
  EXPECT_NE(r.out.find("note: 1.0 precedes 2.0"), std::string::npos);
  EXPECT_NE(r.out.find("+ toylib.core.g"), std::string::npos);

  r = invoke({"--bank", (dir / "bank").string(), "diff", "toylib", "1.0", "9.0"});
  EXPECT_EQ(r.code, 1);
}

TEST(CliQuery, KeywordFilter) {
  TempDir dir;
  make_bank(dir / "bank", pandas_and_toylib());
  auto r = invoke({"--bank", (dir / "bank").string(), "query", "toylib.load", "-k", "encoding"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "toylib==3.0\ntoylib==4.0\ntoylib==5.0\n");
}

TEST(CliConfig, Precedence) {
  TempDir dir;
  make_bank(dir / "flag", pandas_and_toylib());
  make_bank(dir / "file", {std::make_shared<const ReleaseApiSet>(fixtures::ingest("toylib", "1.0", fixtures::toylib_files(1)))});
  fixtures::write_file(dir / "cfg.json", nlohmann::json{{"bank", (dir / "file").string()}}.dump());
  setenv("ENVSNIFF_BANK", (dir / "nothing").string().c_str(), 1);
  auto from_file = invoke({"--config", (dir / "cfg.json").string(), "query", "toylib.f"});
  auto from_flag = invoke({"--config", (dir / "cfg.json").string(), "--bank", (dir / "flag").string(), "query", "toylib.f"});
  setenv("ENVSNIFF_BANK", (dir / "flag").string().c_str(), 1);
  auto from_env = invoke({"query", "toylib.f"});
  unsetenv("ENVSNIFF_BANK");
  EXPECT_EQ(from_file.out, "toylib==1.0\n");
  EXPECT_EQ(from_flag.out.find("toylib==5.0") != std::string::npos, true);
  EXPECT_EQ(from_env.out, from_flag.out);

  fixtures::write_file(dir / "bad.json", "[1]");
  EXPECT_EQ(invoke({"--config", (dir / "bad.json").string(), "query", "toylib.f"}).code, 1);
  EXPECT_EQ(invoke({"--bank", (dir / "flag").string(), "infer", "x", "--format", "yaml"}).code, 1);
}

TEST(CliParse, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}
