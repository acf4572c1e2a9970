// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

#include "envsniff/bank_store.hpp"
#include "envsniff/harness.hpp"
#include "envsniff/notebook.hpp"
#include "envsniff/resolver.hpp"
#include "envsniff/usage_analysis.hpp"
#include "fixtures.hpp"
#include "spec_grammar.hpp"
#include "synthetic_bank.hpp"

using namespace envsniff;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

// pinned tolerances
constexpr double kAliasSeconds = 1.0;
constexpr double kOracleSeconds = 30.0;
constexpr double kThroughputSeconds = 1.0;
constexpr int kOracleCases = 40;        // at least 20 required
constexpr int kThroughputCells = 200;
constexpr int kThroughputReleases = 50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<CodeCell> cells_of(const std::vector<std::string>& sources) {
  std::vector<CodeCell> out;
  for (std::size_t i = 0; i < sources.size(); ++i) out.push_back({static_cast<int>(i), std::nullopt, sources[i]});
  return out;
}

std::vector<std::string> usage_fqns(const UsageSet& s) {
  std::vector<std::string> out;
  for (const auto& u : s.usages) out.push_back(u.fqn);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

Outcome alias_set() {
  auto t = Clock::now();
  auto r = fixtures::ingest("pandas", "1.0.0", fixtures::pandas_files());
  double secs = seconds_since(t);
  std::map<std::string, std::string> want = {
      {"pandas.io.api.read_excel", "pandas.io.excel._base.read_excel"},
      {"pandas.read_excel", "pandas.io.excel._base.read_excel"},
  };
  std::ostringstream d;
  d << r.alias_map.size() << " aliases in " << secs << " s";
  return {r.alias_map == want && secs < kAliasSeconds, d.str()};
}

Outcome instance_method() {
  auto s = collect_usages(cells_of({"from x import y\nm = y()\nm.fun()"}));
  auto f = usage_fqns(s);
  return {f == std::vector<std::string>{"x.y", "x.y.fun"} || f == std::vector<std::string>{"x.y.fun"}, join(f)};
}

Outcome alias_examples() {
  auto a = usage_fqns(collect_usages(cells_of({"from pandas import read_excel as re\nre('a.xlsx')"})));
  auto b = usage_fqns(collect_usages(cells_of({"from pandas.io.excel import _base\n_base.read_excel()"})));
  bool ok = a == std::vector<std::string>{"pandas.read_excel"} &&
            b == std::vector<std::string>{"pandas.io.excel._base.read_excel"};
  return {ok, join(a) + " | " + join(b)};
}

struct OracleStats {
  int cases = 0;
  int feasible_ok = 0;
  int maximal_ok = 0;
  int ranges = 0;
  double seconds = 0;
  std::string first_problem;
};

OracleStats run_oracle() {
  OracleStats st;
  auto t = Clock::now();
  for (std::uint32_t seed = 1000; seed < 1000 + kOracleCases; ++seed) {
    synthetic::Case c = synthetic::generate(seed, synthetic::Limits{5, 8, 8});
    auto index = ApiBankIndex::build(c.releases());
    auto v = synthetic::check(c, resolve(c.usage_set(), index));
    ++st.cases;
    st.feasible_ok += v.feasible_equal;
    st.maximal_ok += v.maximal;
    st.ranges += v.ranges;
    if (st.first_problem.empty() && !v.problems.empty()) st.first_problem = v.problems.front();
  }
  st.seconds = seconds_since(t);
  return st;
}

Outcome emitter_conformance() {
  std::vector<std::string> problems;
  int lines = 0;
  auto check_resolution = [&](const Resolution& res, const ApiBankIndex& index) {
    std::set<std::string> pip_entries;
    std::istringstream pf(emit_pipfile(res));
    bool in_packages = false;
    for (std::string line; std::getline(pf, line);) {
      if (line == "[packages]") {
        in_packages = true;
      } else if (in_packages && !line.empty()) {
        pip_entries.insert(line);
      }
    }
    std::istringstream rq(emit_requirements(res));
    std::vector<std::string> req_lines;
    for (std::string line; std::getline(rq, line);) {
      if (!line.empty() && line[0] != '#') req_lines.push_back(line);
    }
    if (req_lines.size() != res.resolved.size() || pip_entries.size() != res.resolved.size()) {
      problems.push_back("line count mismatch");
      return;
    }
    for (std::size_t i = 0; i < res.resolved.size(); ++i) {
      const auto& r = res.resolved[i];
      ++lines;
      auto spec = grammar::parse_line(req_lines[i]);
      auto pspec = grammar::parse_pipfile_entry(r.library + " = " + pipfile_value(r));
      if (!spec || !pspec || !pip_entries.count(r.library + " = " + pipfile_value(r))) {
        problems.push_back("unparsable: " + req_lines[i]);
        continue;
      }
      std::vector<std::string> all = index.versions(r.library);
      auto admitted = grammar::admitted(*spec, all);
      if (admitted != grammar::admitted(*pspec, all)) problems.push_back("pipfile disagrees: " + req_lines[i]);
      for (const auto& v : admitted) {
        if (!std::binary_search(r.feasible.begin(), r.feasible.end(), v, [](const std::string& a, const std::string& b) {
              return grammar::compare_versions(a, b) < 0;
            })) {
          problems.push_back(req_lines[i] + " admits infeasible " + v);
        }
      }
    }
  };
  for (std::uint32_t seed = 1; seed <= 100; ++seed) {
    synthetic::Case c = synthetic::generate(seed);
    auto index = ApiBankIndex::build(c.releases());
    check_resolution(resolve(c.usage_set(), index), index);
  }

  // the three requirement shapes plus the Pipfile `>=` form
  auto toy = ApiBankIndex::build(fixtures::toylib_releases());
  auto shape = [&](const std::string& code) {
    Resolution res = resolve(collect_usages(cells_of({code})), toy);
    check_resolution(res, toy);
    if (res.resolved.size() != 1) return std::make_pair(grammar::Shape::other, std::string());
    auto s = grammar::parse_line(requirement_line(res.resolved[0]));
    return std::make_pair(s ? grammar::shape_of(*s) : grammar::Shape::other, pipfile_value(res.resolved[0]));
  };
  auto bare = shape("import toylib\ntoylib.f(1)");
  auto exact = shape("from toylib.core import g, h\ng(1)\nh(1, 2)");
  auto bounded = shape("from toylib.core import g\ng(1)");
  auto lower = shape("import toylib\ntoylib.load('p', encoding='utf8')");
  bool shapes = bare.first == grammar::Shape::bare && bare.second == "\"*\"" &&
                exact.first == grammar::Shape::exact && bounded.first == grammar::Shape::bounded &&
                lower.first == grammar::Shape::lower_bound && lower.second == "\">= 3.0\"";
  if (!shapes) problems.push_back("constraint shapes differ");
  std::ostringstream d;
  d << lines << " lines checked";
  if (!problems.empty()) d << "; " << problems.size() << " problems, first: " << problems.front();
  return {problems.empty() && lines > 100, d.str()};
}

Outcome log_classifier() {
  int errors = 0;
  int cases = 0;
  std::set<std::string> seen;
  for (const auto& c : fixtures::install_log_corpus()) {
    ++cases;
    auto o = classify_install_log(c.log, c.exit_code);
    std::set<std::string> got;
    for (auto m : o.matched_markers) got.insert(std::string(to_string(m)));
    seen.insert(got.begin(), got.end());
    if (o.success != c.success || got != c.markers) ++errors;
  }
  auto a = classify_runtime_error(fixtures::traceback_module_not_found());
  auto b = classify_runtime_error(fixtures::traceback_import_error());
  bool runtime = a.label == "ModuleNotFoundError" && a.environment_related && b.label == "ImportError" &&
                 b.environment_related;
  std::ostringstream d;
  d << errors << " errors over " << cases << " logs; " << seen.size() << " marker kinds; tracebacks " << a.label << ", "
    << b.label;
  return {errors == 0 && seen.size() == 3 && runtime, d.str()};
}

Outcome bank_identity() {
  std::vector<std::pair<std::string, std::function<ReleaseApiSet()>>> fixtures_list = {
      {"pandas", [] { return fixtures::ingest("pandas", "1.0.0", fixtures::pandas_files()); }}};
  for (int v = 1; v <= fixtures::kToylibReleases; ++v) {
    fixtures_list.push_back({"toylib " + fixtures::toylib_version(v),
                             [v] { return fixtures::ingest("toylib", fixtures::toylib_version(v), fixtures::toylib_files(v)); }});
  }
  std::vector<std::shared_ptr<const ReleaseApiSet>> releases;
  for (const auto& [name, make] : fixtures_list) {
    auto a = make();
    if (!(a == make())) return {false, "double ingest differs: " + name};
    if (!(deserialize_release(serialize_release(a)) == a)) return {false, "serialize round trip differs: " + name};
    releases.push_back(std::make_shared<const ReleaseApiSet>(std::move(a)));
  }
  fixtures::TempDir dir;
  auto index = ApiBankIndex::build(releases);
  save_bank(releases, index, dir.path());
  LoadedBank loaded = load_bank(dir.path());
  const auto& back = loaded.index.releases();
  if (back.size() != releases.size()) return {false, "release count differs after load"};
  for (const auto& r : releases) {
    const ReleaseApiSet* got = loaded.index.release(r->library, r->version);
    if (!got || !(*got == *r)) return {false, "load differs: " + r->library + " " + r->version};
  }
  return {true, std::to_string(releases.size()) + " releases"};
}

// Ten generated libraries with five releases each.
std::vector<std::shared_ptr<const ReleaseApiSet>> throughput_bank() {
  std::vector<std::shared_ptr<const ReleaseApiSet>> out;
  const int libs = 10;
  const int versions = kThroughputReleases / libs;
  for (int l = 0; l < libs; ++l) {
    std::string lib = "lib" + std::to_string(l);
    for (int v = 1; v <= versions; ++v) {
      fixtures::FileMap files;
      std::string init = "from " + lib + ".core import *\n";
      std::string core;
      for (int f = 0; f < 20 + v; ++f) {
        core += "def f" + std::to_string(f) + "(a, b=1" + (f % 3 == 0 && v > 2 ? ", c=None" : "") + "):\n    pass\n\n";
      }
      core += "class Model:\n    def __init__(self, n=1):\n        pass\n\n    def fit(self, x, y=None):\n        pass\n";
      files[lib + "/__init__.py"] = init;
      files[lib + "/core.py"] = core;
      files[lib + "/sub/__init__.py"] = "";
      files[lib + "/sub/helpers.py"] = "def helper(x):\n    return x\n";
      out.push_back(std::make_shared<const ReleaseApiSet>(fixtures::ingest(lib, std::to_string(v) + ".0", files)));
    }
  }
  return out;
}

std::string throughput_notebook() {
  std::vector<std::string> cells;
  for (int l = 0; l < 10; ++l) cells.push_back("import lib" + std::to_string(l) + " as l" + std::to_string(l) + "\n");
  for (int i = 0; static_cast<int>(cells.size()) < kThroughputCells; ++i) {
    std::string m = "l" + std::to_string(i % 10);
    std::ostringstream c;
    c << "%matplotlib inline\n";
    c << "x" << i << " = " << m << ".core.f" << (i % 20) << "(" << i << ", b=2)\n";
    c << "mdl" << i << " = " << m << ".core.Model(n=" << i << ")\n";
    c << "mdl" << i << ".fit(x" << i << ")\n";
    c << "for k in range(3):\n    y = [v * 2 for v in range(k)]\n";
    c << "import os\nos.path.join('a', 'b')\n";
    cells.push_back(c.str());
  }
  return fixtures::notebook_json(cells);
}

Outcome throughput() {
  auto index = ApiBankIndex::build(throughput_bank());
  std::string nb_text = throughput_notebook();
  auto t = Clock::now();
  Notebook nb = load_notebook(nb_text);
  UsageSet us = collect_usages(nb.cells);
  Resolution res = resolve(us, index);
  std::string req = emit_requirements(res);
  std::string pip = emit_pipfile(res);
  double secs = seconds_since(t);
  std::ostringstream d;
  d << nb.cells.size() << " cells, " << index.releases().size() << " releases, " << res.resolved.size()
    << " libraries resolved in " << secs << " s";
  bool ok = nb.cells.size() == kThroughputCells && index.releases().size() == kThroughputReleases &&
            res.resolved.size() == 10 && res.unresolved_usages.empty() && secs <= kThroughputSeconds && !pip.empty();
  return {ok, d.str()};
}

Outcome version_shift() {
  fixtures::TempDir dir;
  fixtures::write_toylib_wheelhouse(dir / "wheels");
  fixtures::write_file(dir / "nb.ipynb", fixtures::notebook_json({"from toylib.core import g\n", "print(g(1))\n"}));

  auto toy = ApiBankIndex::build(fixtures::toylib_releases());
  Resolution res = resolve(collect_usages(load_notebook(fixtures::read_file(dir / "nb.ipynb")).cells), toy);
  if (res.resolved.size() != 1) return {false, "expected one library"};
  auto spec = grammar::parse_line(requirement_line(res.resolved[0]));
  auto admitted = spec ? grammar::admitted(*spec, toy.versions("toylib")) : std::vector<std::string>{};
  bool range_ok = admitted == std::vector<std::string>{"2.0", "3.0"};

  HarnessConfig cfg;
  cfg.work_dir = dir / "work";
  cfg.env_create_cmd = "mkdir -p {envdir}";
  cfg.env_install_cmd = "python3 -m pip install --disable-pip-version-check --no-index --find-links " +
                        shell_quote((dir / "wheels").string()) + " --target {envdir} {packages}";
  cfg.nb_exec_cmd = "PYTHONPATH={envdir} python3 {runner} {notebook}";
  ShellExecutor exec;
  auto validate = [&](const std::string& spec_text) {
    std::string name = "toylib";
    return run_validation(
        plan_environment(std::vector<Requirement>{{name, spec_text}}, "3.10", (dir / "nb.ipynb").string()), cfg,
        exec);
  };
  std::ostringstream d;
  d << requirement_line(res.resolved[0]) << " admits {" << join(admitted) << "}";
  bool ok = range_ok;
  try {
    auto good = validate(requirement_line(res.resolved[0]).substr(6));
    d << "; inferred pin ok=" << good.ok();
    ok = ok && good.ok();
    for (const std::string pin : {"==1.0", "==4.0"}) {
      auto r = validate(pin);
      d << "; " << pin << " -> install " << (r.install.success ? "ok" : "failed") << ", "
        << (r.error_class ? r.error_class->label : std::string("no error"));
      ok = ok && r.install.success && r.error_class && r.error_class->environment_related;
    }
  } catch (const std::exception& e) {
    d << "; harness error: " << e.what();
    ok = false;
  }
  return {ok, d.str()};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ")" << std::endl;
    failures += !o.pass;
  };
  auto guarded = [&](const std::string& name, const std::function<Outcome()>& fn) {
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded("alias-set-pandas-layout", alias_set);
  guarded("instance-call-standardization", instance_method);
  guarded("alias-and-submodule-standardization", alias_examples);

  OracleStats st;
  try {
    st = run_oracle();
  } catch (const std::exception& e) {
    st.first_problem = e.what();
  }
  {
    std::ostringstream d;
    d << st.feasible_ok << "/" << st.cases << " cases equal, " << st.seconds << " s";
    if (!st.first_problem.empty()) d << "; " << st.first_problem;
    report("resolver-oracle-equivalence",
           {st.cases >= 20 && st.feasible_ok == st.cases && st.seconds < kOracleSeconds, d.str()});
  }
  {
    std::ostringstream d;
    d << st.maximal_ok << "/" << st.cases << " cases maximal over " << st.ranges << " ranges";
    report("resolver-maximality", {st.cases >= 20 && st.maximal_ok == st.cases && st.ranges > 0, d.str()});
  }

  guarded("emitter-conformance", emitter_conformance);
  guarded("install-and-runtime-classifiers", log_classifier);
  guarded("bank-round-trip-and-idempotence", bank_identity);
  guarded("inference-throughput", throughput);
  guarded("version-shift-fault-injection", version_shift);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
