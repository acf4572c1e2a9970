#include <benchmark/benchmark.h>

#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "envsniff/api_bank.hpp"
#include "envsniff/notebook.hpp"
#include "envsniff/python_parser.hpp"
#include "envsniff/release_ingest.hpp"
#include "envsniff/resolver.hpp"
#include "envsniff/usage_analysis.hpp"

using namespace envsniff;

namespace {

std::string module_source(int functions) {
  std::ostringstream s;
  s << "import os\nfrom .base import thing\n\n";
  for (int i = 0; i < functions; ++i) {
    s << "def f" << i << "(a, b=1, *args, key=None, **kw):\n    return [x * 2 for x in range(a)]\n\n";
  }
  s << "class Model(object):\n    def __init__(self, n=1):\n        self.n = n\n\n"
       "    def fit(self, x, y=None):\n        return self\n";
  return s.str();
}

std::shared_ptr<const ReleaseApiSet> release(const std::string& lib, int v) {
  std::map<std::string, std::string> files = {
      {lib + "/__init__.py", "from " + lib + ".core import *\n"},
      {lib + "/core.py", module_source(20 + v)},
      {lib + "/base.py", "thing = 1\n"},
  };
  return std::make_shared<const ReleaseApiSet>(ingest_files(lib, std::to_string(v) + ".0", files));
}

std::string notebook(int cells) {
  nlohmann::json doc{{"nbformat", 4}, {"nbformat_minor", 5}, {"metadata", nlohmann::json::object()}};
  doc["cells"] = nlohmann::json::array();
  for (int i = 0; i < cells; ++i) {
    std::ostringstream c;
    std::string lib = "lib" + std::to_string(i % 10);
    c << "import " << lib << "\nm" << i << " = " << lib << ".core.Model(n=" << i << ")\nm" << i << ".fit(" << i
      << ")\n" << lib << ".core.f" << i % 20 << "(1, key=2)\n";
    doc["cells"].push_back({{"cell_type", "code"}, {"source", c.str()}, {"metadata", nlohmann::json::object()},
                            {"outputs", nlohmann::json::array()}, {"execution_count", i + 1}});
  }
  return doc.dump();
}

ApiBankIndex bank() {
  std::vector<std::shared_ptr<const ReleaseApiSet>> rs;
  for (int l = 0; l < 10; ++l) {
    for (int v = 1; v <= 5; ++v) rs.push_back(release("lib" + std::to_string(l), v));
  }
  return ApiBankIndex::build(rs);
}

}  // namespace

static void BM_ParseModule(benchmark::State& state) {
  std::string src = module_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(py::parse_module_any(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ParseModule)->Arg(10)->Arg(100)->Arg(1000);

static void BM_IngestRelease(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(release("lib0", 3));
}
BENCHMARK(BM_IngestRelease);

static void BM_InferNotebook(benchmark::State& state) {
  ApiBankIndex index = bank();
  std::string text = notebook(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Notebook nb = load_notebook(text);
    Resolution r = resolve(collect_usages(nb.cells), index);
    benchmark::DoNotOptimize(emit_requirements(r));
  }
}
BENCHMARK(BM_InferNotebook)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
