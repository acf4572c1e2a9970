#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "envsniff/bank_store.hpp"
#include "envsniff/errors.hpp"
#include "envsniff/harness.hpp"
#include "envsniff/notebook.hpp"
#include "envsniff/release_ingest.hpp"
#include "envsniff/requirements.hpp"
#include "envsniff/resolver.hpp"
#include "envsniff/usage_analysis.hpp"

namespace envsniff::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliConfig {
  fs::path bank_dir;
  fs::path cache_dir;
  std::string index_base_url = "https://pypi.org";
  bool pin_latest = false;
  bool include_star_imports = false;
  bool allow_empty = false;
  bool explain = false;
  bool keep_env = false;
  std::string format = "both";
  int parallelism = 1;
  std::vector<std::string> interpreter_lines;
  json harness = json::object();
};

// raw flag values before merging with the config file
struct Flags {
  std::string config;
  std::string bank;
  std::string cache;
  std::string index_url;
  std::string format;
  std::string python;
  std::string output;
  int parallel = 0;
  bool pin_latest = false;
  bool star = false;
  bool explain = false;
  bool keep_env = false;
  bool allow_empty = false;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

fs::path default_cache() {
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return fs::path(x) / "envsniff";
  if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".cache" / "envsniff";
  return fs::temp_directory_path() / "envsniff-cache";
}

CliConfig merge(const Flags& f) {
  CliConfig c;
  json file = json::object();
  if (!f.config.empty()) {
    try {
      file = json::parse(read_text(f.config));
    } catch (const json::exception& e) {
      throw Error("config " + f.config + ": " + e.what());
    }
    if (!file.is_object()) throw Error("config " + f.config + " must hold a JSON object");
  }
  const char* env_bank = std::getenv("ENVSNIFF_BANK");
  c.bank_dir = !f.bank.empty()                  ? fs::path(f.bank)
               : file.contains("bank")          ? fs::path(file["bank"].get<std::string>())
               : (env_bank && *env_bank)        ? fs::path(env_bank)
                                                : fs::path("envsniff-bank");
  c.cache_dir = !f.cache.empty()         ? fs::path(f.cache)
                : file.contains("cache") ? fs::path(file["cache"].get<std::string>())
                                         : default_cache();
  c.index_base_url = !f.index_url.empty() ? f.index_url : file.value("index_url", c.index_base_url);
  c.format = !f.format.empty() ? f.format : file.value("format", c.format);
  c.parallelism = f.parallel > 0 ? f.parallel : file.value("parallel", 1);
  c.pin_latest = f.pin_latest || file.value("pin_latest", false);
  c.include_star_imports = f.star || file.value("include_star_imports", false);
  c.allow_empty = f.allow_empty || file.value("allow_empty", false);
  c.explain = f.explain;
  c.keep_env = f.keep_env || file.value("keep_env", false);
  std::string py = !f.python.empty() ? f.python : file.value("python", "");
  if (!py.empty()) c.interpreter_lines.push_back(py);
  if (file.contains("harness")) c.harness = file["harness"];
  if (c.parallelism < 1) throw Error("parallelism must be at least 1");
  if (c.format != "requirements" && c.format != "pipfile" && c.format != "both") {
    throw Error("--format must be requirements, pipfile or both");
  }
  return c;
}

// ---- bank add ---------------------------------------------------------------

int cmd_bank_add(const CliConfig& cfg, const std::vector<std::string>& libraries, const std::string& selector,
                 std::ostream& out, std::ostream& err) {
  HttpTransport transport;
  std::vector<std::shared_ptr<const ReleaseApiSet>> existing =
      bank_exists(cfg.bank_dir) || fs::exists(cfg.bank_dir / "releases") ? scan_release_records(cfg.bank_dir)
                                                                         : std::vector<std::shared_ptr<const ReleaseApiSet>>{};
  auto have = [&](const ReleaseRef& r) {
    for (const auto& e : existing) {
      if (e->library == r.library && Version::parse(e->version) == Version::parse(r.version)) return true;
    }
    return false;
  };

  std::vector<ReleaseRef> todo;
  std::vector<std::string> unindexed;
  int cached = 0;
  for (const auto& lib : libraries) {
    ReleaseListing listing;
    try {
      listing = list_releases(lib, cfg.index_base_url, transport);
    } catch (const UnknownLibrary& e) {
      err << e.what() << "\n";
      unindexed.push_back(lib);
      continue;
    } catch (const IndexUnavailable& e) {
      err << "index unavailable for " << lib << ": " << e.what() << "\n";
      unindexed.push_back(lib);
      continue;
    }
    for (const auto& s : listing.skipped) out << "skipped " << listing.library << "==" << s.version << ": " << s.reason << "\n";
    std::vector<ReleaseRef> picked;
    if (selector == "all" || selector.empty()) {
      picked = listing.refs;
    } else if (selector == "latest") {
      if (!listing.refs.empty()) picked.push_back(listing.refs.back());
    } else {
      std::set<std::string> wanted;
      std::stringstream ss(selector);
      std::string v;
      while (std::getline(ss, v, ',')) {
        if (v.starts_with("==")) v = v.substr(2);
        wanted.insert(v);
      }
      for (const auto& r : listing.refs) {
        if (wanted.count(r.version)) picked.push_back(r);
      }
    }
    for (const auto& r : picked) {
      if (have(r)) {
        out << "cached  " << r.library << "==" << r.version << "\n";
        ++cached;
      } else {
        todo.push_back(r);
      }
    }
  }

  int ingested = 0;
  for (const auto& res : ingest_many(todo, cfg.cache_dir, transport, std::max(cfg.parallelism, 4))) {
    if (res.status == IngestResult::Status::ingested) {
      save_release(cfg.bank_dir, *res.release);
      existing.push_back(res.release);
      ++ingested;
      out << "added   " << res.ref.library << "==" << res.ref.version << " (" << res.release->apis.size() << " apis, "
          << res.release->alias_map.size() << " aliases, " << res.release->stats.parse_failures << " parse failures)\n";
    } else {
      out << "failed  " << res.ref.library << "==" << res.ref.version << ": " << res.message << "\n";
    }
  }
  if (ingested > 0 || !bank_exists(cfg.bank_dir)) {
    if (!existing.empty()) save_index(ApiBankIndex::build(existing), cfg.bank_dir);
  }
  if (!unindexed.empty()) {
    out << "unindexed_modules:";
    for (const auto& u : unindexed) out << " " << u;
    out << "\n";
  }
  out << ingested << " ingested, " << cached << " cached\n";
  return ingested + cached > 0 ? 0 : 1;
}

// ---- query ------------------------------------------------------------------

int cmd_query(const CliConfig& cfg, const std::string& fqn, const std::vector<std::string>& keywords,
              std::ostream& out) {
  LoadedBank bank = load_bank(cfg.bank_dir);
  CallKeywords ck{keywords};
  auto hits = bank.index.query(fqn, keywords.empty() ? nullptr : &ck);
  for (const auto& h : hits) out << h.library << "==" << h.version << "\n";
  if (hits.empty()) out << "no release defines " << fqn << "\n";
  return 0;
}

// ---- infer ------------------------------------------------------------------

json usage_json(const UsageRecord& u) {
  json j{{"fqn", u.fqn}, {"cell", u.cell_position}, {"line", u.line}, {"origin", std::string(to_string(u.origin))}};
  if (u.call) {
    j["call"] = {{"positional", u.call->positional}, {"keywords", u.call->keywords}};
  } else {
    j["call"] = "reference_only";
  }
  if (u.low_confidence) j["low_confidence"] = true;
  if (!u.receiver_origin.empty()) j["receiver"] = u.receiver_origin;
  return j;
}

json explain_json(const std::string& notebook, const UsageSet& us, const Resolution& res) {
  json j;
  j["notebook"] = notebook;
  j["usages"] = json::array();
  for (const auto& u : us.usages) j["usages"].push_back(usage_json(u));
  j["imported_top_levels"] = us.imported_top_levels;
  j["unresolved_names"] = us.unresolved;
  j["cell_notes"] = json::array();
  for (const auto& n : us.cell_notes) j["cell_notes"].push_back({{"cell", n.cell_position}, {"note", n.note}});
  j["resolved"] = json::array();
  for (const auto& r : res.resolved) {
    j["resolved"].push_back({{"library", r.library},
                             {"feasible", r.feasible},
                             {"constraint", std::string(to_string(r.emitted.kind))},
                             {"requirement", requirement_line(r)},
                             {"excluded_runs", r.excluded_runs},
                             {"covers", r.assigned}});
  }
  j["unresolved_usages"] = json::array();
  for (const auto& u : res.unresolved_usages) {
    json e = usage_json(u.usage);
    e["reason"] = std::string(to_string(u.reason));
    e["detail"] = u.detail;
    j["unresolved_usages"].push_back(e);
  }
  j["diagnostics"] = json::array();
  for (const auto& d : res.diagnostics) {
    j["diagnostics"].push_back({{"fqn", d.fqn},
                                {"keywords", d.keywords},
                                {"reference_only", d.reference_only},
                                {"candidates", d.candidates},
                                {"chosen", d.chosen},
                                {"versions", d.versions},
                                {"note", d.note}});
  }
  return j;
}

struct InferOutcome {
  int code = 0;
  std::string summary;
  std::string explain;
};

InferOutcome infer_one(const CliConfig& cfg, const ApiBankIndex& index, const fs::path& nb_path,
                       const fs::path& out_dir, bool batch) {
  InferOutcome o;
  try {
    Notebook nb = load_notebook(read_text(nb_path));
    AnalysisOptions opts;
    opts.interpreter_lines = cfg.interpreter_lines;
    opts.sibling_modules = sibling_modules_of(nb_path.string());
    UsageSet us = collect_usages(nb.cells, opts);
    ResolvePolicy policy;
    policy.pin_latest = cfg.pin_latest;
    policy.include_star_imports = cfg.include_star_imports;
    Resolution res = resolve(us, index, policy);
    res.interpreter_lines = cfg.interpreter_lines;

    fs::path dir = out_dir.empty() ? nb_path.parent_path() : out_dir;
    std::string prefix = batch ? nb_path.stem().string() + "." : "";
    if (cfg.format != "pipfile") write_text(dir / (prefix + "requirements.txt"), emit_requirements(res));
    if (cfg.format != "requirements") write_text(dir / (prefix + "Pipfile"), emit_pipfile(res));

    std::ostringstream s;
    s << nb_path.string() << ":";
    if (res.resolved.empty()) s << " (no third-party libraries)";
    for (const auto& r : res.resolved) s << " " << requirement_line(r);
    if (!res.unresolved_usages.empty()) {
      s << " | unresolved:";
      std::set<std::string> names;
      for (const auto& u : res.unresolved_usages) names.insert(u.usage.fqn + " (" + std::string(to_string(u.reason)) + ")");
      for (const auto& n : names) s << " " << n;
    }
    o.summary = s.str();
    o.code = res.unresolved_usages.empty() ? 0 : 2;
    if (cfg.explain) o.explain = explain_json(nb_path.string(), us, res).dump(2);
  } catch (const std::exception& e) {
    o.code = 1;
    o.summary = nb_path.string() + ": error: " + e.what();
  }
  return o;
}

int cmd_infer(const CliConfig& cfg, const fs::path& target, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
  if (!fs::exists(target)) {
    err << "no such notebook or directory: " << target.string() << "\n";
    return 1;
  }
  LoadedBank bank;
  try {
    bank = load_bank(cfg.bank_dir);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  }
  if (bank.index.empty()) {
    err << EmptyBank().what() << "\n";
    return 1;
  }

  std::vector<fs::path> notebooks;
  bool batch = fs::is_directory(target);
  if (batch) {
    for (const auto& e : fs::recursive_directory_iterator(target)) {
      if (e.is_regular_file() && e.path().extension() == ".ipynb" &&
          e.path().string().find(".ipynb_checkpoints") == std::string::npos) {
        notebooks.push_back(e.path());
      }
    }
    std::sort(notebooks.begin(), notebooks.end());
  } else {
    notebooks.push_back(target);
  }

  std::vector<InferOutcome> results(notebooks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < notebooks.size(); i = next++) {
      results[i] = infer_one(cfg, bank.index, notebooks[i], out_dir, batch);
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(cfg.parallelism, static_cast<int>(std::max<std::size_t>(1, notebooks.size())));
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& r : results) {
    (r.code == 1 ? err : out) << r.summary << "\n";
    if (!r.explain.empty()) out << r.explain << "\n";
    if (r.code == 1) {
      code = 1;
    } else if (r.code == 2 && code == 0) {
      code = 2;
    }
  }
  return code;
}

// ---- validate -----------------------------------------------------------------

int cmd_validate(const CliConfig& cfg, const fs::path& notebook, const fs::path& requirements, int time_budget,
                 std::ostream& out, std::ostream& err) {
  if (!fs::exists(notebook)) {
    err << "no such notebook: " << notebook.string() << "\n";
    return 1;
  }
  if (!fs::exists(requirements)) {
    err << "no such requirements file: " << requirements.string() << "\n";
    return 1;
  }
  try {
    HarnessConfig hc = harness_config_from_json(cfg.harness);
    if (cfg.keep_env) hc.keep_env = true;
    if (time_budget > 0) hc.time_budget_s = time_budget;
    auto reqs = parse_requirements(read_text(requirements));
    EnvPlan plan = plan_environment(reqs, cfg.interpreter_lines.empty() ? "" : cfg.interpreter_lines.front(),
                                    notebook.string(), true);
    plan.time_budget_s = hc.time_budget_s;
    ShellExecutor exec;
    ValidationReport report = run_validation(plan, hc, exec);
    out << to_json(report).dump(2) << "\n";
    return report.ok() ? 0 : 2;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
}

// ---- diff -----------------------------------------------------------------------

int cmd_diff(const CliConfig& cfg, const std::string& library, std::string v1, std::string v2, std::ostream& out,
             std::ostream& err) {
  LoadedBank bank = load_bank(cfg.bank_dir);
  if (Version::parse(v2) < Version::parse(v1)) {
    out << "note: " << v2 << " precedes " << v1 << "; comparing " << v2 << " -> " << v1 << "\n";
    std::swap(v1, v2);
  }
  const ReleaseApiSet* a = bank.index.release(library, v1);
  const ReleaseApiSet* b = bank.index.release(library, v2);
  if (!a || !b) {
    err << "release not in bank: " << library << "==" << (!a ? v1 : v2) << "\n";
    return 1;
  }
  ApiDiff d = diff_releases(*a, *b);
  out << a->library << " " << a->version << " -> " << b->version << ": " << d.added.size() << " added, "
      << d.removed.size() << " removed, " << d.param_changed.size() << " param_changed\n";
  for (const auto& n : d.added) out << "+ " << n << "\n";
  for (const auto& n : d.removed) out << "- " << n << "\n";
  for (const auto& c : d.param_changed) {
    out << "~ " << c.fqn << " " << to_string(c.before) << " -> " << to_string(c.after) << "\n";
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"envsniff: restore the environment of a notebook from its API usages"};
  app.set_version_flag("--version", std::string(ENVSNIFF_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "JSON config file");
  app.add_option("--bank", f.bank, "API bank directory (default $ENVSNIFF_BANK)");
  app.add_option("--cache", f.cache, "archive cache directory");
  app.add_option("--index-url", f.index_url, "package index base URL");
  app.add_option("--parallel", f.parallel, "worker count");

  auto* bank = app.add_subcommand("bank", "manage the API bank");
  bank->require_subcommand(1);
  auto* add = bank->add_subcommand("add", "ingest library releases from the index");
  std::vector<std::string> libraries;
  std::string selector = "all";
  add->add_option("libraries", libraries, "library names")->required();
  add->add_option("--versions", selector, "all, latest, or a comma list of versions");

  auto* query = app.add_subcommand("query", "list releases defining an API");
  std::string fqn;
  std::vector<std::string> keywords;
  query->add_option("fqn", fqn, "fully-qualified name")->required();
  query->add_option("--keyword,-k", keywords, "keyword used at the call site");

  auto* infer = app.add_subcommand("infer", "infer dependency files for a notebook or a directory of notebooks");
  std::string target;
  infer->add_option("path", target, "notebook or directory")->required();
  infer->add_option("-o,--output", f.output, "output directory");
  infer->add_option("--format", f.format, "requirements, pipfile or both");
  infer->add_flag("--pin-latest", f.pin_latest, "pin the newest feasible version");
  infer->add_flag("--include-star-imports", f.star, "let star-import guesses take part");
  infer->add_flag("--explain", f.explain, "print the resolution trace as JSON");
  infer->add_option("--python", f.python, "restrict stdlib classification to one interpreter line");

  auto* validate = app.add_subcommand("validate", "install requirements and run the notebook top-down");
  std::string nb_path;
  std::string req_path;
  int budget = 0;
  validate->add_option("notebook", nb_path)->required();
  validate->add_option("requirements", req_path)->required();
  validate->add_flag("--keep-env", f.keep_env, "keep the environment afterwards");
  validate->add_option("--time-budget", budget, "execution budget in seconds");
  validate->add_option("--python", f.python, "interpreter line for the environment");

  auto* diff = app.add_subcommand("diff", "compare two releases of a library");
  std::string lib;
  std::string v1;
  std::string v2;
  diff->add_option("library", lib)->required();
  diff->add_option("v1", v1)->required();
  diff->add_option("v2", v2)->required();

  std::vector<std::string> argv_store{"envsniff"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 1;
  }

  try {
    CliConfig cfg = merge(f);
    if (add->parsed()) return cmd_bank_add(cfg, libraries, selector, out, err);
    if (query->parsed()) return cmd_query(cfg, fqn, keywords, out);
    if (infer->parsed()) return cmd_infer(cfg, target, f.output, out, err);
    if (validate->parsed()) return cmd_validate(cfg, nb_path, req_path, budget, out, err);
    if (diff->parsed()) return cmd_diff(cfg, lib, v1, v2, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace envsniff::cli
