#include "envsniff/resolver.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "envsniff/errors.hpp"

#ifndef ENVSNIFF_VERSION
#define ENVSNIFF_VERSION "0"
#endif

namespace envsniff {

namespace {

struct Key {
  std::string fqn;
  std::optional<std::vector<std::string>> keywords;  // nullopt = reference only

  friend auto operator<=>(const Key&, const Key&) = default;
};

struct KeyInfo {
  std::vector<const UsageRecord*> records;
  std::map<std::string, std::set<std::string>> versions;  // library → versions accepting the call
  std::set<std::string> candidates;                       // libraries exposing the name at all
  std::string chosen;
  std::string note;
};

std::string root_of(const std::string& fqn) { return fqn.substr(0, fqn.find('.')); }

bool version_less(const std::string& a, const std::string& b) { return Version::parse(a) < Version::parse(b); }

// Unknown instance-method names only block resolution when the receiver is a
// class whose members the bank fully knows.
bool strict_receiver(const ApiBankIndex& index, const std::string& receiver) {
  if (receiver.empty()) return false;
  for (const auto& e : index.entries(receiver)) {
    if (e.record->kind == DefKind::class_ && !e.record->open_bases) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::exact:
      return "exact";
    case ConstraintKind::closed_interval:
      return "closed_interval";
    case ConstraintKind::at_least:
      return "at_least";
    case ConstraintKind::any:
      return "any";
  }
  return "any";
}

std::string_view to_string(UnresolvedReason r) {
  switch (r) {
    case UnresolvedReason::unknown_api:
      return "unknown_api";
    case UnresolvedReason::empty_intersection:
      return "empty_intersection";
    case UnresolvedReason::ambiguous_library:
      return "ambiguous_library";
  }
  return "unknown_api";
}

Constraint choose_emitted_constraint(VersionRange& range, const std::vector<std::string>& all_versions,
                                     const ResolvePolicy& policy) {
  range.excluded_runs.clear();
  if (range.feasible.empty()) return {};
  std::set<std::string> feasible(range.feasible.begin(), range.feasible.end());

  std::vector<std::vector<std::string>> runs;
  bool in_run = false;
  for (const auto& v : all_versions) {
    if (feasible.count(v)) {
      if (!in_run) runs.emplace_back();
      runs.back().push_back(v);
      in_run = true;
    } else {
      in_run = false;
    }
  }
  if (runs.empty()) return {ConstraintKind::exact, range.feasible.back(), ""};
  std::vector<std::string> run = runs.back();
  runs.pop_back();
  range.excluded_runs = std::move(runs);

  if (policy.pin_latest) return {ConstraintKind::exact, run.back(), ""};
  if (run.size() == all_versions.size()) return {ConstraintKind::any, "", ""};
  if (run.size() == 1) return {ConstraintKind::exact, run.front(), ""};
  if (run.back() == all_versions.back()) return {ConstraintKind::at_least, run.front(), ""};
  return {ConstraintKind::closed_interval, run.front(), run.back()};
}

Resolution resolve(const UsageSet& usages, const ApiBankIndex& index, const ResolvePolicy& policy) {
  if (index.empty()) throw EmptyBank();
  Resolution res;
  res.bank_identity = index.identity();

  std::map<Key, KeyInfo> keys;
  for (const auto& u : usages.usages) {
    if (u.low_confidence && !policy.include_star_imports) {
      res.diagnostics.push_back({u.fqn, {}, u.reference_only(), {}, "", {}, "star-import candidate ignored"});
      continue;
    }
    Key k{u.fqn, std::nullopt};
    if (u.call) k.keywords = u.call->keywords;
    keys[k].records.push_back(&u);
  }

  auto demote = [&](const KeyInfo& info, UnresolvedReason reason, const std::string& detail) {
    for (const UsageRecord* r : info.records) res.unresolved_usages.push_back({*r, reason, detail});
  };

  // candidate libraries and signature-filtered versions per key
  std::map<std::string, int> coverage;
  for (auto& [key, info] : keys) {
    CallKeywords ck;
    if (key.keywords) ck.keywords = *key.keywords;
    for (const auto& rk : index.query(key.fqn)) info.candidates.insert(rk.library);
    for (const auto& rk : index.query(key.fqn, key.keywords ? &ck : nullptr)) info.versions[rk.library].insert(rk.version);
    for (const auto& lib : info.candidates) ++coverage[lib];
  }

  std::set<std::string> selected;
  std::vector<Key> pending;
  for (auto& [key, info] : keys) {
    if (info.candidates.empty()) {
      const UsageRecord& first = *info.records.front();
      bool lenient = !key.keywords.has_value() ||
                     (first.origin == UsageOrigin::instance_method && !strict_receiver(index, first.receiver_origin));
      if (lenient) {
        info.note = key.keywords ? "instance method not in bank; receiver members not fully known"
                                 : "reference not in bank; not a known callable";
      } else {
        info.note = "unknown API";
        demote(info, UnresolvedReason::unknown_api, "no release in the bank defines " + key.fqn);
      }
      continue;
    }
    if (info.candidates.size() == 1) {
      info.chosen = *info.candidates.begin();
      selected.insert(info.chosen);
      continue;
    }
    if (policy.reject_ambiguous) {
      info.note = "ambiguous";
      std::string libs;
      for (const auto& l : info.candidates) libs += (libs.empty() ? "" : ", ") + l;
      demote(info, UnresolvedReason::ambiguous_library, "supplied by " + libs);
      continue;
    }
    std::string root = normalize_library_name(root_of(key.fqn));
    if (info.candidates.count(root)) {
      info.chosen = root;
      info.note = "ambiguous; library name matches the top-level module";
      selected.insert(info.chosen);
      continue;
    }
    pending.push_back(key);
  }

  // greedy cover over the remaining ambiguous keys: libraries already chosen
  // first, then the one covering the most usages, then by name
  while (!pending.empty()) {
    std::map<std::string, int> gain;
    for (const auto& k : pending) {
      for (const auto& lib : keys[k].candidates) ++gain[lib];
    }
    std::string best;
    auto better = [&](const std::string& a, const std::string& b) {
      bool sa = selected.count(a), sb = selected.count(b);
      if (sa != sb) return sa;
      if (gain[a] != gain[b]) return gain[a] > gain[b];
      if (coverage[a] != coverage[b]) return coverage[a] > coverage[b];
      return a < b;
    };
    for (const auto& [lib, _] : gain) {
      if (best.empty() || better(lib, best)) best = lib;
    }
    selected.insert(best);
    std::vector<Key> rest;
    for (const auto& k : pending) {
      KeyInfo& info = keys[k];
      if (info.candidates.count(best)) {
        info.chosen = best;
        info.note = "ambiguous; chosen by coverage";
      } else {
        rest.push_back(k);
      }
    }
    pending = std::move(rest);
  }

  // per-library intersection with demotion of blocking usages
  std::map<std::string, std::vector<Key>> by_lib;
  for (const auto& [key, info] : keys) {
    if (!info.chosen.empty()) by_lib[info.chosen].push_back(key);
  }
  for (auto& [lib, lib_keys] : by_lib) {
    std::vector<std::string> all = index.versions(lib);
    auto accepts = [&](const Key& k, const std::string& v) {
      const auto& vs = keys[k].versions;
      auto it = vs.find(lib);
      return it != vs.end() && it->second.count(v) > 0;
    };
    auto intersect = [&](const std::vector<Key>& ks) {
      std::vector<std::string> out;
      for (const auto& v : all) {
        if (std::all_of(ks.begin(), ks.end(), [&](const Key& k) { return accepts(k, v); })) out.push_back(v);
      }
      return out;
    };
    std::vector<std::string> feasible = intersect(lib_keys);
    if (feasible.empty()) {
      std::string best;
      std::size_t best_count = 0;
      for (const auto& v : all) {
        std::size_t c = std::count_if(lib_keys.begin(), lib_keys.end(), [&](const Key& k) { return accepts(k, v); });
        if (c > 0 && c >= best_count) {
          best = v;
          best_count = c;
        }
      }
      std::vector<Key> kept;
      for (const auto& k : lib_keys) {
        if (!best.empty() && accepts(k, best)) {
          kept.push_back(k);
        } else {
          keys[k].note = "demoted: no common version with the other usages of " + lib;
          std::string vs;
          for (const auto& v : keys[k].versions[lib]) vs += (vs.empty() ? "" : ", ") + v;
          demote(keys[k], UnresolvedReason::empty_intersection,
                 lib + " versions accepting it (" + (vs.empty() ? "none" : vs) + ") do not overlap the rest");
        }
      }
      lib_keys = std::move(kept);
      if (lib_keys.empty()) continue;
      feasible = intersect(lib_keys);
    }
    VersionRange range;
    range.library = lib;
    range.feasible = feasible;
    std::set<std::string> fqns;
    for (const auto& k : lib_keys) fqns.insert(k.fqn);
    range.assigned.assign(fqns.begin(), fqns.end());
    range.emitted = choose_emitted_constraint(range, all, policy);
    res.resolved.push_back(std::move(range));
  }

  for (const auto& [key, info] : keys) {
    Diagnostic d;
    d.fqn = key.fqn;
    d.reference_only = !key.keywords.has_value();
    if (key.keywords) d.keywords = *key.keywords;
    d.candidates.assign(info.candidates.begin(), info.candidates.end());
    d.chosen = info.chosen;
    if (!info.chosen.empty()) {
      auto it = info.versions.find(info.chosen);
      if (it != info.versions.end()) d.versions.assign(it->second.begin(), it->second.end());
      std::sort(d.versions.begin(), d.versions.end(), version_less);
    }
    d.note = info.note;
    res.diagnostics.push_back(std::move(d));
  }
  std::stable_sort(res.unresolved_usages.begin(), res.unresolved_usages.end(),
                   [](const UnresolvedUsage& a, const UnresolvedUsage& b) {
                     return std::tie(a.usage.cell_position, a.usage.line, a.usage.fqn) <
                            std::tie(b.usage.cell_position, b.usage.line, b.usage.fqn);
                   });
  return res;
}

std::string requirement_line(const VersionRange& r) {
  switch (r.emitted.kind) {
    case ConstraintKind::any:
      return r.library;
    case ConstraintKind::exact:
      return r.library + "==" + r.emitted.lo;
    case ConstraintKind::at_least:
      return r.library + ">=" + r.emitted.lo;
    case ConstraintKind::closed_interval:
      return r.library + ">=" + r.emitted.lo + ",<=" + r.emitted.hi;
  }
  return r.library;
}

std::string pipfile_value(const VersionRange& r) {
  switch (r.emitted.kind) {
    case ConstraintKind::any:
      return "\"*\"";
    case ConstraintKind::exact:
      return "\"==" + r.emitted.lo + "\"";
    case ConstraintKind::at_least:
      return "\">= " + r.emitted.lo + "\"";
    case ConstraintKind::closed_interval:
      return "\">=" + r.emitted.lo + ",<=" + r.emitted.hi + "\"";
  }
  return "\"*\"";
}

namespace {

std::string join_runs(const std::vector<std::vector<std::string>>& runs) {
  std::string out;
  for (const auto& run : runs) {
    for (const auto& v : run) out += (out.empty() ? "" : ", ") + v;
  }
  return out;
}

}  // namespace

std::string emit_requirements(const Resolution& resolution) {
  std::string out = "# generated by envsniff " ENVSNIFF_VERSION "\n";
  out += "# bank " + resolution.bank_identity + "\n";
  if (!resolution.interpreter_lines.empty()) {
    out += "# interpreter not inferred; stdlib classification used python";
    for (const auto& l : resolution.interpreter_lines) out += " " + l;
    out += "\n";
  }
  std::vector<const VersionRange*> sorted;
  for (const auto& r : resolution.resolved) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->library < b->library; });
  for (const auto* r : sorted) out += requirement_line(*r) + "\n";
  for (const auto* r : sorted) {
    if (!r->excluded_runs.empty()) {
      out += "# " + r->library + ": also feasible but not emitted: " + join_runs(r->excluded_runs) + "\n";
    }
  }
  for (const auto& u : resolution.unresolved_usages) {
    out += "# unresolved: " + u.usage.fqn + " (" + std::string(to_string(u.reason)) + ", cell " +
           std::to_string(u.usage.cell_position) + ")\n";
  }
  return out;
}

std::string emit_pipfile(const Resolution& resolution) {
  std::string out =
      "[[source]]\n"
      "url = \"https://pypi.python.org/simple\"\n"
      "verify_ssl = true\n"
      "name = \"pypi\"\n";
  std::vector<const VersionRange*> sorted;
  for (const auto& r : resolution.resolved) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->library < b->library; });
  if (!sorted.empty()) {
    out += "\n[packages]\n";
    for (const auto* r : sorted) out += r->library + " = " + pipfile_value(*r) + "\n";
  }
  return out;
}

}  // namespace envsniff
