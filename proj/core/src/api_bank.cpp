#include "envsniff/api_bank.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "envsniff/errors.hpp"
#include "envsniff/hash.hpp"

namespace envsniff {

std::string_view to_string(BankNote::Kind kind) {
  switch (kind) {
    case BankNote::Kind::dangling_edge:
      return "dangling_edge";
    case BankNote::Kind::star_import_unresolved:
      return "star_import_unresolved";
    case BankNote::Kind::parse_failure:
      return "parse_failure";
    case BankNote::Kind::unresolved_base:
      return "unresolved_base";
  }
  return "unknown";
}

const ApiRecord* ReleaseApiSet::find(std::string_view fqn) const {
  std::string key(fqn);
  if (auto it = apis.find(key); it != apis.end()) return &it->second;
  if (auto it = alias_map.find(key); it != alias_map.end()) {
    if (auto c = apis.find(it->second); c != apis.end()) return &c->second;
  }
  return nullptr;
}

std::set<std::string> ReleaseApiSet::all_names() const {
  std::set<std::string> names;
  for (const auto& [fqn, _] : apis) names.insert(fqn);
  for (const auto& [alias, _] : alias_map) names.insert(alias);
  return names;
}

bool release_key_less(const ReleaseKey& a, const ReleaseKey& b) {
  if (a.library != b.library) return a.library < b.library;
  return Version::parse(a.version) < Version::parse(b.version);
}

// ---------------------------------------------------------------------------

std::vector<ImportEdge> compute_import_closure(const std::vector<ImportEdge>& edges) {
  std::set<ImportEdge> closure;
  // (module, name bound there) → edges leaving / entering with that binding
  std::map<std::pair<std::string, std::string>, std::vector<ImportEdge>> outgoing;
  std::map<std::pair<std::string, std::string>, std::vector<ImportEdge>> incoming;
  std::deque<ImportEdge> work;

  auto add = [&](ImportEdge e) {
    if (e.source_module == e.target_module) return;
    if (!closure.insert(e).second) return;
    outgoing[{e.source_module, e.name}].push_back(e);
    incoming[{e.target_module, e.bound_name}].push_back(e);
    work.push_back(std::move(e));
  };
  for (const auto& e : edges) add(e);

  while (!work.empty()) {
    ImportEdge e = std::move(work.front());
    work.pop_front();
    // e then next
    if (auto it = outgoing.find({e.target_module, e.bound_name}); it != outgoing.end()) {
      auto next_edges = it->second;
      for (const auto& next : next_edges) {
        add({e.source_module, e.name, next.target_module, next.bound_name, e.kind});
      }
    }
    // prev then e
    if (auto it = incoming.find({e.source_module, e.name}); it != incoming.end()) {
      auto prev_edges = it->second;
      for (const auto& prev : prev_edges) {
        add({prev.source_module, prev.name, e.target_module, e.bound_name, prev.kind});
      }
    }
  }
  return {closure.begin(), closure.end()};
}

// ---------------------------------------------------------------------------

namespace {

Signature strip_receiver(Signature sig) {
  if (!sig.positional.empty()) sig.positional.erase(sig.positional.begin());
  return sig;
}

Signature permissive_signature() {
  Signature s;
  s.var_positional = true;
  s.var_keyword = true;
  return s;
}

struct ClassInfo {
  std::string fqn;
  const SourceModule* module = nullptr;
  const Definition* def = nullptr;
  std::vector<std::string> methods;  // own method names
  bool has_init = false;
};

class TreeEnhancer {
 public:
  TreeEnhancer(const DirectoryTree& tree, const std::vector<ImportEdge>& closure,
               const std::vector<SourceModule>& modules)
      : tree_(tree), closure_(closure), modules_(modules) {}

  ReleaseApiSet run() {
    for (const auto& m : modules_) by_path_[m.module_path] = &m;
    collect_definitions();
    collect_aliases();
    resolve_inheritance();
    expand_class_aliases();
    out_.top_level = tree_.roots;
    return std::move(out_);
  }

 private:
  void collect_definitions() {
    for (const auto& m : modules_) {
      out_.stats.skipped_constructs += m.skipped_constructs;
      for (const auto& d : m.definitions) {
        ApiRecord r;
        r.fqn = m.qualified_name(d);
        r.kind = d.kind;
        if (d.kind == DefKind::method) {
          r.signature = d.is_staticmethod ? d.signature : strip_receiver(d.signature);
          auto& cls = classes_[m.module_path + "." + *d.owner_class];
          cls.methods.push_back(d.name);
          if (d.name == "__init__") cls.has_init = true;
        } else if (d.kind == DefKind::class_) {
          auto& cls = classes_[r.fqn];
          cls.fqn = r.fqn;
          cls.module = &m;
          cls.def = &d;
        } else {
          r.signature = d.signature;
        }
        out_.apis.emplace(r.fqn, std::move(r));
      }
    }
  }

  bool defines_top_level(const std::string& module, const std::string& name) const {
    auto it = out_.apis.find(module + "." + name);
    return it != out_.apis.end() && it->second.kind != DefKind::method;
  }

  void collect_aliases() {
    // Chained edges already carry the defining module as their source, so a
    // single pass over the closure finds every alias.
    for (const auto& e : closure_) {
      if (e.kind == EdgeKind::submodule) continue;
      if (!defines_top_level(e.source_module, e.name)) continue;
      std::string alias = e.target_module + "." + e.bound_name;
      if (out_.apis.count(alias)) continue;  // a local definition shadows the import
      out_.alias_map.emplace(alias, e.source_module + "." + e.name);
    }
    for (const auto& e : closure_) {
      if (e.kind == EdgeKind::submodule) continue;
      if (defines_top_level(e.source_module, e.name)) continue;
      std::string via = e.source_module + "." + e.name;
      if (out_.alias_map.count(via)) continue;  // re-export of a re-export
      if (tree_.find(via)) continue;            // submodule bound by name
      const char* why = tree_.find(e.source_module) ? "name not defined in source module"
                                                    : "source module outside the release";
      out_.notes.push_back({BankNote::Kind::dangling_edge, to_string(e), why});
    }
  }

  std::string canonical(const std::string& fqn) const {
    if (out_.apis.count(fqn)) return fqn;
    if (auto it = out_.alias_map.find(fqn); it != out_.alias_map.end()) return it->second;
    return {};
  }

  // Resolves a dotted base-class expression written inside `module`.
  std::string resolve_in_module(const SourceModule& module, const std::string& dotted) const {
    std::string head = dotted.substr(0, dotted.find('.'));
    std::string rest = dotted.size() > head.size() ? dotted.substr(head.size()) : "";
    std::vector<std::string> candidates;
    candidates.push_back(module.module_path + "." + dotted);
    for (const auto& imp : module.import_statements) {
      for (const auto& n : imp.imported_names) {
        if (imp.form == ImportForm::from_import) {
          if ((n.alias ? *n.alias : n.name) == head) candidates.push_back(imp.source_module + "." + n.name + rest);
        } else if (imp.form == ImportForm::import) {
          if (n.alias && *n.alias == head) candidates.push_back(n.name + rest);
          if (!n.alias && n.name.substr(0, n.name.find('.')) == head) candidates.push_back(dotted);
        }
      }
      if (imp.form == ImportForm::star_import) candidates.push_back(imp.source_module + "." + dotted);
    }
    for (const auto& c : candidates) {
      std::string canon = canonical(c);
      if (!canon.empty() && out_.apis.at(canon).kind == DefKind::class_) return canon;
    }
    return {};
  }

  struct Resolved {
    std::vector<std::string> mro;  // class followed by its resolved ancestors
    bool open = false;
    std::optional<Signature> ctor;
  };

  const Resolved& resolve_class(const std::string& fqn) {
    if (auto it = resolved_.find(fqn); it != resolved_.end()) return it->second;
    Resolved r;
    if (visiting_.count(fqn)) {
      r.mro = {fqn};
      return resolved_.emplace(fqn, std::move(r)).first->second;
    }
    visiting_.insert(fqn);
    const ClassInfo& info = classes_.at(fqn);
    r.mro.push_back(fqn);
    if (info.has_init) r.ctor = out_.apis.at(fqn + ".__init__").signature;
    bool ctor_blocked = false;
    for (const auto& base : info.def->bases) {
      if (base == "object") continue;
      std::string base_fqn = resolve_in_module(*info.module, base);
      if (base_fqn.empty() || !classes_.count(base_fqn)) {
        r.open = true;
        if (!r.ctor) ctor_blocked = true;
        out_.notes.push_back({BankNote::Kind::unresolved_base, fqn, base});
        continue;
      }
      const Resolved& b = resolve_class(base_fqn);
      for (const auto& anc : b.mro) {
        if (std::find(r.mro.begin(), r.mro.end(), anc) == r.mro.end()) r.mro.push_back(anc);
      }
      r.open = r.open || b.open;
      if (!r.ctor && !ctor_blocked) {
        if (b.ctor) {
          r.ctor = b.ctor;
        } else if (b.open) {
          ctor_blocked = true;
        }
      }
    }
    visiting_.erase(fqn);
    if (!r.ctor && ctor_blocked) r.ctor = permissive_signature();
    return resolved_.emplace(fqn, std::move(r)).first->second;
  }

  void resolve_inheritance() {
    for (auto& [fqn, info] : classes_) {
      if (!info.def) continue;
      const Resolved& r = resolve_class(fqn);
      ApiRecord& rec = out_.apis.at(fqn);
      rec.open_bases = r.open;
      rec.signature = r.ctor.value_or(Signature{});
      std::set<std::string> own(info.methods.begin(), info.methods.end());
      for (std::size_t i = 1; i < r.mro.size(); ++i) {
        const ClassInfo& base = classes_.at(r.mro[i]);
        for (const auto& m : base.methods) {
          if (!own.insert(m).second) continue;
          std::string alias = fqn + "." + m;
          if (out_.apis.count(alias)) continue;
          out_.alias_map.emplace(alias, r.mro[i] + "." + m);
        }
      }
    }
  }

  void expand_class_aliases() {
    std::vector<std::pair<std::string, std::string>> extra;
    for (const auto& [alias, target] : out_.alias_map) {
      auto it = out_.apis.find(target);
      if (it == out_.apis.end() || it->second.kind != DefKind::class_) continue;
      std::string prefix = target + ".";
      // own methods are canonical entries, inherited ones are aliases
      for (auto m = out_.apis.lower_bound(prefix); m != out_.apis.end() && m->first.starts_with(prefix); ++m) {
        if (m->second.kind != DefKind::method) continue;
        extra.emplace_back(alias + m->first.substr(target.size()), m->first);
      }
      for (auto m = out_.alias_map.lower_bound(prefix);
           m != out_.alias_map.end() && m->first.starts_with(prefix); ++m) {
        extra.emplace_back(alias + m->first.substr(target.size()), m->second);
      }
    }
    for (auto& [a, t] : extra) {
      if (!out_.apis.count(a)) out_.alias_map.emplace(std::move(a), std::move(t));
    }
  }

  const DirectoryTree& tree_;
  const std::vector<ImportEdge>& closure_;
  const std::vector<SourceModule>& modules_;
  std::unordered_map<std::string, const SourceModule*> by_path_;
  std::map<std::string, ClassInfo> classes_;
  std::map<std::string, Resolved> resolved_;
  std::set<std::string> visiting_;
  ReleaseApiSet out_;
};

}  // namespace

ReleaseApiSet enhance_tree(const DirectoryTree& tree, const std::vector<ImportEdge>& closure,
                           const std::vector<SourceModule>& modules) {
  return TreeEnhancer(tree, closure, modules).run();
}

ApiDiff diff_releases(const ReleaseApiSet& a, const ReleaseApiSet& b) {
  if (normalize_library_name(a.library) != normalize_library_name(b.library)) {
    throw LibraryMismatch("cannot diff " + a.library + " against " + b.library);
  }
  ApiDiff d;
  std::set<std::string> na = a.all_names();
  std::set<std::string> nb = b.all_names();
  std::set_difference(nb.begin(), nb.end(), na.begin(), na.end(), std::inserter(d.added, d.added.end()));
  std::set_difference(na.begin(), na.end(), nb.begin(), nb.end(), std::inserter(d.removed, d.removed.end()));
  for (const auto& name : na) {
    if (!nb.count(name)) continue;
    const ApiRecord* ra = a.find(name);
    const ApiRecord* rb = b.find(name);
    if (ra->signature.positional != rb->signature.positional ||
        ra->signature.keyword != rb->signature.keyword ||
        ra->signature.var_positional != rb->signature.var_positional ||
        ra->signature.var_keyword != rb->signature.var_keyword) {
      d.param_changed.push_back({name, ra->signature, rb->signature});
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

ApiBankIndex ApiBankIndex::build(std::vector<std::shared_ptr<const ReleaseApiSet>> releases) {
  std::sort(releases.begin(), releases.end(), [](const auto& x, const auto& y) {
    return release_key_less({x->library, x->version}, {y->library, y->version});
  });
  for (std::size_t i = 1; i < releases.size(); ++i) {
    if (releases[i]->library == releases[i - 1]->library &&
        Version::parse(releases[i]->version) == Version::parse(releases[i - 1]->version)) {
      throw DuplicateRelease("duplicate release " + releases[i]->library + "==" + releases[i]->version);
    }
  }
  ApiBankIndex index;
  for (std::size_t i = 0; i < releases.size(); ++i) {
    const ReleaseApiSet& rel = *releases[i];
    index.api_count_ += rel.apis.size();
    index.versions_[rel.library].push_back(rel.version);
    for (const auto& top : rel.top_level) index.top_level_[top].insert(rel.library);
    for (const auto& [fqn, rec] : rel.apis) index.entries_[fqn].push_back({i, &rec});
    for (const auto& [alias, target] : rel.alias_map) {
      if (const ApiRecord* rec = rel.find(target)) index.entries_[alias].push_back({i, rec});
    }
  }
  index.releases_ = std::move(releases);
  return index;
}

const ReleaseApiSet* ApiBankIndex::release(std::string_view library, std::string_view version) const {
  std::string lib = normalize_library_name(library);
  Version v = Version::parse(version);
  for (const auto& r : releases_) {
    if (r->library == lib && Version::parse(r->version) == v) return r.get();
  }
  return nullptr;
}

std::span<const IndexEntry> ApiBankIndex::entries(std::string_view fqn) const {
  auto it = entries_.find(fqn);
  if (it == entries_.end()) return {};
  return it->second;
}

std::vector<ReleaseKey> ApiBankIndex::query(std::string_view fqn, const CallKeywords* call) const {
  std::vector<ReleaseKey> out;
  for (const auto& e : entries(fqn)) {
    if (call) {
      bool ok = std::all_of(call->keywords.begin(), call->keywords.end(),
                            [&](const std::string& k) { return e.record->signature.accepts_keyword(k); });
      if (!ok) continue;
    }
    const auto& rel = *releases_[e.release];
    out.push_back({rel.library, rel.version});
  }
  return out;
}

std::vector<std::string> ApiBankIndex::versions(std::string_view library) const {
  auto it = versions_.find(normalize_library_name(library));
  if (it == versions_.end()) return {};
  return it->second;
}

std::vector<std::string> ApiBankIndex::libraries() const {
  std::vector<std::string> out;
  for (const auto& [lib, _] : versions_) out.push_back(lib);
  return out;
}

const std::set<std::string>* ApiBankIndex::libraries_for_top_level(std::string_view module) const {
  auto it = top_level_.find(std::string(module));
  return it == top_level_.end() ? nullptr : &it->second;
}

std::string ApiBankIndex::identity() const {
  std::string text;
  for (const auto& r : releases_) text += r->library + "==" + r->version + "\n";
  return sha256_hex(text).substr(0, 16);
}

std::vector<ReleaseKey> query(const ApiBankIndex& index, std::string_view fqn, const CallKeywords* call) {
  return index.query(fqn, call);
}

}  // namespace envsniff
