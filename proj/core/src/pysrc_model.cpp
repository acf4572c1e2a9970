#include "envsniff/pysrc_model.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "envsniff/errors.hpp"
#include "envsniff/python_parser.hpp"

namespace envsniff {

std::string_view to_string(DefKind kind) {
  switch (kind) {
    case DefKind::function:
      return "function";
    case DefKind::class_:
      return "class";
    case DefKind::method:
      return "method";
  }
  return "function";
}

std::optional<DefKind> def_kind_from_string(std::string_view text) {
  if (text == "function") return DefKind::function;
  if (text == "class") return DefKind::class_;
  if (text == "method") return DefKind::method;
  return std::nullopt;
}

bool Signature::accepts_keyword(std::string_view name) const {
  if (var_keyword) return true;
  if (std::find(positional.begin(), positional.end(), name) != positional.end()) return true;
  return std::any_of(keyword.begin(), keyword.end(), [&](const KeywordParam& k) { return k.name == name; });
}

std::string to_string(const Signature& sig) {
  std::string out = "(";
  bool first = true;
  auto sep = [&] {
    if (!first) out += ", ";
    first = false;
  };
  for (const auto& p : sig.positional) {
    sep();
    out += p;
  }
  if (sig.var_positional) {
    sep();
    out += "*args";
  }
  for (const auto& k : sig.keyword) {
    sep();
    out += k.name;
    if (k.has_default) out += "=…";
  }
  if (sig.var_keyword) {
    sep();
    out += "**kwargs";
  }
  return out + ")";
}

std::string to_string(const ImportEdge& e) {
  std::string out = e.source_module + " --" + e.name + "--> " + e.target_module;
  if (e.bound_name != e.name) out += " as " + e.bound_name;
  return out;
}

std::string SourceModule::qualified_name(const Definition& d) const {
  if (d.owner_class) return module_path + "." + *d.owner_class + "." + d.name;
  return module_path + "." + d.name;
}

std::vector<std::string> SourceModule::public_names() const {
  if (dunder_all) {
    std::set<std::string> listed(dunder_all->begin(), dunder_all->end());
    return {listed.begin(), listed.end()};
  }
  std::set<std::string> names;
  for (const auto& d : definitions) {
    if (d.kind != DefKind::method && !d.name.starts_with("_")) names.insert(d.name);
  }
  for (const auto& imp : import_statements) {
    if (imp.form != ImportForm::from_import) continue;
    for (const auto& n : imp.imported_names) {
      const std::string& bound = n.alias ? *n.alias : n.name;
      if (!bound.starts_with("_")) names.insert(bound);
    }
  }
  return {names.begin(), names.end()};
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto c0 = static_cast<unsigned char>(s[0]);
  if (!(std::isalpha(c0) || c0 == '_' || c0 >= 0x80)) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c >= 0x80;
  });
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Signature signature_of(const std::vector<py::Param>& params) {
  Signature sig;
  for (const auto& p : params) {
    switch (p.kind) {
      case py::ParamKind::positional_only:
      case py::ParamKind::positional:
        if (p.has_default) {
          sig.keyword.insert({p.name, true});
        } else {
          sig.positional.push_back(p.name);
        }
        break;
      case py::ParamKind::keyword_only:
        sig.keyword.insert({p.name, p.has_default});
        break;
      case py::ParamKind::var_positional:
        sig.var_positional = true;
        break;
      case py::ParamKind::var_keyword:
        sig.var_keyword = true;
        break;
    }
  }
  return sig;
}

std::string decorator_name(const py::Expr& e) {
  if (e.kind == py::ExprKind::call && e.value) return py::dotted_name(*e.value);
  return py::dotted_name(e);
}

class ModuleExtractor {
 public:
  ModuleExtractor(SourceModule& out) : out_(out) {}

  void walk_module_block(const py::Block& block) {
    for (const auto& s : block) walk_module_stmt(*s);
  }

 private:
  void walk_module_stmt(const py::Stmt& s) {
    switch (s.kind) {
      case py::StmtKind::function_def:
        add_definition(function_definition(s, std::nullopt));
        break;
      case py::StmtKind::class_def:
        add_class(s);
        break;
      case py::StmtKind::import:
      case py::StmtKind::import_from:
        add_import(s);
        break;
      case py::StmtKind::if_:
      case py::StmtKind::for_:
      case py::StmtKind::while_:
      case py::StmtKind::with:
      case py::StmtKind::try_:
        // conditional definitions and imports are recorded unconditionally
        walk_module_block(s.body);
        walk_module_block(s.orelse);
        for (const auto& h : s.handlers) walk_module_block(h.body);
        walk_module_block(s.finalbody);
        break;
      case py::StmtKind::match:
        for (const auto& c : s.cases) walk_module_block(c.body);
        break;
      case py::StmtKind::assign:
      case py::StmtKind::aug_assign:
      case py::StmtKind::ann_assign:
        record_dunder_all(s);
        break;
      default:
        break;
    }
  }

  // `__all__ = [...]`, `__all__ += [...]`; anything non-literal drops it
  void record_dunder_all(const py::Stmt& s) {
    bool targets_all = std::any_of(s.targets.begin(), s.targets.end(), [](const py::ExprPtr& t) {
      return t && t->kind == py::ExprKind::name && t->id == "__all__";
    });
    if (!targets_all) return;
    std::optional<std::vector<std::string>> listed;
    if (s.value && (s.value->kind == py::ExprKind::list || s.value->kind == py::ExprKind::tuple)) {
      listed.emplace();
      for (const auto& c : s.value->children) {
        auto v = c && c->kind == py::ExprKind::constant && c->id == "str" ? string_value(c->text) : std::nullopt;
        if (!v) {
          listed.reset();
          break;
        }
        listed->push_back(*v);
      }
    }
    if (s.kind == py::StmtKind::aug_assign && listed && out_.dunder_all) {
      out_.dunder_all->insert(out_.dunder_all->end(), listed->begin(), listed->end());
    } else {
      out_.dunder_all = listed;
    }
  }

  static std::optional<std::string> string_value(const std::string& raw) {
    std::size_t i = 0;
    while (i < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i]))) ++i;
    std::string_view body(raw);
    body.remove_prefix(i);
    std::size_t q = body.size() >= 6 && (body.starts_with("\"\"\"") || body.starts_with("'''")) ? 3 : 1;
    if (body.size() < 2 * q) return std::nullopt;
    body = body.substr(q, body.size() - 2 * q);
    if (!is_identifier(body)) return std::nullopt;
    return std::string(body);
  }

  Definition function_definition(const py::Stmt& s, const std::optional<std::string>& owner) {
    Definition d;
    d.name = s.name;
    d.kind = owner ? DefKind::method : DefKind::function;
    d.owner_class = owner;
    d.signature = signature_of(s.params);
    d.is_underscore_named = s.name.starts_with("_");
    d.line = s.line;
    for (const auto& dec : s.decorators) {
      std::string n = decorator_name(*dec);
      if (n == "staticmethod") d.is_staticmethod = true;
      if (n == "classmethod") d.is_classmethod = true;
    }
    return d;
  }

  void add_definition(Definition d) {
    auto key = std::make_pair(d.owner_class.value_or(""), d.name);
    if (!seen_.insert(key).second) return;
    out_.definitions.push_back(std::move(d));
  }

  void add_class(const py::Stmt& s) {
    Definition c;
    c.name = s.name;
    c.kind = DefKind::class_;
    c.is_underscore_named = s.name.starts_with("_");
    c.line = s.line;
    for (const auto& base : s.bases) {
      if (base.keyword || base.star || base.double_star || !base.value) continue;
      const py::Expr* e = base.value.get();
      if (e->kind == py::ExprKind::subscript && e->value) e = e->value.get();
      std::string dotted = py::dotted_name(*e);
      if (!dotted.empty()) c.bases.push_back(dotted);
    }
    if (!seen_.insert({"", c.name}).second) return;
    out_.definitions.push_back(std::move(c));
    walk_class_block(s.body, s.name);
  }

  void walk_class_block(const py::Block& block, const std::string& owner) {
    for (const auto& st : block) {
      switch (st->kind) {
        case py::StmtKind::function_def:
          add_definition(function_definition(*st, owner));
          break;
        case py::StmtKind::class_def:
          // nested classes are not addressable through the qualified-name scheme
          ++out_.skipped_constructs;
          break;
        case py::StmtKind::if_:
        case py::StmtKind::try_:
        case py::StmtKind::with:
          walk_class_block(st->body, owner);
          walk_class_block(st->orelse, owner);
          for (const auto& h : st->handlers) walk_class_block(h.body, owner);
          walk_class_block(st->finalbody, owner);
          break;
        default:
          break;
      }
    }
  }

  std::optional<std::string> absolutize(const std::string& module, int level) {
    if (level == 0) return module;
    std::vector<std::string> base = split(out_.module_path, '.');
    if (!out_.is_package) base.pop_back();
    if (level - 1 > static_cast<int>(base.size()) - 1) return std::nullopt;
    base.resize(base.size() - static_cast<std::size_t>(level - 1));
    std::string out;
    for (const auto& part : base) {
      if (!out.empty()) out += '.';
      out += part;
    }
    if (!module.empty()) out += "." + module;
    return out;
  }

  void add_import(const py::Stmt& s) {
    if (s.kind == py::StmtKind::import) {
      for (const auto& a : s.names) {
        RawImport imp;
        imp.form = ImportForm::import;
        imp.source_module = a.name;
        imp.imported_names.push_back({a.name, a.asname});
        imp.line = s.line;
        out_.import_statements.push_back(std::move(imp));
      }
      return;
    }
    auto source = absolutize(s.module, s.level);
    if (!source) {
      // relative import reaching above the top-level package
      ++out_.skipped_constructs;
      return;
    }
    RawImport imp;
    imp.form = s.star ? ImportForm::star_import : ImportForm::from_import;
    imp.source_module = *source;
    imp.line = s.line;
    for (const auto& a : s.names) imp.imported_names.push_back({a.name, a.asname});
    out_.import_statements.push_back(std::move(imp));
  }

  SourceModule& out_;
  std::set<std::pair<std::string, std::string>> seen_;
};

}  // namespace

SourceModule parse_source(std::string_view text, std::string_view module_path, bool is_package) {
  SourceModule out;
  out.module_path = std::string(module_path);
  out.is_package = is_package;
  out.file_path = file_path_for_module(module_path, is_package);

  py::Module mod;
  try {
    mod = py::parse_module_any(text);
  } catch (const SyntaxError& e) {
    throw SyntaxError(std::string(module_path), e.line(), e.detail());
  }
  out.skipped_constructs = mod.skipped_constructs;
  ModuleExtractor(out).walk_module_block(mod.body);
  return out;
}

EdgeExtraction extract_import_edges(const SourceModule& mod, const ModuleLookup* lookup) {
  EdgeExtraction result;
  const std::string& target = mod.module_path;
  for (const auto& imp : mod.import_statements) {
    if (imp.form == ImportForm::import) continue;
    if (imp.form == ImportForm::star_import) {
      if (!lookup || !lookup->is_module || !lookup->is_module(imp.source_module)) {
        result.notes.push_back({EdgeNote::Kind::star_import_unresolved, target, imp.source_module});
        continue;
      }
      if (imp.source_module == target) continue;
      for (const auto& name : lookup->public_names(imp.source_module)) {
        result.edges.push_back({imp.source_module, name, target, name, EdgeKind::name});
      }
      continue;
    }
    for (const auto& n : imp.imported_names) {
      ImportEdge e;
      e.name = n.name;
      e.bound_name = n.alias ? *n.alias : n.name;
      e.target_module = target;
      std::string as_submodule = imp.source_module + "." + n.name;
      bool submodule = imp.source_module == target ||
                       (lookup && lookup->is_module && lookup->is_module(as_submodule));
      if (submodule) {
        e.source_module = as_submodule;
        e.kind = EdgeKind::submodule;
      } else {
        e.source_module = imp.source_module;
      }
      if (e.source_module == e.target_module) continue;
      result.edges.push_back(std::move(e));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string module_path_for_file(std::string_view file_path) {
  if (!file_path.ends_with(".py")) return {};
  std::string_view stem = file_path.substr(0, file_path.size() - 3);
  if (stem == "__init__") return {};
  if (stem.ends_with("/__init__")) stem = stem.substr(0, stem.size() - 9);
  std::string out(stem);
  std::replace(out.begin(), out.end(), '/', '.');
  return out;
}

std::string file_path_for_module(std::string_view module_path, bool is_package) {
  std::string out(module_path);
  std::replace(out.begin(), out.end(), '.', '/');
  return out + (is_package ? "/__init__.py" : ".py");
}

const TreeNode* DirectoryTree::find(std::string_view dotted) const {
  for (const auto& n : nodes) {
    if (!n.dotted.empty() && n.dotted == dotted) return &n;
  }
  return nullptr;
}

std::vector<const TreeNode*> DirectoryTree::modules() const {
  std::vector<const TreeNode*> out;
  for (const auto& n : nodes) {
    if (n.dotted.empty() || n.file_path.empty()) continue;
    out.push_back(&n);
  }
  return out;
}

std::vector<std::string> DirectoryTree::orphan_files() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) {
    if (n.kind == TreeNode::Kind::orphan_root) {
      for (int c : n.children) out.push_back(nodes[static_cast<std::size_t>(c)].file_path);
    }
  }
  return out;
}

DirectoryTree build_directory_tree(const std::vector<std::string>& files) {
  static const std::unordered_set<std::string> build_scripts = {"setup.py", "conftest.py", "noxfile.py",
                                                                "fabfile.py"};
  std::vector<std::string> sources;
  for (const auto& f : files) {
    if (f.ends_with(".py")) sources.push_back(f);
  }
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

  std::unordered_set<std::string> init_dirs;
  for (const auto& f : sources) {
    if (f == "__init__.py") continue;
    if (f.ends_with("/__init__.py")) init_dirs.insert(f.substr(0, f.size() - 12));
  }
  auto has_init_below = [&](const std::string& dir) {
    std::string prefix = dir + "/";
    return std::any_of(init_dirs.begin(), init_dirs.end(),
                       [&](const std::string& d) { return d.starts_with(prefix); });
  };

  DirectoryTree tree;
  tree.nodes.push_back(TreeNode{"", "", "", TreeNode::Kind::package, false, -1, {}});
  std::unordered_map<std::string, int> by_dotted;
  int orphan = -1;

  auto add_child = [&](int parent, TreeNode node) {
    node.parent = parent;
    tree.nodes.push_back(std::move(node));
    int idx = static_cast<int>(tree.nodes.size()) - 1;
    tree.nodes[static_cast<std::size_t>(parent)].children.push_back(idx);
    return idx;
  };
  auto add_orphan = [&](const std::string& f) {
    if (orphan < 0) orphan = add_child(0, TreeNode{"__orphan__", "", "", TreeNode::Kind::orphan_root, false, -1, {}});
    std::string name = f.substr(f.rfind('/') == std::string::npos ? 0 : f.rfind('/') + 1);
    add_child(orphan, TreeNode{name.substr(0, name.size() - 3), "", f, TreeNode::Kind::module, false, -1, {}});
  };

  for (const auto& f : sources) {
    std::vector<std::string> parts = split(f, '/');
    std::string file = parts.back();
    parts.pop_back();
    std::string stem = file.substr(0, file.size() - 3);

    if (parts.empty()) {
      if (build_scripts.count(file) || !is_identifier(stem) || stem == "__init__") {
        add_orphan(f);
        continue;
      }
    }

    // every directory on the path must be importable
    bool importable = true;
    std::vector<bool> implicit(parts.size(), false);
    std::string dir;
    bool parent_like = false;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      dir = dir.empty() ? parts[i] : dir + "/" + parts[i];
      bool has_init = init_dirs.count(dir) > 0;
      bool like = has_init || has_init_below(dir) || (i > 0 && parent_like);
      if (!is_identifier(parts[i]) || !like) {
        importable = false;
        break;
      }
      implicit[i] = !has_init;
      parent_like = like;
    }
    if (importable && stem != "__init__" && !is_identifier(stem)) importable = false;
    if (!importable) {
      add_orphan(f);
      continue;
    }

    int parent = 0;
    std::string dotted;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      dotted = dotted.empty() ? parts[i] : dotted + "." + parts[i];
      auto it = by_dotted.find(dotted);
      if (it == by_dotted.end()) {
        TreeNode pkg{parts[i], dotted, "", TreeNode::Kind::package, implicit[i], -1, {}};
        int idx = add_child(parent, std::move(pkg));
        by_dotted.emplace(dotted, idx);
        parent = idx;
      } else {
        parent = it->second;
      }
    }
    if (stem == "__init__") {
      tree.nodes[static_cast<std::size_t>(parent)].file_path = f;
      continue;
    }
    std::string mod_dotted = dotted.empty() ? stem : dotted + "." + stem;
    if (by_dotted.count(mod_dotted)) continue;  // a package of the same name wins
    int idx = add_child(parent, TreeNode{stem, mod_dotted, f, TreeNode::Kind::module, false, -1, {}});
    by_dotted.emplace(mod_dotted, idx);
  }

  for (int c : tree.nodes[0].children) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(c)];
    if (n.kind != TreeNode::Kind::orphan_root) tree.roots.push_back(n.name);
  }
  if (tree.roots.empty()) throw EmptyRelease("release contains no importable source module");
  return tree;
}

}  // namespace envsniff
