#include "envsniff/usage_analysis.hpp"

#include <algorithm>
#include <filesystem>
#include <tuple>

#include "envsniff/errors.hpp"
#include "envsniff/python_parser.hpp"
#include "envsniff/stdlib_tables.hpp"

namespace envsniff {

namespace {

using py::Expr;
using py::ExprKind;
using py::Stmt;
using py::StmtKind;

std::string root_of(std::string_view dotted) { return std::string(dotted.substr(0, dotted.find('.'))); }

struct Binding {
  enum class Kind : std::uint8_t { module, object, instance, local } kind = Kind::local;
  std::string fqn;  // module/object target, or the constructor for instances
  bool renamed = false;
  NameClass cls = NameClass::local;
};

struct Resolved {
  std::string fqn;
  UsageOrigin origin = UsageOrigin::direct_call;
  NameClass cls = NameClass::local;
  bool instance = false;  // fqn names the callable that produced the value
  std::string receiver;
};

class Analyzer {
 public:
  explicit Analyzer(const AnalysisOptions& options) : options_(options) { scopes_.emplace_back(); }

  void run(const std::vector<CodeCell>& cells) {
    for (const auto& cell : cells) {
      cell_ = cell.position;
      SanitizedCell s = sanitize_cell(cell.source);
      for (const auto& n : s.notes) {
        out_.cell_notes.push_back({cell.position, s.excluded && n == "cell_excluded" ? n + ": " + s.reason : n});
      }
      if (s.text.empty()) continue;
      py::Module mod;
      try {
        mod = py::parse_module_any(s.text);
      } catch (const SyntaxError& e) {
        out_.cell_notes.push_back({cell.position, "cell_excluded: " + std::string(e.what())});
        continue;
      }
      walk(mod.body);
    }
    for (const auto& name : deferred_unresolved_) {
      if (!ever_bound_.count(name)) out_.unresolved.insert(name);
    }
  }

  UsageSet take() { return std::move(out_); }

 private:
  // ---- scopes ---------------------------------------------------------------

  const Binding* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }

  void bind(const std::string& name, Binding b) {
    if (scopes_.size() == 1) {
      ever_bound_.insert(name);
      if (b.kind == Binding::Kind::local) {
        out_.local_names.insert(name);
      }
    }
    scopes_.back()[name] = std::move(b);
  }

  void bind_local(const std::string& name) { bind(name, Binding{}); }

  NameClass module_class(const std::string& dotted) const {
    std::string root = root_of(dotted);
    if (options_.sibling_modules.count(root)) return NameClass::local;
    if (is_stdlib_module(root, options_.interpreter_lines)) return NameClass::stdlib;
    return NameClass::library;
  }

  // ---- resolution -----------------------------------------------------------

  std::optional<Resolved> resolve(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::name: {
        const Binding* b = lookup(e.id);
        if (!b || b->kind == Binding::Kind::local) return std::nullopt;
        Resolved r;
        r.fqn = b->fqn;
        r.cls = b->cls;
        r.instance = b->kind == Binding::Kind::instance;
        r.origin = b->renamed ? UsageOrigin::alias_call : UsageOrigin::direct_call;
        return r;
      }
      case ExprKind::attribute: {
        auto base = resolve(*e.value);
        if (!base) return std::nullopt;
        Resolved r = *base;
        if (base->instance) {
          r.receiver = base->fqn;
          r.origin = UsageOrigin::instance_method;
          r.instance = false;
        }
        r.fqn = base->fqn + "." + e.id;
        return r;
      }
      case ExprKind::call: {
        auto callee = resolve(*e.value);
        if (!callee || callee->instance || callee->origin == UsageOrigin::instance_method) return std::nullopt;
        Resolved r = *callee;
        r.instance = true;
        return r;
      }
      default:
        return std::nullopt;
    }
  }

  // ---- recording ------------------------------------------------------------

  void record(const Resolved& r, std::optional<CallShape> call, int line, UsageOrigin origin) {
    if (r.cls != NameClass::library || r.fqn.find('.') == std::string::npos) return;
    UsageRecord u;
    u.fqn = r.fqn;
    u.call = std::move(call);
    u.cell_position = cell_;
    u.origin = origin;
    u.line = line;
    u.receiver_origin = r.receiver;
    add(std::move(u));
  }

  void add(UsageRecord u) {
    auto key = std::make_tuple(u.fqn, u.call, u.cell_position, u.origin, u.low_confidence, u.receiver_origin);
    if (!seen_.insert(key).second) return;
    out_.usages.push_back(std::move(u));
  }

  static CallShape shape_of(const Expr& call) {
    CallShape s;
    for (const auto& a : call.args) {
      if (a.star) {
        s.star_args = true;
      } else if (a.double_star) {
        s.star_kwargs = true;
      } else if (a.keyword) {
        s.keywords.push_back(*a.keyword);
      } else {
        ++s.positional;
      }
    }
    std::sort(s.keywords.begin(), s.keywords.end());
    s.keywords.erase(std::unique(s.keywords.begin(), s.keywords.end()), s.keywords.end());
    return s;
  }

  void note_unbound(const std::string& name) {
    if (is_builtin_name(name)) return;
    if (scopes_.size() > 1) {
      deferred_unresolved_.insert(name);
    } else {
      out_.unresolved.insert(name);
    }
  }

  // ---- expressions ----------------------------------------------------------

  void visit(const Expr* e) {
    if (!e) return;
    switch (e->kind) {
      case ExprKind::name: {
        const Binding* b = lookup(e->id);
        if (!b) {
          note_unbound(e->id);
          return;
        }
        if (b->kind == Binding::Kind::object) {
          auto r = resolve(*e);
          if (r) record(*r, std::nullopt, e->line, UsageOrigin::attribute_access);
        }
        return;
      }
      case ExprKind::attribute: {
        auto r = resolve(*e);
        if (r && !r->instance && r->origin != UsageOrigin::instance_method) {
          record(*r, std::nullopt, e->line, UsageOrigin::attribute_access);
        }
        visit_chain_base(e->value.get());
        return;
      }
      case ExprKind::call:
        visit_call(*e);
        return;
      case ExprKind::lambda: {
        for (const auto& p : e->params) visit(p.default_value.get());
        scopes_.emplace_back();
        for (const auto& p : e->params) bind_local(p.name);
        for (const auto& c : e->children) visit(c.get());
        scopes_.pop_back();
        return;
      }
      case ExprKind::comprehension: {
        scopes_.emplace_back();
        for (const auto& g : e->generators) {
          visit(g.iter.get());
          bind_target(g.target.get(), nullptr);
          for (const auto& c : g.conditions) visit(c.get());
        }
        for (const auto& c : e->children) visit(c.get());
        scopes_.pop_back();
        return;
      }
      case ExprKind::named:
        visit(e->value.get());
        bind_name(e->id, e->value.get());
        return;
      default:
        visit(e->value.get());
        for (const auto& a : e->args) visit(a.value.get());
        for (const auto& c : e->children) visit(c.get());
        return;
    }
  }

  // Walks the base of a name/attribute chain whose full form was already
  // handled: only nested calls, subscripts and unbound roots matter.
  void visit_chain_base(const Expr* e) {
    if (!e) return;
    if (e->kind == ExprKind::name) {
      if (!lookup(e->id)) note_unbound(e->id);
    } else if (e->kind == ExprKind::attribute) {
      visit_chain_base(e->value.get());
    } else {
      visit(e);
    }
  }

  void visit_call(const Expr& call) {
    const Expr& callee = *call.value;
    auto r = resolve(callee);
    if (r && !r->instance) {
      UsageOrigin origin = r->origin;
      record(*r, shape_of(call), call.line, origin);
    } else if (!r && callee.kind == ExprKind::name && !lookup(callee.id) && !is_builtin_name(callee.id) &&
               !star_modules_.empty()) {
      for (const auto& mod : star_modules_) {
        UsageRecord u;
        u.fqn = mod + "." + callee.id;
        u.call = shape_of(call);
        u.cell_position = cell_;
        u.line = call.line;
        u.low_confidence = true;
        add(std::move(u));
      }
      for (const auto& a : call.args) visit(a.value.get());
      return;
    }
    visit_chain_base(&callee);
    for (const auto& a : call.args) visit(a.value.get());
  }

  // ---- binding --------------------------------------------------------------

  void bind_name(const std::string& name, const Expr* value) {
    Binding b;
    if (value) {
      auto r = resolve(*value);
      if (r && r->origin != UsageOrigin::instance_method) {
        b.fqn = r->fqn;
        b.cls = r->cls;
        if (r->instance) {
          b.kind = Binding::Kind::instance;
        } else {
          b.kind = Binding::Kind::object;
          b.renamed = true;
        }
      }
    }
    bind(name, std::move(b));
  }

  void bind_target(const Expr* t, const Expr* value) {
    if (!t) return;
    switch (t->kind) {
      case ExprKind::name:
        bind_name(t->id, value);
        return;
      case ExprKind::tuple:
      case ExprKind::list:
        for (const auto& c : t->children) bind_target(c.get(), nullptr);
        return;
      case ExprKind::starred:
        bind_target(t->value.get(), nullptr);
        return;
      case ExprKind::attribute:
        visit_chain_base(t->value.get());
        return;
      case ExprKind::subscript:
        visit(t->value.get());
        for (const auto& c : t->children) visit(c.get());
        return;
      default:
        visit(t);
        return;
    }
  }

  void walk(const py::Block& block) {
    for (const auto& s : block) statement(*s);
  }

  void function_scope(const Stmt& s) {
    scopes_.emplace_back();
    for (const auto& p : s.params) bind_local(p.name);
    walk(s.body);
    scopes_.pop_back();
  }

  void statement(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::expr:
        visit(s.value.get());
        break;
      case StmtKind::assign:
        visit(s.value.get());
        for (const auto& t : s.targets) bind_target(t.get(), s.value.get());
        break;
      case StmtKind::aug_assign:
        visit(s.value.get());
        for (const auto& t : s.targets) {
          if (t->kind == ExprKind::name) {
            if (!lookup(t->id)) note_unbound(t->id);
            bind_local(t->id);
          } else {
            bind_target(t.get(), nullptr);
          }
        }
        break;
      case StmtKind::ann_assign:
        visit(s.annotation.get());
        visit(s.value.get());
        if (s.value) {
          for (const auto& t : s.targets) bind_target(t.get(), s.value.get());
        }
        break;
      case StmtKind::import:
        for (const auto& a : s.names) {
          NameClass cls = module_class(a.name);
          if (cls == NameClass::library) out_.imported_top_levels.insert(root_of(a.name));
          Binding b;
          b.kind = Binding::Kind::module;
          b.cls = cls;
          if (a.asname) {
            b.fqn = a.name;
            b.renamed = *a.asname != a.name.substr(a.name.rfind('.') + 1);
            bind(*a.asname, std::move(b));
          } else {
            b.fqn = root_of(a.name);
            bind(b.fqn, b);
          }
        }
        break;
      case StmtKind::import_from: {
        NameClass cls = s.level > 0 ? NameClass::local : module_class(s.module);
        if (cls == NameClass::library) out_.imported_top_levels.insert(root_of(s.module));
        if (s.star) {
          if (cls == NameClass::library &&
              std::find(star_modules_.begin(), star_modules_.end(), s.module) == star_modules_.end()) {
            star_modules_.push_back(s.module);
          }
          break;
        }
        for (const auto& a : s.names) {
          Binding b;
          b.kind = Binding::Kind::object;
          b.cls = cls;
          b.fqn = s.module.empty() ? a.name : s.module + "." + a.name;
          b.renamed = a.asname && *a.asname != a.name;
          bind(a.asname ? *a.asname : a.name, std::move(b));
        }
        break;
      }
      case StmtKind::function_def:
        for (const auto& d : s.decorators) visit(d.get());
        for (const auto& p : s.params) {
          visit(p.default_value.get());
          visit(p.annotation.get());
        }
        visit(s.returns.get());
        bind_local(s.name);
        function_scope(s);
        break;
      case StmtKind::class_def:
        for (const auto& d : s.decorators) visit(d.get());
        for (const auto& b : s.bases) visit(b.value.get());
        bind_local(s.name);
        scopes_.emplace_back();
        walk(s.body);
        scopes_.pop_back();
        break;
      case StmtKind::for_:
        visit(s.value.get());
        for (const auto& t : s.targets) bind_target(t.get(), nullptr);
        walk(s.body);
        walk(s.orelse);
        break;
      case StmtKind::if_:
      case StmtKind::while_:
        for (const auto& e : s.exprs) visit(e.get());
        walk(s.body);
        walk(s.orelse);
        break;
      case StmtKind::try_:
        walk(s.body);
        for (const auto& h : s.handlers) {
          visit(h.type.get());
          if (h.name) bind_local(*h.name);
          walk(h.body);
        }
        walk(s.orelse);
        walk(s.finalbody);
        break;
      case StmtKind::with:
        for (const auto& item : s.items) {
          visit(item.context.get());
          if (item.target) bind_target(item.target.get(), item.context.get());
        }
        walk(s.body);
        break;
      case StmtKind::match:
        visit(s.value.get());
        for (const auto& c : s.cases) {
          for (const auto& name : c.captures) bind_local(name);
          visit(c.guard.get());
          walk(c.body);
        }
        break;
      case StmtKind::del:
        for (const auto& e : s.exprs) {
          if (e->kind == ExprKind::name) {
            scopes_.back().erase(e->id);
          } else {
            visit(e.get());
          }
        }
        break;
      case StmtKind::global:
      case StmtKind::nonlocal:
      case StmtKind::pass:
        break;
      default:
        visit(s.value.get());
        for (const auto& e : s.exprs) visit(e.get());
        walk(s.body);
        break;
    }
  }

  const AnalysisOptions& options_;
  std::vector<std::map<std::string, Binding>> scopes_;
  std::vector<std::string> star_modules_;
  std::set<std::string> deferred_unresolved_;
  std::set<std::string> ever_bound_;
  std::set<std::tuple<std::string, std::optional<CallShape>, int, UsageOrigin, bool, std::string>> seen_;
  int cell_ = 0;
  UsageSet out_;
};

}  // namespace

std::string_view to_string(NameClass c) {
  switch (c) {
    case NameClass::local:
      return "local";
    case NameClass::stdlib:
      return "stdlib";
    case NameClass::library:
      return "library";
  }
  return "library";
}

std::string_view to_string(UsageOrigin o) {
  switch (o) {
    case UsageOrigin::direct_call:
      return "direct_call";
    case UsageOrigin::alias_call:
      return "alias_call";
    case UsageOrigin::instance_method:
      return "instance_method";
    case UsageOrigin::attribute_access:
      return "attribute_access";
  }
  return "direct_call";
}

NameClass classify_name(std::string_view name, const std::set<std::string>& local_defs,
                        const std::map<std::string, std::string>& imports,
                        const std::vector<std::string>& interpreter_lines) {
  std::string root = root_of(name);
  if (local_defs.count(root)) return NameClass::local;
  auto it = imports.find(root);
  std::string module_root = it == imports.end() ? root : root_of(it->second);
  if (is_stdlib_module(module_root, interpreter_lines)) return NameClass::stdlib;
  return NameClass::library;
}

UsageSet collect_usages(const std::vector<CodeCell>& cells, const AnalysisOptions& options) {
  Analyzer a(options);
  a.run(cells);
  return a.take();
}

std::vector<UsageRecord> trace_instance_calls(const std::vector<CodeCell>& cells, const AnalysisOptions& options) {
  std::vector<UsageRecord> out;
  for (auto& u : collect_usages(cells, options).usages) {
    if (u.origin == UsageOrigin::instance_method) out.push_back(std::move(u));
  }
  return out;
}

std::set<std::string> sibling_modules_of(const std::string& notebook_path) {
  namespace fs = std::filesystem;
  std::set<std::string> out;
  fs::path dir = fs::path(notebook_path).parent_path();
  if (dir.empty()) dir = ".";
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const fs::path& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".py") {
      out.insert(p.stem().string());
    } else if (entry.is_directory()) {
      std::error_code inner;
      for (const auto& child : fs::directory_iterator(p, inner)) {
        if (child.path().extension() == ".py") {
          out.insert(p.filename().string());
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace envsniff
