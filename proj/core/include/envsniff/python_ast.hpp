#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

// A reduced syntax tree for the analyzed scripting language. It keeps the
// shapes that name resolution needs (names, attribute chains, calls,
// bindings, scopes) and folds every other expression form into `other`
// nodes that only carry their children.
namespace envsniff::py {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

enum class ExprKind {
  name,
  attribute,
  call,
  constant,  // numbers, strings, None/True/False, ellipsis
  subscript,
  starred,
  tuple,
  list,
  lambda,
  comprehension,  // generator, list/set/dict comprehension
  named,          // walrus target := value
  other,
};

struct Argument {
  std::optional<std::string> keyword;
  ExprPtr value;
  bool star = false;         // *args
  bool double_star = false;  // **kwargs
};

enum class ParamKind { positional_only, positional, keyword_only, var_positional, var_keyword };

struct Param {
  std::string name;
  ParamKind kind = ParamKind::positional;
  bool has_default = false;
  ExprPtr default_value;
  ExprPtr annotation;
};

struct ComprehensionFor {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> conditions;
};

struct Expr {
  ExprKind kind = ExprKind::other;
  int line = 0;
  std::string id;  // name id, attribute name, or constant spelling
  std::string text;  // string constants: raw source of the literal(s)
  ExprPtr value;   // attribute base, call callee, subscript base, starred operand, named value
  std::vector<Argument> args;                // call arguments
  std::vector<ExprPtr> children;             // elements / operands / lambda body / comp elements
  std::vector<Param> params;                 // lambda
  std::vector<ComprehensionFor> generators;  // comprehension
};

enum class StmtKind {
  expr,
  assign,
  aug_assign,
  ann_assign,
  import,
  import_from,
  function_def,
  class_def,
  if_,
  for_,
  while_,
  try_,
  with,
  match,
  return_,
  del,
  global,
  nonlocal,
  pass,
  other,  // raise, assert, print/exec statements, break/continue, yield
};

struct ImportAlias {
  std::string name;  // dotted for `import`, single identifier for `from`
  std::optional<std::string> asname;
};

struct ExceptHandler {
  ExprPtr type;
  std::optional<std::string> name;
  Block body;
  int line = 0;
};

struct WithItem {
  ExprPtr context;
  ExprPtr target;
};

struct MatchCase {
  std::vector<std::string> captures;
  ExprPtr guard;
  Block body;
};

struct Stmt {
  StmtKind kind = StmtKind::other;
  int line = 0;

  // import / import_from
  std::vector<ImportAlias> names;
  std::string module;  // from-import source, without the leading dots
  int level = 0;       // relative-import dot count
  bool star = false;

  // function_def / class_def
  std::string name;
  std::vector<Param> params;
  std::vector<ExprPtr> decorators;
  std::vector<Argument> bases;  // class bases and keywords
  ExprPtr returns;
  bool is_async = false;

  // assignment: targets (one per `=`), value; for_: target, iter in value
  std::vector<ExprPtr> targets;
  ExprPtr value;
  ExprPtr annotation;

  // expressions without binding role: tests, raise operands, del targets,
  // print/exec operands, assert parts, return values
  std::vector<ExprPtr> exprs;
  std::vector<std::string> identifiers;  // global / nonlocal

  Block body;
  Block orelse;
  Block finalbody;
  std::vector<ExceptHandler> handlers;
  std::vector<WithItem> items;
  std::vector<MatchCase> cases;
};

struct Module {
  Block body;
  int skipped_constructs = 0;
};

/// Dotted text of a pure name/attribute chain (`a.b.c`), empty otherwise.
std::string dotted_name(const Expr& e);

}  // namespace envsniff::py
