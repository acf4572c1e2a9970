#include <algorithm>
#include <array>
#include <unordered_set>

#include "envsniff/errors.hpp"
#include "envsniff/python_parser.hpp"

namespace envsniff::py {

std::string dotted_name(const Expr& e) {
  if (e.kind == ExprKind::name) return e.id;
  if (e.kind == ExprKind::attribute && e.value) {
    std::string base = dotted_name(*e.value);
    if (base.empty()) return {};
    return base + "." + e.id;
  }
  return {};
}

namespace {

const std::unordered_set<std::string>& reserved_words(Grammar g) {
  static const std::unordered_set<std::string> modern = {
      "False", "None",   "True",    "and",      "as",     "assert", "async", "await",
      "break", "class",  "continue", "def",     "del",    "elif",   "else",  "except",
      "finally", "for",  "from",    "global",   "if",     "import", "in",    "is",
      "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
      "while", "with",   "yield"};
  static const std::unordered_set<std::string> legacy = {
      "and",  "as",   "assert", "break",  "class", "continue", "def",    "del",
      "elif", "else", "except", "finally", "for",    "from",   "global",
      "if",   "import", "in",   "is",     "lambda", "not",     "or",     "pass",
      "raise", "return", "try",  "while", "with",     "yield"};
  return g == Grammar::modern ? modern : legacy;
}

ExprPtr make_expr(ExprKind kind, int line, std::string id = {}) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->line = line;
  e->id = std::move(id);
  return e;
}

StmtPtr make_stmt(StmtKind kind, int line) {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->line = line;
  return s;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, Grammar grammar)
      : toks_(std::move(tokens)), grammar_(grammar), reserved_(reserved_words(grammar)) {}

  Module parse_file() {
    Module m;
    while (!at_end()) {
      if (peek().kind == TokenKind::newline) {
        advance();
        continue;
      }
      if (peek().kind == TokenKind::indent) fail("unexpected indent");
      parse_statement(m.body);
    }
    m.skipped_constructs = skipped_;
    return m;
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokenKind::end; }
  int line() const { return peek().line; }

  bool is_op(std::string_view op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::op && t.text == op;
  }
  bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::name && t.text == kw;
  }
  bool accept_op(std::string_view op) {
    if (is_op(op)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_kw(std::string_view kw) {
    if (is_kw(kw)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string near = t.kind == TokenKind::newline ? "end of line"
                       : t.kind == TokenKind::end   ? "end of file"
                       : t.kind == TokenKind::indent ? "indent"
                       : t.kind == TokenKind::dedent ? "dedent"
                                                     : "'" + t.text + "'";
    throw SyntaxError("", t.line, "invalid syntax: " + msg + " near " + near);
  }

  bool is_identifier(const Token& t) const {
    return t.kind == TokenKind::name && !reserved_.count(t.text);
  }
  std::string expect_identifier() {
    if (!is_identifier(peek())) fail("expected identifier");
    return advance().text;
  }

  bool modern() const { return grammar_ == Grammar::modern; }

  // ---- statements ------------------------------------------------------------

  void parse_statement(Block& out) {
    const Token& t = peek();
    if (is_op("@")) {
      out.push_back(parse_decorated());
      return;
    }
    if (t.kind == TokenKind::name) {
      const std::string& w = t.text;
      if (w == "def") {
        out.push_back(parse_funcdef({}, false));
        return;
      }
      if (w == "class") {
        out.push_back(parse_classdef({}));
        return;
      }
      if (w == "if") {
        out.push_back(parse_if());
        return;
      }
      if (w == "while") {
        out.push_back(parse_while());
        return;
      }
      if (w == "for") {
        out.push_back(parse_for(false));
        return;
      }
      if (w == "try") {
        out.push_back(parse_try());
        return;
      }
      if (w == "with") {
        out.push_back(parse_with(false));
        return;
      }
      if (w == "async" && modern()) {
        if (is_kw("def", 1)) {
          advance();
          out.push_back(parse_funcdef({}, true));
          return;
        }
        if (is_kw("for", 1)) {
          advance();
          out.push_back(parse_for(true));
          return;
        }
        if (is_kw("with", 1)) {
          advance();
          out.push_back(parse_with(true));
          return;
        }
      }
      if (w == "match" && modern() && looks_like_match()) {
        std::size_t save = pos_;
        try {
          out.push_back(parse_match());
          return;
        } catch (const SyntaxError&) {
          pos_ = save;
        }
      }
    }
    parse_simple_line(out);
  }

  // `match <subject>:` ends its logical line with a colon.
  bool looks_like_match() const {
    const Token& next = peek(1);
    if (next.kind == TokenKind::op &&
        (next.text == "=" || next.text == "." || next.text == ":" || next.text == "," ||
         next.text == ")" || next.text.back() == '=')) {
      return false;
    }
    if (next.kind == TokenKind::newline) return false;
    std::size_t i = pos_;
    while (i < toks_.size() && toks_[i].kind != TokenKind::newline && toks_[i].kind != TokenKind::end) ++i;
    return i > pos_ && toks_[i - 1].kind == TokenKind::op && toks_[i - 1].text == ":";
  }

  void parse_simple_line(Block& out) {
    while (true) {
      out.push_back(parse_small_statement());
      if (accept_op(";")) {
        if (peek().kind == TokenKind::newline) break;
        continue;
      }
      break;
    }
    if (peek().kind == TokenKind::end) return;
    if (peek().kind != TokenKind::newline) fail("expected end of statement");
    advance();
  }

  StmtPtr parse_small_statement() {
    const Token& t = peek();
    int ln = t.line;
    if (t.kind == TokenKind::name) {
      const std::string w = t.text;
      if (w == "pass") {
        advance();
        return make_stmt(StmtKind::pass, ln);
      }
      if (w == "break" || w == "continue") {
        advance();
        return make_stmt(StmtKind::other, ln);
      }
      if (w == "return") {
        advance();
        auto s = make_stmt(StmtKind::return_, ln);
        if (!at_statement_end()) s->exprs.push_back(parse_testlist_star());
        return s;
      }
      if (w == "raise") {
        advance();
        auto s = make_stmt(StmtKind::other, ln);
        if (!at_statement_end()) {
          s->exprs.push_back(parse_test());
          if (accept_kw("from")) {
            s->exprs.push_back(parse_test());
          } else if (!modern() && accept_op(",")) {
            s->exprs.push_back(parse_test());
            if (accept_op(",")) s->exprs.push_back(parse_test());
          }
        }
        return s;
      }
      if (w == "global" || w == "nonlocal") {
        if (w == "global" || modern()) {
          advance();
          auto s = make_stmt(w == "global" ? StmtKind::global : StmtKind::nonlocal, ln);
          do {
            s->identifiers.push_back(expect_identifier());
          } while (accept_op(","));
          return s;
        }
      }
      if (w == "del") {
        advance();
        auto s = make_stmt(StmtKind::del, ln);
        do {
          if (at_statement_end()) break;
          s->exprs.push_back(parse_expr());
        } while (accept_op(","));
        return s;
      }
      if (w == "assert") {
        advance();
        auto s = make_stmt(StmtKind::other, ln);
        s->exprs.push_back(parse_test());
        if (accept_op(",")) s->exprs.push_back(parse_test());
        return s;
      }
      if (w == "import") return parse_import();
      if (w == "from") return parse_from_import();
      if (!modern() && w == "print" && !is_op("=", 1) && !is_op("(", 1) && !is_op(".", 1)) {
        return parse_print();
      }
      if (!modern() && w == "exec" && !is_op("=", 1) && !is_op(".", 1)) {
        return parse_exec();
      }
    }
    return parse_expr_statement();
  }

  bool at_statement_end() const {
    return peek().kind == TokenKind::newline || peek().kind == TokenKind::end || is_op(";");
  }

  StmtPtr parse_print() {
    auto s = make_stmt(StmtKind::other, line());
    advance();
    if (accept_op(">>")) {
      s->exprs.push_back(parse_test());
      if (!accept_op(",")) return s;
    }
    while (!at_statement_end()) {
      s->exprs.push_back(parse_test());
      if (!accept_op(",")) break;
    }
    return s;
  }

  StmtPtr parse_exec() {
    auto s = make_stmt(StmtKind::other, line());
    advance();
    s->exprs.push_back(parse_expr());
    if (accept_kw("in")) {
      s->exprs.push_back(parse_test());
      if (accept_op(",")) s->exprs.push_back(parse_test());
    }
    return s;
  }

  std::string parse_dotted_name() {
    std::string name = expect_identifier();
    while (accept_op(".")) name += "." + expect_identifier();
    return name;
  }

  StmtPtr parse_import() {
    auto s = make_stmt(StmtKind::import, line());
    expect_kw("import");
    do {
      ImportAlias a;
      a.name = parse_dotted_name();
      if (accept_kw("as")) a.asname = expect_identifier();
      s->names.push_back(std::move(a));
    } while (accept_op(","));
    return s;
  }

  StmtPtr parse_from_import() {
    auto s = make_stmt(StmtKind::import_from, line());
    expect_kw("from");
    while (true) {
      if (accept_op(".")) {
        ++s->level;
      } else if (accept_op("...")) {
        s->level += 3;
      } else {
        break;
      }
    }
    if (!is_kw("import")) s->module = parse_dotted_name();
    if (s->level == 0 && s->module.empty()) fail("expected module name");
    expect_kw("import");
    if (accept_op("*")) {
      s->star = true;
      return s;
    }
    bool paren = accept_op("(");
    do {
      if (paren && is_op(")")) break;
      ImportAlias a;
      a.name = expect_identifier();
      if (accept_kw("as")) a.asname = expect_identifier();
      s->names.push_back(std::move(a));
    } while (accept_op(","));
    if (paren) expect_op(")");
    if (s->names.empty()) fail("expected imported name");
    return s;
  }

  static bool is_aug_op(const Token& t) {
    static const std::unordered_set<std::string> ops = {"+=", "-=", "*=",  "/=",  "%=",  "&=", "|=",
                                                        "^=", "@=", "**=", "//=", ">>=", "<<="};
    return t.kind == TokenKind::op && ops.count(t.text);
  }

  StmtPtr parse_expr_statement() {
    int ln = line();
    ExprPtr first = parse_testlist_star();
    if (is_aug_op(peek())) {
      advance();
      auto s = make_stmt(StmtKind::aug_assign, ln);
      s->targets.push_back(std::move(first));
      s->value = is_kw("yield") ? parse_yield() : parse_testlist_star();
      return s;
    }
    if (is_op(":") ) {
      advance();
      auto s = make_stmt(StmtKind::ann_assign, ln);
      s->targets.push_back(std::move(first));
      s->annotation = parse_test();
      if (accept_op("=")) s->value = is_kw("yield") ? parse_yield() : parse_testlist_star();
      return s;
    }
    if (is_op("=")) {
      auto s = make_stmt(StmtKind::assign, ln);
      s->targets.push_back(std::move(first));
      while (accept_op("=")) {
        ExprPtr rhs = is_kw("yield") ? parse_yield() : parse_testlist_star();
        s->targets.push_back(std::move(rhs));
      }
      s->value = std::move(s->targets.back());
      s->targets.pop_back();
      return s;
    }
    auto s = make_stmt(StmtKind::expr, ln);
    s->value = std::move(first);
    return s;
  }

  // Parses `:` followed by an indented block or a same-line simple statement.
  Block parse_suite() {
    expect_op(":");
    Block body;
    if (peek().kind == TokenKind::newline) {
      advance();
      if (peek().kind != TokenKind::indent) fail("expected an indented block");
      advance();
      while (peek().kind != TokenKind::dedent && !at_end()) {
        if (peek().kind == TokenKind::newline) {
          advance();
          continue;
        }
        parse_statement(body);
      }
      if (peek().kind == TokenKind::dedent) advance();
    } else {
      parse_simple_line(body);
    }
    return body;
  }

  StmtPtr parse_decorated() {
    std::vector<ExprPtr> decorators;
    while (accept_op("@")) {
      decorators.push_back(parse_namedexpr());
      if (peek().kind != TokenKind::newline) fail("expected newline after decorator");
      advance();
    }
    if (is_kw("def")) return parse_funcdef(std::move(decorators), false);
    if (is_kw("class")) return parse_classdef(std::move(decorators));
    if (modern() && is_kw("async") && is_kw("def", 1)) {
      advance();
      return parse_funcdef(std::move(decorators), true);
    }
    fail("expected function or class after decorator");
  }

  std::vector<Param> parse_params(std::string_view closer, bool annotations) {
    std::vector<Param> params;
    bool keyword_only = false;
    while (!is_op(closer)) {
      Param p;
      if (accept_op("/")) {
        for (auto& prev : params) {
          if (prev.kind == ParamKind::positional) prev.kind = ParamKind::positional_only;
        }
        if (!accept_op(",")) break;
        continue;
      }
      if (accept_op("**")) {
        p.kind = ParamKind::var_keyword;
        p.name = expect_identifier();
        if (annotations && accept_op(":")) p.annotation = parse_test();
      } else if (accept_op("*")) {
        keyword_only = true;
        if (is_op(",") || is_op(closer)) {
          if (!accept_op(",")) break;
          continue;
        }
        p.kind = ParamKind::var_positional;
        p.name = expect_identifier();
        if (annotations && accept_op(":")) p.annotation = parse_test(true);
      } else if (!modern() && is_op("(")) {
        // legacy tuple parameter `(a, b)`
        advance();
        int depth = 1;
        while (depth > 0 && !at_end()) {
          if (is_op("(")) ++depth;
          if (is_op(")")) --depth;
          advance();
        }
        p.name = "(tuple)";
        p.kind = ParamKind::positional;
        if (accept_op("=")) {
          p.has_default = true;
          p.default_value = parse_test();
        }
      } else {
        p.name = expect_identifier();
        p.kind = keyword_only ? ParamKind::keyword_only : ParamKind::positional;
        if (annotations && accept_op(":")) p.annotation = parse_test();
        if (accept_op("=")) {
          p.has_default = true;
          p.default_value = parse_test();
        }
      }
      params.push_back(std::move(p));
      if (!accept_op(",")) break;
    }
    return params;
  }

  StmtPtr parse_funcdef(std::vector<ExprPtr> decorators, bool is_async) {
    auto s = make_stmt(StmtKind::function_def, line());
    expect_kw("def");
    s->name = expect_identifier();
    s->decorators = std::move(decorators);
    s->is_async = is_async;
    if (modern() && is_op("[")) skip_type_params();
    expect_op("(");
    s->params = parse_params(")", true);
    expect_op(")");
    if (accept_op("->")) s->returns = parse_test();
    s->body = parse_suite();
    return s;
  }

  // PEP 695 `def f[T](...)` / `class C[T]:` parameter lists carry no APIs.
  void skip_type_params() {
    expect_op("[");
    int depth = 1;
    while (depth > 0 && !at_end()) {
      if (is_op("[")) ++depth;
      if (is_op("]")) --depth;
      advance();
    }
    ++skipped_;
  }

  StmtPtr parse_classdef(std::vector<ExprPtr> decorators) {
    auto s = make_stmt(StmtKind::class_def, line());
    expect_kw("class");
    s->name = expect_identifier();
    s->decorators = std::move(decorators);
    if (modern() && is_op("[")) skip_type_params();
    if (accept_op("(")) {
      s->bases = parse_arglist();
      expect_op(")");
    }
    s->body = parse_suite();
    return s;
  }

  StmtPtr parse_if() {
    auto s = make_stmt(StmtKind::if_, line());
    advance();  // if / elif
    s->exprs.push_back(parse_namedexpr());
    s->body = parse_suite();
    if (is_kw("elif")) {
      s->orelse.push_back(parse_if());
    } else if (accept_kw("else")) {
      s->orelse = parse_suite();
    }
    return s;
  }

  StmtPtr parse_while() {
    auto s = make_stmt(StmtKind::while_, line());
    expect_kw("while");
    s->exprs.push_back(parse_namedexpr());
    s->body = parse_suite();
    if (accept_kw("else")) s->orelse = parse_suite();
    return s;
  }

  StmtPtr parse_for(bool is_async) {
    auto s = make_stmt(StmtKind::for_, line());
    expect_kw("for");
    s->is_async = is_async;
    s->targets.push_back(parse_target_list());
    expect_kw("in");
    s->value = parse_testlist_star();
    s->body = parse_suite();
    if (accept_kw("else")) s->orelse = parse_suite();
    return s;
  }

  // exprlist used as a binding target (stops before `in`)
  ExprPtr parse_target_list() {
    int ln = line();
    std::vector<ExprPtr> items;
    bool trailing = false;
    do {
      if (is_kw("in") || is_op("=")) {
        trailing = true;
        break;
      }
      items.push_back(is_op("*") ? parse_star_expr() : parse_expr());
    } while (accept_op(","));
    if (items.size() == 1 && !trailing) return std::move(items.front());
    auto t = make_expr(ExprKind::tuple, ln);
    t->children = std::move(items);
    return t;
  }

  StmtPtr parse_try() {
    auto s = make_stmt(StmtKind::try_, line());
    expect_kw("try");
    s->body = parse_suite();
    while (is_kw("except")) {
      ExceptHandler h;
      h.line = line();
      advance();
      accept_op("*");
      if (!is_op(":")) {
        h.type = parse_test();
        if (accept_kw("as")) {
          h.name = expect_identifier();
        } else if (!modern() && accept_op(",")) {
          ExprPtr target = parse_test();
          if (target->kind == ExprKind::name) h.name = target->id;
        }
      }
      h.body = parse_suite();
      s->handlers.push_back(std::move(h));
    }
    if (accept_kw("else")) s->orelse = parse_suite();
    if (accept_kw("finally")) s->finalbody = parse_suite();
    if (s->handlers.empty() && s->finalbody.empty()) fail("expected 'except' or 'finally' block");
    return s;
  }

  StmtPtr parse_with(bool is_async) {
    auto s = make_stmt(StmtKind::with, line());
    expect_kw("with");
    s->is_async = is_async;
    if (is_op("(")) {
      std::size_t save = pos_;
      try {
        advance();
        std::vector<WithItem> items;
        do {
          if (is_op(")")) break;
          items.push_back(parse_with_item());
        } while (accept_op(","));
        expect_op(")");
        if (!is_op(":")) throw SyntaxError("", line(), "not a parenthesized with-item list");
        s->items = std::move(items);
        s->body = parse_suite();
        return s;
      } catch (const SyntaxError&) {
        pos_ = save;
      }
    }
    do {
      s->items.push_back(parse_with_item());
    } while (accept_op(","));
    s->body = parse_suite();
    return s;
  }

  WithItem parse_with_item() {
    WithItem item;
    item.context = parse_test();
    if (accept_kw("as")) item.target = parse_expr();
    return item;
  }

  StmtPtr parse_match() {
    auto s = make_stmt(StmtKind::match, line());
    advance();  // match
    s->value = parse_testlist_star();
    expect_op(":");
    if (peek().kind != TokenKind::newline) fail("expected newline after match");
    advance();
    if (peek().kind != TokenKind::indent) fail("expected indented case block");
    advance();
    while (peek().kind != TokenKind::dedent && !at_end()) {
      if (peek().kind == TokenKind::newline) {
        advance();
        continue;
      }
      if (!is_kw("case")) fail("expected 'case'");
      advance();
      MatchCase c;
      int depth = 0;
      // Patterns are skipped; plain identifiers become capture bindings.
      while (!at_end()) {
        if (depth == 0 && (is_op(":") || is_kw("if"))) break;
        const Token& t = peek();
        if (t.kind == TokenKind::op) {
          if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
          if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
        } else if (is_identifier(t) && t.text != "_") {
          bool dotted_before = pos_ > 0 && toks_[pos_ - 1].kind == TokenKind::op && toks_[pos_ - 1].text == ".";
          bool follows = is_op(".", 1) || is_op("(", 1) || is_op("=", 1);
          if (!dotted_before && !follows) c.captures.push_back(t.text);
        } else if (t.kind == TokenKind::newline) {
          fail("unterminated case pattern");
        }
        advance();
      }
      if (accept_kw("if")) c.guard = parse_namedexpr();
      c.body = parse_suite();
      s->cases.push_back(std::move(c));
    }
    if (peek().kind == TokenKind::dedent) advance();
    return s;
  }

  // ---- expressions ---------------------------------------------------------

  ExprPtr parse_yield() {
    auto e = make_expr(ExprKind::other, line(), "yield");
    expect_kw("yield");
    if (accept_kw("from")) {
      e->children.push_back(parse_test());
    } else if (!at_statement_end() && !is_op(")") && !is_op("=")) {
      e->children.push_back(parse_testlist_star());
    }
    return e;
  }

  ExprPtr parse_testlist_star() {
    int ln = line();
    if (is_kw("yield")) return parse_yield();
    std::vector<ExprPtr> items;
    bool trailing = false;
    while (true) {
      items.push_back(is_op("*") ? parse_star_expr() : parse_namedexpr());
      if (!is_op(",")) break;
      advance();
      if (at_statement_end() || is_op("=") || is_op(")") || is_aug_op(peek()) || is_op(":")) {
        trailing = true;
        break;
      }
    }
    if (items.size() == 1 && !trailing) return std::move(items.front());
    auto t = make_expr(ExprKind::tuple, ln);
    t->children = std::move(items);
    return t;
  }

  ExprPtr parse_star_expr() {
    auto e = make_expr(ExprKind::starred, line());
    expect_op("*");
    e->value = parse_expr();
    return e;
  }

  ExprPtr parse_namedexpr() {
    ExprPtr target = parse_test();
    if (modern() && is_op(":=")) {
      if (target->kind != ExprKind::name) fail("cannot use assignment expression with non-name target");
      advance();
      auto e = make_expr(ExprKind::named, target->line, target->id);
      e->value = parse_test();
      return e;
    }
    return target;
  }

  ExprPtr parse_test(bool allow_star = false) {
    if (allow_star && is_op("*")) return parse_star_expr();
    if (is_kw("lambda")) return parse_lambda();
    ExprPtr cond_body = parse_or();
    if (is_kw("if")) {
      int ln = line();
      advance();
      auto e = make_expr(ExprKind::other, ln, "ifexp");
      e->children.push_back(std::move(cond_body));
      e->children.push_back(parse_or());
      expect_kw("else");
      e->children.push_back(parse_test());
      return e;
    }
    return cond_body;
  }

  ExprPtr parse_test_nocond() {
    if (is_kw("lambda")) return parse_lambda(true);
    return parse_or();
  }

  ExprPtr parse_lambda(bool nocond = false) {
    auto e = make_expr(ExprKind::lambda, line());
    expect_kw("lambda");
    e->params = parse_params(":", false);
    expect_op(":");
    e->children.push_back(nocond ? parse_test_nocond() : parse_test());
    return e;
  }

  ExprPtr binary(ExprPtr lhs, ExprPtr rhs, std::string op) {
    auto e = make_expr(ExprKind::other, lhs->line, std::move(op));
    e->children.push_back(std::move(lhs));
    e->children.push_back(std::move(rhs));
    return e;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (accept_kw("or")) lhs = binary(std::move(lhs), parse_and(), "or");
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (accept_kw("and")) lhs = binary(std::move(lhs), parse_not(), "and");
    return lhs;
  }

  ExprPtr parse_not() {
    if (is_kw("not")) {
      int ln = line();
      advance();
      auto e = make_expr(ExprKind::other, ln, "not");
      e->children.push_back(parse_not());
      return e;
    }
    return parse_comparison();
  }

  bool at_comparison_op() const {
    const Token& t = peek();
    if (t.kind == TokenKind::op) {
      return t.text == "<" || t.text == ">" || t.text == "==" || t.text == ">=" || t.text == "<=" ||
             t.text == "!=" || t.text == "<>";
    }
    if (t.kind == TokenKind::name) {
      return t.text == "in" || t.text == "is" || (t.text == "not" && is_kw("in", 1));
    }
    return false;
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_expr();
    while (at_comparison_op()) {
      std::string op = advance().text;
      if (op == "not") expect_kw("in");
      if (op == "is") accept_kw("not");
      lhs = binary(std::move(lhs), parse_expr(), op);
    }
    return lhs;
  }

  // bitwise-or level; the `expr` production of the grammar
  ExprPtr parse_expr() {
    ExprPtr lhs = parse_xor();
    while (is_op("|")) {
      advance();
      lhs = binary(std::move(lhs), parse_xor(), "|");
    }
    return lhs;
  }
  ExprPtr parse_xor() {
    ExprPtr lhs = parse_bitand();
    while (is_op("^")) {
      advance();
      lhs = binary(std::move(lhs), parse_bitand(), "^");
    }
    return lhs;
  }
  ExprPtr parse_bitand() {
    ExprPtr lhs = parse_shift();
    while (is_op("&")) {
      advance();
      lhs = binary(std::move(lhs), parse_shift(), "&");
    }
    return lhs;
  }
  ExprPtr parse_shift() {
    ExprPtr lhs = parse_arith();
    while (is_op("<<") || is_op(">>")) {
      std::string op = advance().text;
      lhs = binary(std::move(lhs), parse_arith(), op);
    }
    return lhs;
  }
  ExprPtr parse_arith() {
    ExprPtr lhs = parse_term();
    while (is_op("+") || is_op("-")) {
      std::string op = advance().text;
      lhs = binary(std::move(lhs), parse_term(), op);
    }
    return lhs;
  }
  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    while (is_op("*") || is_op("/") || is_op("%") || is_op("//") || is_op("@")) {
      std::string op = advance().text;
      lhs = binary(std::move(lhs), parse_factor(), op);
    }
    return lhs;
  }
  ExprPtr parse_factor() {
    if (is_op("+") || is_op("-") || is_op("~")) {
      int ln = line();
      std::string op = advance().text;
      auto e = make_expr(ExprKind::other, ln, op);
      e->children.push_back(parse_factor());
      return e;
    }
    return parse_power();
  }
  ExprPtr parse_power() {
    ExprPtr base;
    if (modern() && is_kw("await")) {
      int ln = line();
      advance();
      base = make_expr(ExprKind::other, ln, "await");
      base->children.push_back(parse_primary());
    } else {
      base = parse_primary();
    }
    if (is_op("**")) {
      advance();
      return binary(std::move(base), parse_factor(), "**");
    }
    return base;
  }

  ExprPtr parse_primary() {
    ExprPtr e = parse_atom();
    while (true) {
      if (is_op("(")) {
        int ln = line();
        advance();
        auto call = make_expr(ExprKind::call, ln);
        call->value = std::move(e);
        call->args = parse_arglist();
        expect_op(")");
        e = std::move(call);
      } else if (is_op("[")) {
        int ln = line();
        advance();
        auto sub = make_expr(ExprKind::subscript, ln);
        sub->value = std::move(e);
        sub->children = parse_subscripts();
        expect_op("]");
        e = std::move(sub);
      } else if (is_op(".")) {
        advance();
        const Token& t = peek();
        if (t.kind != TokenKind::name) fail("expected attribute name");
        auto attr = make_expr(ExprKind::attribute, t.line, t.text);
        advance();
        attr->value = std::move(e);
        e = std::move(attr);
      } else {
        break;
      }
    }
    return e;
  }

  std::vector<ExprPtr> parse_subscripts() {
    std::vector<ExprPtr> out;
    do {
      if (is_op("]")) break;
      out.push_back(parse_slice());
    } while (accept_op(","));
    return out;
  }

  ExprPtr parse_slice() {
    int ln = line();
    ExprPtr lower;
    if (!is_op(":")) {
      lower = is_op("*") ? parse_star_expr() : parse_namedexpr();
      if (!is_op(":")) return lower;
    }
    auto s = make_expr(ExprKind::other, ln, "slice");
    if (lower) s->children.push_back(std::move(lower));
    while (accept_op(":")) {
      if (!is_op(":") && !is_op("]") && !is_op(",")) s->children.push_back(parse_test());
    }
    return s;
  }

  std::vector<Argument> parse_arglist() {
    std::vector<Argument> args;
    while (!is_op(")")) {
      Argument a;
      if (accept_op("**")) {
        a.double_star = true;
        a.value = parse_test();
      } else if (accept_op("*")) {
        a.star = true;
        a.value = parse_test();
      } else if (is_identifier(peek()) && is_op("=", 1)) {
        a.keyword = advance().text;
        advance();
        a.value = parse_test();
      } else {
        a.value = parse_namedexpr();
        if (is_kw("for") || (modern() && is_kw("async") && is_kw("for", 1))) {
          a.value = parse_comprehension_tail(std::move(a.value), "genexp");
        }
      }
      args.push_back(std::move(a));
      if (!accept_op(",")) break;
    }
    return args;
  }

  ExprPtr parse_comprehension_tail(ExprPtr element, std::string kind, ExprPtr value = nullptr) {
    auto comp = make_expr(ExprKind::comprehension, element->line, std::move(kind));
    comp->children.push_back(std::move(element));
    if (value) comp->children.push_back(std::move(value));
    while (is_kw("for") || (modern() && is_kw("async") && is_kw("for", 1))) {
      accept_kw("async");
      advance();  // for
      ComprehensionFor gen;
      gen.target = parse_target_list();
      expect_kw("in");
      gen.iter = parse_or();
      while (accept_kw("if")) gen.conditions.push_back(parse_test_nocond());
      comp->generators.push_back(std::move(gen));
    }
    return comp;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    int ln = t.line;
    switch (t.kind) {
      case TokenKind::number: {
        advance();
        return make_expr(ExprKind::constant, ln, "number");
      }
      case TokenKind::string: {
        std::string text = t.text;
        advance();
        bool fstring = false;
        auto is_f = [](const std::string& s) {
          for (char c : s) {
            if (c == '\'' || c == '"') return false;
            if (c == 'f' || c == 'F') return true;
          }
          return false;
        };
        fstring = is_f(text);
        while (peek().kind == TokenKind::string) {
          fstring = fstring || is_f(peek().text);
          text += " " + peek().text;
          advance();
        }
        auto e = make_expr(ExprKind::constant, ln, fstring ? "fstring" : "str");
        e->text = std::move(text);
        return e;
      }
      case TokenKind::name: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          advance();
          return make_expr(ExprKind::constant, ln, t.text);
        }
        if (!is_identifier(t)) fail("unexpected keyword");
        std::string id = t.text;
        advance();
        return make_expr(ExprKind::name, ln, std::move(id));
      }
      case TokenKind::op:
        break;
      default:
        fail("unexpected token");
    }
    if (accept_op("...")) return make_expr(ExprKind::constant, ln, "...");
    if (accept_op("(")) {
      if (accept_op(")")) return make_expr(ExprKind::tuple, ln);
      if (is_kw("yield")) {
        auto y = parse_yield();
        expect_op(")");
        return y;
      }
      ExprPtr first = is_op("*") ? parse_star_expr() : parse_namedexpr();
      if (is_kw("for") || (modern() && is_kw("async") && is_kw("for", 1))) {
        auto comp = parse_comprehension_tail(std::move(first), "genexp");
        expect_op(")");
        return comp;
      }
      if (accept_op(")")) return first;
      auto tup = make_expr(ExprKind::tuple, ln);
      tup->children.push_back(std::move(first));
      while (accept_op(",")) {
        if (is_op(")")) break;
        tup->children.push_back(is_op("*") ? parse_star_expr() : parse_namedexpr());
      }
      expect_op(")");
      return tup;
    }
    if (accept_op("[")) {
      auto list = make_expr(ExprKind::list, ln);
      if (accept_op("]")) return list;
      ExprPtr first = is_op("*") ? parse_star_expr() : parse_namedexpr();
      if (is_kw("for") || (modern() && is_kw("async") && is_kw("for", 1))) {
        auto comp = parse_comprehension_tail(std::move(first), "listcomp");
        expect_op("]");
        return comp;
      }
      list->children.push_back(std::move(first));
      while (accept_op(",")) {
        if (is_op("]")) break;
        list->children.push_back(is_op("*") ? parse_star_expr() : parse_namedexpr());
      }
      expect_op("]");
      return list;
    }
    if (accept_op("{")) return parse_brace_display(ln);
    if (!modern() && accept_op("`")) {
      auto e = make_expr(ExprKind::other, ln, "repr");
      e->children.push_back(parse_testlist_star());
      expect_op("`");
      return e;
    }
    fail("unexpected operator");
  }

  ExprPtr parse_brace_display(int ln) {
    auto disp = make_expr(ExprKind::other, ln, "dict");
    if (accept_op("}")) return disp;
    bool is_dict = false;
    bool first = true;
    while (!is_op("}")) {
      if (accept_op("**")) {
        is_dict = true;
        disp->children.push_back(parse_expr());
      } else {
        ExprPtr key = is_op("*") ? parse_star_expr() : parse_namedexpr();
        if (accept_op(":")) {
          is_dict = true;
          ExprPtr value = parse_test();
          if (first && (is_kw("for") || (modern() && is_kw("async") && is_kw("for", 1)))) {
            auto comp = parse_comprehension_tail(std::move(key), "dictcomp", std::move(value));
            expect_op("}");
            return comp;
          }
          disp->children.push_back(std::move(key));
          disp->children.push_back(std::move(value));
        } else {
          if (first && (is_kw("for") || (modern() && is_kw("async") && is_kw("for", 1)))) {
            auto comp = parse_comprehension_tail(std::move(key), "setcomp");
            expect_op("}");
            return comp;
          }
          disp->children.push_back(std::move(key));
        }
      }
      first = false;
      if (!accept_op(",")) break;
    }
    expect_op("}");
    if (!is_dict) disp->id = "set";
    return disp;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Grammar grammar_;
  const std::unordered_set<std::string>& reserved_;
  int skipped_ = 0;
};

}  // namespace

Module parse_module(std::string_view source, Grammar grammar) {
  return Parser(tokenize(source, grammar), grammar).parse_file();
}

Module parse_module_any(std::string_view source, Grammar* used) {
  try {
    Module m = parse_module(source, Grammar::modern);
    if (used) *used = Grammar::modern;
    return m;
  } catch (const SyntaxError& modern_error) {
    try {
      Module m = parse_module(source, Grammar::legacy);
      if (used) *used = Grammar::legacy;
      return m;
    } catch (const SyntaxError&) {
      throw modern_error;
    }
  }
}

}  // namespace envsniff::py
