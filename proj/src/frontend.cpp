#include "ctaeq/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace ctaeq {

namespace {

// --- lexer -------------------------------------------------------------

enum class Tok : uint8_t { Ident, Int, Decimal, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  SrcLoc loc;
};

const std::set<std::string> kKeywords = {
    "kernel", "param",    "in",     "out", "scratch", "let", "for",
    "if",     "else",     "sync",   "syncwarp",       "return",
    "exp",    "max",      "NEG_INF", "tid"};

std::vector<Token> lex(const std::string &text) {
  std::vector<Token> out;
  uint32_t line = 1, col = 1;
  size_t i = 0, n = text.size();
  auto bump = [&](size_t k) {
    for (size_t j = 0; j < k; j++) {
      if (text[i + j] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
    }
    i += k;
  };
  while (i < n) {
    char c = text[i];
    if (c == '/' && i + 1 < n && text[i + 1] == '/') {
      while (i < n && text[i] != '\n')
        bump(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      bump(1);
      continue;
    }
    SrcLoc loc{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                       text[j] == '_'))
        j++;
      out.push_back({Tok::Ident, text.substr(i, j - i), loc});
      bump(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(text[j])))
        j++;
      bool dec = false;
      if (j + 1 < n && text[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
        dec = true;
        j++;
        while (j < n && std::isdigit(static_cast<unsigned char>(text[j])))
          j++;
      }
      out.push_back({dec ? Tok::Decimal : Tok::Int, text.substr(i, j - i), loc});
      bump(j - i);
      continue;
    }
    // multi-char punctuation first
    static const char *two[] = {"==", "!=", "<=", ">=", "&&", "||",
                                "++", "+=", "-=", "*=", "/="};
    bool matched = false;
    for (const char *t : two) {
      if (c == t[0] && i + 1 < n && text[i + 1] == t[1]) {
        out.push_back({Tok::Punct, t, loc});
        bump(2);
        matched = true;
        break;
      }
    }
    if (matched)
      continue;
    if (std::string("{}()[];,=<>+-*/%!").find(c) != std::string::npos) {
      out.push_back({Tok::Punct, std::string(1, c), loc});
      bump(1);
      continue;
    }
    throw ParseError(loc, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

// --- parser ------------------------------------------------------------

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;

  const Token &peek(size_t k = 0) const {
    return toks[std::min(pos + k, toks.size() - 1)];
  }
  bool at_punct(const std::string &p) const {
    return peek().kind == Tok::Punct && peek().text == p;
  }
  bool at_kw(const std::string &k) const {
    return peek().kind == Tok::Ident && peek().text == k;
  }
  Token next() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
  void expect_punct(const std::string &p) {
    if (!at_punct(p))
      throw ParseError(peek().loc, "expected '" + p + "', found '" +
                                       peek().text + "'");
    pos++;
  }
  std::string expect_ident(const char *what) {
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text))
      throw ParseError(peek().loc, std::string("expected ") + what +
                                       ", found '" + peek().text + "'");
    return next().text;
  }
  int64_t expect_int() {
    if (peek().kind != Tok::Int)
      throw ParseError(peek().loc,
                       "expected integer, found '" + peek().text + "'");
    try {
      return std::stoll(next().text);
    } catch (const std::out_of_range &) {
      throw ParseError(toks[pos - 1].loc, "integer literal out of range");
    }
  }

  // integer expressions
  IExpr iexpr() { return iadd(); }
  IExpr iadd() {
    IExpr e = imul();
    while (at_punct("+") || at_punct("-")) {
      Token t = next();
      IExpr r;
      r.k = IExpr::K::Bin;
      r.op = t.text[0];
      r.loc = t.loc;
      r.kids = {std::move(e), imul()};
      e = std::move(r);
    }
    return e;
  }
  IExpr imul() {
    IExpr e = iunary();
    while (at_punct("*") || at_punct("/") || at_punct("%")) {
      Token t = next();
      IExpr r;
      r.k = IExpr::K::Bin;
      r.op = t.text[0];
      r.loc = t.loc;
      r.kids = {std::move(e), iunary()};
      e = std::move(r);
    }
    return e;
  }
  IExpr iunary() {
    if (at_punct("-")) {
      Token t = next();
      IExpr z;
      z.k = IExpr::K::Const;
      z.cval = 0;
      z.loc = t.loc;
      IExpr r;
      r.k = IExpr::K::Bin;
      r.op = '-';
      r.loc = t.loc;
      r.kids = {std::move(z), iunary()};
      return r;
    }
    return iprimary();
  }
  IExpr iprimary() {
    const Token &t = peek();
    if (t.kind == Tok::Int) {
      IExpr e;
      e.k = IExpr::K::Const;
      e.cval = expect_int();
      e.loc = t.loc;
      return e;
    }
    if (t.kind == Tok::Decimal)
      throw ParseError(t.loc, "decimal literal in integer expression");
    if (at_punct("(")) {
      next();
      IExpr e = iexpr();
      expect_punct(")");
      return e;
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      std::string name = next().text;
      if (at_punct("[")) {
        next();
        IExpr sub = iexpr();
        expect_punct("]");
        IExpr e;
        e.k = IExpr::K::Index;
        e.name = name;
        e.loc = t.loc;
        e.kids.push_back(std::move(sub));
        return e;
      }
      IExpr e;
      e.k = IExpr::K::Ident;
      e.name = name;
      e.loc = t.loc;
      return e;
    }
    if (at_kw("tid")) {
      next();
      IExpr e;
      e.k = IExpr::K::Ident;
      e.name = "tid";
      e.loc = t.loc;
      return e;
    }
    throw ParseError(t.loc, "expected integer expression, found '" + t.text +
                                "'");
  }

  // conditions
  Cond cond() { return cor(); }
  Cond cor() {
    Cond e = cand();
    while (at_punct("||")) {
      Token t = next();
      Cond r;
      r.k = Cond::K::Or;
      r.loc = t.loc;
      r.kids = {std::move(e), cand()};
      e = std::move(r);
    }
    return e;
  }
  Cond cand() {
    Cond e = cnot();
    while (at_punct("&&")) {
      Token t = next();
      Cond r;
      r.k = Cond::K::And;
      r.loc = t.loc;
      r.kids = {std::move(e), cnot()};
      e = std::move(r);
    }
    return e;
  }
  Cond cnot() {
    if (at_punct("!")) {
      Token t = next();
      Cond r;
      r.k = Cond::K::Not;
      r.loc = t.loc;
      r.kids = {cnot()};
      return r;
    }
    return catom();
  }
  Cond catom() {
    if (at_punct("(")) {
      // Either a parenthesized condition or a parenthesized integer
      // expression opening a comparison; backtrack on failure.
      size_t mark = pos;
      next();
      try {
        Cond c = cor();
        expect_punct(")");
        if (!is_cmp_op())
          return c;
      } catch (const ParseError &) {
      }
      pos = mark;
    }
    Cond r;
    r.k = Cond::K::Cmp;
    r.loc = peek().loc;
    r.a = iexpr();
    if (!is_cmp_op())
      throw ParseError(peek().loc, "expected comparison operator, found '" +
                                       peek().text + "'");
    r.op = next().text;
    r.b = iexpr();
    return r;
  }
  bool is_cmp_op() const {
    if (peek().kind != Tok::Punct)
      return false;
    const std::string &p = peek().text;
    return p == "<" || p == "<=" || p == ">" || p == ">=" || p == "==" ||
           p == "!=";
  }

  // data expressions
  DExpr dexpr() { return dadd(); }
  DExpr dadd() {
    DExpr e = dmul();
    while (at_punct("+") || at_punct("-")) {
      Token t = next();
      DExpr r;
      r.k = DExpr::K::Bin;
      r.op = t.text[0];
      r.loc = t.loc;
      r.kids = {std::move(e), dmul()};
      e = std::move(r);
    }
    return e;
  }
  DExpr dmul() {
    DExpr e = dunary();
    while (at_punct("*") || at_punct("/")) {
      Token t = next();
      DExpr r;
      r.k = DExpr::K::Bin;
      r.op = t.text[0];
      r.loc = t.loc;
      r.kids = {std::move(e), dunary()};
      e = std::move(r);
    }
    return e;
  }
  DExpr dunary() {
    if (at_punct("-")) {
      Token t = next();
      DExpr r;
      r.k = DExpr::K::Neg;
      r.loc = t.loc;
      r.kids = {dunary()};
      return r;
    }
    return dprimary();
  }
  DExpr dprimary() {
    const Token &t = peek();
    if (t.kind == Tok::Int || t.kind == Tok::Decimal) {
      DExpr e;
      e.k = DExpr::K::Const;
      e.loc = t.loc;
      std::string s = next().text;
      auto dot = s.find('.');
      if (dot == std::string::npos) {
        e.cval = Rat(s);
      } else {
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        size_t frac = s.size() - dot - 1;
        mpz_class den(10);
        mpz_pow_ui(den.get_mpz_t(), den.get_mpz_t(), frac);
        e.cval = Rat(mpz_class(digits), den);
        e.cval.canonicalize();
      }
      return e;
    }
    if (at_kw("NEG_INF")) {
      DExpr e;
      e.k = DExpr::K::NegInf;
      e.loc = next().loc;
      return e;
    }
    if (at_kw("exp")) {
      DExpr e;
      e.k = DExpr::K::Exp;
      e.loc = next().loc;
      expect_punct("(");
      e.kids.push_back(dexpr());
      expect_punct(")");
      return e;
    }
    if (at_kw("max")) {
      DExpr e;
      e.k = DExpr::K::Max;
      e.loc = next().loc;
      expect_punct("(");
      e.kids.push_back(dexpr());
      expect_punct(",");
      e.kids.push_back(dexpr());
      while (at_punct(",")) {
        next();
        e.kids.push_back(dexpr());
      }
      expect_punct(")");
      return e;
    }
    if (at_punct("(")) {
      next();
      DExpr e = dexpr();
      expect_punct(")");
      return e;
    }
    if (at_kw("tid")) {
      DExpr e;
      e.k = DExpr::K::Ref;
      e.name = "tid";
      e.loc = next().loc;
      return e;
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      std::string name = next().text;
      if (at_punct("[")) {
        next();
        IExpr sub = iexpr();
        expect_punct("]");
        DExpr e;
        e.k = DExpr::K::Index;
        e.name = name;
        e.index = std::move(sub);
        e.loc = t.loc;
        return e;
      }
      DExpr e;
      e.k = DExpr::K::Ref;
      e.name = name;
      e.loc = t.loc;
      return e;
    }
    throw ParseError(t.loc, "expected expression, found '" + t.text + "'");
  }

  // statements
  std::vector<AStmt> block() {
    std::vector<AStmt> out;
    if (at_punct("{")) {
      next();
      while (!at_punct("}"))
        out.push_back(stmt());
      next();
    } else {
      out.push_back(stmt());
    }
    return out;
  }

  AStmt stmt() {
    const Token &t = peek();
    if (at_kw("let")) {
      AStmt s;
      s.k = AStmt::K::Let;
      s.loc = next().loc;
      s.var = expect_ident("binding name");
      expect_punct("=");
      s.init = iexpr();
      expect_punct(";");
      return s;
    }
    if (at_kw("for")) {
      AStmt s;
      s.k = AStmt::K::For;
      s.loc = next().loc;
      expect_punct("(");
      s.var = expect_ident("loop variable");
      expect_punct("=");
      s.init = iexpr();
      expect_punct(";");
      std::string v2 = expect_ident("loop variable");
      if (v2 != s.var)
        throw ParseError(t.loc, "loop condition must test '" + s.var + "'");
      if (at_punct("<")) {
        next();
        s.limit_inclusive = false;
      } else if (at_punct("<=")) {
        next();
        s.limit_inclusive = true;
      } else {
        throw ParseError(peek().loc, "expected '<' or '<=' in loop condition");
      }
      s.limit = iexpr();
      expect_punct(";");
      std::string v3 = expect_ident("loop variable");
      if (v3 != s.var)
        throw ParseError(t.loc, "loop increment must update '" + s.var + "'");
      if (at_punct("++")) {
        next();
        s.step.k = IExpr::K::Const;
        s.step.cval = 1;
      } else if (at_punct("+=")) {
        next();
        s.step = iexpr();
      } else {
        throw ParseError(peek().loc, "expected '++' or '+=' in loop increment");
      }
      expect_punct(")");
      s.body = block();
      return s;
    }
    if (at_kw("if")) {
      AStmt s;
      s.k = AStmt::K::If;
      s.loc = next().loc;
      expect_punct("(");
      s.cond = cond();
      expect_punct(")");
      s.body = block();
      if (at_kw("else")) {
        next();
        s.els = block();
      }
      return s;
    }
    if (at_kw("sync")) {
      AStmt s;
      s.k = AStmt::K::Sync;
      s.loc = next().loc;
      expect_punct(";");
      return s;
    }
    if (at_kw("syncwarp")) {
      AStmt s;
      s.k = AStmt::K::SyncWarp;
      s.loc = next().loc;
      expect_punct("(");
      if (at_punct("{")) {
        s.warp.k = WarpSpec::K::TidList;
        next();
        s.warp.tids.push_back(iexpr());
        while (at_punct(",")) {
          next();
          s.warp.tids.push_back(iexpr());
        }
        expect_punct("}");
      } else {
        s.warp.widx = iexpr();
        if (at_punct(",")) {
          next();
          s.warp.k = WarpSpec::K::WarpLanes;
          expect_punct("{");
          s.warp.lanes.push_back(iexpr());
          while (at_punct(",")) {
            next();
            s.warp.lanes.push_back(iexpr());
          }
          expect_punct("}");
        } else {
          s.warp.k = WarpSpec::K::WarpIdx;
        }
      }
      expect_punct(")");
      expect_punct(";");
      return s;
    }
    if (at_kw("return")) {
      AStmt s;
      s.k = AStmt::K::Return;
      s.loc = next().loc;
      expect_punct(";");
      return s;
    }
    // assignment
    AStmt s;
    s.k = AStmt::K::Assign;
    s.loc = t.loc;
    s.lv_name = expect_ident("assignment target");
    if (at_punct("[")) {
      next();
      s.lv_is_index = true;
      s.lv_index = iexpr();
      expect_punct("]");
    }
    if (at_punct("=")) {
      next();
      s.asg_op = '=';
    } else if (at_punct("+=") || at_punct("-=") || at_punct("*=") ||
               at_punct("/=")) {
      s.asg_op = next().text[0];
    } else {
      throw ParseError(peek().loc,
                       "expected assignment operator, found '" + peek().text +
                           "'");
    }
    s.rhs = dexpr();
    expect_punct(";");
    return s;
  }

  KernelAst kernel() {
    if (!at_kw("kernel"))
      throw ParseError(peek().loc, "expected 'kernel'");
    next();
    KernelAst k;
    k.name = expect_ident("kernel name");
    expect_punct("{");
    std::set<std::string> declared;
    while (!at_punct("}")) {
      if (at_kw("param")) {
        SrcLoc loc = next().loc;
        std::string name = expect_ident("parameter name");
        if (!declared.insert(name).second)
          throw ParseError(loc, "duplicate declaration of " + name);
        k.params.push_back(name);
        expect_punct(";");
        continue;
      }
      if (at_kw("in") || at_kw("out") || at_kw("scratch")) {
        ArrayDeclAst d;
        d.loc = peek().loc;
        std::string kw = next().text;
        d.role = kw == "in"    ? Role::In
                 : kw == "out" ? Role::Out
                               : Role::Scratch;
        d.name = expect_ident("array name");
        if (!declared.insert(d.name).second)
          throw ParseError(d.loc, "duplicate declaration of " + d.name);
        expect_punct("[");
        d.size = iexpr();
        expect_punct("]");
        expect_punct(";");
        k.arrays.push_back(std::move(d));
        continue;
      }
      k.body.push_back(stmt());
    }
    next();
    if (peek().kind != Tok::End)
      throw ParseError(peek().loc, "trailing input after kernel body");
    return k;
  }
};

// --- checked 64-bit integer arithmetic ----------------------------------

int64_t checked_bin(char op, int64_t a, int64_t b, SrcLoc loc) {
  int64_t r = 0;
  bool ovf = false;
  switch (op) {
  case '+':
    ovf = __builtin_add_overflow(a, b, &r);
    break;
  case '-':
    ovf = __builtin_sub_overflow(a, b, &r);
    break;
  case '*':
    ovf = __builtin_mul_overflow(a, b, &r);
    break;
  case '/':
  case '%':
    if (b == 0)
      throw StructuredCtaError(loc.str() +
                               ": division by zero in static expression");
    if (a == INT64_MIN && b == -1)
      ovf = true;
    else
      r = op == '/' ? a / b : a % b;
    break;
  default:
    throw StructuredCtaError("internal: unknown integer operator");
  }
  if (ovf)
    throw StructuredCtaError(loc.str() + ": integer overflow in static "
                                         "expression");
  return r;
}

// --- elaborator ----------------------------------------------------------

struct Elab {
  const KernelAst &ast;
  Tid n_threads;
  Tid warp_size;
  std::map<std::string, int64_t> base_env; // params
  std::map<std::string, uint64_t> array_sizes;
  std::set<std::string> array_names;

  // per-thread state
  Tid tid = 0;
  std::map<std::string, int64_t> env; // tid + params + lets + loop vars
  std::vector<Stmt> *out = nullptr;
  uint64_t temp_ctr = 0;

  // `why` is the full reason phrase, e.g. "data-dependent address".
  int64_t ieval(const IExpr &e, const char *why) {
    switch (e.k) {
    case IExpr::K::Const:
      return e.cval;
    case IExpr::K::Ident: {
      auto it = env.find(e.name);
      if (it != env.end())
        return it->second;
      if (array_names.count(e.name))
        throw StructuredCtaError(e.loc.str() + ": " + std::string(why) +
                                 ": array " + e.name + " used without index");
      throw StructuredCtaError(e.loc.str() + ": " + std::string(why) + ": " +
                               e.name + " is not a compile-time integer");
    }
    case IExpr::K::Bin:
      return checked_bin(e.op, ieval(e.kids[0], why), ieval(e.kids[1], why),
                         e.loc);
    case IExpr::K::Index:
      throw StructuredCtaError(e.loc.str() + ": " + std::string(why) +
                               ": array element " + e.name +
                               "[...] is a runtime value");
    }
    throw StructuredCtaError("internal: unknown integer expression");
  }

  bool ceval(const Cond &c) {
    switch (c.k) {
    case Cond::K::Cmp: {
      int64_t a = ieval(c.a, "data-dependent branch condition");
      int64_t b = ieval(c.b, "data-dependent branch condition");
      if (c.op == "<")
        return a < b;
      if (c.op == "<=")
        return a <= b;
      if (c.op == ">")
        return a > b;
      if (c.op == ">=")
        return a >= b;
      if (c.op == "==")
        return a == b;
      return a != b;
    }
    case Cond::K::And:
      return ceval(c.kids[0]) && ceval(c.kids[1]);
    case Cond::K::Or:
      return ceval(c.kids[0]) || ceval(c.kids[1]);
    case Cond::K::Not:
      return !ceval(c.kids[0]);
    }
    throw StructuredCtaError("internal: unknown condition");
  }

  Addr fold_addr(const std::string &array, const IExpr &sub, SrcLoc loc) {
    if (!array_names.count(array))
      throw StructuredCtaError(loc.str() + ": unknown array " + array);
    return Addr{array, ieval(sub, "data-dependent address")};
  }

  void emit(Stmt s) {
    if (out->size() >= kMaxThreadStmts)
      throw StructuredCtaError(
          "unroll limit exceeded: thread " + std::to_string(tid) +
          " expands to more than " + std::to_string(kMaxThreadStmts) +
          " statements");
    out->push_back(std::move(s));
  }

  std::string fresh() { return "%t" + std::to_string(temp_ctr++); }

  bool is_int_name(const std::string &n) const { return env.count(n) != 0; }

  // Lower a data expression into dst.
  void lower_into(const std::string &dst, const DExpr &d) {
    switch (d.k) {
    case DExpr::K::Const:
      emit(Stmt::mk_const(dst, d.cval, d.loc));
      return;
    case DExpr::K::NegInf:
      emit(Stmt::mk_neg_inf(dst, d.loc));
      return;
    case DExpr::K::Ref:
      if (is_int_name(d.name)) {
        emit(Stmt::mk_const(dst, Rat(static_cast<long>(env.at(d.name))), d.loc));
        return;
      }
      if (array_names.count(d.name))
        throw StructuredCtaError(d.loc.str() + ": array " + d.name +
                                 " used without index");
      emit(Stmt::mk_copy(dst, d.name, d.loc));
      return;
    case DExpr::K::Index:
      emit(Stmt::mk_load(dst, fold_addr(d.name, d.index, d.loc), d.loc));
      return;
    case DExpr::K::Bin: {
      std::string a = lower_val(d.kids[0]);
      std::string b = lower_val(d.kids[1]);
      emit_bin(dst, d.op, a, b, d.loc);
      return;
    }
    case DExpr::K::Neg: {
      std::string a = lower_val(d.kids[0]);
      emit(Stmt::mk_un(dst, Un::Neg, a, d.loc));
      return;
    }
    case DExpr::K::Exp: {
      std::string a = lower_val(d.kids[0]);
      emit(Stmt::mk_un(dst, Un::Exp, a, d.loc));
      return;
    }
    case DExpr::K::Max: {
      std::string a = lower_val(d.kids[0]);
      for (size_t i = 1; i < d.kids.size(); i++) {
        std::string b = lower_val(d.kids[i]);
        std::string t = i + 1 == d.kids.size() ? dst : fresh();
        emit(Stmt::mk_bin(t, Bin::Max, a, b, d.loc));
        a = t;
      }
      return;
    }
    }
    throw StructuredCtaError("internal: unknown data expression");
  }

  // `a - b` becomes neg + add; the instruction set has no subtraction.
  void emit_bin(const std::string &dst, char op, const std::string &a,
                const std::string &b, SrcLoc loc) {
    switch (op) {
    case '+':
      emit(Stmt::mk_bin(dst, Bin::Add, a, b, loc));
      return;
    case '-': {
      std::string t = fresh();
      emit(Stmt::mk_un(t, Un::Neg, b, loc));
      emit(Stmt::mk_bin(dst, Bin::Add, a, t, loc));
      return;
    }
    case '*':
      emit(Stmt::mk_bin(dst, Bin::Mul, a, b, loc));
      return;
    case '/':
      emit(Stmt::mk_bin(dst, Bin::Div, a, b, loc));
      return;
    }
    throw StructuredCtaError("internal: unknown data operator");
  }

  // Lower to a register holding the value; plain register references are
  // used in place.
  std::string lower_val(const DExpr &d) {
    if (d.k == DExpr::K::Ref && !is_int_name(d.name) &&
        !array_names.count(d.name))
      return d.name;
    std::string t = fresh();
    lower_into(t, d);
    return t;
  }

  TidSet warp_set(const WarpSpec &w, SrcLoc loc) {
    TidSet set;
    auto add_tid = [&](int64_t v) {
      if (v < 0 || v >= int64_t(n_threads))
        throw StructuredCtaError(loc.str() + ": out-of-range tid " +
                                 std::to_string(v) + " in sync set");
      set.insert(Tid(v));
    };
    switch (w.k) {
    case WarpSpec::K::TidList:
      for (const IExpr &e : w.tids)
        add_tid(ieval(e, "non-static sync set"));
      break;
    case WarpSpec::K::WarpIdx: {
      int64_t k = ieval(w.widx, "non-static sync set");
      int64_t lo = checked_bin('*', k, warp_size, loc);
      if (k < 0 || lo >= int64_t(n_threads))
        throw StructuredCtaError(loc.str() + ": out-of-range warp index " +
                                 std::to_string(k));
      for (int64_t t = lo; t < lo + warp_size && t < int64_t(n_threads); t++)
        set.insert(Tid(t));
      break;
    }
    case WarpSpec::K::WarpLanes: {
      int64_t k = ieval(w.widx, "non-static sync set");
      if (k < 0)
        throw StructuredCtaError(loc.str() + ": out-of-range warp index " +
                                 std::to_string(k));
      for (const IExpr &e : w.lanes) {
        int64_t lane = ieval(e, "non-static sync set");
        if (lane < 0 || lane >= int64_t(warp_size))
          throw StructuredCtaError(loc.str() + ": lane " +
                                   std::to_string(lane) +
                                   " outside warp of size " +
                                   std::to_string(warp_size));
        add_tid(checked_bin('+', checked_bin('*', k, warp_size, loc), lane,
                            loc));
      }
      break;
    }
    case WarpSpec::K::None:
      throw StructuredCtaError("internal: empty warp spec");
    }
    return set;
  }

  // Returns true if the thread hit `return`. Let bindings are scoped to the
  // enclosing block so loop bodies can re-bind them each iteration.
  bool walk(const std::vector<AStmt> &stmts) {
    std::vector<std::string> locals;
    bool ret = walk_inner(stmts, locals);
    for (const std::string &n : locals)
      env.erase(n);
    return ret;
  }

  bool walk_inner(const std::vector<AStmt> &stmts,
                  std::vector<std::string> &locals) {
    for (const AStmt &s : stmts) {
      switch (s.k) {
      case AStmt::K::Assign:
        do_assign(s);
        break;
      case AStmt::K::Let: {
        if (env.count(s.var) || array_names.count(s.var))
          throw StructuredCtaError(s.loc.str() + ": let binding " + s.var +
                                   " shadows an existing name");
        env[s.var] = ieval(s.init, "non-static let binding");
        locals.push_back(s.var);
        break;
      }
      case AStmt::K::For: {
        if (env.count(s.var) || array_names.count(s.var))
          throw StructuredCtaError(s.loc.str() + ": loop variable " + s.var +
                                   " shadows an existing name");
        int64_t lo = ieval(s.init, "non-static loop bound");
        int64_t hi = ieval(s.limit, "non-static loop bound");
        int64_t step = ieval(s.step, "non-static loop step");
        if (step < 1)
          throw StructuredCtaError(s.loc.str() +
                                   ": loop step must be positive");
        for (int64_t v = lo; s.limit_inclusive ? v <= hi : v < hi;
             v = checked_bin('+', v, step, s.loc)) {
          env[s.var] = v;
          if (walk(s.body)) {
            env.erase(s.var);
            return true;
          }
        }
        env.erase(s.var);
        break;
      }
      case AStmt::K::If: {
        const std::vector<AStmt> &branch = ceval(s.cond) ? s.body : s.els;
        if (walk(branch))
          return true;
        break;
      }
      case AStmt::K::Sync:
        emit(Stmt::mk_sync(TidSet::full(n_threads), s.loc));
        break;
      case AStmt::K::SyncWarp:
        emit(Stmt::mk_sync(warp_set(s.warp, s.loc), s.loc));
        break;
      case AStmt::K::Return:
        return true;
      }
    }
    return false;
  }

  void do_assign(const AStmt &s) {
    if (s.lv_is_index) {
      Addr addr = fold_addr(s.lv_name, s.lv_index, s.loc);
      if (s.asg_op == '=') {
        std::string v = lower_val(s.rhs);
        emit(Stmt::mk_store(addr, v, s.loc));
        return;
      }
      std::string old = fresh();
      emit(Stmt::mk_load(old, addr, s.loc));
      std::string b = lower_val(s.rhs);
      std::string res = fresh();
      emit_bin(res, s.asg_op, old, b, s.loc);
      emit(Stmt::mk_store(addr, res, s.loc));
      return;
    }
    if (is_int_name(s.lv_name))
      throw StructuredCtaError(s.loc.str() + ": cannot assign to " +
                               s.lv_name + ": it is a compile-time integer");
    if (array_names.count(s.lv_name))
      throw StructuredCtaError(s.loc.str() + ": array " + s.lv_name +
                               " assigned without index");
    if (s.asg_op == '=') {
      lower_into(s.lv_name, s.rhs);
      return;
    }
    std::string b = lower_val(s.rhs);
    emit_bin(s.lv_name, s.asg_op, s.lv_name, b, s.loc);
  }
};

void check_signature_lists(const KernelAst &ast, const LaunchConfig &cfg) {
  auto role_names = [&](Role r) {
    std::vector<std::string> v;
    for (const auto &a : ast.arrays)
      if (a.role == r)
        v.push_back(a.name);
    std::sort(v.begin(), v.end());
    return v;
  };
  auto check = [&](const std::vector<std::string> &want, Role r,
                   const char *what) {
    if (want.empty())
      return;
    std::vector<std::string> got = role_names(r);
    std::vector<std::string> w = want;
    std::sort(w.begin(), w.end());
    if (w != got) {
      std::string msg = std::string("config ") + what + " list {";
      for (size_t i = 0; i < w.size(); i++)
        msg += (i ? ", " : "") + w[i];
      msg += "} does not match kernel " + ast.name + "'s declarations {";
      for (size_t i = 0; i < got.size(); i++)
        msg += (i ? ", " : "") + got[i];
      msg += "}";
      throw StructuredCtaError(msg);
    }
  };
  check(cfg.inputs, Role::In, "inputs");
  check(cfg.outputs, Role::Out, "outputs");
}

} // namespace

KernelAst parse_kernel(const std::string &text) {
  Parser p{lex(text)};
  return p.kernel();
}

LaunchConfig parse_config(const std::string &text) {
  LaunchConfig cfg;
  std::istringstream in(text);
  std::string raw;
  uint32_t lineno = 0;
  auto fail = [&](const std::string &msg) {
    throw ParseError({lineno, 1}, msg);
  };
  auto parse_tid = [&](const std::string &v, const char *key) {
    try {
      size_t pos = 0;
      long long n = std::stoll(v, &pos);
      if (pos != v.size() || n < 1 || n > 1 << 20)
        fail(std::string(key) + " must be a positive integer");
      return Tid(n);
    } catch (const std::invalid_argument &) {
      fail(std::string(key) + " must be a positive integer");
    } catch (const std::out_of_range &) {
      fail(std::string(key) + " must be a positive integer");
    }
    return Tid(0);
  };
  auto parse_list = [&](const std::string &v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v + ",") {
      if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
        if (!cur.empty())
          out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    return out;
  };
  while (std::getline(in, raw)) {
    lineno++;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos)
      line = line.substr(0, h);
    auto notspace = [](unsigned char c) { return !std::isspace(c); };
    line.erase(line.begin(),
               std::find_if(line.begin(), line.end(), notspace));
    line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(),
               line.end());
    if (line.empty())
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(),
              key.end());
    val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
    if (key.empty() || val.empty())
      fail("expected 'key = value'");
    if (key == "version") {
      if (val != "1")
        fail("unsupported config version " + val);
    } else if (key == "threads") {
      cfg.threads = parse_tid(val, "threads");
    } else if (key == "threads_a") {
      cfg.threads_a = parse_tid(val, "threads_a");
    } else if (key == "threads_b") {
      cfg.threads_b = parse_tid(val, "threads_b");
    } else if (key == "warp_size") {
      cfg.warp_size = parse_tid(val, "warp_size");
    } else if (key.rfind("params.", 0) == 0) {
      std::string name = key.substr(7);
      if (name.empty())
        fail("empty parameter name");
      try {
        size_t pos = 0;
        long long n = std::stoll(val, &pos);
        if (pos != val.size())
          fail("parameter " + name + " must be an integer");
        cfg.params[name] = n;
      } catch (const std::invalid_argument &) {
        fail("parameter " + name + " must be an integer");
      } catch (const std::out_of_range &) {
        fail("parameter " + name + " out of range");
      }
    } else if (key == "inputs") {
      cfg.inputs = parse_list(val);
    } else if (key == "outputs") {
      cfg.outputs = parse_list(val);
    } else {
      fail("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

Program elaborate(const KernelAst &ast, const LaunchConfig &cfg,
                  Tid n_threads) {
  if (n_threads < 1)
    throw StructuredCtaError("thread count must be at least 1 (set threads, "
                             "threads_a, or threads_b in the config)");
  if (cfg.warp_size < 1)
    throw StructuredCtaError("warp size must be at least 1");
  check_signature_lists(ast, cfg);

  Elab el{ast, n_threads, cfg.warp_size, {}, {}, {}, 0, {}, nullptr, 0};
  for (const std::string &p : ast.params) {
    auto it = cfg.params.find(p);
    if (it == cfg.params.end())
      throw StructuredCtaError("parameter " + p + " of kernel " + ast.name +
                               " is not bound by the config");
    el.base_env[p] = it->second;
  }

  Program prog;
  prog.name = ast.name;
  prog.n_threads = n_threads;
  prog.warp_size = cfg.warp_size;
  for (const auto &d : ast.arrays) {
    el.env = el.base_env;
    int64_t size = el.ieval(d.size, "non-static array size");
    if (size < 1)
      throw StructuredCtaError(d.loc.str() + ": array " + d.name +
                               " must have positive size");
    el.array_sizes[d.name] = uint64_t(size);
    el.array_names.insert(d.name);
    prog.arrays.push_back({d.name, uint64_t(size), d.role});
  }

  prog.threads.resize(n_threads);
  for (Tid t = 0; t < n_threads; t++) {
    el.tid = t;
    el.env = el.base_env;
    el.env["tid"] = t;
    el.out = &prog.threads[t].stmts;
    el.temp_ctr = 0;
    el.walk(ast.body);
  }
  validate_structured(prog);
  return prog;
}

} // namespace ctaeq
