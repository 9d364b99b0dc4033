#include "ctaeq/expr.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ctaeq {

namespace {

uint64_t hash_mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

uint64_t hash_mpz(const mpz_class &z) {
  uint64_t h = mpz_sgn(z.get_mpz_t()) < 0 ? 0x811c9dc5ULL : 0xcbf29ce4ULL;
  size_t limbs = mpz_size(z.get_mpz_t());
  for (size_t i = 0; i < limbs; i++)
    h = hash_mix(h, mpz_getlimbn(z.get_mpz_t(), i));
  return h;
}

uint64_t hash_rat(const Rat &q) {
  return hash_mix(hash_mpz(q.get_num()), hash_mpz(q.get_den()));
}

uint64_t node_hash(Kind k, const Rat &q, const std::string &name,
                   const std::vector<Expr> &kids) {
  uint64_t h = hash_mix(0x100001b3ULL, (uint64_t)k);
  switch (k) {
  case Kind::Const:
    h = hash_mix(h, hash_rat(q));
    break;
  case Kind::Var:
    for (char c : name)
      h = hash_mix(h, (uint64_t)(unsigned char)c);
    break;
  default:
    for (const Expr &e : kids)
      h = hash_mix(h, e.hash());
    break;
  }
  return h;
}

thread_local uint64_t tl_canon_created = 0;
thread_local int tl_canon_depth = 0;
std::atomic<uint64_t> g_canon_budget{10'000'000};
std::atomic<bool> g_cache_enabled{true};

void charge(uint64_t n) {
  if (tl_canon_depth == 0)
    return;
  tl_canon_created += n;
  if (tl_canon_created > g_canon_budget.load(std::memory_order_relaxed))
    throw BudgetError("canonicalize: node budget exceeded (" +
                      std::to_string(g_canon_budget.load()) + ")");
}

Expr make(Kind k, Rat q, std::string name, std::vector<Expr> kids) {
  charge(1);
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->value = std::move(q);
  n->name = std::move(name);
  n->kids = std::move(kids);
  n->hash = node_hash(n->kind, n->value, n->name, n->kids);
  return Expr(std::move(n));
}

const Rat kZero(0);
const Rat kOne(1);

void reject_neg_inf(const Expr &e, const char *where) {
  if (e.kind() == Kind::NegInf)
    throw ExprError(std::string("-inf is not a valid operand of ") + where);
}

} // namespace

bool Expr::structural_eq(const Expr &a, const Expr &b) {
  if (a.n_.get() == b.n_.get())
    return true;
  if (!a.n_ || !b.n_)
    return false;
  if (a.hash() != b.hash() || a.kind() != b.kind())
    return false;
  switch (a.kind()) {
  case Kind::Const:
    return a.value() == b.value();
  case Kind::Var:
    return a.name() == b.name();
  case Kind::NegInf:
    return true;
  default: {
    const auto &ka = a.kids(), &kb = b.kids();
    if (ka.size() != kb.size())
      return false;
    for (size_t i = 0; i < ka.size(); i++)
      if (!structural_eq(ka[i], kb[i]))
        return false;
    return true;
  }
  }
}

int Expr::compare(const Expr &a, const Expr &b) {
  if (a.n_.get() == b.n_.get())
    return 0;
  if ((int)a.kind() != (int)b.kind())
    return (int)a.kind() < (int)b.kind() ? -1 : 1;
  switch (a.kind()) {
  case Kind::Const:
    return cmp(a.value(), b.value());
  case Kind::Var:
    return a.name().compare(b.name());
  case Kind::NegInf:
    return 0;
  default: {
    const auto &ka = a.kids(), &kb = b.kids();
    if (ka.size() != kb.size())
      return ka.size() < kb.size() ? -1 : 1;
    for (size_t i = 0; i < ka.size(); i++)
      if (int c = compare(ka[i], kb[i]))
        return c;
    return 0;
  }
  }
}

Expr cst(Rat q) {
  q.canonicalize();
  return make(Kind::Const, std::move(q), {}, {});
}

Expr cst(long num, long den) {
  if (den == 0)
    throw ExprError("zero denominator");
  return cst(Rat(num, den));
}

Expr var(std::string name) {
  if (name.empty())
    throw ExprError("empty variable name");
  return make(Kind::Var, kZero, std::move(name), {});
}

Expr neg_inf() { return make(Kind::NegInf, kZero, {}, {}); }

bool is_const(const Expr &e) { return !e.null() && e.kind() == Kind::Const; }

bool is_const(const Expr &e, const Rat &v) {
  return is_const(e) && e.value() == v;
}

bool is_const(const Expr &e, long num, long den) {
  return is_const(e, Rat(num, den));
}

Expr add(std::vector<Expr> kids) {
  std::vector<Expr> flat;
  Rat c(0);
  for (const Expr &k : kids) {
    reject_neg_inf(k, "Add");
    if (k.kind() == Kind::Add) {
      for (const Expr &g : k.kids()) {
        if (g.kind() == Kind::Const)
          c += g.value();
        else
          flat.push_back(g);
      }
    } else if (k.kind() == Kind::Const) {
      c += k.value();
    } else {
      flat.push_back(k);
    }
  }
  if (c != 0 || flat.empty())
    flat.push_back(cst(c));
  if (flat.size() == 1)
    return flat[0];
  std::sort(flat.begin(), flat.end(),
            [](const Expr &a, const Expr &b) { return Expr::compare(a, b) < 0; });
  charge(flat.size());
  return make(Kind::Add, kZero, {}, std::move(flat));
}

Expr add2(const Expr &a, const Expr &b) { return add({a, b}); }

Expr mul(std::vector<Expr> kids) {
  std::vector<Expr> flat;
  Rat c(1);
  for (const Expr &k : kids) {
    reject_neg_inf(k, "Mul");
    if (k.kind() == Kind::Mul) {
      for (const Expr &g : k.kids()) {
        if (g.kind() == Kind::Const)
          c *= g.value();
        else
          flat.push_back(g);
      }
    } else if (k.kind() == Kind::Const) {
      c *= k.value();
    } else {
      flat.push_back(k);
    }
  }
  if (c == 0)
    return cst(0);
  if (c != 1 || flat.empty())
    flat.push_back(cst(c));
  if (flat.size() == 1)
    return flat[0];
  std::sort(flat.begin(), flat.end(),
            [](const Expr &a, const Expr &b) { return Expr::compare(a, b) < 0; });
  charge(flat.size());
  return make(Kind::Mul, kZero, {}, std::move(flat));
}

Expr mul2(const Expr &a, const Expr &b) { return mul({a, b}); }

Expr neg(const Expr &e) {
  reject_neg_inf(e, "Neg");
  if (e.kind() == Kind::Const)
    return cst(Rat(-e.value()));
  if (e.kind() == Kind::Neg)
    return e.kids()[0];
  return make(Kind::Neg, kZero, {}, {e});
}

Expr sub(const Expr &a, const Expr &b) { return add({a, neg(b)}); }

Expr div(const Expr &num, const Expr &den) {
  reject_neg_inf(num, "Div");
  reject_neg_inf(den, "Div");
  if (den.kind() == Kind::Const && den.value() == 0)
    throw ExprError("zero denominator");
  if (num.kind() == Kind::Const && den.kind() == Kind::Const)
    return cst(Rat(num.value() / den.value()));
  return make(Kind::Div, kZero, {}, {num, den});
}

Expr exp_e(const Expr &e) {
  reject_neg_inf(e, "Exp");
  if (e.kind() == Kind::Const && e.value() == 0)
    return cst(1);
  return make(Kind::Exp, kZero, {}, {e});
}

Expr max_of(std::vector<Expr> kids) {
  if (kids.empty())
    throw ExprError("Max needs at least one argument");
  std::vector<Expr> flat;
  bool saw_neg_inf = false;
  for (const Expr &k : kids) {
    if (k.kind() == Kind::Max) {
      for (const Expr &g : k.kids())
        flat.push_back(g);
    } else if (k.kind() == Kind::NegInf) {
      saw_neg_inf = true;
    } else {
      flat.push_back(k);
    }
  }
  if (flat.empty())
    return neg_inf(); // max over -inf only
  std::sort(flat.begin(), flat.end(),
            [](const Expr &a, const Expr &b) { return Expr::compare(a, b) < 0; });
  flat.erase(std::unique(flat.begin(), flat.end(),
                         [](const Expr &a, const Expr &b) { return a == b; }),
             flat.end());
  // fold all constant arguments into the largest one
  size_t ncst = 0;
  while (ncst < flat.size() && flat[ncst].kind() == Kind::Const)
    ncst++;
  if (ncst > 1) {
    // constants sort first; the last of them is the largest
    flat.erase(flat.begin(), flat.begin() + (ncst - 1));
  }
  (void)saw_neg_inf;
  if (flat.size() == 1)
    return flat[0];
  charge(flat.size());
  return make(Kind::Max, kZero, {}, std::move(flat));
}

// ---------------------------------------------------------------------------
// canonicalize

namespace {

// term = coeff * factors, factors sorted, none of them Const/Add/Mul/Neg
struct Term {
  Rat coeff;
  std::vector<Expr> factors;
};

struct VecExprLess {
  bool operator()(const std::vector<Expr> &a, const std::vector<Expr> &b) const {
    if (a.size() != b.size())
      return a.size() < b.size();
    for (size_t i = 0; i < a.size(); i++)
      if (int c = Expr::compare(a[i], b[i]))
        return c < 0;
    return false;
  }
};

using TermMap = std::map<std::vector<Expr>, Rat, VecExprLess>;

struct PtrHash {
  size_t operator()(const Expr &e) const {
    return std::hash<const void *>()(e.node());
  }
};
struct PtrEq {
  bool operator()(const Expr &a, const Expr &b) const { return a.same_node(b); }
};

thread_local std::unordered_map<Expr, Expr, PtrHash, PtrEq> tl_canon_cache;

struct CanonCtx {
  std::unordered_map<const ExprNode *, Expr> memo; // per-call, by identity

  Expr canon(const Expr &e);
  Expr canon_mul_kids(const std::vector<Expr> &kids);   // kids canonical
  Expr canon_add_kids(const std::vector<Expr> &kids);   // kids canonical
  Expr canon_div(const Expr &num, const Expr &den);     // both canonical
  Expr rebuild(TermMap &&terms);
  Expr finish_term(Term &&t);
  static void decompose(const Expr &e, std::vector<Term> &out);
  static Term decompose_one(const Expr &e);
};

void CanonCtx::decompose(const Expr &e, std::vector<Term> &out) {
  if (e.kind() == Kind::Add) {
    for (const Expr &k : e.kids())
      out.push_back(decompose_one(k));
  } else {
    out.push_back(decompose_one(e));
  }
}

Term CanonCtx::decompose_one(const Expr &e) {
  switch (e.kind()) {
  case Kind::Const:
    return {e.value(), {}};
  case Kind::Mul: {
    Term t{kOne, {}};
    for (const Expr &k : e.kids()) {
      if (k.kind() == Kind::Const)
        t.coeff *= k.value();
      else
        t.factors.push_back(k);
    }
    return t;
  }
  case Kind::Neg:
  case Kind::Add:
    throw ExprError("internal: decompose of non-canonical expression");
  default:
    return {kOne, {e}};
  }
}

// Merge all Exp factors of a term into one (e^a * e^b = e^(a+b)).
Expr merge_exp_factors(CanonCtx &cx, Term &t) {
  std::vector<Expr> exps, rest;
  for (Expr &f : t.factors) {
    if (f.kind() == Kind::Exp)
      exps.push_back(f.kids()[0]);
    else
      rest.push_back(std::move(f));
  }
  if (exps.size() > 1) {
    Expr arg = cx.canon_add_kids(exps);
    Expr merged = exp_e(arg); // folds exp(0) = 1
    if (!is_const(merged, 1))
      rest.push_back(merged);
  } else if (exps.size() == 1) {
    rest.push_back(exp_e(exps[0]));
  }
  std::sort(rest.begin(), rest.end(),
            [](const Expr &a, const Expr &b) { return Expr::compare(a, b) < 0; });
  t.factors = std::move(rest);
  return Expr();
}

Expr CanonCtx::finish_term(Term &&t) {
  if (t.coeff == 0)
    return cst(0);
  std::vector<Expr> kids = std::move(t.factors);
  if (t.coeff != 1 || kids.empty())
    kids.push_back(cst(t.coeff));
  return mul(std::move(kids));
}

Expr CanonCtx::rebuild(TermMap &&terms) {
  std::vector<Expr> out;
  for (auto &[factors, coeff] : terms) {
    if (coeff == 0)
      continue;
    Term t{coeff, factors};
    out.push_back(finish_term(std::move(t)));
  }
  if (out.empty())
    return cst(0);
  return add(std::move(out));
}

Expr CanonCtx::canon_add_kids(const std::vector<Expr> &kids) {
  TermMap terms;
  std::vector<Term> parts;
  for (const Expr &k : kids)
    decompose(k, parts);
  charge(parts.size());
  for (Term &t : parts)
    terms[std::move(t.factors)] += t.coeff;
  return rebuild(std::move(terms));
}

Expr CanonCtx::canon_mul_kids(const std::vector<Expr> &kids) {
  Rat coeff(1);
  std::vector<Expr> factors;
  std::vector<std::vector<Term>> sums;
  for (const Expr &k : kids) {
    switch (k.kind()) {
    case Kind::Const:
      coeff *= k.value();
      break;
    case Kind::Add: {
      std::vector<Term> ts;
      decompose(k, ts);
      sums.push_back(std::move(ts));
      break;
    }
    case Kind::Mul: {
      Term t = decompose_one(k);
      coeff *= t.coeff;
      for (Expr &f : t.factors)
        factors.push_back(std::move(f));
      break;
    }
    case Kind::Neg:
      throw ExprError("internal: canon_mul of non-canonical expression");
    default:
      factors.push_back(k);
      break;
    }
  }
  if (coeff == 0)
    return cst(0);
  std::vector<Term> acc;
  acc.push_back({coeff, std::move(factors)});
  for (const auto &sum : sums) {
    std::vector<Term> next;
    charge((uint64_t)acc.size() * sum.size());
    next.reserve(acc.size() * sum.size());
    for (const Term &a : acc) {
      for (const Term &s : sum) {
        Term t;
        t.coeff = a.coeff * s.coeff;
        t.factors = a.factors;
        t.factors.insert(t.factors.end(), s.factors.begin(), s.factors.end());
        next.push_back(std::move(t));
      }
    }
    acc = std::move(next);
  }
  TermMap terms;
  for (Term &t : acc) {
    merge_exp_factors(*this, t);
    if (t.coeff != 0)
      terms[std::move(t.factors)] += t.coeff;
  }
  return rebuild(std::move(terms));
}

// Rebuild a canonical term scaled by s (s != 0).
Expr scale_term(const Expr &e, const Rat &s) {
  Term t = CanonCtx::decompose_one(e);
  t.coeff *= s;
  std::vector<Expr> kids = std::move(t.factors);
  kids.push_back(cst(t.coeff));
  return mul(std::move(kids));
}

// Split e into (rational coefficient, primitive core). For sums the
// coefficient is the content (gcd of term numerators over lcm of term
// denominators), signed so that the term with the smallest factor vector
// keeps a positive coefficient; that choice is scale-invariant, which makes
// the extraction idempotent.
std::pair<Rat, Expr> split_coeff(const Expr &e) {
  if (e.kind() == Kind::Const)
    return {e.value(), cst(1)};
  if (e.kind() == Kind::Mul) {
    Rat c(1);
    std::vector<Expr> rest;
    for (const Expr &k : e.kids()) {
      if (k.kind() == Kind::Const)
        c *= k.value();
      else
        rest.push_back(k);
    }
    return {c, mul(std::move(rest))};
  }
  if (e.kind() == Kind::Add) {
    mpz_class g(0), l(1);
    const std::vector<Expr> *min_factors = nullptr;
    bool min_negative = false;
    std::vector<Term> terms;
    terms.reserve(e.kids().size());
    for (const Expr &k : e.kids()) {
      terms.push_back(CanonCtx::decompose_one(k));
      const Term &t = terms.back();
      g = gcd(g, abs(t.coeff.get_num()));
      l = lcm(l, t.coeff.get_den());
      if (!min_factors || VecExprLess()(t.factors, *min_factors)) {
        min_factors = &t.factors;
        min_negative = t.coeff < 0;
      }
    }
    Rat content(g, l);
    content.canonicalize();
    if (min_negative)
      content = -content;
    if (content == kOne)
      return {kOne, e};
    Rat inv = kOne / content;
    std::vector<Expr> scaled;
    scaled.reserve(e.kids().size());
    for (const Expr &k : e.kids())
      scaled.push_back(scale_term(k, inv));
    return {content, add(std::move(scaled))};
  }
  return {kOne, e};
}

Expr CanonCtx::canon_div(const Expr &num, const Expr &den) {
  if (den.kind() == Kind::Const) {
    if (den.value() == 0)
      throw ExprError("zero denominator");
    return canon_mul_kids({cst(Rat(1 / den.value())), num});
  }
  if (num.kind() == Kind::Const && num.value() == 0)
    return cst(0);
  auto [cn, ncore] = split_coeff(num);
  auto [cd, dcore] = split_coeff(den);
  if (ncore == dcore)
    return cst(Rat(cn / cd));
  Expr core = make(Kind::Div, kZero, {}, {ncore, dcore});
  if (cn == cd)
    return core;
  return canon_mul_kids({cst(Rat(cn / cd)), core});
}

Expr CanonCtx::canon(const Expr &e) {
  switch (e.kind()) {
  case Kind::Const:
  case Kind::Var:
  case Kind::NegInf:
    return e;
  default:
    break;
  }
  if (auto it = memo.find(e.node()); it != memo.end())
    return it->second;
  if (g_cache_enabled.load(std::memory_order_relaxed)) {
    if (auto it = tl_canon_cache.find(e); it != tl_canon_cache.end()) {
      memo.emplace(e.node(), it->second);
      return it->second;
    }
  }
  Expr r;
  switch (e.kind()) {
  case Kind::Add: {
    std::vector<Expr> kids;
    kids.reserve(e.kids().size());
    for (const Expr &k : e.kids())
      kids.push_back(canon(k));
    r = canon_add_kids(kids);
    break;
  }
  case Kind::Mul: {
    std::vector<Expr> kids;
    kids.reserve(e.kids().size());
    for (const Expr &k : e.kids())
      kids.push_back(canon(k));
    r = canon_mul_kids(kids);
    break;
  }
  case Kind::Neg:
    r = canon_mul_kids({cst(-1), canon(e.kids()[0])});
    break;
  case Kind::Div:
    r = canon_div(canon(e.kids()[0]), canon(e.kids()[1]));
    break;
  case Kind::Exp:
    r = exp_e(canon(e.kids()[0]));
    break;
  case Kind::Max: {
    std::vector<Expr> kids;
    kids.reserve(e.kids().size());
    for (const Expr &k : e.kids())
      kids.push_back(canon(k));
    r = max_of(std::move(kids));
    break;
  }
  default:
    throw ExprError("internal: unknown kind");
  }
  memo.emplace(e.node(), r);
  if (g_cache_enabled.load(std::memory_order_relaxed)) {
    tl_canon_cache.emplace(e, r);
    tl_canon_cache.emplace(r, r); // canonical forms are fixed points
  }
  return r;
}

struct CanonGuard {
  CanonGuard() {
    if (tl_canon_depth++ == 0)
      tl_canon_created = 0;
  }
  ~CanonGuard() { tl_canon_depth--; }
};

} // namespace

Expr canonicalize(const Expr &e) {
  if (e.null())
    throw ExprError("canonicalize of null expression");
  CanonGuard g;
  CanonCtx cx;
  return cx.canon(e);
}

void set_canon_cache_enabled(bool on) {
  g_cache_enabled.store(on);
  if (!on)
    tl_canon_cache.clear();
}

void clear_canon_cache() { tl_canon_cache.clear(); }

void set_canon_node_budget(uint64_t n) { g_canon_budget.store(n); }

uint64_t canon_node_budget() { return g_canon_budget.load(); }

// ---------------------------------------------------------------------------
// substitute / free_vars / to_string

namespace {

Expr subst_rec(const Expr &e, const std::map<std::string, Expr> &repl,
               std::unordered_map<const ExprNode *, Expr> &memo) {
  switch (e.kind()) {
  case Kind::Const:
  case Kind::NegInf:
    return e;
  case Kind::Var: {
    auto it = repl.find(e.name());
    return it == repl.end() ? e : it->second;
  }
  default:
    break;
  }
  if (auto it = memo.find(e.node()); it != memo.end())
    return it->second;
  std::vector<Expr> kids;
  kids.reserve(e.kids().size());
  for (const Expr &k : e.kids())
    kids.push_back(subst_rec(k, repl, memo));
  Expr r;
  switch (e.kind()) {
  case Kind::Add:
    r = add(std::move(kids));
    break;
  case Kind::Mul:
    r = mul(std::move(kids));
    break;
  case Kind::Neg:
    r = neg(kids[0]);
    break;
  case Kind::Div:
    r = div(kids[0], kids[1]);
    break;
  case Kind::Exp:
    r = exp_e(kids[0]);
    break;
  case Kind::Max:
    r = max_of(std::move(kids));
    break;
  default:
    throw ExprError("internal: unknown kind");
  }
  memo.emplace(e.node(), r);
  return r;
}

} // namespace

Expr substitute(const Expr &e, const std::map<std::string, Expr> &repl) {
  std::unordered_map<const ExprNode *, Expr> memo;
  return canonicalize(subst_rec(e, repl, memo));
}

void free_vars(const Expr &e, std::set<std::string> &out) {
  std::unordered_set<const ExprNode *> seen;
  std::vector<const ExprNode *> stack{e.node()};
  while (!stack.empty()) {
    const ExprNode *n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second)
      continue;
    if (n->kind == Kind::Var)
      out.insert(n->name);
    for (const Expr &k : n->kids)
      stack.push_back(k.node());
  }
}

std::set<std::string> free_vars(const Expr &e) {
  std::set<std::string> out;
  free_vars(e, out);
  return out;
}

namespace {

// precedence: Add 1, Mul 2, Div 2, Neg 3, atoms 4
int prec_of(const Expr &e) {
  switch (e.kind()) {
  case Kind::Add:
    return 1;
  case Kind::Mul:
  case Kind::Div:
    return 2;
  case Kind::Neg:
    return 3;
  default:
    return 4;
  }
}

void print(const Expr &e, int ctx, std::string &out) {
  int p = prec_of(e);
  bool paren = p < ctx;
  if (paren)
    out += '(';
  switch (e.kind()) {
  case Kind::Const: {
    const Rat &q = e.value();
    if (sgn(q) < 0) {
      // render through Neg-style parens when embedded in products
      out += q.get_str();
    } else {
      out += q.get_str();
    }
    break;
  }
  case Kind::Var:
    out += e.name();
    break;
  case Kind::NegInf:
    out += "-inf";
    break;
  case Kind::Add:
    for (size_t i = 0; i < e.kids().size(); i++) {
      if (i)
        out += " + ";
      print(e.kids()[i], 2, out);
    }
    break;
  case Kind::Mul:
    for (size_t i = 0; i < e.kids().size(); i++) {
      if (i)
        out += "*";
      print(e.kids()[i], 3, out);
    }
    break;
  case Kind::Div:
    print(e.kids()[0], 3, out);
    out += " / ";
    print(e.kids()[1], 3, out);
    break;
  case Kind::Neg:
    out += "-";
    print(e.kids()[0], 3, out);
    break;
  case Kind::Exp:
    out += "exp(";
    print(e.kids()[0], 0, out);
    out += ')';
    break;
  case Kind::Max:
    out += "max(";
    for (size_t i = 0; i < e.kids().size(); i++) {
      if (i)
        out += ", ";
      print(e.kids()[i], 0, out);
    }
    out += ')';
    break;
  }
  if (paren)
    out += ')';
}

} // namespace

std::string to_string(const Expr &e) {
  if (e.null())
    return "<null>";
  std::string out;
  print(e, 0, out);
  return out;
}

} // namespace ctaeq
