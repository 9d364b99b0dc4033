#include "ctaeq/decide.hpp"

#include <cctype>
#include <cstdlib>
#include <random>

#include "ctaeq/interval.hpp"

namespace ctaeq {

// ---------------------------------------------------------------------------
// DecideBudget

DecideBudget DecideBudget::from_env() {
  DecideBudget b;
  const char *s = std::getenv("VOLTA_MINI_BUDGET");
  if (!s || !*s)
    return b;
  std::string t(s);
  bool all_digits = true;
  for (char ch : t)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      all_digits = false;
  const char *usage =
      "VOLTA_MINI_BUDGET: expected a monomial count or cases=N,monomials=M";
  try {
    if (all_digits) {
      b.max_monomials = std::stoull(t);
      return b;
    }
    size_t pos = 0;
    while (pos <= t.size()) {
      size_t comma = t.find(',', pos);
      std::string part =
          t.substr(pos, comma == std::string::npos ? std::string::npos
                                                   : comma - pos);
      size_t eq_at = part.find('=');
      if (eq_at == std::string::npos)
        throw std::runtime_error(usage);
      std::string key = part.substr(0, eq_at);
      std::string val = part.substr(eq_at + 1);
      if (val.empty())
        throw std::runtime_error(usage);
      for (char ch : val)
        if (!std::isdigit(static_cast<unsigned char>(ch)))
          throw std::runtime_error(usage);
      if (key == "cases")
        b.max_cases = std::stoull(val);
      else if (key == "monomials")
        b.max_monomials = std::stoull(val);
      else
        throw std::runtime_error(usage);
      if (comma == std::string::npos)
        break;
      pos = comma + 1;
    }
  } catch (const std::out_of_range &) {
    throw std::runtime_error(usage);
  } catch (const std::invalid_argument &) {
    throw std::runtime_error(usage);
  }
  return b;
}

// ---------------------------------------------------------------------------
// VarTable

uint32_t VarTable::id(const std::string &name) {
  auto it = ids_.find(name);
  if (it != ids_.end())
    return it->second;
  uint32_t n = static_cast<uint32_t>(names_.size());
  ids_.emplace(name, n);
  names_.push_back(name);
  return n;
}

// ---------------------------------------------------------------------------
// Poly

namespace {

int mono_cmp(const Poly::Mono &a, const Poly::Mono &b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    if (a[i].first != b[i].first)
      return a[i].first < b[i].first ? -1 : 1;
    if (a[i].second != b[i].second)
      return a[i].second < b[i].second ? -1 : 1;
  }
  if (a.size() != b.size())
    return a.size() < b.size() ? -1 : 1;
  return 0;
}

Poly::Mono mono_mul(const Poly::Mono &a, const Poly::Mono &b) {
  Poly::Mono out;
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i, ++j;
    } else if (a[i].first < b[j].first) {
      out.push_back(a[i++]);
    } else {
      out.push_back(b[j++]);
    }
  }
  for (; i < a.size(); ++i)
    out.push_back(a[i]);
  for (; j < b.size(); ++j)
    out.push_back(b[j]);
  return out;
}

} // namespace

Poly Poly::constant(const Rat &c) {
  Poly p;
  p.add_term({}, c);
  return p;
}

Poly Poly::variable(uint32_t id) {
  Poly p;
  p.add_term({{id, 1}}, Rat(1));
  return p;
}

void Poly::add_term(const Mono &m, const Rat &c) {
  if (sgn(c) == 0)
    return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0)
      terms_.erase(it);
  }
}

Poly Poly::add(const Poly &a, const Poly &b) {
  Poly out = a;
  for (const auto &[m, c] : b.terms_)
    out.add_term(m, c);
  return out;
}

Poly Poly::neg(const Poly &a) {
  Poly out;
  for (const auto &[m, c] : a.terms_)
    out.terms_.emplace(m, Rat(-c));
  return out;
}

Poly Poly::sub(const Poly &a, const Poly &b) { return add(a, neg(b)); }

Poly Poly::mul(const Poly &a, const Poly &b, const DecideBudget &budget) {
  Poly out;
  for (const auto &[ma, ca] : a.terms_)
    for (const auto &[mb, cb] : b.terms_) {
      out.add_term(mono_mul(ma, mb), Rat(ca * cb));
      if (out.terms_.size() > budget.max_monomials)
        throw BudgetError("monomial budget exceeded");
    }
  return out;
}

Poly Poly::scaled(const Rat &c) const {
  Poly out;
  if (sgn(c) == 0)
    return out;
  for (const auto &[m, v] : terms_)
    out.terms_.emplace(m, Rat(v * c));
  return out;
}

Rat Poly::constant_term() const {
  auto it = terms_.find({});
  return it == terms_.end() ? Rat(0) : it->second;
}

Poly Poly::without_constant() const {
  Poly out = *this;
  out.terms_.erase(Mono{});
  return out;
}

int Poly::compare(const Poly &a, const Poly &b) {
  auto ia = a.terms_.begin(), ib = b.terms_.begin();
  for (; ia != a.terms_.end() && ib != b.terms_.end(); ++ia, ++ib) {
    int mc = mono_cmp(ia->first, ib->first);
    if (mc != 0)
      return mc;
    int cc = cmp(ia->second, ib->second);
    if (cc != 0)
      return cc < 0 ? -1 : 1;
  }
  if (ia != a.terms_.end())
    return 1;
  if (ib != b.terms_.end())
    return -1;
  return 0;
}

std::string Poly::str(const VarTable &vars) const {
  if (terms_.empty())
    return "0";
  std::string out;
  bool first = true;
  for (const auto &[m, c] : terms_) {
    if (!first)
      out += " + ";
    first = false;
    bool coeff_one = (c == 1) && !m.empty();
    if (!coeff_one)
      out += c.get_str();
    bool lead = coeff_one;
    for (const auto &[id, e] : m) {
      if (!lead)
        out += "*";
      lead = false;
      out += vars.name(id);
      if (e > 1)
        out += "^" + std::to_string(e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ExpPolySum

void ExpPolySum::add_term(const ExpKey &k, const Poly &coeff) {
  if (coeff.is_zero())
    return;
  auto [it, inserted] = terms_.try_emplace(k, coeff);
  if (!inserted) {
    it->second = Poly::add(it->second, coeff);
    if (it->second.is_zero())
      terms_.erase(it);
  }
}

ExpPolySum ExpPolySum::add(const ExpPolySum &a, const ExpPolySum &b) {
  ExpPolySum out = a;
  for (const auto &[k, c] : b.terms_)
    out.add_term(k, c);
  return out;
}

ExpPolySum ExpPolySum::neg(const ExpPolySum &a) {
  ExpPolySum out;
  for (const auto &[k, c] : a.terms_)
    out.terms_.emplace(k, Poly::neg(c));
  return out;
}

ExpPolySum ExpPolySum::sub(const ExpPolySum &a, const ExpPolySum &b) {
  return add(a, neg(b));
}

ExpPolySum ExpPolySum::mul(const ExpPolySum &a, const ExpPolySum &b,
                           const DecideBudget &budget) {
  ExpPolySum out;
  for (const auto &[ka, ca] : a.terms_)
    for (const auto &[kb, cb] : b.terms_) {
      ExpKey k{Poly::add(ka.poly, kb.poly), Rat(ka.c + kb.c)};
      out.add_term(k, Poly::mul(ca, cb, budget));
      if (out.n_monomials() > budget.max_monomials)
        throw BudgetError("monomial budget exceeded");
    }
  return out;
}

size_t ExpPolySum::n_monomials() const {
  size_t n = 0;
  for (const auto &[k, c] : terms_)
    n += c.n_monomials();
  return n;
}

std::string ExpPolySum::str(const VarTable &vars) const {
  if (terms_.empty())
    return "0";
  std::string out;
  bool first = true;
  for (const auto &[k, c] : terms_) {
    if (!first)
      out += " + ";
    first = false;
    out += "(" + c.str(vars) + ")";
    if (!k.poly.is_zero() || sgn(k.c) != 0) {
      out += "*e^(" + k.poly.str(vars);
      if (sgn(k.c) != 0)
        out += " + " + k.c.get_str();
      out += ")";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// positive_definite

bool positive_definite(const Expr &e) {
  switch (e.kind()) {
  case Kind::Const:
    return sgn(e.value()) > 0;
  case Kind::NegInf:
  case Kind::Var:
  case Kind::Neg:
    return false;
  case Kind::Exp:
    return true;
  case Kind::Max: {
    for (const Expr &k : e.kids())
      if (positive_definite(k))
        return true;
    return false;
  }
  case Kind::Add:
  case Kind::Mul: {
    for (const Expr &k : e.kids())
      if (!positive_definite(k))
        return false;
    return true;
  }
  case Kind::Div:
    return positive_definite(e.kids()[0]) && positive_definite(e.kids()[1]);
  }
  return false;
}

// ---------------------------------------------------------------------------
// rationalize

ExprRatio rationalize(const Expr &e, std::vector<SideCondition> &conds) {
  switch (e.kind()) {
  case Kind::Const:
  case Kind::Var:
  case Kind::NegInf:
    return {e, cst(1)};
  case Kind::Neg: {
    ExprRatio r = rationalize(e.kids()[0], conds);
    return {neg(r.num), r.den};
  }
  case Kind::Add: {
    ExprRatio acc{cst(0), cst(1)};
    for (const Expr &k : e.kids()) {
      ExprRatio r = rationalize(k, conds);
      if (is_const(acc.den, 1) && is_const(r.den, 1)) {
        acc.num = add2(acc.num, r.num);
      } else {
        acc.num = add2(mul2(acc.num, r.den), mul2(r.num, acc.den));
        acc.den = mul2(acc.den, r.den);
      }
    }
    return acc;
  }
  case Kind::Mul: {
    ExprRatio acc{cst(1), cst(1)};
    for (const Expr &k : e.kids()) {
      ExprRatio r = rationalize(k, conds);
      acc.num = mul2(acc.num, r.num);
      acc.den = mul2(acc.den, r.den);
    }
    return acc;
  }
  case Kind::Div: {
    ExprRatio rn = rationalize(e.kids()[0], conds);
    ExprRatio rd = rationalize(e.kids()[1], conds);
    Expr cden = canonicalize(e.kids()[1]);
    conds.push_back({cden, positive_definite(cden)});
    return {mul2(rn.num, rd.den), mul2(rn.den, rd.num)};
  }
  case Kind::Exp: {
    ExprRatio r = rationalize(e.kids()[0], conds);
    if (is_const(r.den, 1))
      return {exp_e(r.num), cst(1)};
    if (is_const(r.den)) {
      Rat c = r.den.value();
      if (sgn(c) == 0)
        throw NotExpPolynomial("zero denominator inside an exponent");
      return {exp_e(mul2(r.num, cst(Rat(Rat(1) / c)))), cst(1)};
    }
    throw NotExpPolynomial("division inside an exponent");
  }
  case Kind::Max:
    throw NotExpPolynomial("max must be eliminated before conversion");
  }
  throw NotExpPolynomial("unsupported expression");
}

// ---------------------------------------------------------------------------
// to_exp_poly

namespace {

ExpPolySum eps_const(const Rat &c) {
  ExpPolySum s;
  s.add_term(ExpKey{Poly::zero(), Rat(0)}, Poly::constant(c));
  return s;
}

ExpPolySum eps_core(const Expr &e, VarTable &vars,
                    const DecideBudget &budget) {
  switch (e.kind()) {
  case Kind::Const:
    return eps_const(e.value());
  case Kind::Var: {
    ExpPolySum s;
    s.add_term(ExpKey{Poly::zero(), Rat(0)}, Poly::variable(vars.id(e.name())));
    return s;
  }
  case Kind::NegInf:
    throw NotExpPolynomial("-inf is not an exp-polynomial");
  case Kind::Neg:
    return ExpPolySum::neg(eps_core(e.kids()[0], vars, budget));
  case Kind::Add: {
    ExpPolySum s;
    for (const Expr &k : e.kids())
      s = ExpPolySum::add(s, eps_core(k, vars, budget));
    return s;
  }
  case Kind::Mul: {
    ExpPolySum s = eps_const(Rat(1));
    for (const Expr &k : e.kids())
      s = ExpPolySum::mul(s, eps_core(k, vars, budget), budget);
    return s;
  }
  case Kind::Exp: {
    ExpPolySum s = eps_core(e.kids()[0], vars, budget);
    Poly p = Poly::zero();
    if (!s.terms().empty()) {
      if (s.n_terms() != 1 ||
          !(s.terms().begin()->first == ExpKey{Poly::zero(), Rat(0)}))
        throw NotExpPolynomial("nested exponential");
      p = s.terms().begin()->second;
    }
    ExpPolySum out;
    out.add_term(ExpKey{p.without_constant(), p.constant_term()},
                 Poly::constant(Rat(1)));
    return out;
  }
  case Kind::Div:
    throw NotExpPolynomial("unexpected division after normalization");
  case Kind::Max:
    throw NotExpPolynomial("max must be eliminated before conversion");
  }
  throw NotExpPolynomial("unsupported expression");
}

} // namespace

ExpPolySum to_exp_poly(const Expr &e, VarTable &vars,
                       const DecideBudget &budget,
                       std::vector<SideCondition> *conds) {
  std::vector<SideCondition> local;
  std::vector<SideCondition> &cs = conds ? *conds : local;
  ExprRatio r = rationalize(e, cs);
  ExpPolySum num = eps_core(r.num, vars, budget);
  if (is_const(r.den, 1))
    return num;
  if (is_const(r.den)) {
    Rat c = r.den.value();
    if (sgn(c) == 0)
      throw NotExpPolynomial("zero denominator");
    Rat inv = Rat(1) / c;
    ExpPolySum out;
    for (const auto &[k, coeff] : num.terms())
      out.add_term(k, coeff.scaled(inv));
    return out;
  }
  throw NotExpPolynomial(
      "non-constant denominator; compare cross-multiplied numerators");
}

// ---------------------------------------------------------------------------
// side conditions

void collect_side_conditions(const Expr &e, std::vector<SideCondition> &out,
                             std::set<Expr> &seen) {
  if (e.kind() == Kind::Div) {
    Expr den = canonicalize(e.kids()[1]);
    if (seen.insert(den).second)
      out.push_back({den, positive_definite(den)});
  }
  for (const Expr &k : e.kids())
    collect_side_conditions(k, out, seen);
}

// ---------------------------------------------------------------------------
// Max handling

namespace {

bool contains_max(const Expr &e, std::map<const ExprNode *, bool> &memo) {
  if (e.kind() == Kind::Max)
    return true;
  if (e.kids().empty())
    return false;
  auto it = memo.find(e.node());
  if (it != memo.end())
    return it->second;
  bool found = false;
  for (const Expr &k : e.kids())
    if (contains_max(k, memo)) {
      found = true;
      break;
    }
  memo.emplace(e.node(), found);
  return found;
}

// First Max node in depth-first order whose arguments are max-free.
std::optional<Expr> find_split_target(const Expr &e,
                                      std::map<const ExprNode *, bool> &memo) {
  if (e.kind() == Kind::Max) {
    bool nested = false;
    for (const Expr &k : e.kids())
      if (contains_max(k, memo)) {
        nested = true;
        break;
      }
    if (!nested)
      return e;
  }
  for (const Expr &k : e.kids())
    if (auto t = find_split_target(k, memo))
      return t;
  return std::nullopt;
}

Expr replace_all(const Expr &e, const Expr &target, const Expr &repl,
                 std::map<const ExprNode *, Expr> &memo) {
  if (e == target)
    return repl;
  if (e.kids().empty())
    return e;
  auto it = memo.find(e.node());
  if (it != memo.end())
    return it->second;
  std::vector<Expr> ks;
  ks.reserve(e.kids().size());
  bool changed = false;
  for (const Expr &k : e.kids()) {
    Expr r = replace_all(k, target, repl, memo);
    if (!r.same_node(k))
      changed = true;
    ks.push_back(r);
  }
  Expr res = e;
  if (changed) {
    switch (e.kind()) {
    case Kind::Add:
      res = add(std::move(ks));
      break;
    case Kind::Mul:
      res = mul(std::move(ks));
      break;
    case Kind::Max:
      res = max_of(std::move(ks));
      break;
    case Kind::Neg:
      res = neg(ks[0]);
      break;
    case Kind::Exp:
      res = exp_e(ks[0]);
      break;
    case Kind::Div:
      res = div(ks[0], ks[1]);
      break;
    default:
      break;
    }
  }
  memo.emplace(e.node(), res);
  return res;
}

// Replaces every Max subtree (inner ones first) with a fresh variable; two
// structurally equal Max nodes get the same atom. Atom names use a prefix no
// surface identifier can produce.
Expr replace_max_atoms(const Expr &e, std::map<Expr, Expr> &atoms,
                       size_t &counter) {
  if (e.kids().empty())
    return e;
  std::vector<Expr> ks;
  ks.reserve(e.kids().size());
  for (const Expr &k : e.kids())
    ks.push_back(replace_max_atoms(k, atoms, counter));
  Expr res;
  switch (e.kind()) {
  case Kind::Add:
    res = add(std::move(ks));
    break;
  case Kind::Mul:
    res = mul(std::move(ks));
    break;
  case Kind::Max:
    res = max_of(std::move(ks));
    break;
  case Kind::Neg:
    res = neg(ks[0]);
    break;
  case Kind::Exp:
    res = exp_e(ks[0]);
    break;
  case Kind::Div:
    res = div(ks[0], ks[1]);
    break;
  default:
    res = e;
    break;
  }
  if (res.kind() != Kind::Max)
    return res;
  res = canonicalize(res);
  if (res.kind() != Kind::Max)
    return res;
  auto it = atoms.find(res);
  if (it != atoms.end())
    return it->second;
  Expr atom = var("!max" + std::to_string(counter++));
  atoms.emplace(res, atom);
  return atom;
}

void split_rec(const Expr &cur0, std::vector<std::pair<Expr, Expr>> ge,
               const DecideBudget &budget, std::vector<MaxCase> &out) {
  Expr cur = canonicalize(cur0);
  std::map<const ExprNode *, bool> cmemo;
  auto target = find_split_target(cur, cmemo);
  if (!target) {
    if (out.size() >= budget.max_cases)
      throw BudgetError("max-elimination case budget exceeded");
    out.push_back({std::move(ge), cur});
    return;
  }
  const auto &args = target->kids();
  for (size_t i = 0; i < args.size(); ++i) {
    // A constant negative difference to some rival means this argument can
    // never be the maximum: the case region is empty.
    bool empty_region = false;
    for (size_t j = 0; j < args.size() && !empty_region; ++j) {
      if (j == i)
        continue;
      try {
        Expr dd = canonicalize(sub(args[i], args[j]));
        if (is_const(dd) && sgn(dd.value()) < 0)
          empty_region = true;
      } catch (const ExprError &) {
      } catch (const BudgetError &) {
      }
    }
    if (empty_region)
      continue;
    auto ge2 = ge;
    for (size_t j = 0; j < args.size(); ++j)
      if (j != i)
        ge2.emplace_back(args[i], args[j]);
    std::map<const ExprNode *, Expr> rmemo;
    Expr cur2;
    try {
      cur2 = replace_all(cur, *target, args[i], rmemo);
    } catch (const ExprError &err) {
      throw NotExpPolynomial(std::string("case construction failed: ") +
                             err.what());
    }
    split_rec(cur2, std::move(ge2), budget, out);
  }
}

} // namespace

std::vector<MaxCase> split_max(const Expr &e, const DecideBudget &budget) {
  std::vector<MaxCase> out;
  split_rec(e, {}, budget, out);
  return out;
}

// ---------------------------------------------------------------------------
// refute_random

std::optional<Witness> refute_random(const Expr &f, const Expr &g,
                                     uint64_t trials, uint64_t seed) {
  std::set<std::string> names = free_vars(f);
  free_vars(g, names);
  std::mt19937_64 rng(seed);
  for (uint64_t t = 0; t < trials; ++t) {
    std::map<std::string, Rat> a;
    long box = 1 + static_cast<long>(t / 8);
    for (const std::string &n : names) {
      if (t == 0) {
        a[n] = Rat(0);
      } else {
        unsigned long span = static_cast<unsigned long>(2 * box + 1);
        a[n] = Rat(static_cast<long>(rng() % span) - box);
      }
    }
    for (unsigned prec : {64u, 128u, 192u, 256u}) {
      Ival fi = eval_numeric(f, a, prec);
      Ival gi = eval_numeric(g, a, prec);
      if (fi.indet() || gi.indet())
        continue;
      if (fi.disjoint(gi)) {
        Witness w;
        w.assignment = std::move(a);
        w.f_enclosure = fi.str();
        w.g_enclosure = gi.str();
        w.precision = prec;
        return w;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// eq

const char *verdict_kind_str(VerdictKind k) {
  switch (k) {
  case VerdictKind::Equal:
    return "equal";
  case VerdictKind::NotEqual:
    return "not_equal";
  case VerdictKind::Unknown:
    return "unknown";
  }
  return "unknown";
}

namespace {

// Zero test for a max-free expression: rationalize, then test the numerator.
// The numerator vanishes identically iff the expression does on the domain
// where its denominators are nonzero.
bool zero_by_exp_poly(const Expr &e, const DecideBudget &budget) {
  std::vector<SideCondition> tmp;
  ExprRatio r = rationalize(e, tmp);
  VarTable vars;
  return eps_core(r.num, vars, budget).is_zero();
}

} // namespace

Verdict eq(const Expr &f, const Expr &g, const DecideBudget &budget,
           uint64_t seed, uint64_t trials) {
  Verdict v;
  std::string reason;
  Expr cf, cg;
  bool canon_ok = false;
  try {
    cf = canonicalize(f);
    cg = canonicalize(g);
    canon_ok = true;
  } catch (const BudgetError &err) {
    reason = err.what();
  } catch (const ExprError &err) {
    reason = err.what();
  }
  if (canon_ok) {
    std::set<Expr> seen;
    collect_side_conditions(cf, v.side_conditions, seen);
    collect_side_conditions(cg, v.side_conditions, seen);
    if (cf == cg) {
      v.kind = VerdictKind::Equal;
      return v;
    }
    Expr d;
    bool have_d = false;
    try {
      d = canonicalize(sub(cf, cg));
      have_d = true;
    } catch (const ExprError &err) {
      reason = std::string("cannot form the difference: ") + err.what();
    } catch (const BudgetError &err) {
      reason = err.what();
    }
    if (have_d) {
      if (is_const(d, 0)) {
        v.kind = VerdictKind::Equal;
        return v;
      }
      std::map<const ExprNode *, bool> cmemo;
      bool has_max = contains_max(d, cmemo);
      // Opaque-max pass: distinct Max subtrees become fresh atoms. A zero
      // result is sound for arbitrary atom values, hence for the actual
      // maxima.
      bool opaque_done = false;
      try {
        Expr od = d;
        if (has_max) {
          std::map<Expr, Expr> atoms;
          size_t counter = 0;
          od = canonicalize(replace_max_atoms(d, atoms, counter));
        }
        if (zero_by_exp_poly(od, budget)) {
          v.kind = VerdictKind::Equal;
          return v;
        }
        opaque_done = true;
        if (!has_max)
          reason = "difference is a nonzero exp-polynomial";
      } catch (const NotExpPolynomial &err) {
        reason = err.what();
      } catch (const BudgetError &err) {
        reason = err.what();
      } catch (const ExprError &err) {
        reason = err.what();
      }
      // Full case analysis: the difference is zero iff it is zero in every
      // max-elimination case.
      if (has_max && (opaque_done || reason.empty())) {
        try {
          std::vector<MaxCase> cases = split_max(d, budget);
          bool all_zero = true;
          size_t bad = 0;
          for (size_t i = 0; i < cases.size(); ++i) {
            if (!zero_by_exp_poly(cases[i].expr, budget)) {
              all_zero = false;
              bad = i;
              break;
            }
          }
          if (all_zero) {
            v.kind = VerdictKind::Equal;
            return v;
          }
          reason = "max case " + std::to_string(bad) +
                   " is not identically zero";
        } catch (const NotExpPolynomial &err) {
          reason = err.what();
        } catch (const BudgetError &err) {
          reason = err.what();
        } catch (const ExprError &err) {
          reason = err.what();
        }
      }
    }
  }
  // No proof of equality: hunt for a rigorous separating point. Failing a
  // case does not by itself justify NotEqual (the case region may be empty),
  // so only a numeric witness produces that verdict.
  if (auto w = refute_random(f, g, trials, seed)) {
    v.kind = VerdictKind::NotEqual;
    v.witness = std::move(w);
    return v;
  }
  v.kind = VerdictKind::Unknown;
  if (reason.empty())
    reason = "no decision within budget";
  v.reason =
      reason + "; no separating point found in " + std::to_string(trials) +
      " trials";
  return v;
}

} // namespace ctaeq
