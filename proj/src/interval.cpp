#include "ctaeq/interval.hpp"

#include <algorithm>
#include <unordered_map>

namespace ctaeq {

Ival::Ival() : prec_(64), indet_(true), init_(false) {}

Ival::Ival(unsigned prec) : prec_(prec), indet_(false), init_(true) {
  mpfr_init2(lo_, prec_);
  mpfr_init2(hi_, prec_);
}

Ival::Ival(const Ival &o) : prec_(o.prec_), indet_(o.indet_), init_(o.init_) {
  if (init_) {
    mpfr_init2(lo_, prec_);
    mpfr_init2(hi_, prec_);
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }
}

Ival::Ival(Ival &&o) noexcept : prec_(o.prec_), indet_(o.indet_), init_(o.init_) {
  if (init_) {
    lo_[0] = o.lo_[0];
    hi_[0] = o.hi_[0];
    o.init_ = false;
  }
}

Ival &Ival::operator=(Ival o) {
  std::swap(prec_, o.prec_);
  std::swap(indet_, o.indet_);
  if (init_ && o.init_) {
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  } else if (o.init_) {
    lo_[0] = o.lo_[0];
    hi_[0] = o.hi_[0];
    init_ = true;
    o.init_ = false;
  } else if (init_) {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
    init_ = false;
  }
  return *this;
}

Ival::~Ival() {
  if (init_) {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }
}

Ival Ival::indeterminate() { return Ival(); }

Ival Ival::from_rat(const Rat &q, unsigned prec) {
  Ival r(prec);
  mpfr_set_q(r.lo_, q.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(r.hi_, q.get_mpq_t(), MPFR_RNDU);
  return r;
}

Ival Ival::neg_infinite(unsigned prec) {
  Ival r(prec);
  mpfr_set_inf(r.lo_, -1);
  mpfr_set_inf(r.hi_, -1);
  return r;
}

namespace {
bool bad(const mpfr_t x) { return mpfr_nan_p(x); }
} // namespace

Ival Ival::add(const Ival &a, const Ival &b) {
  if (a.indet_ || b.indet_)
    return indeterminate();
  Ival r(std::max(a.prec_, b.prec_));
  mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  if (bad(r.lo_) || bad(r.hi_))
    return indeterminate();
  return r;
}

Ival Ival::mul(const Ival &a, const Ival &b) {
  if (a.indet_ || b.indet_)
    return indeterminate();
  Ival r(std::max(a.prec_, b.prec_));
  mpfr_t t;
  mpfr_init2(t, r.prec_);
  const mpfr_srcptr as[2] = {a.lo_, a.hi_};
  const mpfr_srcptr bs[2] = {b.lo_, b.hi_};
  bool first = true, nan = false;
  for (int i = 0; i < 2; i++) {
    for (int j = 0; j < 2; j++) {
      mpfr_mul(t, as[i], bs[j], MPFR_RNDD);
      if (bad(t))
        nan = true;
      if (first || mpfr_less_p(t, r.lo_))
        mpfr_set(r.lo_, t, MPFR_RNDD);
      mpfr_mul(t, as[i], bs[j], MPFR_RNDU);
      if (bad(t))
        nan = true;
      if (first || mpfr_greater_p(t, r.hi_))
        mpfr_set(r.hi_, t, MPFR_RNDU);
      first = false;
    }
  }
  mpfr_clear(t);
  if (nan)
    return indeterminate();
  return r;
}

Ival Ival::div(const Ival &a, const Ival &b) {
  if (a.indet_ || b.indet_ || b.contains_zero())
    return indeterminate();
  Ival r(std::max(a.prec_, b.prec_));
  mpfr_t t;
  mpfr_init2(t, r.prec_);
  const mpfr_srcptr as[2] = {a.lo_, a.hi_};
  const mpfr_srcptr bs[2] = {b.lo_, b.hi_};
  bool first = true, nan = false;
  for (int i = 0; i < 2; i++) {
    for (int j = 0; j < 2; j++) {
      mpfr_div(t, as[i], bs[j], MPFR_RNDD);
      if (bad(t))
        nan = true;
      if (first || mpfr_less_p(t, r.lo_))
        mpfr_set(r.lo_, t, MPFR_RNDD);
      mpfr_div(t, as[i], bs[j], MPFR_RNDU);
      if (bad(t))
        nan = true;
      if (first || mpfr_greater_p(t, r.hi_))
        mpfr_set(r.hi_, t, MPFR_RNDU);
      first = false;
    }
  }
  mpfr_clear(t);
  if (nan)
    return indeterminate();
  return r;
}

Ival Ival::neg(const Ival &a) {
  if (a.indet_)
    return indeterminate();
  Ival r(a.prec_);
  mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
  mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
  return r;
}

Ival Ival::exp(const Ival &a) {
  if (a.indet_)
    return indeterminate();
  Ival r(a.prec_);
  mpfr_exp(r.lo_, a.lo_, MPFR_RNDD);
  mpfr_exp(r.hi_, a.hi_, MPFR_RNDU);
  return r;
}

Ival Ival::max(const Ival &a, const Ival &b) {
  if (a.indet_ || b.indet_)
    return indeterminate();
  Ival r(std::max(a.prec_, b.prec_));
  mpfr_max(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
  mpfr_max(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
  return r;
}

bool Ival::contains_zero() const {
  if (indet_)
    return true;
  return mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0;
}

bool Ival::is_positive() const { return !indet_ && mpfr_sgn(lo_) > 0; }

bool Ival::disjoint(const Ival &o) const {
  if (indet_ || o.indet_)
    return false;
  return mpfr_less_p(hi_, o.lo_) || mpfr_less_p(o.hi_, lo_);
}

bool Ival::contains(const Ival &o) const {
  if (indet_)
    return true;
  if (o.indet_)
    return false;
  return mpfr_lessequal_p(lo_, o.lo_) && mpfr_lessequal_p(o.hi_, hi_);
}

double Ival::lo_d() const { return indet_ ? 0.0 : mpfr_get_d(lo_, MPFR_RNDD); }
double Ival::hi_d() const { return indet_ ? 0.0 : mpfr_get_d(hi_, MPFR_RNDU); }

std::string Ival::str() const {
  if (indet_)
    return "[indeterminate]";
  char *s = nullptr;
  mpfr_asprintf(&s, "[%.17Rg, %.17Rg]", lo_, hi_);
  std::string out(s);
  mpfr_free_str(s);
  return out;
}

void Ival::ensure_init() {
  if (!init_) {
    mpfr_init2(lo_, prec_);
    mpfr_init2(hi_, prec_);
    init_ = true;
  }
}

namespace {

Ival eval_rec(const Expr &e, const std::map<std::string, Rat> &assign,
              unsigned prec,
              std::unordered_map<const ExprNode *, Ival> &memo) {
  if (auto it = memo.find(e.node()); it != memo.end())
    return it->second;
  Ival r;
  switch (e.kind()) {
  case Kind::Const:
    r = Ival::from_rat(e.value(), prec);
    break;
  case Kind::NegInf:
    r = Ival::neg_infinite(prec);
    break;
  case Kind::Var: {
    auto it = assign.find(e.name());
    if (it == assign.end())
      throw ExprError("eval_numeric: unassigned variable " + e.name());
    r = Ival::from_rat(it->second, prec);
    break;
  }
  case Kind::Add: {
    r = eval_rec(e.kids()[0], assign, prec, memo);
    for (size_t i = 1; i < e.kids().size(); i++)
      r = Ival::add(r, eval_rec(e.kids()[i], assign, prec, memo));
    break;
  }
  case Kind::Mul: {
    r = eval_rec(e.kids()[0], assign, prec, memo);
    for (size_t i = 1; i < e.kids().size(); i++)
      r = Ival::mul(r, eval_rec(e.kids()[i], assign, prec, memo));
    break;
  }
  case Kind::Neg:
    r = Ival::neg(eval_rec(e.kids()[0], assign, prec, memo));
    break;
  case Kind::Div:
    r = Ival::div(eval_rec(e.kids()[0], assign, prec, memo),
                  eval_rec(e.kids()[1], assign, prec, memo));
    break;
  case Kind::Exp:
    r = Ival::exp(eval_rec(e.kids()[0], assign, prec, memo));
    break;
  case Kind::Max: {
    r = eval_rec(e.kids()[0], assign, prec, memo);
    for (size_t i = 1; i < e.kids().size(); i++)
      r = Ival::max(r, eval_rec(e.kids()[i], assign, prec, memo));
    break;
  }
  }
  memo.emplace(e.node(), r);
  return r;
}

} // namespace

Ival eval_numeric(const Expr &e, const std::map<std::string, Rat> &assign,
                  unsigned prec) {
  std::unordered_map<const ExprNode *, Ival> memo;
  return eval_rec(e, assign, prec, memo);
}

} // namespace ctaeq
