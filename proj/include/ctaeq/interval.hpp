#pragma once

#include <mpfr.h>

#include <map>
#include <string>

#include "ctaeq/expr.hpp"

namespace ctaeq {

// Closed interval [lo, hi] with directed-rounding endpoints at a fixed
// precision. Division by an interval containing zero yields an
// indeterminate value, which absorbs every further operation.
class Ival {
public:
  Ival();
  explicit Ival(unsigned prec);
  Ival(const Ival &o);
  Ival(Ival &&o) noexcept;
  Ival &operator=(Ival o);
  ~Ival();

  static Ival indeterminate();
  static Ival from_rat(const Rat &q, unsigned prec);
  static Ival neg_infinite(unsigned prec); // [-inf, -inf]

  static Ival add(const Ival &a, const Ival &b);
  static Ival mul(const Ival &a, const Ival &b);
  static Ival div(const Ival &a, const Ival &b);
  static Ival neg(const Ival &a);
  static Ival exp(const Ival &a);
  static Ival max(const Ival &a, const Ival &b);

  bool indet() const { return indet_; }
  unsigned prec() const { return prec_; }
  bool contains_zero() const;
  bool is_positive() const; // lo > 0
  bool disjoint(const Ival &o) const;
  bool contains(const Ival &o) const; // o subseteq this
  double lo_d() const;
  double hi_d() const;
  std::string str() const; // "[lo, hi]", deterministic

private:
  void ensure_init();
  mpfr_t lo_, hi_;
  unsigned prec_;
  bool indet_;
  bool init_;
  friend Ival eval_numeric(const Expr &, const std::map<std::string, Rat> &,
                           unsigned);
};

// Rigorous enclosure of e at a rational point. Every free Var of e must be
// assigned. NegInfinity is only expected under Max (or alone) and evaluates
// to -inf.
Ival eval_numeric(const Expr &e, const std::map<std::string, Rat> &assign,
                  unsigned prec);

} // namespace ctaeq
