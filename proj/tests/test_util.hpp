#pragma once

// Shared test helpers: independent numeric oracles and a seeded random
// expression generator. The oracles deliberately avoid the library's own
// evaluation path.

#include <random>
#include <vector>

#include "ctaeq/expr.hpp"
#include "ctaeq/interval.hpp"

namespace ctaeq::testutil {

// Rational enclosure of e^q computed from the Taylor series with an explicit
// remainder bound; independent of eval_numeric. Requires |q| <= 8.
inline std::pair<Rat, Rat> exp_enclosure_rat(const Rat &q, int terms = 64) {
  Rat term(1), sum(1);
  for (int k = 1; k < terms; k++) {
    term *= q;
    term /= k;
    sum += term;
  }
  // |R| <= |q|^terms / terms! * sum_j (|q|/(terms+1))^j <= 2*|q|^terms/terms!
  Rat at = abs(q), tail(1);
  for (int k = 1; k <= terms; k++) {
    tail *= at;
    tail /= k;
  }
  tail *= 2;
  return {sum - tail, sum + tail};
}

// Deterministic random expressions. NegInfinity only ever appears as a Max
// argument; denominators avoid literal zero.
class ExprGen {
public:
  explicit ExprGen(uint64_t seed) : rng_(seed) {}

  Expr atom() {
    switch (rng_() % 4) {
    case 0:
      return cst((long)(rng_() % 7) - 3);
    case 1:
      return cst((long)(rng_() % 5) + 1, (long)(rng_() % 3) + 1);
    default:
      return var(names_[rng_() % names_.size()]);
    }
  }

  Expr gen(int depth) {
    if (depth <= 0)
      return atom();
    switch (rng_() % 8) {
    case 0:
      return add({gen(depth - 1), gen(depth - 1)});
    case 1:
      return add({gen(depth - 1), gen(depth - 1), gen(depth - 1)});
    case 2:
      return mul({gen(depth - 1), gen(depth - 1)});
    case 3:
      return neg(gen(depth - 1));
    case 4:
      return exp_e(gen(depth - 2 > 0 ? depth - 2 : 0));
    case 5: {
      std::vector<Expr> args;
      size_t n = 2 + rng_() % 2;
      for (size_t i = 0; i < n; i++)
        args.push_back(gen(depth - 1));
      if (rng_() % 4 == 0)
        args.push_back(neg_inf());
      return max_of(std::move(args));
    }
    case 6: {
      Expr den = nonzero_atom();
      if (rng_() % 2)
        den = add({den, var(names_[rng_() % names_.size()])});
      return div(gen(depth - 1), den);
    }
    default:
      return atom();
    }
  }

  Expr nonzero_atom() {
    if (rng_() % 2)
      return cst((long)(rng_() % 5) + 1);
    return exp_e(var(names_[rng_() % names_.size()]));
  }

  std::map<std::string, Rat> assignment(int lo = -3, int hi = 3) {
    std::map<std::string, Rat> a;
    for (const auto &n : names_)
      a[n] = Rat((long)(rng_() % (hi - lo + 1)) + lo);
    return a;
  }

  uint64_t raw() { return rng_(); }

private:
  std::mt19937_64 rng_;
  std::vector<std::string> names_{"x", "y", "z", "w"};
};

} // namespace ctaeq::testutil
