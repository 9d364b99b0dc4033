#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctaeq/expr.hpp"

namespace ctaeq {

// The expression cannot be put into exp-polynomial form (nested
// exponentials, -inf outside Max, a non-constant denominator where a
// polynomial is required, or a Max that was not eliminated first).
struct NotExpPolynomial : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resource caps for the decision procedure. Exceeding one raises
// BudgetError, which the top-level decision maps to Unknown.
struct DecideBudget {
  uint64_t max_cases = 10000;     // Max-elimination case leaves
  uint64_t max_monomials = 1000000; // monomials in any one polynomial product
  // Reads VOLTA_MINI_BUDGET: either a bare integer (monomial cap) or
  // "cases=N,monomials=M" (either key optional). Unset keeps defaults;
  // malformed text throws std::runtime_error.
  static DecideBudget from_env();
};

// Interned variable names; ids are dense and assigned in first-appearance
// order, so conversion results are deterministic.
class VarTable {
public:
  uint32_t id(const std::string &name);
  const std::string &name(uint32_t id) const { return names_.at(id); }
  size_t size() const { return names_.size(); }

private:
  std::map<std::string, uint32_t> ids_;
  std::vector<std::string> names_;
};

// Multivariate polynomial with exact rational coefficients. A monomial is a
// sorted (var id, exponent > 0) list; the zero polynomial stores no terms.
class Poly {
public:
  using Mono = std::vector<std::pair<uint32_t, uint32_t>>;

  static Poly zero() { return {}; }
  static Poly constant(const Rat &c);
  static Poly variable(uint32_t id);

  // Merges into an existing monomial; a vanishing coefficient is removed.
  void add_term(const Mono &m, const Rat &c);

  static Poly add(const Poly &a, const Poly &b);
  static Poly neg(const Poly &a);
  static Poly sub(const Poly &a, const Poly &b);
  static Poly mul(const Poly &a, const Poly &b, const DecideBudget &budget);
  Poly scaled(const Rat &c) const;

  bool is_zero() const { return terms_.empty(); }
  size_t n_monomials() const { return terms_.size(); }
  Rat constant_term() const;
  Poly without_constant() const;
  const std::map<Mono, Rat> &terms() const { return terms_; }

  static int compare(const Poly &a, const Poly &b);
  friend bool operator==(const Poly &a, const Poly &b) {
    return compare(a, b) == 0;
  }
  bool operator<(const Poly &o) const { return compare(*this, o) < 0; }

  std::string str(const VarTable &vars) const;

private:
  std::map<Mono, Rat> terms_;
};

// Key of one exponential term e^(poly + c): the exponent polynomial with its
// constant part split out and kept exact. Two terms merge only when both the
// polynomial and the constant match exactly.
struct ExpKey {
  Poly poly; // no constant monomial
  Rat c;

  friend bool operator==(const ExpKey &a, const ExpKey &b) {
    return Poly::compare(a.poly, b.poly) == 0 && a.c == b.c;
  }
  bool operator<(const ExpKey &o) const {
    int pc = Poly::compare(poly, o.poly);
    if (pc != 0)
      return pc < 0;
    return c < o.c;
  }
};

// Finite sum  sum_i coeff_i(x) * e^(key_i). Zero coefficient polynomials are
// never stored, so the zero test is emptiness.
class ExpPolySum {
public:
  void add_term(const ExpKey &k, const Poly &coeff);

  static ExpPolySum add(const ExpPolySum &a, const ExpPolySum &b);
  static ExpPolySum neg(const ExpPolySum &a);
  static ExpPolySum sub(const ExpPolySum &a, const ExpPolySum &b);
  static ExpPolySum mul(const ExpPolySum &a, const ExpPolySum &b,
                        const DecideBudget &budget);

  // Exactly the identically-zero test for the represented function: the sum
  // is the zero function iff every coefficient polynomial is zero, i.e. no
  // term is stored.
  bool is_zero() const { return terms_.empty(); }
  size_t n_terms() const { return terms_.size(); }
  size_t n_monomials() const;
  const std::map<ExpKey, Poly> &terms() const { return terms_; }

  std::string str(const VarTable &vars) const;

private:
  std::map<ExpKey, Poly> terms_;
};

// A denominator that must be nonzero for the compared expressions to be
// defined. `discharged` records that the syntactic positivity check proved
// it can never vanish.
struct SideCondition {
  Expr denominator;
  bool discharged = false;
};

// num/den with every division lifted to the top: e = num/den wherever all
// recorded denominators are nonzero. num and den are division-free.
struct ExprRatio {
  Expr num;
  Expr den;
};
ExprRatio rationalize(const Expr &e, std::vector<SideCondition> &conds);

// Syntactic check that e > 0 under every real assignment (sums and products
// of exponentials and positive constants, max with one positive branch).
bool positive_definite(const Expr &e);

// Collects the canonical denominators of every Div inside e (which must be
// canonical), deduplicated, each with its positivity-discharge flag.
void collect_side_conditions(const Expr &e, std::vector<SideCondition> &out,
                             std::set<Expr> &seen);

// Converts a max-free expression to exp-polynomial form. Division is
// tolerated only when the rationalized denominator is a nonzero constant
// (general denominators must be cross-multiplied by the caller, see eq);
// exponent arguments must rationalize to polynomials. The result satisfies
// e = sum exactly on the side-condition domain.
ExpPolySum to_exp_poly(const Expr &e, VarTable &vars,
                       const DecideBudget &budget = {},
                       std::vector<SideCondition> *conds = nullptr);

// One Max-elimination case: under the conjunction of constraints
// first >= second, e equals `expr` (which is max-free).
struct MaxCase {
  std::vector<std::pair<Expr, Expr>> ge;
  Expr expr;
};

// Eliminates every Max by case analysis. Each case replaces each Max node
// with one argument constrained to dominate the others; cases whose region
// is provably empty (a constant negative difference) are pruned. Every real
// assignment is covered by at least one emitted case, so e is identically
// zero iff every case expression is. Throws BudgetError past
// budget.max_cases leaves.
std::vector<MaxCase> split_max(const Expr &e, const DecideBudget &budget = {});

// A rational point where the two sides evaluate to provably disjoint
// enclosures, plus the enclosures and the MPFR precision that separated
// them.
struct Witness {
  std::map<std::string, Rat> assignment;
  std::string f_enclosure;
  std::string g_enclosure;
  unsigned precision = 0;
};

// Random search for a separating rational point. Trial 0 is the all-zeros
// point; later trials draw integer coordinates from a slowly growing box.
// Enclosures are evaluated at 64 bits and tightened up to 256 bits before a
// trial is abandoned. Deterministic in (trials, seed).
std::optional<Witness> refute_random(const Expr &f, const Expr &g,
                                     uint64_t trials, uint64_t seed);

enum class VerdictKind { Equal, NotEqual, Unknown };
const char *verdict_kind_str(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::Unknown;
  std::optional<Witness> witness; // NotEqual only
  std::string reason;             // Unknown only
  std::vector<SideCondition> side_conditions;
};

// Decides f = g as functions over the reals on the domain where every
// side-condition denominator is nonzero. Equal and NotEqual are definitive;
// Unknown is the only escape hatch (budget exhaustion, unsupported shape, or
// a nonzero difference with no rigorous witness found). Pure and safe to
// call from several threads at once.
Verdict eq(const Expr &f, const Expr &g, const DecideBudget &budget = {},
           uint64_t seed = 0, uint64_t trials = 64);

} // namespace ctaeq
