#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctaeq {

// Exact rational scalar. All expression constants are exact; no floating
// point enters the symbolic layer.
using Rat = mpq_class;

// Node kinds, ordered so canonical child sorting places constants first.
enum class Kind : uint8_t { Const, NegInf, Var, Exp, Max, Div, Neg, Mul, Add };

struct ExprError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Expr;

struct ExprNode {
  Kind kind;
  uint64_t hash;
  Rat value;              // Const
  std::string name;       // Var
  std::vector<Expr> kids; // the rest
};

// Immutable shared handle to an expression DAG node. Copies are cheap.
class Expr {
public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> n) : n_(std::move(n)) {}

  bool null() const { return !n_; }
  Kind kind() const { return n_->kind; }
  uint64_t hash() const { return n_->hash; }
  const Rat &value() const { return n_->value; }
  const std::string &name() const { return n_->name; }
  const std::vector<Expr> &kids() const { return n_->kids; }
  const ExprNode *node() const { return n_.get(); }
  bool same_node(const Expr &o) const { return n_.get() == o.n_.get(); }

  // Structural equality / deterministic total order (no pointer values).
  static bool structural_eq(const Expr &a, const Expr &b);
  static int compare(const Expr &a, const Expr &b);

  friend bool operator==(const Expr &a, const Expr &b) {
    return structural_eq(a, b);
  }
  friend bool operator!=(const Expr &a, const Expr &b) {
    return !structural_eq(a, b);
  }
  bool operator<(const Expr &o) const { return compare(*this, o) < 0; }

private:
  std::shared_ptr<const ExprNode> n_;
};

// Smart constructors. Each applies only local normalization: flattening of
// same-kind children (Add/Mul/Max), folding of constant arithmetic, identity
// and absorbing elements, canonical child ordering, and the -inf rules for
// Max. NegInfinity is legal only as a Max argument or on its own (register
// seed); anywhere else construction fails. A literal zero denominator fails.
Expr cst(Rat q);
Expr cst(long num, long den = 1);
Expr var(std::string name);
Expr neg_inf();
Expr add(std::vector<Expr> kids);
Expr add2(const Expr &a, const Expr &b);
Expr mul(std::vector<Expr> kids);
Expr mul2(const Expr &a, const Expr &b);
Expr neg(const Expr &e);
Expr sub(const Expr &a, const Expr &b);
Expr div(const Expr &num, const Expr &den);
Expr exp_e(const Expr &e);
Expr max_of(std::vector<Expr> kids);

bool is_const(const Expr &e);
bool is_const(const Expr &e, const Rat &v);
bool is_const(const Expr &e, long num, long den = 1);

// Full canonical form. Bottom-up: children first, then per node
//   max(-inf,x)=x  max(x,x)=x  max-flattening  (done by the constructors)
//   e^a * e^b = e^(a+b)
//   distribution of Mul over Add with like-term collection (E + (-E) = 0
//   falls out), Neg is eliminated into rational coefficients,
//   Div denominators lose their rational coefficient, Div by a constant is
//   folded, x/x = 1, 0/x = 0, exp(0) = 1, Max over constants is folded.
// Idempotent; results are cached per thread (cache is semantically
// transparent). Throws BudgetError when the node budget is exceeded.
Expr canonicalize(const Expr &e);

// Replace free Vars, then canonicalize the result.
Expr substitute(const Expr &e, const std::map<std::string, Expr> &repl);

void free_vars(const Expr &e, std::set<std::string> &out);
std::set<std::string> free_vars(const Expr &e);

// Infix rendering, deterministic (used in reports and diagnostics).
std::string to_string(const Expr &e);

// Canonicalization knobs. The cache is per thread; disabling it must not
// change any result. The budget counts nodes built during one top-level
// canonicalize call.
void set_canon_cache_enabled(bool on);
void clear_canon_cache();
void set_canon_node_budget(uint64_t n);
uint64_t canon_node_budget();

} // namespace ctaeq
