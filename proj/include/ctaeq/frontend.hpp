#pragma once

// Surface kernel language: parser and elaborator. Parsing yields a statement
// tree (KernelAst); elaboration fully unrolls it per thread against a
// LaunchConfig, folding every address, branch condition, loop bound, and sync
// set to concrete values, and rejects anything whose control flow or
// addressing depends on data.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctaeq/ir.hpp"

namespace ctaeq {

struct ParseError : std::runtime_error {
  SrcLoc loc;
  ParseError(SrcLoc l, const std::string &msg)
      : std::runtime_error(l.str() + ": " + msg), loc(l) {}
};

// Integer expressions: addresses, bounds, conditions, sync sets. Index nodes
// are syntactically legal so that data-dependent uses can be reported as
// such at elaboration time.
struct IExpr {
  enum class K : uint8_t { Const, Ident, Bin, Index };
  K k = K::Const;
  int64_t cval = 0;      // Const
  std::string name;      // Ident, Index (array)
  char op = 0;           // Bin: + - * / %
  std::vector<IExpr> kids; // Bin: 2; Index: 1 (the subscript)
  SrcLoc loc;
};

// Branch conditions: comparisons over integer expressions with && || !.
struct Cond {
  enum class K : uint8_t { Cmp, And, Or, Not };
  K k = K::Cmp;
  std::string op;        // Cmp: < <= > >= == !=
  IExpr a, b;            // Cmp
  std::vector<Cond> kids; // And/Or: 2, Not: 1
  SrcLoc loc;
};

// Data expressions: real-valued arithmetic.
struct DExpr {
  enum class K : uint8_t { Const, NegInf, Ref, Index, Bin, Neg, Exp, Max };
  K k = K::Const;
  Rat cval;              // Const
  std::string name;      // Ref, Index (array)
  char op = 0;           // Bin: + - * /
  IExpr index;           // Index
  std::vector<DExpr> kids;
  SrcLoc loc;
};

struct WarpSpec {
  enum class K : uint8_t { None, TidList, WarpIdx, WarpLanes };
  K k = K::None;
  std::vector<IExpr> tids;  // TidList
  IExpr widx;               // WarpIdx, WarpLanes
  std::vector<IExpr> lanes; // WarpLanes
};

struct AStmt {
  enum class K : uint8_t { Assign, Let, For, If, Sync, SyncWarp, Return };
  K k = K::Assign;
  SrcLoc loc;
  // Assign
  bool lv_is_index = false;
  std::string lv_name;
  IExpr lv_index;
  char asg_op = '='; // = + - * /
  DExpr rhs;
  // Let (compile-time integer binding) and For share var/init
  std::string var;
  IExpr init, limit, step;
  bool limit_inclusive = false;
  std::vector<AStmt> body; // For body / If then-branch
  // If
  Cond cond;
  std::vector<AStmt> els;
  // SyncWarp
  WarpSpec warp;
};

struct ArrayDeclAst {
  std::string name;
  Role role = Role::Scratch;
  IExpr size;
  SrcLoc loc;
};

struct KernelAst {
  std::string name;
  std::vector<ArrayDeclAst> arrays;
  std::vector<std::string> params;
  std::vector<AStmt> body;
};

KernelAst parse_kernel(const std::string &text);

// Launch configuration: `key = value` lines, `#` comments. Keys: version,
// threads, threads_a, threads_b, warp_size, params.<name>, inputs, outputs.
struct LaunchConfig {
  Tid threads = 0;   // sets both sides unless overridden
  Tid threads_a = 0;
  Tid threads_b = 0;
  Tid warp_size = 32;
  std::map<std::string, int64_t> params;
  std::vector<std::string> inputs, outputs;

  Tid for_a() const { return threads_a ? threads_a : threads; }
  Tid for_b() const { return threads_b ? threads_b : threads; }
};

LaunchConfig parse_config(const std::string &text);

// Guardrail against accidental huge unrolls.
constexpr size_t kMaxThreadStmts = size_t(1) << 20;

// Fully unrolls the kernel for n_threads threads. Throws StructuredCtaError
// on data-dependent control flow or addressing, non-static bounds, unbound
// parameters, out-of-range tid sets, or config/kernel signature mismatches.
Program elaborate(const KernelAst &ast, const LaunchConfig &cfg,
                  Tid n_threads);

} // namespace ctaeq
