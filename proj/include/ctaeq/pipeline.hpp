#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctaeq/decide.hpp"
#include "ctaeq/frontend.hpp"
#include "ctaeq/serialize.hpp"
#include "ctaeq/symexec.hpp"

namespace ctaeq {

// One equivalence-check job: two kernel sources sharing a launch
// configuration. The kernels may use different thread counts, but their
// input and output array signatures must match.
struct CheckRequest {
  std::string kernel_a_src;
  std::string kernel_b_src;
  std::string kernel_a_name = "a";
  std::string kernel_b_name = "b";
  LaunchConfig cfg;
};

// Per-output-element verification condition: both sides' free variables are
// the shared input symbols, so they compare directly.
struct VC {
  std::string array;
  uint64_t index = 0;
  Expr lhs;
  Expr rhs;
};

enum class ReportVerdict {
  Equivalent,
  NotEquivalent,
  KernelAError,
  KernelBError,
  Unknown,
};
const char *report_verdict_str(ReportVerdict v);

struct VcResult {
  std::string array;
  uint64_t index = 0;
  Verdict verdict;
};

struct Report {
  ReportVerdict verdict = ReportVerdict::Unknown;
  std::string kernel_a;
  std::string kernel_b;
  std::vector<VcResult> vcs;
  // Payloads from the failing kernel when verdict is a kernel error.
  std::string error_kernel; // "a" or "b"
  std::string error_detail; // parse/structural/signature message
  std::vector<RaceReport> races;
  std::vector<SafetyReport> safeties;
  std::optional<DeadlockReport> deadlock;
  // Union of the side conditions of all VCs, deduplicated, in VC order.
  std::vector<SideCondition> side_conditions;
  // Wall-clock seconds per phase.
  double t_parse = 0, t_exec_a = 0, t_exec_b = 0, t_decide = 0;
  // Final output environments (present when the runs completed fault-free).
  std::vector<EnvEntry> env_a, env_b;
};

// Fresh input symbols named "<array>_<index>" for every element of every
// input array; output and scratch arrays start uninitialized.
SharedMem make_symbolic_inputs(const LaunchConfig &cfg,
                               const std::vector<ArrayDecl> &arrays);

// Full check: parse+elaborate both kernels, execute both against identical
// symbolic inputs under checked dynamics, build one VC per output element,
// decide them (up to `jobs` in parallel; the verdicts are independent of
// `jobs`), and assemble the report. Every failure becomes a Report verdict;
// this function does not throw on kernel-level problems.
Report check_equivalence(const CheckRequest &req, unsigned jobs = 1,
                         const DecideBudget &budget = {},
                         uint64_t trials = 64);

// Fixed-schema JSON rendering. Key order is deterministic; everything except
// the timings block is a pure function of the inputs.
nlohmann::ordered_json report_to_json(const Report &r);

// Output-array environment of a completed run, sorted by array then index.
std::vector<EnvEntry> output_env(const SharedMem &shared,
                                 const std::vector<ArrayDecl> &arrays);

} // namespace ctaeq
