// ctaeq: equivalence checker for structured-CTA kernels.
//
// Subcommands:
//   check A B --config C [--jobs N] [--report PATH] [--emit-env DIR]
//   check --corpus [DIR]
//   exec K --config C [--schedule round-robin|random:SEED|trace:PATH]
//   enumerate K --config C [--limit L]
//   decide F G
//   fmt-env PATH
//
// Exit codes: 0 equivalent/ok, 1 not-equivalent (or corpus mismatch),
// 2 kernel error (race/deadlock/safety/structural), 3 unknown,
// 4 usage or I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctaeq/pipeline.hpp"

namespace {

using namespace ctaeq;

constexpr int kExitOk = 0;
constexpr int kExitNotEquivalent = 1;
constexpr int kExitKernelError = 2;
constexpr int kExitUnknown = 3;
constexpr int kExitUsage = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good())
    throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string basename_of(const std::string &path) {
  return std::filesystem::path(path).filename().string();
}

LaunchConfig load_config(const std::string &cfg_path) {
  try {
    return parse_config(read_file(cfg_path));
  } catch (const ParseError &e) {
    throw UsageError("config " + cfg_path + ": " + e.what());
  }
}

int exit_code_for(ReportVerdict v) {
  switch (v) {
  case ReportVerdict::Equivalent:
    return kExitOk;
  case ReportVerdict::NotEquivalent:
    return kExitNotEquivalent;
  case ReportVerdict::KernelAError:
  case ReportVerdict::KernelBError:
    return kExitKernelError;
  case ReportVerdict::Unknown:
    return kExitUnknown;
  }
  return kExitUsage;
}

void print_access(std::ostream &os, const AccessRef &a) {
  os << access_kind_str(a.kind) << " by tid " << a.tid << " at " << a.loc.line
     << ":" << a.loc.col;
}

void print_report(std::ostream &os, const Report &r) {
  os << "verdict: " << report_verdict_str(r.verdict) << "\n";
  os << "kernels: a=" << r.kernel_a << " b=" << r.kernel_b << "\n";
  if (!r.error_detail.empty())
    os << "error (kernel " << r.error_kernel << "): " << r.error_detail
       << "\n";
  for (const auto &race : r.races) {
    os << "race on " << race.addr.array << "[" << race.addr.offset << "]: ";
    print_access(os, race.first);
    os << " vs ";
    print_access(os, race.second);
    os << "\n";
  }
  for (const auto &f : r.safeties)
    os << "safety fault: " << f.str() << "\n";
  if (r.deadlock) {
    os << "deadlock";
    if (r.deadlock->conflict_tids)
      os << ": tids " << r.deadlock->conflict_tids->first << " and "
         << r.deadlock->conflict_tids->second
         << " wait on different sync sets";
    os << "\n";
  }
  for (const auto &vc : r.vcs) {
    os << "  " << vc.array << "[" << vc.index
       << "]: " << verdict_kind_str(vc.verdict.kind);
    if (vc.verdict.witness) {
      os << "  witness:";
      for (const auto &[name, val] : vc.verdict.witness->assignment)
        os << " " << name << "=" << val.get_str();
    }
    if (vc.verdict.kind == VerdictKind::Unknown &&
        !vc.verdict.reason.empty())
      os << "  (" << vc.verdict.reason << ")";
    os << "\n";
  }
  if (!r.side_conditions.empty()) {
    os << "side conditions (nonzero denominators):\n";
    for (const auto &sc : r.side_conditions)
      os << "  " << to_string(sc.denominator) << "  ["
         << (sc.discharged ? "discharged: positive" : "assumed") << "]\n";
  }
  os << "timings: parse " << r.t_parse << "s, exec " << r.t_exec_a << "s/"
     << r.t_exec_b << "s, decide " << r.t_decide << "s\n";
}

void write_report_json(const Report &r, const std::string &path) {
  auto j = report_to_json(r);
  if (path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.good())
    throw UsageError("cannot write " + path);
  out << j.dump(2) << "\n";
}

void emit_env(const Report &r, const std::string &dir) {
  std::filesystem::create_directories(dir);
  for (const auto &[name, env] :
       {std::pair{std::string("a.env"), &r.env_a},
        std::pair{std::string("b.env"), &r.env_b}}) {
    if (env->empty())
      continue;
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out.good())
      throw UsageError("cannot write " + dir + "/" + name);
    out << serialize_env(*env);
  }
}

Report run_check(const std::string &path_a, const std::string &path_b,
                 const std::string &cfg_path, unsigned jobs,
                 const DecideBudget &budget) {
  CheckRequest req;
  req.kernel_a_src = read_file(path_a);
  req.kernel_b_src = read_file(path_b);
  req.kernel_a_name = basename_of(path_a);
  req.kernel_b_name = basename_of(path_b);
  req.cfg = load_config(cfg_path);
  return check_equivalence(req, jobs, budget);
}

int cmd_check(const std::string &path_a, const std::string &path_b,
              const std::string &cfg_path, unsigned jobs,
              const std::string &report_path, const std::string &env_dir,
              const DecideBudget &budget) {
  Report r = run_check(path_a, path_b, cfg_path, jobs, budget);
  print_report(std::cout, r);
  if (!report_path.empty())
    write_report_json(r, report_path);
  if (!env_dir.empty())
    emit_env(r, env_dir);
  return exit_code_for(r.verdict);
}

int cmd_corpus(const std::string &dir, unsigned jobs,
               const DecideBudget &budget) {
  std::ifstream mf(std::filesystem::path(dir) / "manifest.txt");
  if (!mf.good())
    throw UsageError("cannot open " + dir + "/manifest.txt");
  std::string line;
  int mismatches = 0, pairs = 0;
  while (std::getline(mf, line)) {
    if (auto h = line.find('#'); h != std::string::npos)
      line.erase(h);
    std::istringstream ss(line);
    std::string ka, kb, cfg, expect;
    if (!(ss >> ka >> kb >> cfg >> expect))
      continue;
    pairs++;
    auto join = [&](const std::string &f) {
      return (std::filesystem::path(dir) / f).string();
    };
    Report r = run_check(join(ka), join(kb), join(cfg), jobs, budget);
    std::string got = report_verdict_str(r.verdict);
    bool ok = got == expect;
    if (!ok)
      mismatches++;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << ka << " vs " << kb
              << " (" << cfg << "): expected " << expect << ", got " << got
              << "\n";
  }
  std::cout << pairs - mismatches << "/" << pairs << " corpus pairs match\n";
  return mismatches == 0 ? kExitOk : kExitNotEquivalent;
}

SchedulePolicy parse_schedule(const std::string &s) {
  if (s.empty() || s == "round-robin")
    return SchedulePolicy::round_robin();
  if (s.rfind("random:", 0) == 0) {
    try {
      return SchedulePolicy::random(std::stoull(s.substr(7)));
    } catch (const std::exception &) {
      throw UsageError("bad schedule seed: " + s);
    }
  }
  if (s.rfind("trace:", 0) == 0)
    return SchedulePolicy::replay(parse_trace(read_file(s.substr(6))));
  throw UsageError("unknown schedule " + s +
                   " (expected round-robin, random:SEED or trace:PATH)");
}

// Parse + elaborate one kernel under the A-side thread count.
Program load_program(const std::string &kernel_path, const LaunchConfig &cfg) {
  KernelAst ast = parse_kernel(read_file(kernel_path));
  return elaborate(ast, cfg, cfg.for_a());
}

void print_shared(std::ostream &os, const SharedMem &shared) {
  for (const auto &[addr, val] : shared)
    os << "  " << addr.array << "[" << addr.offset
       << "] = " << to_string(val) << "\n";
}

int cmd_exec(const std::string &kernel_path, const std::string &cfg_path,
             const std::string &schedule) {
  LaunchConfig cfg = load_config(cfg_path);
  Program p = load_program(kernel_path, cfg);
  SharedMem init = make_symbolic_inputs(cfg, p.arrays);
  RunResult rr = run(p, init, parse_schedule(schedule));
  std::cout << "kernel " << p.name << ": " << rr.steps << " steps, "
            << rr.releases << " sync releases\n";
  for (const auto &race : rr.races)
    std::cout << "race: " << race.str() << "\n";
  for (const auto &f : rr.safeties)
    std::cout << "safety fault: " << f.str() << "\n";
  if (rr.deadlock)
    std::cout << "deadlock among "
              << rr.deadlock->threads.size() << " threads\n";
  if (rr.outcome.kind == Outcome::Kind::Final) {
    std::cout << "final shared memory:\n";
    print_shared(std::cout, rr.outcome.shared);
  }
  bool clean = rr.outcome.kind == Outcome::Kind::Final && rr.races.empty() &&
               rr.safeties.empty();
  return clean ? kExitOk : kExitKernelError;
}

int cmd_enumerate(const std::string &kernel_path, const std::string &cfg_path,
                  uint64_t limit) {
  LaunchConfig cfg = load_config(cfg_path);
  Program p = load_program(kernel_path, cfg);
  SharedMem init = make_symbolic_inputs(cfg, p.arrays);
  EnumResult er = enumerate_schedules(p, init, limit);
  std::cout << er.stats.states << " states, " << er.stats.transitions
            << " transitions, " << er.outcomes.size()
            << " distinct outcomes\n";
  if (er.stats.limit_exceeded) {
    std::cout << "state limit exceeded\n";
    return kExitUsage;
  }
  size_t finals = 0, faults = 0;
  for (const auto &o : er.outcomes)
    (o.kind == Outcome::Kind::Final ? finals : faults)++;
  std::cout << finals << " final environments, " << faults
            << " fault outcomes\n";
  for (const auto &o : er.outcomes) {
    if (o.kind == Outcome::Kind::Final)
      continue;
    if (o.race)
      std::cout << "race: " << o.race->str() << "\n";
    if (o.safety)
      std::cout << "safety fault: " << o.safety->str() << "\n";
    if (o.deadlock)
      std::cout << "deadlock among " << o.deadlock->threads.size()
                << " threads\n";
  }
  if (faults > 0)
    return kExitKernelError;
  // Confluence: the checked dynamics admit exactly one final environment.
  return finals == 1 ? kExitOk : kExitKernelError;
}

int cmd_decide(const std::string &path_f, const std::string &path_g,
               const DecideBudget &budget) {
  Expr f = deserialize_expr(read_file(path_f));
  Expr g = deserialize_expr(read_file(path_g));
  Verdict v = eq(f, g, budget);
  std::cout << "verdict: " << verdict_kind_str(v.kind) << "\n";
  if (v.witness) {
    std::cout << "witness:";
    for (const auto &[name, val] : v.witness->assignment)
      std::cout << " " << name << "=" << val.get_str();
    std::cout << "\n  f in " << v.witness->f_enclosure << "\n  g in "
              << v.witness->g_enclosure << "\n";
  }
  if (!v.reason.empty())
    std::cout << "reason: " << v.reason << "\n";
  for (const auto &sc : v.side_conditions)
    std::cout << "side condition: " << to_string(sc.denominator)
              << " nonzero  ["
              << (sc.discharged ? "discharged: positive" : "assumed")
              << "]\n";
  switch (v.kind) {
  case VerdictKind::Equal:
    return kExitOk;
  case VerdictKind::NotEqual:
    return kExitNotEquivalent;
  case VerdictKind::Unknown:
    return kExitUnknown;
  }
  return kExitUsage;
}

int cmd_fmt_env(const std::string &path) {
  auto env = deserialize_env(read_file(path));
  for (const auto &e : env)
    std::cout << e.array << "[" << e.index << "] = " << to_string(e.value)
              << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"equivalence checker for structured-CTA kernels"};
  app.require_subcommand(1);

  std::string path_a, path_b, cfg_path, report_path, env_dir;
  std::string schedule, path_f, path_g, env_path;
  unsigned jobs = 1;
  uint64_t limit = 1000000;
  bool corpus = false;

  auto *check = app.add_subcommand("check", "check two kernels for "
                                            "equivalence over the reals");
  check->add_option("A", path_a, "first kernel (or corpus dir with --corpus)");
  check->add_option("B", path_b, "second kernel");
  check->add_option("--config", cfg_path, "launch configuration file");
  check->add_option("--jobs", jobs, "parallel verification conditions");
  check->add_option("--report", report_path, "write JSON report (- = stdout)");
  check->add_option("--emit-env", env_dir,
                    "write final output environments to DIR/{a,b}.env");
  check->add_flag("--corpus", corpus,
                  "run every pair in the corpus manifest (default dir: "
                  "kernels)");

  auto *exec = app.add_subcommand("exec", "execute one kernel symbolically "
                                          "under checked dynamics");
  exec->add_option("K", path_a, "kernel file")->required();
  exec->add_option("--config", cfg_path, "launch configuration file")
      ->required();
  exec->add_option("--schedule", schedule,
                   "round-robin (default), random:SEED or trace:PATH");

  auto *enumerate = app.add_subcommand(
      "enumerate", "explore every schedule of the checked dynamics");
  enumerate->add_option("K", path_a, "kernel file")->required();
  enumerate->add_option("--config", cfg_path, "launch configuration file")
      ->required();
  enumerate->add_option("--limit", limit, "state budget");

  auto *decide = app.add_subcommand(
      "decide", "decide equality of two serialized expressions");
  decide->add_option("F", path_f, "first expression file")->required();
  decide->add_option("G", path_g, "second expression file")->required();

  auto *fmt = app.add_subcommand("fmt-env", "pretty-print an env file");
  fmt->add_option("PATH", env_path, "env file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    DecideBudget budget = DecideBudget::from_env();
    if (check->parsed()) {
      if (corpus)
        return cmd_corpus(path_a.empty() ? "kernels" : path_a, jobs, budget);
      if (path_a.empty() || path_b.empty() || cfg_path.empty())
        throw UsageError("check needs two kernels and --config "
                         "(or --corpus)");
      return cmd_check(path_a, path_b, cfg_path, jobs, report_path, env_dir,
                       budget);
    }
    if (exec->parsed())
      return cmd_exec(path_a, cfg_path, schedule);
    if (enumerate->parsed())
      return cmd_enumerate(path_a, cfg_path, limit);
    if (decide->parsed())
      return cmd_decide(path_f, path_g, budget);
    if (fmt->parsed())
      return cmd_fmt_env(env_path);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError &e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitKernelError;
  } catch (const StructuredCtaError &e) {
    std::cerr << "structural error: " << e.what() << "\n";
    return kExitKernelError;
  } catch (const TraceError &e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SerializeError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
