#include "ctaeq/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace ctaeq {

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stable per-VC seed, independent of jobs and of the platform hash.
uint64_t fnv1a(const std::string &s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<const ArrayDecl *> arrays_with_role(const Program &p, Role role) {
  std::vector<const ArrayDecl *> out;
  for (const ArrayDecl &a : p.arrays)
    if (a.role == role)
      out.push_back(&a);
  std::sort(out.begin(), out.end(),
            [](const ArrayDecl *x, const ArrayDecl *y) {
              return x->name < y->name;
            });
  return out;
}

// In/Out declarations must agree between the kernels; scratch layout is
// private to each side.
std::optional<std::string> signature_mismatch(const Program &a,
                                              const Program &b) {
  for (Role role : {Role::In, Role::Out}) {
    auto as = arrays_with_role(a, role);
    auto bs = arrays_with_role(b, role);
    if (as.size() != bs.size())
      return "kernels declare a different number of " + role_str(role) +
             " arrays";
    for (size_t i = 0; i < as.size(); ++i) {
      if (as[i]->name != bs[i]->name)
        return role_str(role) + " array name mismatch: " + as[i]->name +
               " vs " + bs[i]->name;
      if (as[i]->size != bs[i]->size)
        return role_str(role) + " array " + as[i]->name +
               " size mismatch: " + std::to_string(as[i]->size) + " vs " +
               std::to_string(bs[i]->size);
    }
  }
  return std::nullopt;
}

// true when the run failed; copies every payload into the report.
bool harvest_errors(const RunResult &rr, Report &r) {
  if (rr.outcome.kind == Outcome::Kind::Final && rr.races.empty() &&
      rr.safeties.empty())
    return false;
  r.races = rr.races;
  r.safeties = rr.safeties;
  r.deadlock = rr.deadlock;
  return true;
}

std::optional<SafetyReport> missing_output(const Program &p,
                                           const SharedMem &shared) {
  for (const ArrayDecl *a : arrays_with_role(p, Role::Out))
    for (uint64_t i = 0; i < a->size; ++i) {
      Addr addr{a->name, static_cast<int64_t>(i)};
      if (!shared.count(addr)) {
        SafetyReport s;
        s.kind = SafetyKind::UninitMemoryRead;
        s.addr = addr;
        s.detail = "output element never written";
        return s;
      }
    }
  return std::nullopt;
}

} // namespace

const char *report_verdict_str(ReportVerdict v) {
  switch (v) {
  case ReportVerdict::Equivalent:
    return "equivalent";
  case ReportVerdict::NotEquivalent:
    return "not-equivalent";
  case ReportVerdict::KernelAError:
    return "kernel-A-error";
  case ReportVerdict::KernelBError:
    return "kernel-B-error";
  case ReportVerdict::Unknown:
    return "unknown";
  }
  return "unknown";
}

SharedMem make_symbolic_inputs(const LaunchConfig &cfg,
                               const std::vector<ArrayDecl> &arrays) {
  SharedMem mem;
  for (const std::string &name : cfg.inputs)
    for (const ArrayDecl &a : arrays) {
      if (a.name != name)
        continue;
      for (uint64_t i = 0; i < a.size; ++i)
        mem[Addr{a.name, static_cast<int64_t>(i)}] =
            var(a.name + "_" + std::to_string(i));
    }
  return mem;
}

std::vector<EnvEntry> output_env(const SharedMem &shared,
                                 const std::vector<ArrayDecl> &arrays) {
  std::vector<EnvEntry> out;
  std::vector<ArrayDecl> outs;
  for (const ArrayDecl &a : arrays)
    if (a.role == Role::Out)
      outs.push_back(a);
  std::sort(outs.begin(), outs.end(),
            [](const ArrayDecl &x, const ArrayDecl &y) {
              return x.name < y.name;
            });
  for (const ArrayDecl &a : outs)
    for (uint64_t i = 0; i < a.size; ++i) {
      auto it = shared.find(Addr{a.name, static_cast<int64_t>(i)});
      if (it != shared.end())
        out.push_back({a.name, i, it->second});
    }
  return out;
}

Report check_equivalence(const CheckRequest &req, unsigned jobs,
                         const DecideBudget &budget, uint64_t trials) {
  Report r;
  r.kernel_a = req.kernel_a_name;
  r.kernel_b = req.kernel_b_name;

  auto t0 = Clock::now();
  Program pa, pb;
  try {
    KernelAst ast = parse_kernel(req.kernel_a_src);
    pa = elaborate(ast, req.cfg, req.cfg.for_a());
    validate_structured(pa);
  } catch (const std::runtime_error &e) {
    r.verdict = ReportVerdict::KernelAError;
    r.error_kernel = "a";
    r.error_detail = e.what();
    r.t_parse = secs_since(t0);
    return r;
  }
  try {
    KernelAst ast = parse_kernel(req.kernel_b_src);
    pb = elaborate(ast, req.cfg, req.cfg.for_b());
    validate_structured(pb);
  } catch (const std::runtime_error &e) {
    r.verdict = ReportVerdict::KernelBError;
    r.error_kernel = "b";
    r.error_detail = e.what();
    r.t_parse = secs_since(t0);
    return r;
  }
  if (auto mism = signature_mismatch(pa, pb)) {
    r.verdict = ReportVerdict::KernelBError;
    r.error_kernel = "b";
    r.error_detail = *mism;
    r.t_parse = secs_since(t0);
    return r;
  }
  r.t_parse = secs_since(t0);

  SharedMem init = make_symbolic_inputs(req.cfg, pa.arrays);

  auto ta = Clock::now();
  RunResult ra = run(pa, init, SchedulePolicy::round_robin());
  r.t_exec_a = secs_since(ta);
  if (harvest_errors(ra, r)) {
    r.verdict = ReportVerdict::KernelAError;
    r.error_kernel = "a";
    return r;
  }
  if (auto miss = missing_output(pa, ra.outcome.shared)) {
    r.verdict = ReportVerdict::KernelAError;
    r.error_kernel = "a";
    r.safeties.push_back(*miss);
    return r;
  }
  r.env_a = output_env(ra.outcome.shared, pa.arrays);

  auto tb = Clock::now();
  RunResult rb = run(pb, init, SchedulePolicy::round_robin());
  r.t_exec_b = secs_since(tb);
  if (harvest_errors(rb, r)) {
    r.verdict = ReportVerdict::KernelBError;
    r.error_kernel = "b";
    return r;
  }
  if (auto miss = missing_output(pb, rb.outcome.shared)) {
    r.verdict = ReportVerdict::KernelBError;
    r.error_kernel = "b";
    r.safeties.push_back(*miss);
    return r;
  }
  r.env_b = output_env(rb.outcome.shared, pb.arrays);

  std::vector<VC> vcs;
  for (const ArrayDecl *a : arrays_with_role(pa, Role::Out))
    for (uint64_t i = 0; i < a->size; ++i) {
      Addr addr{a->name, static_cast<int64_t>(i)};
      vcs.push_back(
          {a->name, i, ra.outcome.shared.at(addr), rb.outcome.shared.at(addr)});
    }

  auto td = Clock::now();
  r.vcs.resize(vcs.size());
  auto decide_one = [&](size_t i) {
    const VC &vc = vcs[i];
    uint64_t seed = fnv1a(vc.array + "[" + std::to_string(vc.index) + "]");
    r.vcs[i] = {vc.array, vc.index, eq(vc.lhs, vc.rhs, budget, seed, trials)};
  };
#ifdef _OPENMP
  if (jobs > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(jobs))
    for (long i = 0; i < static_cast<long>(vcs.size()); ++i)
      decide_one(static_cast<size_t>(i));
  } else {
    for (size_t i = 0; i < vcs.size(); ++i)
      decide_one(i);
  }
#else
  (void)jobs;
  for (size_t i = 0; i < vcs.size(); ++i)
    decide_one(i);
#endif
  r.t_decide = secs_since(td);

  // Aggregate: union of side conditions in VC order, then the verdict.
  std::set<std::string> seen_conds;
  bool any_ne = false, any_unknown = false, residual = false;
  for (const VcResult &vr : r.vcs) {
    for (const SideCondition &sc : vr.verdict.side_conditions)
      if (seen_conds.insert(to_string(sc.denominator)).second) {
        r.side_conditions.push_back(sc);
        if (!sc.discharged)
          residual = true;
      }
    if (vr.verdict.kind == VerdictKind::NotEqual)
      any_ne = true;
    if (vr.verdict.kind == VerdictKind::Unknown)
      any_unknown = true;
  }
  if (any_ne)
    r.verdict = ReportVerdict::NotEquivalent;
  else if (any_unknown || residual)
    r.verdict = ReportVerdict::Unknown;
  else
    r.verdict = ReportVerdict::Equivalent;
  return r;
}

namespace {

nlohmann::ordered_json loc_json(const SrcLoc &loc) {
  return {{"line", loc.line}, {"col", loc.col}};
}

nlohmann::ordered_json access_json(const AccessRef &a) {
  nlohmann::ordered_json j;
  j["tid"] = a.tid;
  j["access"] = access_kind_str(a.kind);
  j["loc"] = loc_json(a.loc);
  j["step"] = a.step;
  return j;
}

nlohmann::ordered_json safety_json(const SafetyReport &s) {
  nlohmann::ordered_json j;
  j["kind"] = safety_kind_str(s.kind);
  j["tid"] = s.tid;
  j["loc"] = loc_json(s.loc);
  if (s.addr) {
    j["array"] = s.addr->array;
    j["offset"] = s.addr->offset;
  }
  if (!s.reg.empty())
    j["reg"] = s.reg;
  if (s.kind == SafetyKind::OutOfBounds)
    j["is_store"] = s.is_store;
  if (!s.detail.empty())
    j["detail"] = s.detail;
  j["step"] = s.step;
  return j;
}

} // namespace

nlohmann::ordered_json report_to_json(const Report &r) {
  nlohmann::ordered_json j;
  j["verdict"] = report_verdict_str(r.verdict);
  j["kernels"]["a"] = r.kernel_a;
  j["kernels"]["b"] = r.kernel_b;
  j["vcs"] = nlohmann::ordered_json::array();
  for (const VcResult &vr : r.vcs) {
    nlohmann::ordered_json v;
    v["array"] = vr.array;
    v["index"] = vr.index;
    v["verdict"] = verdict_kind_str(vr.verdict.kind);
    if (vr.verdict.witness) {
      const Witness &w = *vr.verdict.witness;
      nlohmann::ordered_json wj;
      for (const auto &[name, q] : w.assignment)
        wj["assignment"][name] = q.get_str();
      wj["f"] = w.f_enclosure;
      wj["g"] = w.g_enclosure;
      wj["precision"] = w.precision;
      v["witness"] = wj;
    }
    if (vr.verdict.kind == VerdictKind::Unknown)
      v["reason"] = vr.verdict.reason;
    j["vcs"].push_back(v);
  }
  if (!r.error_detail.empty()) {
    j["error"]["kernel"] = r.error_kernel;
    j["error"]["detail"] = r.error_detail;
  }
  if (!r.races.empty()) {
    j["race"]["pairs"] = nlohmann::ordered_json::array();
    for (const RaceReport &race : r.races) {
      nlohmann::ordered_json p;
      p["array"] = race.addr.array;
      p["offset"] = race.addr.offset;
      p["first"] = access_json(race.first);
      p["second"] = access_json(race.second);
      j["race"]["pairs"].push_back(p);
    }
  }
  if (r.deadlock) {
    nlohmann::ordered_json d;
    d["threads"] = nlohmann::ordered_json::array();
    for (const ThreadStatusReport &t : r.deadlock->threads) {
      nlohmann::ordered_json tj;
      tj["tid"] = t.tid;
      tj["state"] = thread_state_str(t.state);
      if (t.waiting)
        tj["waiting"] = t.waiting->to_vector();
      if (t.state == ThreadState::Blocked)
        tj["loc"] = loc_json(t.loc);
      d["threads"].push_back(tj);
    }
    if (r.deadlock->conflict_tids) {
      d["conflict_tids"] = {r.deadlock->conflict_tids->first,
                            r.deadlock->conflict_tids->second};
      d["conflict_sets"] = {r.deadlock->conflict_sets->first.to_vector(),
                            r.deadlock->conflict_sets->second.to_vector()};
    }
    j["deadlock"] = d;
  }
  if (!r.safeties.empty()) {
    j["safety"]["faults"] = nlohmann::ordered_json::array();
    for (const SafetyReport &s : r.safeties)
      j["safety"]["faults"].push_back(safety_json(s));
  }
  j["side_conditions"] = nlohmann::ordered_json::array();
  for (const SideCondition &sc : r.side_conditions)
    j["side_conditions"].push_back(
        {{"denominator", to_string(sc.denominator)},
         {"discharged", sc.discharged}});
  j["timings"]["parse"] = r.t_parse;
  j["timings"]["exec_a"] = r.t_exec_a;
  j["timings"]["exec_b"] = r.t_exec_b;
  j["timings"]["decide"] = r.t_decide;
  return j;
}

} // namespace ctaeq
