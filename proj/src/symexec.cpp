#include "ctaeq/symexec.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

namespace ctaeq {

namespace {

std::string loc_suffix(const SrcLoc &loc) {
  if (loc.line == 0)
    return "";
  return " (line " + loc.str() + ")";
}

} // namespace

// --- Race predicates and barrier effect -------------------------------------

bool no_racing_rd(Tid i, const std::map<Tid, TidSet> &readers) {
  for (const auto &[j, pending] : readers)
    if (i != j && pending.contains(i))
      return false;
  return true;
}

bool no_racing_rd(Tid i, const AddrEvents &x) {
  for (const auto &[j, ev] : x.readers)
    if (i != j && ev.pending.contains(i))
      return false;
  return true;
}

bool no_racing_wr(Tid i, const std::optional<std::pair<Tid, TidSet>> &writer) {
  if (!writer)
    return true;
  return i == writer->first || !writer->second.contains(i);
}

bool no_racing_wr(Tid i, const AddrEvents &x) {
  if (!x.writer)
    return true;
  return i == x.writer->tid || !x.writer->pending.contains(i);
}

void sync_mem(const TidSet &I, MemEvents &x) {
  for (auto it = x.begin(); it != x.end();) {
    AddrEvents &ev = it->second;
    for (auto rit = ev.readers.begin(); rit != ev.readers.end();) {
      if (I.contains(rit->first))
        rit->second.pending.subtract(I);
      if (rit->second.pending.empty())
        rit = ev.readers.erase(rit);
      else
        ++rit;
    }
    if (ev.writer && I.contains(ev.writer->tid)) {
      ev.writer->pending.subtract(I);
      if (ev.writer->pending.empty())
        ev.writer.reset();
    }
    if (ev.readers.empty() && !ev.writer)
      it = x.erase(it);
    else
      ++it;
  }
}

// --- Machine ----------------------------------------------------------------

std::string thread_state_str(ThreadState s) {
  switch (s) {
  case ThreadState::Runnable:
    return "runnable";
  case ThreadState::Blocked:
    return "blocked";
  case ThreadState::Returned:
    return "returned";
  }
  return "?";
}

std::string access_kind_str(AccessKind k) {
  return k == AccessKind::Read ? "read" : "write";
}

Machine Machine::initial(const Program &p, const SharedMem &init_shared) {
  Machine m;
  m.shared = init_shared;
  m.regs.resize(p.n_threads);
  m.pcs.assign(p.n_threads, 0);
  m.status.assign(p.n_threads, ThreadState::Runnable);
  m.blocked_on.resize(p.n_threads);
  for (Tid t = 0; t < p.n_threads; ++t)
    if (p.threads[t].stmts.empty())
      m.status[t] = ThreadState::Returned;
  return m;
}

bool Machine::all_returned() const {
  for (ThreadState s : status)
    if (s != ThreadState::Returned)
      return false;
  return true;
}

bool Machine::any_runnable() const {
  for (ThreadState s : status)
    if (s == ThreadState::Runnable)
      return true;
  return false;
}

std::string Machine::state_key() const {
  // steps and event provenance are excluded: states that differ only in how
  // they were reached must compare equal.
  std::ostringstream os;
  for (size_t t = 0; t < pcs.size(); ++t) {
    os << pcs[t] << ':' << static_cast<int>(status[t]);
    if (status[t] == ThreadState::Blocked)
      os << blocked_on[t].str();
    os << ';';
  }
  os << "|X|";
  for (const auto &[addr, ev] : mem_events) {
    os << addr.str() << "{";
    for (const auto &[j, rd] : ev.readers)
      os << j << "->" << rd.pending.str() << ',';
    os << '/';
    if (ev.writer)
      os << ev.writer->tid << "->" << ev.writer->pending.str();
    os << "}";
  }
  os << "|G|";
  for (const auto &[addr, v] : shared)
    os << addr.str() << '=' << to_string(v) << ';';
  os << "|R|";
  for (size_t t = 0; t < regs.size(); ++t) {
    os << t << '{';
    for (const auto &[name, v] : regs[t])
      os << name << '=' << to_string(v) << ';';
    os << '}';
  }
  return os.str();
}

// --- Reports ----------------------------------------------------------------

std::string RaceReport::str() const {
  std::ostringstream os;
  os << "race on " << addr.str() << ": " << access_kind_str(first.kind)
     << " by thread " << first.tid << loc_suffix(first.loc) << ", "
     << access_kind_str(second.kind) << " by thread " << second.tid
     << loc_suffix(second.loc);
  return os.str();
}

std::string DeadlockReport::str() const {
  std::ostringstream os;
  os << "deadlock:";
  bool first = true;
  for (const auto &t : threads) {
    if (t.state != ThreadState::Blocked)
      continue;
    os << (first ? " " : "; ") << "thread " << t.tid << " blocked at sync "
       << (t.waiting ? t.waiting->str() : std::string("?")) << loc_suffix(t.loc);
    first = false;
  }
  if (first)
    os << " no thread can advance";
  if (conflict_tids && conflict_sets)
    os << "; threads " << conflict_tids->first << " and "
       << conflict_tids->second << " wait on conflicting sets "
       << conflict_sets->first.str() << " and " << conflict_sets->second.str();
  return os.str();
}

std::string safety_kind_str(SafetyKind k) {
  switch (k) {
  case SafetyKind::UninitRegisterRead:
    return "uninitialized-register-read";
  case SafetyKind::UninitMemoryRead:
    return "uninitialized-memory-read";
  case SafetyKind::OutOfBounds:
    return "out-of-bounds";
  case SafetyKind::InvalidArithmetic:
    return "invalid-arithmetic";
  }
  return "?";
}

std::string SafetyReport::str() const {
  std::ostringstream os;
  switch (kind) {
  case SafetyKind::UninitRegisterRead:
    os << "uninitialized register read of " << reg << " by thread " << tid;
    break;
  case SafetyKind::UninitMemoryRead:
    os << "uninitialized memory read of " << (addr ? addr->str() : "?")
       << " by thread " << tid;
    break;
  case SafetyKind::OutOfBounds:
    os << "out-of-bounds " << (is_store ? "write to " : "read of ")
       << (addr ? addr->str() : "?") << " by thread " << tid;
    break;
  case SafetyKind::InvalidArithmetic:
    os << "invalid arithmetic in thread " << tid << ": " << detail;
    break;
  }
  os << loc_suffix(loc);
  return os.str();
}

Outcome Outcome::of_final(SharedMem shared, std::vector<RegFile> regs) {
  Outcome o;
  o.kind = Kind::Final;
  o.shared = std::move(shared);
  o.regs = std::move(regs);
  return o;
}

Outcome Outcome::of_race(RaceReport r) {
  Outcome o;
  o.kind = Kind::Race;
  o.race = std::move(r);
  return o;
}

Outcome Outcome::of_deadlock(DeadlockReport r) {
  Outcome o;
  o.kind = Kind::Deadlock;
  o.deadlock = std::move(r);
  return o;
}

Outcome Outcome::of_safety(SafetyReport r) {
  Outcome o;
  o.kind = Kind::Safety;
  o.safety = std::move(r);
  return o;
}

std::string Outcome::str() const {
  switch (kind) {
  case Kind::Final:
    return "final";
  case Kind::Race:
    return race->str();
  case Kind::Deadlock:
    return deadlock->str();
  case Kind::Safety:
    return safety->str();
  }
  return "?";
}

std::string outcome_key(const Outcome &o) {
  std::ostringstream os;
  switch (o.kind) {
  case Outcome::Kind::Final: {
    os << "FINAL|";
    for (const auto &[addr, v] : o.shared)
      os << addr.str() << '=' << to_string(v) << ';';
    os << '|';
    for (size_t t = 0; t < o.regs.size(); ++t) {
      os << t << '{';
      for (const auto &[name, v] : o.regs[t])
        os << name << '=' << to_string(v) << ';';
      os << '}';
    }
    break;
  }
  case Outcome::Kind::Race:
    os << "RACE|" << o.race->addr.str() << '|' << o.race->first.tid << ','
       << access_kind_str(o.race->first.kind) << ',' << o.race->first.loc.str()
       << '|' << o.race->second.tid << ','
       << access_kind_str(o.race->second.kind) << ','
       << o.race->second.loc.str();
    break;
  case Outcome::Kind::Deadlock: {
    os << "DEADLOCK|";
    for (const auto &t : o.deadlock->threads) {
      os << t.tid << ':' << thread_state_str(t.state);
      if (t.waiting)
        os << t.waiting->str();
      os << ';';
    }
    break;
  }
  case Outcome::Kind::Safety:
    os << "SAFETY|" << safety_kind_str(o.safety->kind) << '|' << o.safety->tid
       << '|' << o.safety->loc.str() << '|'
       << (o.safety->addr ? o.safety->addr->str() : o.safety->reg) << '|'
       << o.safety->is_store << '|' << o.safety->detail;
    break;
  }
  return os.str();
}

// --- Statement execution -----------------------------------------------------

namespace {

// Fault sink for collecting runs. Faults are deduplicated by identity so a
// rerun of the same statement pair reports once.
struct Collector {
  std::vector<RaceReport> races;
  std::vector<SafetyReport> safeties;
  std::set<std::string> race_keys;
  std::set<std::string> safety_keys;
  std::map<Addr, Expr> oob_cells; // values for reads outside the arrays
  uint64_t undef_ctr = 0;

  Expr fresh_undef() { return var("!undef" + std::to_string(undef_ctr++)); }

  void add_race(RaceReport r) {
    std::string key = outcome_key(Outcome::of_race(r));
    if (race_keys.insert(key).second)
      races.push_back(std::move(r));
  }
  void add_safety(SafetyReport r) {
    std::string key = outcome_key(Outcome::of_safety(r));
    if (safety_keys.insert(key).second)
      safeties.push_back(std::move(r));
  }
};

bool addr_in_bounds(const Program &p, const Addr &a) {
  const ArrayDecl *d = p.find_array(a.array);
  return d && a.offset >= 0 && static_cast<uint64_t>(a.offset) < d->size;
}

DeadlockReport make_deadlock_report(const Machine &m, const Program &p) {
  DeadlockReport rep;
  for (Tid t = 0; t < static_cast<Tid>(m.status.size()); ++t) {
    ThreadStatusReport tr;
    tr.tid = t;
    tr.state = m.status[t];
    if (m.status[t] == ThreadState::Blocked) {
      tr.waiting = m.blocked_on[t];
      tr.loc = p.threads[t].stmts[m.pcs[t]].loc;
    }
    rep.threads.push_back(std::move(tr));
  }
  for (size_t a = 0; a < rep.threads.size() && !rep.conflict_tids; ++a) {
    if (rep.threads[a].state != ThreadState::Blocked)
      continue;
    for (size_t b = a + 1; b < rep.threads.size(); ++b) {
      if (rep.threads[b].state != ThreadState::Blocked)
        continue;
      const TidSet &ia = *rep.threads[a].waiting;
      const TidSet &ib = *rep.threads[b].waiting;
      Tid ta = rep.threads[a].tid, tb = rep.threads[b].tid;
      if (ia != ib && ia.contains(ta) && ib.contains(ta) && ia.contains(tb) &&
          ib.contains(tb)) {
        rep.conflict_tids = {ta, tb};
        rep.conflict_sets = {ia, ib};
        break;
      }
    }
  }
  return rep;
}

// Executes one statement of runnable thread `tid`. Strict mode (col ==
// nullptr): the first fault is returned as an Outcome and the machine is left
// unchanged. Collecting mode: faults are recorded in col, missing values are
// seeded with fresh symbols, out-of-bounds stores are dropped, and execution
// continues; the return value is always empty.
std::optional<Outcome> step_impl(Machine &m, const Program &p, Tid tid,
                                 Collector *col) {
  const Stmt &s = p.threads[tid].stmts[m.pcs[tid]];
  RegFile &rf = m.regs[tid];
  const uint64_t at_step = m.steps;

  auto advance = [&]() {
    m.steps++;
    if (s.kind != StmtKind::Sync) {
      m.pcs[tid]++;
      if (m.pcs[tid] == p.threads[tid].stmts.size())
        m.status[tid] = ThreadState::Returned;
    }
  };

  // Reads a source register; on an uninitialized read either returns the
  // strict outcome (via fault) or seeds the register with a fresh symbol.
  std::optional<Outcome> fault;
  auto read_reg = [&](const std::string &name) -> std::optional<Expr> {
    auto it = rf.find(name);
    if (it != rf.end())
      return it->second;
    SafetyReport rep;
    rep.kind = SafetyKind::UninitRegisterRead;
    rep.tid = tid;
    rep.loc = s.loc;
    rep.reg = name;
    rep.step = at_step;
    if (!col) {
      fault = Outcome::of_safety(rep);
      return std::nullopt;
    }
    col->add_safety(rep);
    Expr v = col->fresh_undef();
    rf[name] = v;
    return v;
  };

  auto oob_safety = [&](const Addr &a, bool is_store) {
    SafetyReport rep;
    rep.kind = SafetyKind::OutOfBounds;
    rep.tid = tid;
    rep.loc = s.loc;
    rep.addr = a;
    rep.is_store = is_store;
    rep.step = at_step;
    if (!col)
      fault = Outcome::of_safety(rep);
    else
      col->add_safety(rep);
  };

  switch (s.kind) {
  case StmtKind::SetConst: {
    rf[s.set_const.dst] =
        s.set_const.neg_infinity ? neg_inf() : cst(s.set_const.value);
    advance();
    return std::nullopt;
  }
  case StmtKind::Copy: {
    auto v = read_reg(s.copy.src);
    if (!v)
      return fault;
    rf[s.copy.dst] = *v;
    advance();
    return std::nullopt;
  }
  case StmtKind::BinOp:
  case StmtKind::UnOp: {
    Expr v;
    std::string dst;
    try {
      if (s.kind == StmtKind::BinOp) {
        dst = s.bin_op.dst;
        auto a = read_reg(s.bin_op.a);
        if (!a)
          return fault;
        auto b = read_reg(s.bin_op.b);
        if (!b)
          return fault;
        switch (s.bin_op.op) {
        case Bin::Add:
          v = add2(*a, *b);
          break;
        case Bin::Mul:
          v = mul2(*a, *b);
          break;
        case Bin::Div:
          v = div(*a, *b);
          break;
        case Bin::Max:
          v = max_of({*a, *b});
          break;
        }
      } else {
        dst = s.un_op.dst;
        auto a = read_reg(s.un_op.a);
        if (!a)
          return fault;
        v = s.un_op.op == Un::Neg ? neg(*a) : exp_e(*a);
      }
      v = canonicalize(v);
    } catch (const ExprError &ex) {
      SafetyReport rep;
      rep.kind = SafetyKind::InvalidArithmetic;
      rep.tid = tid;
      rep.loc = s.loc;
      rep.reg = dst;
      rep.detail = ex.what();
      rep.step = at_step;
      if (!col)
        return Outcome::of_safety(rep);
      col->add_safety(rep);
      v = col->fresh_undef();
    }
    rf[dst] = v;
    advance();
    return std::nullopt;
  }
  case StmtKind::Load: {
    const Addr &a = s.load.addr;
    if (!addr_in_bounds(p, a)) {
      oob_safety(a, false);
      if (!col)
        return fault;
      auto [it, fresh] = col->oob_cells.try_emplace(a, Expr());
      if (fresh)
        it->second = col->fresh_undef();
      rf[s.load.dst] = it->second;
      advance();
      return std::nullopt;
    }
    AddrEvents &ev = m.mem_events[a];
    if (!no_racing_wr(tid, ev)) {
      RaceReport rep;
      rep.addr = a;
      rep.first = {ev.writer->tid, AccessKind::Write, ev.writer->loc,
                   ev.writer->step};
      rep.second = {tid, AccessKind::Read, s.loc, at_step};
      if (!col) {
        // Zero-entry inserted by operator[] is semantically absent.
        if (ev.readers.empty() && !ev.writer)
          m.mem_events.erase(a);
        return Outcome::of_race(rep);
      }
      col->add_race(rep);
    }
    auto it = m.shared.find(a);
    if (it == m.shared.end() && !col) {
      SafetyReport rep;
      rep.kind = SafetyKind::UninitMemoryRead;
      rep.tid = tid;
      rep.loc = s.loc;
      rep.addr = a;
      rep.step = at_step;
      if (ev.readers.empty() && !ev.writer)
        m.mem_events.erase(a);
      return Outcome::of_safety(rep);
    }
    ev.readers[tid] = {TidSet::full(p.n_threads), s.loc, at_step};
    if (it == m.shared.end()) {
      SafetyReport rep;
      rep.kind = SafetyKind::UninitMemoryRead;
      rep.tid = tid;
      rep.loc = s.loc;
      rep.addr = a;
      rep.step = at_step;
      col->add_safety(rep);
      it = m.shared.emplace(a, col->fresh_undef()).first;
    }
    rf[s.load.dst] = it->second;
    advance();
    return std::nullopt;
  }
  case StmtKind::Store: {
    const Addr &a = s.store.addr;
    if (!addr_in_bounds(p, a)) {
      oob_safety(a, true);
      if (!col)
        return fault;
      advance(); // the store is dropped; there is no cell to write
      return std::nullopt;
    }
    auto v = read_reg(s.store.src);
    if (!v)
      return fault;
    AddrEvents &ev = m.mem_events[a];
    if (!no_racing_rd(tid, ev)) {
      Tid j = 0;
      for (const auto &[r, rev] : ev.readers)
        if (r != tid && rev.pending.contains(tid)) {
          j = r;
          break;
        }
      RaceReport rep;
      rep.addr = a;
      rep.first = {j, AccessKind::Read, ev.readers.at(j).loc,
                   ev.readers.at(j).step};
      rep.second = {tid, AccessKind::Write, s.loc, at_step};
      if (!col) {
        if (ev.readers.empty() && !ev.writer)
          m.mem_events.erase(a);
        return Outcome::of_race(rep);
      }
      col->add_race(rep);
    }
    if (!no_racing_wr(tid, ev)) {
      RaceReport rep;
      rep.addr = a;
      rep.first = {ev.writer->tid, AccessKind::Write, ev.writer->loc,
                   ev.writer->step};
      rep.second = {tid, AccessKind::Write, s.loc, at_step};
      if (!col) {
        if (ev.readers.empty() && !ev.writer)
          m.mem_events.erase(a);
        return Outcome::of_race(rep);
      }
      col->add_race(rep);
    }
    ev.writer = WriteEvent{tid, TidSet::full(p.n_threads), s.loc, at_step};
    m.shared[a] = *v;
    advance();
    return std::nullopt;
  }
  case StmtKind::Sync: {
    m.status[tid] = ThreadState::Blocked;
    m.blocked_on[tid] = s.sync.set;
    advance();
    return std::nullopt;
  }
  }
  return std::nullopt;
}

} // namespace

std::optional<Outcome> step(Machine &m, const Program &p, Tid tid) {
  if (tid >= p.n_threads || m.status[tid] != ThreadState::Runnable)
    throw std::logic_error("step: thread is not runnable");
  return step_impl(m, p, tid, nullptr);
}

// --- Sync release -------------------------------------------------------------

std::vector<TidSet> releasable_syncs(const Machine &m) {
  std::vector<TidSet> candidates;
  for (size_t t = 0; t < m.status.size(); ++t) {
    if (m.status[t] != ThreadState::Blocked)
      continue;
    const TidSet &I = m.blocked_on[t];
    bool seen = false;
    for (const TidSet &c : candidates)
      if (c == I) {
        seen = true;
        break;
      }
    if (seen)
      continue;
    bool ok = true;
    bool any_blocked = false;
    for (Tid i : I.to_vector()) {
      if (i >= m.status.size()) {
        ok = false;
        break;
      }
      if (m.status[i] == ThreadState::Returned)
        continue;
      if (m.status[i] == ThreadState::Blocked && m.blocked_on[i] == I) {
        any_blocked = true;
        continue;
      }
      ok = false;
      break;
    }
    if (ok && any_blocked)
      candidates.push_back(I);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const TidSet &a, const TidSet &b) {
              return a.min_tid() < b.min_tid();
            });
  return candidates;
}

std::optional<TidSet> try_release_sync(Machine &m, const Program &p) {
  std::vector<TidSet> rel = releasable_syncs(m);
  if (rel.empty())
    return std::nullopt;
  const TidSet I = rel.front();
  sync_mem(I, m.mem_events);
  for (Tid i : I.to_vector()) {
    if (m.status[i] != ThreadState::Blocked || m.blocked_on[i] != I)
      continue;
    m.pcs[i]++;
    m.status[i] = m.pcs[i] == p.threads[i].stmts.size() ? ThreadState::Returned
                                                        : ThreadState::Runnable;
  }
  m.steps++;
  return I;
}

// --- Scheduled runs -------------------------------------------------------------

std::vector<TraceItem> parse_trace(const std::string &text) {
  std::vector<TraceItem> items;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (auto pos = line.find('#'); pos != std::string::npos)
      line.erase(pos);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok))
      continue;
    TraceItem item;
    auto parse_tid = [&](const std::string &t) -> Tid {
      size_t used = 0;
      unsigned long v = 0;
      try {
        v = std::stoul(t, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != t.size() || v > (1u << 20))
        throw TraceError("trace line " + std::to_string(lineno) +
                         ": expected a thread id, got '" + t + "'");
      return static_cast<Tid>(v);
    };
    if (tok == "SYNC") {
      item.is_sync = true;
      std::string t;
      while (ls >> t)
        item.set.insert(parse_tid(t));
      if (item.set.empty())
        throw TraceError("trace line " + std::to_string(lineno) +
                         ": SYNC needs at least one thread id");
    } else {
      item.tid = parse_tid(tok);
      std::string extra;
      if (ls >> extra)
        throw TraceError("trace line " + std::to_string(lineno) +
                         ": unexpected token '" + extra + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

SchedulePolicy SchedulePolicy::round_robin() { return SchedulePolicy{}; }

SchedulePolicy SchedulePolicy::random(uint64_t seed) {
  SchedulePolicy p;
  p.kind = Kind::Random;
  p.seed = seed;
  return p;
}

SchedulePolicy SchedulePolicy::replay(std::vector<TraceItem> items) {
  SchedulePolicy p;
  p.kind = Kind::Trace;
  p.trace = std::move(items);
  return p;
}

RunResult run(const Program &p, const SharedMem &init_shared,
              const SchedulePolicy &policy) {
  Machine m = Machine::initial(p, init_shared);
  Collector col;
  uint64_t releases = 0;

  auto release_exact = [&](const TidSet &I) -> bool {
    for (const TidSet &c : releasable_syncs(m))
      if (c == I) {
        sync_mem(I, m.mem_events);
        for (Tid i : I.to_vector()) {
          if (m.status[i] != ThreadState::Blocked || m.blocked_on[i] != I)
            continue;
          m.pcs[i]++;
          m.status[i] = m.pcs[i] == p.threads[i].stmts.size()
                            ? ThreadState::Returned
                            : ThreadState::Runnable;
        }
        m.steps++;
        releases++;
        return true;
      }
    return false;
  };

  switch (policy.kind) {
  case SchedulePolicy::Kind::RoundRobin: {
    while (!m.all_returned()) {
      bool progressed = false;
      for (Tid t = 0; t < p.n_threads; ++t) {
        while (m.status[t] == ThreadState::Runnable) {
          step_impl(m, p, t, &col);
          progressed = true;
        }
      }
      if (try_release_sync(m, p)) {
        progressed = true;
        releases++;
      }
      if (!progressed)
        break;
    }
    break;
  }
  case SchedulePolicy::Kind::Random: {
    std::mt19937_64 rng(policy.seed);
    for (;;) {
      if (m.all_returned())
        break;
      std::vector<Tid> runnable;
      for (Tid t = 0; t < p.n_threads; ++t)
        if (m.status[t] == ThreadState::Runnable)
          runnable.push_back(t);
      std::vector<TidSet> rel = releasable_syncs(m);
      size_t total = runnable.size() + rel.size();
      if (total == 0)
        break;
      size_t k = static_cast<size_t>(rng() % total);
      if (k < runnable.size()) {
        step_impl(m, p, runnable[k], &col);
      } else {
        release_exact(rel[k - runnable.size()]);
      }
    }
    break;
  }
  case SchedulePolicy::Kind::Trace: {
    size_t idx = 0;
    for (const TraceItem &item : policy.trace) {
      idx++;
      if (item.is_sync) {
        if (!release_exact(item.set))
          throw TraceError("trace item " + std::to_string(idx) + ": sync " +
                           item.set.str() + " is not releasable here");
      } else {
        if (item.tid >= p.n_threads)
          throw TraceError("trace item " + std::to_string(idx) + ": thread " +
                           std::to_string(item.tid) + " does not exist");
        if (m.status[item.tid] != ThreadState::Runnable)
          throw TraceError("trace item " + std::to_string(idx) + ": thread " +
                           std::to_string(item.tid) + " is " +
                           thread_state_str(m.status[item.tid]));
        step_impl(m, p, item.tid, &col);
      }
    }
    if (!m.all_returned() &&
        (m.any_runnable() || !releasable_syncs(m).empty()))
      throw TraceError("trace ended before the program completed");
    break;
  }
  }

  RunResult rr;
  rr.races = col.races;
  rr.safeties = col.safeties;
  rr.steps = m.steps;
  rr.releases = releases;
  std::optional<DeadlockReport> deadlock;
  if (!m.all_returned())
    deadlock = make_deadlock_report(m, p);
  if (!rr.races.empty())
    rr.outcome = Outcome::of_race(rr.races.front());
  else if (!rr.safeties.empty())
    rr.outcome = Outcome::of_safety(rr.safeties.front());
  else if (deadlock)
    rr.outcome = Outcome::of_deadlock(*deadlock);
  else
    rr.outcome = Outcome::of_final(m.shared, m.regs);
  rr.deadlock = std::move(deadlock);
  return rr;
}

// --- Exhaustive-schedule oracle --------------------------------------------------

EnumResult enumerate_schedules(const Program &p, const SharedMem &init_shared,
                               uint64_t limit) {
  EnumResult res;
  std::set<std::string> visited;
  std::set<std::string> seen_outcomes;
  std::vector<Machine> stack;

  auto emit = [&](Outcome o) {
    if (seen_outcomes.insert(outcome_key(o)).second)
      res.outcomes.push_back(std::move(o));
  };
  auto push = [&](Machine &&next) {
    if (res.stats.limit_exceeded)
      return;
    std::string key = next.state_key();
    if (!visited.insert(std::move(key)).second)
      return;
    if (visited.size() > limit) {
      res.stats.limit_exceeded = true;
      return;
    }
    stack.push_back(std::move(next));
  };

  push(Machine::initial(p, init_shared));
  while (!stack.empty() && !res.stats.limit_exceeded) {
    Machine m = std::move(stack.back());
    stack.pop_back();
    if (m.all_returned()) {
      emit(Outcome::of_final(m.shared, m.regs));
      continue;
    }
    bool branched = false;
    for (Tid t = 0; t < p.n_threads; ++t) {
      if (m.status[t] != ThreadState::Runnable)
        continue;
      branched = true;
      res.stats.transitions++;
      Machine next = m;
      if (auto out = step(next, p, t))
        emit(std::move(*out));
      else
        push(std::move(next));
    }
    if (!releasable_syncs(m).empty()) {
      branched = true;
      res.stats.transitions++;
      Machine next = m;
      try_release_sync(next, p);
      push(std::move(next));
    }
    if (!branched)
      emit(Outcome::of_deadlock(make_deadlock_report(m, p)));
  }
  res.stats.states = visited.size();
  return res;
}

// --- Definition-level race oracle -------------------------------------------------

std::string RacingPair::str() const {
  std::ostringstream os;
  os << "racing pair on " << addr.str() << ": " << access_kind_str(kind_a)
     << " by thread " << tid_a << loc_suffix(loc_a) << " / "
     << access_kind_str(kind_b) << " by thread " << tid_b << loc_suffix(loc_b);
  return os.str();
}

namespace {

// Control-only state of the unchecked dynamics; values never influence
// control in a structured program, so they are not tracked.
struct CtlState {
  std::vector<size_t> pcs;
  std::vector<ThreadState> status;
  std::vector<TidSet> blocked_on;

  std::string key() const {
    std::ostringstream os;
    for (size_t t = 0; t < pcs.size(); ++t) {
      os << pcs[t] << ':' << static_cast<int>(status[t]);
      if (status[t] == ThreadState::Blocked)
        os << blocked_on[t].str();
      os << ';';
    }
    return os.str();
  }
};

std::vector<TidSet> ctl_releasable(const CtlState &s) {
  std::vector<TidSet> candidates;
  for (size_t t = 0; t < s.status.size(); ++t) {
    if (s.status[t] != ThreadState::Blocked)
      continue;
    const TidSet &I = s.blocked_on[t];
    bool seen = false;
    for (const TidSet &c : candidates)
      if (c == I)
        seen = true;
    if (seen)
      continue;
    bool ok = true;
    bool any_blocked = false;
    for (Tid i : I.to_vector()) {
      if (i >= s.status.size()) {
        ok = false;
        break;
      }
      if (s.status[i] == ThreadState::Returned)
        continue;
      if (s.status[i] == ThreadState::Blocked && s.blocked_on[i] == I) {
        any_blocked = true;
        continue;
      }
      ok = false;
      break;
    }
    if (ok && any_blocked)
      candidates.push_back(I);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const TidSet &a, const TidSet &b) {
              return a.min_tid() < b.min_tid();
            });
  return candidates;
}

} // namespace

RacingPairsResult find_racing_pairs(const Program &p, uint64_t limit) {
  RacingPairsResult res;
  std::set<std::string> visited;
  std::set<std::string> pair_keys;
  std::vector<CtlState> stack;

  CtlState init;
  init.pcs.assign(p.n_threads, 0);
  init.status.assign(p.n_threads, ThreadState::Runnable);
  init.blocked_on.resize(p.n_threads);
  for (Tid t = 0; t < p.n_threads; ++t)
    if (p.threads[t].stmts.empty())
      init.status[t] = ThreadState::Returned;

  auto access_of = [&](const CtlState &s, Tid t)
      -> std::optional<std::tuple<Addr, AccessKind, SrcLoc>> {
    if (s.status[t] != ThreadState::Runnable)
      return std::nullopt;
    const Stmt &st = p.threads[t].stmts[s.pcs[t]];
    if (st.kind == StmtKind::Load)
      return std::tuple{st.load.addr, AccessKind::Read, st.loc};
    if (st.kind == StmtKind::Store)
      return std::tuple{st.store.addr, AccessKind::Write, st.loc};
    return std::nullopt;
  };

  auto record_pairs = [&](const CtlState &s) {
    for (Tid a = 0; a < p.n_threads; ++a) {
      auto acc_a = access_of(s, a);
      if (!acc_a)
        continue;
      for (Tid b = a + 1; b < p.n_threads; ++b) {
        auto acc_b = access_of(s, b);
        if (!acc_b)
          continue;
        if (std::get<0>(*acc_a) != std::get<0>(*acc_b))
          continue;
        if (std::get<1>(*acc_a) == AccessKind::Read &&
            std::get<1>(*acc_b) == AccessKind::Read)
          continue;
        RacingPair pr;
        pr.addr = std::get<0>(*acc_a);
        pr.tid_a = a;
        pr.pc_a = s.pcs[a];
        pr.kind_a = std::get<1>(*acc_a);
        pr.loc_a = std::get<2>(*acc_a);
        pr.tid_b = b;
        pr.pc_b = s.pcs[b];
        pr.kind_b = std::get<1>(*acc_b);
        pr.loc_b = std::get<2>(*acc_b);
        std::ostringstream key;
        key << pr.addr.str() << '|' << pr.tid_a << ':' << pr.pc_a << '|'
            << pr.tid_b << ':' << pr.pc_b;
        if (pair_keys.insert(key.str()).second)
          res.pairs.push_back(std::move(pr));
      }
    }
  };

  auto push = [&](CtlState &&next) {
    if (res.limit_exceeded)
      return;
    if (!visited.insert(next.key()).second)
      return;
    if (visited.size() > limit) {
      res.limit_exceeded = true;
      return;
    }
    stack.push_back(std::move(next));
  };

  push(std::move(init));
  while (!stack.empty() && !res.limit_exceeded) {
    CtlState s = std::move(stack.back());
    stack.pop_back();
    record_pairs(s);
    for (Tid t = 0; t < p.n_threads; ++t) {
      if (s.status[t] != ThreadState::Runnable)
        continue;
      CtlState next = s;
      const Stmt &st = p.threads[t].stmts[next.pcs[t]];
      if (st.kind == StmtKind::Sync) {
        next.status[t] = ThreadState::Blocked;
        next.blocked_on[t] = st.sync.set;
      } else {
        next.pcs[t]++;
        if (next.pcs[t] == p.threads[t].stmts.size())
          next.status[t] = ThreadState::Returned;
      }
      push(std::move(next));
    }
    std::vector<TidSet> rel = ctl_releasable(s);
    if (!rel.empty()) {
      CtlState next = s;
      const TidSet &I = rel.front();
      for (Tid i : I.to_vector()) {
        if (next.status[i] != ThreadState::Blocked || next.blocked_on[i] != I)
          continue;
        next.pcs[i]++;
        next.status[i] = next.pcs[i] == p.threads[i].stmts.size()
                             ? ThreadState::Returned
                             : ThreadState::Runnable;
      }
      push(std::move(next));
    }
  }
  res.states = visited.size();
  return res;
}

} // namespace ctaeq
