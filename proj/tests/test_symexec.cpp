#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ctaeq/frontend.hpp"
#include "ctaeq/symexec.hpp"
#include "prog_gen.hpp"

using namespace ctaeq;

namespace {

TidSet ts(std::initializer_list<Tid> tids) {
  TidSet s;
  for (Tid t : tids)
    s.insert(t);
  return s;
}

LaunchConfig cfg_n(Tid threads, Tid warp = 32,
                   std::map<std::string, int64_t> params = {}) {
  LaunchConfig c;
  c.threads = threads;
  c.warp_size = warp;
  c.params = std::move(params);
  return c;
}

Program elab(const std::string &src, const LaunchConfig &cfg) {
  return elaborate(parse_kernel(src), cfg, cfg.for_a());
}

const char *kSoftmaxNaive = R"(
kernel softmax_naive {
  param N;
  in x[N];
  out y[N];
  scratch buf[N];

  buf[tid] = exp(x[tid]);
  sync;
  s = 0;
  for (i = 0; i < N; i++) {
    s += buf[i];
  }
  y[tid] = buf[tid] / s;
}
)";

const char *kSoftmaxNosync = R"(
kernel softmax_nosync {
  param N;
  in x[N];
  out y[N];
  scratch buf[N];

  buf[tid] = exp(x[tid]);
  s = 0;
  for (i = 0; i < N; i++) {
    s += buf[i];
  }
  y[tid] = buf[tid] / s;
}
)";

SharedMem symbolic_inputs(const Program &p) {
  SharedMem mem;
  for (const ArrayDecl &d : p.arrays) {
    if (d.role != Role::In)
      continue;
    for (uint64_t k = 0; k < d.size; ++k)
      mem[Addr{d.name, static_cast<int64_t>(k)}] =
          var(d.name + "_" + std::to_string(k));
  }
  return mem;
}

// Bare IR program builder for executor-level cases.
Program mk_prog(Tid n, Tid warp, std::vector<ArrayDecl> arrays,
                std::vector<std::vector<Stmt>> threads) {
  Program p;
  p.name = "t";
  p.n_threads = n;
  p.warp_size = warp;
  p.arrays = std::move(arrays);
  for (auto &t : threads)
    p.threads.push_back(ThreadProg{std::move(t)});
  validate_structured(p);
  return p;
}

} // namespace

TEST_CASE("no_racing_rd follows the definition") {
  std::map<Tid, TidSet> readers;
  CHECK(no_racing_rd(0, readers)); // vacuous
  readers[1] = ts({0, 1, 2, 3});
  CHECK_FALSE(no_racing_rd(0, readers)); // 0 in readers[1]
  CHECK(no_racing_rd(1, readers));       // i = j disjunct
}

TEST_CASE("no_racing_wr follows the definition") {
  CHECK(no_racing_wr(2, std::pair{Tid(2), ts({0, 1, 2, 3})})); // same thread
  CHECK_FALSE(no_racing_wr(0, std::pair{Tid(1), ts({0, 1, 2, 3})}));
  CHECK(no_racing_wr(0, std::pair{Tid(1), ts({1, 2, 3})})); // 0 not in J
  CHECK(no_racing_wr(0, std::nullopt));                     // no writer yet
}

TEST_CASE("sync_mem strips the released set from owners in it") {
  MemEvents x;
  Addr g{"g", 0};
  x[g].readers[0] = ReadEvent{ts({0, 1, 2, 3}), {}, 0};
  x[g].writer = WriteEvent{2, ts({0, 1, 3}), {}, 0};

  SUBCASE("full barrier clears everything") {
    sync_mem(ts({0, 1, 2, 3}), x);
    CHECK(x.empty());
  }
  SUBCASE("writer outside the set is untouched") {
    sync_mem(ts({0, 1}), x);
    REQUIRE(x.count(g) == 1);
    CHECK(x[g].writer->pending == ts({0, 1, 3})); // 2 not in {0,1}
    CHECK(x[g].readers.at(0).pending == ts({2, 3}));
  }
  SUBCASE("writer inside the set drops its members") {
    sync_mem(ts({2, 3}), x);
    REQUIRE(x.count(g) == 1);
    CHECK(x[g].writer->pending == ts({0, 1}));
    CHECK(x[g].readers.at(0).pending == ts({0, 1, 2, 3})); // 0 not in {2,3}
  }
}

TEST_CASE("store publishes a writer event with the full pending set") {
  Program p = mk_prog(
      2, 2, {{"g", 1, Role::Scratch}},
      {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r")},
       {Stmt::mk_load("s", Addr{"g", 0})}});
  Machine m = Machine::initial(p, {});
  CHECK_FALSE(step(m, p, 0));
  CHECK_FALSE(step(m, p, 0));
  REQUIRE(m.mem_events.count(Addr{"g", 0}) == 1);
  const AddrEvents &ev = m.mem_events[Addr{"g", 0}];
  REQUIRE(ev.writer.has_value());
  CHECK(ev.writer->tid == 0);
  CHECK(ev.writer->pending == TidSet::full(2));

  // Unsynchronized read by thread 1 races with that write.
  auto out = step(m, p, 1);
  REQUIRE(out.has_value());
  REQUIRE(out->kind == Outcome::Kind::Race);
  CHECK(out->race->addr == Addr{"g", 0});
  CHECK(out->race->first.tid == 0);
  CHECK(out->race->first.kind == AccessKind::Write);
  CHECK(out->race->second.tid == 1);
  CHECK(out->race->second.kind == AccessKind::Read);
}

TEST_CASE("strict faults leave the machine unchanged") {
  Program p = mk_prog(1, 1, {{"g", 2, Role::Scratch}},
                      {{Stmt::mk_load("r", Addr{"g", 1})}});
  Machine m = Machine::initial(p, {});
  std::string before = m.state_key();
  auto out = step(m, p, 0);
  REQUIRE(out.has_value());
  REQUIRE(out->kind == Outcome::Kind::Safety);
  CHECK(out->safety->kind == SafetyKind::UninitMemoryRead);
  CHECK(out->safety->addr == Addr{"g", 1});
  CHECK(m.state_key() == before);
}

TEST_CASE("uninitialized register read is a safety fault") {
  Program p = mk_prog(1, 1, {},
                      {{Stmt::mk_bin("d", Bin::Add, "r", "r")}});
  Machine m = Machine::initial(p, {});
  auto out = step(m, p, 0);
  REQUIRE(out.has_value());
  REQUIRE(out->kind == Outcome::Kind::Safety);
  CHECK(out->safety->kind == SafetyKind::UninitRegisterRead);
  CHECK(out->safety->reg == "r");
}

TEST_CASE("out-of-bounds accesses are safety faults") {
  SUBCASE("read past the end") {
    Program p = mk_prog(1, 1, {{"a", 2, Role::In}},
                        {{Stmt::mk_load("r", Addr{"a", 2})}});
    Machine m = Machine::initial(p, symbolic_inputs(p));
    auto out = step(m, p, 0);
    REQUIRE(out.has_value());
    REQUIRE(out->kind == Outcome::Kind::Safety);
    CHECK(out->safety->kind == SafetyKind::OutOfBounds);
    CHECK_FALSE(out->safety->is_store);
  }
  SUBCASE("negative-offset write") {
    Program p = mk_prog(1, 1, {{"a", 2, Role::In}},
                        {{Stmt::mk_const("r", Rat(1)),
                          Stmt::mk_store(Addr{"a", -1}, "r")}});
    Machine m = Machine::initial(p, symbolic_inputs(p));
    CHECK_FALSE(step(m, p, 0));
    auto out = step(m, p, 0);
    REQUIRE(out.has_value());
    REQUIRE(out->kind == Outcome::Kind::Safety);
    CHECK(out->safety->kind == SafetyKind::OutOfBounds);
    CHECK(out->safety->is_store);
  }
}

TEST_CASE("invalid arithmetic is a safety fault") {
  // -inf may only appear under max; adding to it faults at execution time.
  Program p = mk_prog(1, 1, {},
                      {{Stmt::mk_neg_inf("m"), Stmt::mk_const("x", Rat(1)),
                        Stmt::mk_bin("d", Bin::Add, "m", "x")}});
  Machine m = Machine::initial(p, {});
  CHECK_FALSE(step(m, p, 0));
  CHECK_FALSE(step(m, p, 0));
  auto out = step(m, p, 0);
  REQUIRE(out.has_value());
  REQUIRE(out->kind == Outcome::Kind::Safety);
  CHECK(out->safety->kind == SafetyKind::InvalidArithmetic);

  // max over -inf stays legal.
  Program q = mk_prog(1, 1, {},
                      {{Stmt::mk_neg_inf("m"), Stmt::mk_const("x", Rat(1)),
                        Stmt::mk_bin("d", Bin::Max, "m", "x")}});
  Machine mq = Machine::initial(q, {});
  CHECK_FALSE(step(mq, q, 0));
  CHECK_FALSE(step(mq, q, 0));
  CHECK_FALSE(step(mq, q, 0));
  CHECK(mq.regs[0].at("d") == cst(1));
}

TEST_CASE("full barrier clears pending sets; later accesses race-free") {
  Program p = mk_prog(
      2, 2, {{"g", 2, Role::Scratch}},
      {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r"),
        Stmt::mk_sync(TidSet::full(2)), Stmt::mk_load("s", Addr{"g", 1})},
       {Stmt::mk_const("r", Rat(2)), Stmt::mk_store(Addr{"g", 1}, "r"),
        Stmt::mk_sync(TidSet::full(2)), Stmt::mk_load("s", Addr{"g", 0})}});
  RunResult rr = run(p, {}, SchedulePolicy::round_robin());
  CHECK(rr.outcome.kind == Outcome::Kind::Final);
  CHECK(rr.races.empty());
  CHECK(rr.outcome.shared.at(Addr{"g", 0}) == cst(1));
  CHECK(rr.outcome.shared.at(Addr{"g", 1}) == cst(2));
}

TEST_CASE("release rule: all blocked at the full set") {
  Program p = mk_prog(2, 2, {},
                      {{Stmt::mk_sync(TidSet::full(2))},
                       {Stmt::mk_sync(TidSet::full(2))}});
  Machine m = Machine::initial(p, {});
  CHECK_FALSE(step(m, p, 0));
  CHECK(releasable_syncs(m).empty()); // thread 1 not there yet
  CHECK_FALSE(step(m, p, 1));
  auto rel = releasable_syncs(m);
  REQUIRE(rel.size() == 1);
  CHECK(rel[0] == TidSet::full(2));
  auto released = try_release_sync(m, p);
  REQUIRE(released.has_value());
  CHECK(*released == TidSet::full(2));
  CHECK(m.all_returned());
  CHECK(m.mem_events.empty());
}

TEST_CASE("release rule: returned members count as arrived") {
  // t0 blocks on {0,1}; t1 returns without ever syncing.
  Program p = mk_prog(2, 2, {},
                      {{Stmt::mk_sync(TidSet::full(2)),
                        Stmt::mk_const("r", Rat(1))},
                       {Stmt::mk_const("r", Rat(1))}});
  Machine m = Machine::initial(p, {});
  CHECK_FALSE(step(m, p, 1));
  CHECK(m.status[1] == ThreadState::Returned);
  CHECK_FALSE(step(m, p, 0));
  auto released = try_release_sync(m, p);
  REQUIRE(released.has_value());
  CHECK(*released == TidSet::full(2));
  CHECK(m.status[0] == ThreadState::Runnable);
}

TEST_CASE("release rule: a set is releasable only when every member is at it") {
  // t0 waits on {0,1}; t1 waits on {1,2}; t2 returned. {1,2} releases first
  // (member 1 is at it, member 2 returned), then t1 returns, then {0,1}.
  Program p = mk_prog(3, 3, {},
                      {{Stmt::mk_sync(ts({0, 1}))},
                       {Stmt::mk_sync(ts({1, 2}))},
                       {}});
  Machine m = Machine::initial(p, {});
  CHECK(m.status[2] == ThreadState::Returned);
  CHECK_FALSE(step(m, p, 0));
  CHECK_FALSE(step(m, p, 1));
  auto rel = releasable_syncs(m);
  REQUIRE(rel.size() == 1); // {0,1} is not releasable: member 1 is at {1,2}
  CHECK(rel[0] == ts({1, 2}));
  REQUIRE(try_release_sync(m, p).has_value());
  CHECK(m.status[1] == ThreadState::Returned);
  rel = releasable_syncs(m);
  REQUIRE(rel.size() == 1);
  CHECK(rel[0] == ts({0, 1}));
  REQUIRE(try_release_sync(m, p).has_value());
  CHECK(m.all_returned());
}

TEST_CASE("release rule: a singleton self-sync releases immediately") {
  Program p = mk_prog(1, 1, {{"g", 1, Role::Scratch}},
                      {{Stmt::mk_const("r", Rat(1)),
                        Stmt::mk_store(Addr{"g", 0}, "r"),
                        Stmt::mk_sync(ts({0})),
                        Stmt::mk_load("s", Addr{"g", 0})}});
  RunResult rr = run(p, {}, SchedulePolicy::round_robin());
  CHECK(rr.outcome.kind == Outcome::Kind::Final);
  CHECK(rr.releases == 1);
}

TEST_CASE("deadlock: cross-waiting singleton syncs") {
  // Each thread waits on a set it is not a member of; nothing can release.
  Program p = mk_prog(2, 1, {},
                      {{Stmt::mk_sync(ts({1}))}, {Stmt::mk_sync(ts({0}))}});
  RunResult rr = run(p, {}, SchedulePolicy::round_robin());
  REQUIRE(rr.outcome.kind == Outcome::Kind::Deadlock);
  const DeadlockReport &d = *rr.outcome.deadlock;
  REQUIRE(d.threads.size() == 2);
  CHECK(d.threads[0].state == ThreadState::Blocked);
  CHECK(*d.threads[0].waiting == ts({1}));
  CHECK(d.threads[1].state == ThreadState::Blocked);
  CHECK_FALSE(d.conflict_tids.has_value());
}

TEST_CASE("deadlock: warp barrier against a full barrier") {
  std::vector<std::vector<Stmt>> threads(4);
  for (Tid t = 0; t < 4; ++t)
    threads[t] = {Stmt::mk_sync(t == 2 ? ts({2, 3}) : TidSet::full(4))};
  Program p = mk_prog(4, 2, {}, std::move(threads));
  RunResult rr = run(p, {}, SchedulePolicy::round_robin());
  REQUIRE(rr.outcome.kind == Outcome::Kind::Deadlock);
  const DeadlockReport &d = *rr.outcome.deadlock;
  REQUIRE(d.conflict_tids.has_value());
  CHECK(d.conflict_tids->first == 2);
  CHECK(d.conflict_tids->second == 3);
  CHECK(d.conflict_sets->first == ts({2, 3}));
  CHECK(d.conflict_sets->second == TidSet::full(4));
}

TEST_CASE("round-robin softmax run produces the closed-form outputs") {
  Program p = elab(kSoftmaxNaive, cfg_n(4, 4, {{"N", 4}}));
  RunResult rr = run(p, symbolic_inputs(p), SchedulePolicy::round_robin());
  REQUIRE(rr.outcome.kind == Outcome::Kind::Final);
  CHECK(rr.races.empty());
  CHECK(rr.safeties.empty());

  std::vector<Expr> ex;
  for (int i = 0; i < 4; ++i)
    ex.push_back(exp_e(var("x_" + std::to_string(i))));
  Expr denom = add({ex[0], ex[1], ex[2], ex[3]});
  for (int i = 0; i < 4; ++i) {
    Expr want = canonicalize(div(ex[i], denom));
    CHECK(rr.outcome.shared.at(Addr{"y", i}) == want);
  }
}

TEST_CASE("softmax without the barrier races exactly as reported") {
  Program p = elab(kSoftmaxNosync, cfg_n(4, 4, {{"N", 4}}));
  RunResult rr = run(p, symbolic_inputs(p), SchedulePolicy::round_robin());
  REQUIRE(rr.outcome.kind == Outcome::Kind::Race);

  // Thread 0 runs to completion first and reads buf[1]; thread 1's store to
  // buf[1] is the first racing access.
  const RaceReport &r = *rr.outcome.race;
  CHECK(r.addr == Addr{"buf", 1});
  CHECK(r.first.tid == 0);
  CHECK(r.first.kind == AccessKind::Read);
  CHECK(r.second.tid == 1);
  CHECK(r.second.kind == AccessKind::Write);

  // Collected fault census: one race per later store (3) plus one per
  // cross-thread load of an already-written cell (6); three uninitialized
  // reads of not-yet-written buffer cells by thread 0.
  CHECK(rr.races.size() == 9);
  REQUIRE(rr.safeties.size() == 3);
  for (const SafetyReport &s : rr.safeties) {
    CHECK(s.kind == SafetyKind::UninitMemoryRead);
    CHECK(s.tid == 0);
    CHECK(s.addr->array == "buf");
  }
}

TEST_CASE("random policy: same seed same run, any seed same final env") {
  Program p = elab(kSoftmaxNaive, cfg_n(4, 4, {{"N", 4}}));
  SharedMem in = symbolic_inputs(p);
  RunResult a1 = run(p, in, SchedulePolicy::random(7));
  RunResult a2 = run(p, in, SchedulePolicy::random(7));
  CHECK(outcome_key(a1.outcome) == outcome_key(a2.outcome));
  CHECK(a1.steps == a2.steps);

  RunResult rr0 = run(p, in, SchedulePolicy::round_robin());
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    RunResult rs = run(p, in, SchedulePolicy::random(seed));
    REQUIRE(rs.outcome.kind == Outcome::Kind::Final);
    CHECK(outcome_key(rs.outcome) == outcome_key(rr0.outcome));
  }
}

TEST_CASE("trace replay: explicit schedules are followed exactly") {
  Program p = mk_prog(
      2, 2, {{"g", 2, Role::Scratch}},
      {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r"),
        Stmt::mk_sync(TidSet::full(2))},
       {Stmt::mk_const("r", Rat(2)), Stmt::mk_store(Addr{"g", 1}, "r"),
        Stmt::mk_sync(TidSet::full(2))}});

  SUBCASE("a complete interleaved trace reaches Final") {
    auto items = parse_trace("1\n0\n0\n1\n# comment\n0\n1\nSYNC 0 1\n");
    RunResult rr = run(p, {}, SchedulePolicy::replay(items));
    CHECK(rr.outcome.kind == Outcome::Kind::Final);
    CHECK(rr.releases == 1);
  }
  SUBCASE("stepping a blocked thread is a trace error") {
    auto items = parse_trace("0\n0\n0\n0\n");
    CHECK_THROWS_AS(run(p, {}, SchedulePolicy::replay(items)), TraceError);
  }
  SUBCASE("releasing a non-releasable set is a trace error") {
    auto items = parse_trace("0\n0\n0\nSYNC 0 1\n");
    CHECK_THROWS_AS(run(p, {}, SchedulePolicy::replay(items)), TraceError);
  }
  SUBCASE("a trace that stops early is a trace error") {
    auto items = parse_trace("0\n1\n");
    CHECK_THROWS_AS(run(p, {}, SchedulePolicy::replay(items)), TraceError);
  }
  SUBCASE("malformed trace text is rejected") {
    CHECK_THROWS_AS(parse_trace("banana\n"), TraceError);
    CHECK_THROWS_AS(parse_trace("SYNC\n"), TraceError);
    CHECK_THROWS_AS(parse_trace("0 1\n"), TraceError);
  }
}

TEST_CASE("enumerate: race-free program has a single final outcome") {
  Program p = mk_prog(
      2, 2, {{"g", 2, Role::Scratch}},
      {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r")},
       {Stmt::mk_const("r", Rat(2)), Stmt::mk_store(Addr{"g", 1}, "r")}});
  EnumResult res = enumerate_schedules(p, {}, 10000);
  CHECK_FALSE(res.stats.limit_exceeded);
  REQUIRE(res.outcomes.size() == 1);
  CHECK(res.outcomes[0].kind == Outcome::Kind::Final);
  CHECK(res.outcomes[0].shared.at(Addr{"g", 0}) == cst(1));
  CHECK(res.outcomes[0].shared.at(Addr{"g", 1}) == cst(2));
}

TEST_CASE("enumerate: conflicting stores race in every order") {
  Program p = mk_prog(
      2, 2, {{"g", 1, Role::Scratch}},
      {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r")},
       {Stmt::mk_const("r", Rat(2)), Stmt::mk_store(Addr{"g", 0}, "r")}});
  EnumResult res = enumerate_schedules(p, {}, 10000);
  CHECK_FALSE(res.stats.limit_exceeded);
  CHECK(!res.outcomes.empty());
  for (const Outcome &o : res.outcomes)
    CHECK(o.kind == Outcome::Kind::Race);
}

TEST_CASE("enumerate: softmax N=2 agrees with the round-robin run") {
  Program p = elab(kSoftmaxNaive, cfg_n(2, 2, {{"N", 2}}));
  SharedMem in = symbolic_inputs(p);
  EnumResult res = enumerate_schedules(p, in, 100000);
  CHECK_FALSE(res.stats.limit_exceeded);
  REQUIRE(res.outcomes.size() == 1);
  RunResult rr = run(p, in, SchedulePolicy::round_robin());
  CHECK(outcome_key(res.outcomes[0]) == outcome_key(rr.outcome));
}

TEST_CASE("racing-pair oracle matches the definition on fixed programs") {
  SUBCASE("unsynchronized store/store conflicts") {
    Program p = mk_prog(
        2, 2, {{"g", 1, Role::Scratch}},
        {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r")},
         {Stmt::mk_const("r", Rat(2)), Stmt::mk_store(Addr{"g", 0}, "r")}});
    RacingPairsResult res = find_racing_pairs(p);
    REQUIRE(res.pairs.size() == 1);
    CHECK(res.pairs[0].addr == Addr{"g", 0});
    CHECK(res.pairs[0].kind_a == AccessKind::Write);
    CHECK(res.pairs[0].kind_b == AccessKind::Write);
  }
  SUBCASE("a barrier between the accesses removes the pair") {
    Program p = mk_prog(
        2, 2, {{"g", 1, Role::Scratch}},
        {{Stmt::mk_const("r", Rat(1)), Stmt::mk_store(Addr{"g", 0}, "r"),
          Stmt::mk_sync(TidSet::full(2))},
         {Stmt::mk_sync(TidSet::full(2)),
          Stmt::mk_load("s", Addr{"g", 0})}});
    RacingPairsResult res = find_racing_pairs(p);
    CHECK(res.pairs.empty());
  }
  SUBCASE("read/read is not a conflict") {
    Program p = mk_prog(2, 2, {{"a", 1, Role::In}},
                        {{Stmt::mk_load("r", Addr{"a", 0})},
                         {Stmt::mk_load("r", Addr{"a", 0})}});
    RacingPairsResult res = find_racing_pairs(p);
    CHECK(res.pairs.empty());
  }
}

TEST_CASE("property: checked run vs definition oracle vs enumeration") {
  // A smaller pre-run of the acceptance-scale experiment: the checked
  // round-robin run reports a race iff the definition-level oracle finds a
  // racing pair; enumerated outcome sets never mix Final with an error and
  // all Final outcomes coincide.
  int racy = 0, clean = 0, deadlocked = 0;
  for (uint64_t seed = 1; seed <= 80; ++seed) {
    testutil::GenProgram g = testutil::gen_program(seed);
    CAPTURE(seed);

    RunResult rr = run(g.prog, g.inputs, SchedulePolicy::round_robin());
    RacingPairsResult oracle = find_racing_pairs(g.prog, 200000);
    REQUIRE_FALSE(oracle.limit_exceeded);
    CHECK(rr.races.empty() == oracle.pairs.empty());

    EnumResult en = enumerate_schedules(g.prog, g.inputs, 200000);
    REQUIRE_FALSE(en.stats.limit_exceeded);
    bool any_final = false, any_race = false;
    std::set<std::string> final_keys;
    for (const Outcome &o : en.outcomes) {
      any_final |= o.kind == Outcome::Kind::Final;
      any_race |= o.kind == Outcome::Kind::Race;
      if (o.kind == Outcome::Kind::Final)
        final_keys.insert(outcome_key(o));
    }
    CHECK_FALSE((any_final && any_race));
    if (any_final)
      CHECK(final_keys.size() == 1);

    racy += !rr.races.empty();
    deadlocked += rr.deadlock.has_value();
    clean += rr.outcome.kind == Outcome::Kind::Final;
  }
  // The generator must exercise all three regimes.
  CHECK(racy > 10);
  CHECK(clean > 10);
  CHECK(deadlocked > 3);
}

TEST_CASE("property: symbolic execution commutes with substitution") {
  int checked = 0;
  for (uint64_t seed = 1; seed <= 120 && checked < 25; ++seed) {
    testutil::GenProgram g = testutil::gen_program(seed);
    RunResult sym = run(g.prog, g.inputs, SchedulePolicy::round_robin());
    if (sym.outcome.kind != Outcome::Kind::Final)
      continue;
    CAPTURE(seed);
    auto repl = testutil::gen_assignment(g, seed);
    SharedMem concrete_in;
    for (const auto &[addr, v] : g.inputs)
      concrete_in[addr] = repl.at(v.name());
    RunResult con = run(g.prog, concrete_in, SchedulePolicy::round_robin());
    REQUIRE(con.outcome.kind == Outcome::Kind::Final);
    REQUIRE(con.outcome.shared.size() == sym.outcome.shared.size());
    for (const auto &[addr, v] : sym.outcome.shared)
      CHECK(substitute(v, repl) == con.outcome.shared.at(addr));
    for (Tid t = 0; t < g.prog.n_threads; ++t)
      for (const auto &[name, v] : sym.outcome.regs[t])
        CHECK(substitute(v, repl) == con.outcome.regs[t].at(name));
    checked++;
  }
  CHECK(checked == 25);
}
