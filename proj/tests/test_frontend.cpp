#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctaeq/frontend.hpp"

using namespace ctaeq;

namespace {

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
// Softmax via a staging buffer and one barrier.
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

} // namespace

TEST_CASE("minimal kernel parses to a one-statement tree") {
  KernelAst ast = parse_kernel("kernel k { out y[1]; y[0] = 1; }");
  CHECK(ast.name == "k");
  REQUIRE(ast.arrays.size() == 1);
  CHECK(ast.arrays[0].role == Role::Out);
  REQUIRE(ast.body.size() == 1);
  CHECK(ast.body[0].k == AStmt::K::Assign);
}

TEST_CASE("softmax parses to one loop and one sync") {
  KernelAst ast = parse_kernel(kSoftmaxNaive);
  CHECK(ast.arrays.size() == 3);
  CHECK(ast.params == std::vector<std::string>{"N"});
  int loops = 0, syncs = 0;
  for (const auto &s : ast.body) {
    loops += s.k == AStmt::K::For;
    syncs += s.k == AStmt::K::Sync;
  }
  CHECK(loops == 1);
  CHECK(syncs == 1);
}

TEST_CASE("softmax elaborates to the expected per-thread shape") {
  Program p = elab(kSoftmaxNaive, cfg_n(4, 4, {{"N", 4}}));
  REQUIRE(p.n_threads == 4);
  REQUIRE(p.arrays.size() == 3);
  CHECK(p.find_array("buf")->size == 4);
  for (Tid t = 0; t < 4; t++) {
    const auto &s = p.threads[t].stmts;
    // load x[t], exp, store buf[t], sync, s=0, 4x(load buf[i], add),
    // load buf[t], div, store y[t]
    REQUIRE(s.size() == 16);
    CHECK(s[0].kind == StmtKind::Load);
    CHECK(s[0].load.addr == Addr{"x", t});
    CHECK(s[1].kind == StmtKind::UnOp);
    CHECK(s[1].un_op.op == Un::Exp);
    CHECK(s[2].kind == StmtKind::Store);
    CHECK(s[2].store.addr == Addr{"buf", t});
    CHECK(s[3].kind == StmtKind::Sync);
    CHECK(s[3].sync.set == TidSet::full(4));
    CHECK(s[4].kind == StmtKind::SetConst);
    for (int i = 0; i < 4; i++) {
      CHECK(s[5 + 2 * i].kind == StmtKind::Load);
      CHECK(s[5 + 2 * i].load.addr == Addr{"buf", i});
      CHECK(s[6 + 2 * i].kind == StmtKind::BinOp);
      CHECK(s[6 + 2 * i].bin_op.op == Bin::Add);
    }
    CHECK(s[13].kind == StmtKind::Load);
    CHECK(s[14].kind == StmtKind::BinOp);
    CHECK(s[14].bin_op.op == Bin::Div);
    CHECK(s[15].kind == StmtKind::Store);
    CHECK(s[15].store.addr == Addr{"y", t});
  }
}

TEST_CASE("tid-guarded branch folds per thread") {
  Program p = elab("kernel k { in x[4]; out y[4]; "
                   "if (tid < 2) { y[tid] = x[tid]; } }",
                   cfg_n(4));
  CHECK(p.threads[0].stmts.size() == 2); // load + store
  CHECK(p.threads[1].stmts.size() == 2);
  CHECK(p.threads[2].stmts.empty());
  CHECK(p.threads[3].stmts.empty());
}

TEST_CASE("data-dependent constructs are rejected with reasons") {
  CHECK_THROWS_WITH_AS(
      elab("kernel k { in x[1]; out y[1]; if (x[0] > 0) { y[0] = 1; } }",
           cfg_n(1)),
      doctest::Contains("data-dependent branch condition"),
      StructuredCtaError);
  CHECK_THROWS_WITH_AS(
      elab("kernel k { out y[4]; r = 1; y[r] = 1; }", cfg_n(1)),
      doctest::Contains("data-dependent address"), StructuredCtaError);
  CHECK_THROWS_WITH_AS(
      elab("kernel k { out y[1]; r = 1; for (i = 0; i < r; i++) { y[0] = 1; } }",
           cfg_n(1)),
      doctest::Contains("non-static loop bound"), StructuredCtaError);
  CHECK_THROWS_WITH_AS(
      elab("kernel k { in x[2]; out y[1]; y[x[0]] = 1; }", cfg_n(1)),
      doctest::Contains("data-dependent address"), StructuredCtaError);
}

TEST_CASE("unbalanced brace is a located syntax error") {
  try {
    parse_kernel("kernel k {\n out y[1];\n y[0] = 1;\n");
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.loc.line == 4);
  }
}

TEST_CASE("decimal literals become exact rationals") {
  Program p = elab("kernel k { out y[2]; y[0] = 0.5; y[1] = 2.25; }",
                   cfg_n(1));
  const auto &s = p.threads[0].stmts;
  REQUIRE(s.size() == 4);
  CHECK(s[0].set_const.value == Rat(1, 2));
  CHECK(s[2].set_const.value == Rat(9, 4));
}

TEST_CASE("subtraction lowers to negate plus add") {
  Program p = elab("kernel k { in x[2]; out y[1]; y[0] = x[0] - x[1]; }",
                   cfg_n(1));
  const auto &s = p.threads[0].stmts;
  // load, load, neg, add, store
  REQUIRE(s.size() == 5);
  CHECK(s[2].kind == StmtKind::UnOp);
  CHECK(s[2].un_op.op == Un::Neg);
  CHECK(s[3].kind == StmtKind::BinOp);
  CHECK(s[3].bin_op.op == Bin::Add);
}

TEST_CASE("compound assignment on an array element is load-op-store") {
  Program p = elab("kernel k { in x[1]; out y[1]; y[0] = 0; y[0] += x[0]; }",
                   cfg_n(1));
  const auto &s = p.threads[0].stmts;
  // const, store, load y, load x, add, store
  REQUIRE(s.size() == 6);
  CHECK(s[2].kind == StmtKind::Load);
  CHECK(s[2].load.addr == Addr{"y", 0});
  CHECK(s[4].kind == StmtKind::BinOp);
  CHECK(s[5].kind == StmtKind::Store);
}

TEST_CASE("n-ary max lowers to a chain") {
  Program p = elab("kernel k { in x[3]; out y[1]; y[0] = max(x[0], x[1], x[2]); }",
                   cfg_n(1));
  int maxes = 0;
  for (const auto &s : p.threads[0].stmts)
    maxes += s.kind == StmtKind::BinOp && s.bin_op.op == Bin::Max;
  CHECK(maxes == 2);
}

TEST_CASE("NEG_INF and register max work") {
  Program p = elab("kernel k { in x[2]; out y[1]; m = NEG_INF; "
                   "for (i = 0; i < 2; i++) { m = max(m, x[i]); } y[0] = m; }",
                   cfg_n(1));
  CHECK(p.threads[0].stmts[0].set_const.neg_infinity);
}

TEST_CASE("early return truncates only the returning thread") {
  Program p = elab("kernel k { out y[4]; if (tid == 0) { return; } y[tid] = 1; }",
                   cfg_n(4));
  CHECK(p.threads[0].stmts.empty());
  CHECK(p.threads[1].stmts.size() == 2);
}

TEST_CASE("return inside a loop stops elaboration of the rest") {
  Program p = elab("kernel k { out y[8]; for (i = 0; i < 8; i++) { "
                   "if (i == 2) { return; } y[i] = 1; } y[7] = 1; }",
                   cfg_n(1));
  // iterations 0 and 1 emit const+store each; nothing after
  CHECK(p.threads[0].stmts.size() == 4);
}

TEST_CASE("syncwarp forms translate exactly") {
  LaunchConfig c = cfg_n(8, 4);
  {
    Program p = elab("kernel k { out y[8]; y[tid] = 1; syncwarp({0, 1, 2}); }",
                     cfg_n(3, 4));
    TidSet want;
    want.insert(0);
    want.insert(1);
    want.insert(2);
    CHECK(p.threads[0].stmts[2].sync.set == want);
  }
  {
    Program p = elab("kernel k { out y[8]; syncwarp(1); y[tid] = 1; }", c);
    TidSet want;
    for (Tid t = 4; t < 8; t++)
      want.insert(t);
    CHECK(p.threads[0].stmts[0].sync.set == want);
  }
  {
    Program p = elab("kernel k { out y[8]; syncwarp(1, {0, 2}); y[tid] = 1; }",
                     c);
    TidSet want;
    want.insert(4);
    want.insert(6);
    CHECK(p.threads[0].stmts[0].sync.set == want);
  }
  {
    // per-thread warp index: each thread syncs with its own warp
    Program p = elab("kernel k { out y[8]; syncwarp(tid / 4); y[tid] = 1; }",
                     c);
    CHECK(p.threads[0].stmts[0].sync.set.str() == "{0, 1, 2, 3}");
    CHECK(p.threads[5].stmts[0].sync.set.str() == "{4, 5, 6, 7}");
  }
}

TEST_CASE("sync sets spanning warps or out of range are rejected") {
  CHECK_THROWS_AS(elab("kernel k { out y[8]; syncwarp({3, 4}); y[tid] = 1; }",
                       cfg_n(8, 4)),
                  StructuredCtaError);
  CHECK_THROWS_AS(elab("kernel k { out y[8]; syncwarp({9}); y[tid] = 1; }",
                       cfg_n(8, 4)),
                  StructuredCtaError);
  CHECK_THROWS_AS(elab("kernel k { out y[8]; syncwarp(2); y[tid] = 1; }",
                       cfg_n(8, 4)),
                  StructuredCtaError);
  CHECK_THROWS_AS(elab("kernel k { out y[8]; syncwarp(0, {5}); y[tid] = 1; }",
                       cfg_n(8, 4)),
                  StructuredCtaError);
}

TEST_CASE("let bindings are compile-time and block-scoped") {
  Program p = elab("kernel k { param N; in a[16]; out c[16]; "
                   "let row = tid / N; let col = tid % N; "
                   "c[row * N + col] = a[row * N + col]; }",
                   cfg_n(16, 32, {{"N", 4}}));
  CHECK(p.threads[7].stmts[0].load.addr == Addr{"a", 7});
  // re-binding per loop iteration is fine
  Program q = elab("kernel k { out y[4]; for (i = 0; i < 4; i++) { "
                   "let j = i; y[j] = 1; } }",
                   cfg_n(1));
  CHECK(q.threads[0].stmts.size() == 8);
  CHECK_THROWS_AS(elab("kernel k { out y[1]; let tid = 3; y[0] = 1; }",
                       cfg_n(1)),
                  ParseError); // tid is a keyword
  CHECK_THROWS_AS(elab("kernel k { param N; out y[1]; let N = 2; y[0] = 1; }",
                       cfg_n(1, 32, {{"N", 1}})),
                  StructuredCtaError);
  CHECK_THROWS_AS(
      elab("kernel k { out y[1]; let z = 1; let z = 2; y[0] = 1; }", cfg_n(1)),
      StructuredCtaError);
}

TEST_CASE("loop variables cannot be assigned as data") {
  CHECK_THROWS_AS(
      elab("kernel k { out y[4]; for (i = 0; i < 4; i++) { i = 2; } }",
           cfg_n(1)),
      StructuredCtaError);
}

TEST_CASE("integer values can seed data registers") {
  Program p = elab("kernel k { out y[4]; y[tid] = tid; }", cfg_n(4));
  CHECK(p.threads[3].stmts[0].kind == StmtKind::SetConst);
  CHECK(p.threads[3].stmts[0].set_const.value == Rat(3));
}

TEST_CASE("loop step and inclusive bounds") {
  Program p = elab("kernel k { out y[8]; for (i = 0; i <= 6; i += 2) { "
                   "y[i] = 1; } }",
                   cfg_n(1));
  CHECK(p.threads[0].stmts.size() == 8); // i = 0,2,4,6
  CHECK_THROWS_AS(
      elab("kernel k { out y[8]; for (i = 0; i < 4; i += 0) { y[0] = 1; } }",
           cfg_n(1)),
      StructuredCtaError);
}

TEST_CASE("unbound parameter is reported") {
  CHECK_THROWS_WITH_AS(elab("kernel k { param N; out y[1]; y[0] = 1; }",
                            cfg_n(1)),
                       doctest::Contains("not bound"), StructuredCtaError);
}

TEST_CASE("array sizes fold against parameters and must be positive") {
  Program p = elab("kernel k { param N; out y[N + 1]; y[N] = 1; }",
                   cfg_n(1, 32, {{"N", 3}}));
  CHECK(p.find_array("y")->size == 4);
  CHECK_THROWS_AS(elab("kernel k { param N; out y[N]; y[0] = 1; }",
                       cfg_n(1, 32, {{"N", 0}})),
                  StructuredCtaError);
}

TEST_CASE("elaboration is deterministic") {
  LaunchConfig c = cfg_n(4, 4, {{"N", 4}});
  std::string a = program_to_string(elab(kSoftmaxNaive, c));
  std::string b = program_to_string(elab(kSoftmaxNaive, c));
  CHECK(a == b);
}

TEST_CASE("condition grammar handles parens and boolean operators") {
  Program p = elab("kernel k { out y[8]; "
                   "if ((tid < 2) || (tid >= 6 && !(tid == 7))) { y[tid] = 1; } "
                   "if ((tid + 1) * 2 <= 4) { y[tid] = 2; } }",
                   cfg_n(8));
  CHECK(p.threads[0].stmts.size() == 4); // both ifs taken
  CHECK(p.threads[1].stmts.size() == 4);
  CHECK(p.threads[6].stmts.size() == 2);
  CHECK(p.threads[7].stmts.empty());
}

TEST_CASE("config parses all keys and defaults warp to 32") {
  LaunchConfig c = parse_config("# comment\n"
                                "version = 1\n"
                                "threads = 4\n"
                                "threads_b = 16\n"
                                "params.N = 4   # four\n"
                                "params.TK = 2\n"
                                "inputs = a, b\n"
                                "outputs = c\n");
  CHECK(c.threads == 4);
  CHECK(c.for_a() == 4);
  CHECK(c.for_b() == 16);
  CHECK(c.warp_size == 32);
  CHECK(c.params.at("N") == 4);
  CHECK(c.params.at("TK") == 2);
  CHECK(c.inputs == std::vector<std::string>{"a", "b"});
  CHECK(c.outputs == std::vector<std::string>{"c"});
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(parse_config("threads 4\n"), ParseError);
  CHECK_THROWS_AS(parse_config("bogus_key = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("version = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_config("threads = 0\n"), ParseError);
  CHECK_THROWS_AS(parse_config("threads = x\n"), ParseError);
  CHECK_THROWS_AS(parse_config("params. = 3\n"), ParseError);
}

TEST_CASE("config input list must match kernel declarations when present") {
  LaunchConfig c = cfg_n(1);
  c.inputs = {"x"};
  c.outputs = {"y"};
  CHECK_NOTHROW(elab("kernel k { in x[1]; out y[1]; y[0] = x[0]; }", c));
  c.inputs = {"z"};
  CHECK_THROWS_AS(elab("kernel k { in x[1]; out y[1]; y[0] = x[0]; }", c),
                  StructuredCtaError);
}

TEST_CASE("duplicate declarations are parse errors") {
  CHECK_THROWS_AS(parse_kernel("kernel k { in x[1]; out x[1]; }"), ParseError);
  CHECK_THROWS_AS(parse_kernel("kernel k { param N; param N; }"), ParseError);
}

TEST_CASE("negative literal addresses survive to the ir") {
  // Bounds are checked at execution time, not elaboration time.
  Program p = elab("kernel k { in x[4]; out y[4]; y[tid] = x[tid - 2]; }",
                   cfg_n(4));
  CHECK(p.threads[0].stmts[0].load.addr.offset == -2);
  CHECK(p.threads[3].stmts[0].load.addr.offset == 1);
}

TEST_CASE("unroll guardrail trips on huge loops") {
  CHECK_THROWS_WITH_AS(
      elab("kernel k { out y[1]; for (i = 0; i < 3000000; i++) { y[0] = 1; } }",
           cfg_n(1)),
      doctest::Contains("unroll limit"), StructuredCtaError);
}
