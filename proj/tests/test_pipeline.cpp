#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctaeq/pipeline.hpp"

using namespace ctaeq;

namespace {

const char *kIdent = R"(kernel ident_x {
  in x[4];
  out y[4];
  y[tid] = x[tid];
})";

const char *kIdentPlus1 = R"(kernel ident_plus1 {
  in x[4];
  out y[4];
  y[tid] = x[tid] + 1;
})";

const char *kSoftmaxNaive = R"(kernel softmax_naive {
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
})";

const char *kSoftmaxOnline = R"(kernel softmax_online {
  param N;
  in x[N];
  out y[N];
  scratch buf[N];
  buf[tid] = x[tid];
  sync;
  m = buf[0];
  d = 1;
  for (i = 1; i < N; i++) {
    mn = max(m, buf[i]);
    d = d * exp(m - mn) + exp(buf[i] - mn);
    m = mn;
  }
  y[tid] = exp(buf[tid] - m) / d;
})";

const char *kSoftmaxNosync = R"(kernel softmax_nosync {
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
})";

LaunchConfig softmax_cfg(int64_t n) {
  LaunchConfig cfg;
  cfg.threads = static_cast<Tid>(n);
  cfg.params["N"] = n;
  cfg.inputs = {"x"};
  cfg.outputs = {"y"};
  return cfg;
}

LaunchConfig ident_cfg() {
  LaunchConfig cfg;
  cfg.threads = 4;
  cfg.inputs = {"x"};
  cfg.outputs = {"y"};
  return cfg;
}

CheckRequest request(const char *a, const char *b, LaunchConfig cfg) {
  CheckRequest req;
  req.kernel_a_src = a;
  req.kernel_b_src = b;
  req.cfg = std::move(cfg);
  return req;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Timings differ between runs; everything else must be reproducible.
nlohmann::ordered_json stripped_json(const Report &r) {
  auto j = report_to_json(r);
  j.erase("timings");
  return j;
}

} // namespace

TEST_CASE("symbolic inputs cover every input element with distinct names") {
  LaunchConfig cfg;
  cfg.inputs = {"a", "b"};
  std::vector<ArrayDecl> arrays = {{"a", 2, Role::In},
                                   {"out", 3, Role::Out},
                                   {"b", 1, Role::In},
                                   {"tmp", 4, Role::Scratch}};
  SharedMem init = make_symbolic_inputs(cfg, arrays);
  REQUIRE(init.size() == 3);
  CHECK(init.at({"a", 0}) == var("a_0"));
  CHECK(init.at({"a", 1}) == var("a_1"));
  CHECK(init.at({"b", 0}) == var("b_0"));
  CHECK(init.count({"out", 0}) == 0);
  CHECK(init.count({"tmp", 0}) == 0);
}

TEST_CASE("identity kernel is equivalent to itself") {
  Report r = check_equivalence(request(kIdent, kIdent, ident_cfg()));
  CHECK(r.verdict == ReportVerdict::Equivalent);
  REQUIRE(r.vcs.size() == 4);
  for (size_t i = 0; i < 4; i++) {
    CHECK(r.vcs[i].array == "y");
    CHECK(r.vcs[i].index == i);
    CHECK(r.vcs[i].verdict.kind == VerdictKind::Equal);
  }
  CHECK(r.side_conditions.empty());
  REQUIRE(r.env_a.size() == 4);
  REQUIRE(r.env_b.size() == 4);
  for (size_t i = 0; i < 4; i++) {
    CHECK(r.env_a[i].value == r.env_b[i].value);
    CHECK(r.env_a[i].value == var("x_" + std::to_string(i)));
  }
}

TEST_CASE("shifted identity is refuted with a concrete witness on every "
          "element") {
  Report r = check_equivalence(request(kIdent, kIdentPlus1, ident_cfg()));
  CHECK(r.verdict == ReportVerdict::NotEquivalent);
  REQUIRE(r.vcs.size() == 4);
  for (const auto &vc : r.vcs) {
    CHECK(vc.verdict.kind == VerdictKind::NotEqual);
    REQUIRE(vc.verdict.witness.has_value());
    const auto &w = *vc.verdict.witness;
    CHECK(w.assignment.count("x_" + std::to_string(vc.index)) == 1);
    CHECK(w.f_enclosure != w.g_enclosure);
  }
}

TEST_CASE("naive and online softmax agree with all side conditions "
          "discharged") {
  Report r = check_equivalence(
      request(kSoftmaxNaive, kSoftmaxOnline, softmax_cfg(4)));
  CHECK(r.verdict == ReportVerdict::Equivalent);
  REQUIRE(r.vcs.size() == 4);
  for (const auto &vc : r.vcs)
    CHECK(vc.verdict.kind == VerdictKind::Equal);
  REQUIRE(!r.side_conditions.empty());
  for (const auto &sc : r.side_conditions)
    CHECK(sc.discharged);
}

TEST_CASE("missing barrier surfaces as a kernel error with the classic "
          "racing pair") {
  Report r = check_equivalence(
      request(kSoftmaxNaive, kSoftmaxNosync, softmax_cfg(4)));
  CHECK(r.verdict == ReportVerdict::KernelBError);
  CHECK(r.error_kernel == "b");
  REQUIRE(!r.races.empty());
  // Thread 0's read of buf[1] races thread 1's store of buf[1].
  bool found = false;
  for (const auto &race : r.races) {
    if (race.addr.array != "buf" || race.addr.offset != 1)
      continue;
    const AccessRef &w =
        race.first.kind == AccessKind::Write ? race.first : race.second;
    const AccessRef &rd =
        race.first.kind == AccessKind::Write ? race.second : race.first;
    if (w.kind == AccessKind::Write && w.tid == 1 &&
        rd.kind == AccessKind::Read && rd.tid == 0)
      found = true;
  }
  CHECK(found);

  // Same pair with the racy kernel first blames kernel a.
  Report rr = check_equivalence(
      request(kSoftmaxNosync, kSoftmaxNaive, softmax_cfg(4)));
  CHECK(rr.verdict == ReportVerdict::KernelAError);
  CHECK(rr.error_kernel == "a");
  CHECK(!rr.races.empty());
}

TEST_CASE("parse failures are attributed to the offending kernel") {
  Report r = check_equivalence(
      request("kernel broken { out y[4]; y[tid] = ; }", kIdent, ident_cfg()));
  CHECK(r.verdict == ReportVerdict::KernelAError);
  CHECK(r.error_kernel == "a");
  CHECK(!r.error_detail.empty());
  CHECK(r.vcs.empty());

  Report rb = check_equivalence(
      request(kIdent, "kernel broken { out y[4]; y[tid] = ; }", ident_cfg()));
  CHECK(rb.verdict == ReportVerdict::KernelBError);
  CHECK(rb.error_kernel == "b");
}

TEST_CASE("mismatched output signatures are rejected before execution") {
  const char *half = R"(kernel half {
    in x[4];
    out y[2];
    if (tid < 2) { y[tid] = x[tid]; }
  })";
  Report r = check_equivalence(request(kIdent, half, ident_cfg()));
  CHECK(r.verdict == ReportVerdict::KernelBError);
  CHECK(!r.error_detail.empty());
  CHECK(r.vcs.empty());
}

TEST_CASE("kernels may use different thread counts") {
  const char *serial = R"(kernel serial_copy {
    in x[4];
    out y[4];
    for (i = 0; i < 4; i++) {
      y[i] = x[i];
    }
  })";
  LaunchConfig cfg = ident_cfg();
  cfg.threads = 0;
  cfg.threads_a = 1;
  cfg.threads_b = 4;
  Report r = check_equivalence(request(serial, kIdent, cfg));
  CHECK(r.verdict == ReportVerdict::Equivalent);
  REQUIRE(r.vcs.size() == 4);
}

TEST_CASE("an output element no thread wrote is a kernel error") {
  const char *partial = R"(kernel partial {
    out y[2];
    if (tid < 1) { y[0] = 1; }
  })";
  const char *full = R"(kernel full {
    out y[2];
    y[tid] = 1;
  })";
  LaunchConfig cfg;
  cfg.threads = 2;
  cfg.outputs = {"y"};
  Report r = check_equivalence(request(partial, full, cfg));
  CHECK(r.verdict == ReportVerdict::KernelAError);
  REQUIRE(!r.safeties.empty());
  CHECK(r.safeties[0].kind == SafetyKind::UninitMemoryRead);
  REQUIRE(r.safeties[0].addr.has_value());
  CHECK(r.safeties[0].addr->array == "y");
  CHECK(r.safeties[0].addr->offset == 1);
  CHECK(r.safeties[0].detail == "output element never written");
}

TEST_CASE("deadlocked kernels report the blocked thread table") {
  const char *dead = R"(kernel deadlock_warps {
    out y[8];
    if (tid < 4) {
      sync;
    } else {
      if (tid < 6) {
        syncwarp(1);
      } else {
        sync;
      }
    }
    y[tid] = 1;
  })";
  LaunchConfig cfg;
  cfg.threads = 8;
  cfg.warp_size = 4;
  cfg.outputs = {"y"};
  Report r = check_equivalence(request(dead, dead, cfg));
  CHECK(r.verdict == ReportVerdict::KernelAError);
  REQUIRE(r.deadlock.has_value());
  CHECK(r.deadlock->conflict_tids.has_value());

  auto j = report_to_json(r);
  REQUIRE(j.contains("deadlock"));
  REQUIRE(j["deadlock"].contains("threads"));
  CHECK(j["deadlock"]["threads"].size() == 8);
}

TEST_CASE("report json carries the fixed schema") {
  Report r = check_equivalence(
      request(kSoftmaxNaive, kSoftmaxOnline, softmax_cfg(4)));
  auto j = report_to_json(r);
  CHECK(j["verdict"] == "equivalent");
  CHECK(j["kernels"]["a"] == "a");
  CHECK(j["kernels"]["b"] == "b");
  REQUIRE(j["vcs"].is_array());
  REQUIRE(j["vcs"].size() == 4);
  CHECK(j["vcs"][0]["array"] == "y");
  CHECK(j["vcs"][0]["index"] == 0);
  CHECK(j["vcs"][0]["verdict"] == "equal");
  REQUIRE(j.contains("side_conditions"));
  for (const auto &sc : j["side_conditions"]) {
    CHECK(sc.contains("denominator"));
    CHECK(sc["discharged"] == true);
  }
  REQUIRE(j.contains("timings"));
  for (const char *k : {"parse", "exec_a", "exec_b", "decide"})
    CHECK(j["timings"].contains(k));
  CHECK(!j.contains("error"));
  CHECK(!j.contains("race"));
  CHECK(!j.contains("deadlock"));
  CHECK(!j.contains("safety"));

  // Witness rendering on the refuted pair.
  Report rn = check_equivalence(request(kIdent, kIdentPlus1, ident_cfg()));
  auto jn = report_to_json(rn);
  CHECK(jn["verdict"] == "not-equivalent");
  REQUIRE(jn["vcs"][0].contains("witness"));
  CHECK(jn["vcs"][0]["witness"].contains("assignment"));
  CHECK(jn["vcs"][0]["witness"].contains("precision"));
}

TEST_CASE("reports are byte-identical across repeats and job counts") {
  auto base = stripped_json(check_equivalence(
      request(kSoftmaxNaive, kSoftmaxOnline, softmax_cfg(4)), 1));
  for (unsigned jobs : {1u, 4u, 8u}) {
    auto again = stripped_json(check_equivalence(
        request(kSoftmaxNaive, kSoftmaxOnline, softmax_cfg(4)), jobs));
    CHECK(base.dump() == again.dump());
  }
  auto ne1 = stripped_json(
      check_equivalence(request(kIdent, kIdentPlus1, ident_cfg()), 1));
  auto ne4 = stripped_json(
      check_equivalence(request(kIdent, kIdentPlus1, ident_cfg()), 4));
  CHECK(ne1.dump() == ne4.dump());
}

TEST_CASE("output environments round-trip through the text format") {
  Report r = check_equivalence(
      request(kSoftmaxNaive, kSoftmaxOnline, softmax_cfg(4)));
  std::string text = serialize_env(r.env_a);
  auto back = deserialize_env(text);
  REQUIRE(back.size() == r.env_a.size());
  for (size_t i = 0; i < back.size(); i++) {
    CHECK(back[i].array == r.env_a[i].array);
    CHECK(back[i].index == r.env_a[i].index);
    CHECK(back[i].value == r.env_a[i].value);
  }
}

TEST_CASE("bundled corpus manifest matches the checker's verdicts") {
  std::string dir = CTAEQ_KERNELS_DIR;
  std::ifstream mf(dir + "/manifest.txt");
  REQUIRE(mf.good());
  std::string line;
  size_t n_pairs = 0;
  while (std::getline(mf, line)) {
    if (auto h = line.find('#'); h != std::string::npos)
      line.erase(h);
    std::istringstream ss(line);
    std::string ka, kb, cfg_file, expect;
    if (!(ss >> ka >> kb >> cfg_file >> expect))
      continue;
    CAPTURE(ka);
    CAPTURE(kb);
    CAPTURE(cfg_file);
    CheckRequest req;
    req.kernel_a_src = read_file(dir + "/" + ka);
    req.kernel_b_src = read_file(dir + "/" + kb);
    req.kernel_a_name = ka;
    req.kernel_b_name = kb;
    req.cfg = parse_config(read_file(dir + "/" + cfg_file));
    Report r = check_equivalence(req, 4);
    CHECK(report_verdict_str(r.verdict) == expect);
    n_pairs++;
  }
  CHECK(n_pairs == 15);
}
