// Benchmark: wall-clock comparison of serial (--jobs 1) and parallel
// verification-condition deciding on the bundled kernel pairs.  The
// parallel path distributes independent VCs across OpenMP threads; the
// serial path is the reference implementation the tests pin verdicts to.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ctaeq/pipeline.hpp"

using namespace ctaeq;

namespace {

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good())
    throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BenchCase {
  std::string a, b, cfg;
};

double run_once(const CheckRequest &req, unsigned jobs) {
  auto t0 = std::chrono::steady_clock::now();
  Report r = check_equivalence(req, jobs);
  auto t1 = std::chrono::steady_clock::now();
  if (r.verdict != ReportVerdict::Equivalent &&
      r.verdict != ReportVerdict::NotEquivalent)
    throw std::runtime_error("unexpected verdict in benchmark: " +
                             std::string(report_verdict_str(r.verdict)));
  return std::chrono::duration<double>(t1 - t0).count();
}

} // namespace

int main(int argc, char **argv) {
  std::string dir = argc > 1 ? argv[1] : "kernels";
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0)
    hw = 4;
  std::vector<BenchCase> cases = {
      {"softmax_naive.mk", "softmax_online.mk", "softmax16.cfg"},
      {"matmul_naive.mk", "matmul_tiled.mk", "matmul.cfg"},
      {"reduce_serial.mk", "reduce_tree.mk", "reduce.cfg"},
      {"attn_ref.mk", "attn_opt.mk", "attn.cfg"},
  };
  std::cout << "hardware threads: " << hw << "\n";
  std::cout << std::left << std::setw(44) << "pair" << std::right
            << std::setw(12) << "serial" << std::setw(12) << "parallel"
            << std::setw(10) << "speedup" << "\n";
  try {
    for (const auto &c : cases) {
      auto join = [&](const std::string &f) {
        return (std::filesystem::path(dir) / f).string();
      };
      CheckRequest req;
      req.kernel_a_src = read_file(join(c.a));
      req.kernel_b_src = read_file(join(c.b));
      req.kernel_a_name = c.a;
      req.kernel_b_name = c.b;
      req.cfg = parse_config(read_file(join(c.cfg)));
      run_once(req, 1); // warm up
      double serial = run_once(req, 1);
      double parallel = run_once(req, hw);
      std::cout << std::left << std::setw(44) << (c.a + " vs " + c.b)
                << std::right << std::fixed << std::setprecision(4)
                << std::setw(10) << serial << "s" << std::setw(10) << parallel
                << "s" << std::setw(9) << std::setprecision(2)
                << (parallel > 0 ? serial / parallel : 0.0) << "x\n";
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
