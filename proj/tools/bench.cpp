// Times the OpenMP reductions against the serial reference on the three
// shapes the library leans on: a long real sum, a long complex sum, and a
// grid-sized elementwise pass. The fixed-block accumulation makes both modes
// bit-identical, which is asserted here as well as timed.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "weylscope/common.hpp"
#include "weylscope/parallel.hpp"

using weylscope::cplx;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double timed(F&& f, int reps) {
  f();  // warm up
  double t0 = now();
  for (int r = 0; r < reps; ++r) f();
  return (now() - t0) / reps;
}

}  // namespace

int main() {
  using namespace weylscope;
  const std::size_t n = 1 << 24;
  std::printf("threads available: %d, terms per workload: %zu\n", omp_get_max_threads(), n);
  std::printf("%-28s %12s %12s %8s\n", "workload", "serial [ms]", "parallel[ms]", "speedup");

  auto real_term = [](std::size_t i) {
    double x = static_cast<double>(i) * 1e-6;
    return std::cos(x) / (1.0 + x * x);
  };
  double rs = 0, rp = 0;
  double t_rs = timed([&] { rs = par::blocked_sum(n, real_term, false); }, 3);
  double t_rp = timed([&] { rp = par::blocked_sum(n, real_term, true); }, 3);
  std::printf("%-28s %12.2f %12.2f %8.2f  %s\n", "real reduction", 1e3 * t_rs, 1e3 * t_rp,
              t_rs / t_rp, rs == rp ? "bit-identical" : "MISMATCH");

  auto cplx_term = [](std::size_t i) {
    double x = static_cast<double>(i) * 1e-6;
    return cplx(std::cos(3.0 * x), std::sin(2.0 * x)) * std::exp(-0.1 * x);
  };
  cplx cs, cp;
  double t_cs = timed([&] { cs = par::blocked_sum_c(n, cplx_term, false); }, 3);
  double t_cp = timed([&] { cp = par::blocked_sum_c(n, cplx_term, true); }, 3);
  std::printf("%-28s %12.2f %12.2f %8.2f  %s\n", "complex reduction", 1e3 * t_cs, 1e3 * t_cp,
              t_cs / t_cp, cs == cp ? "bit-identical" : "MISMATCH");

  std::vector<double> a(n, 1.0), b(n);
  auto pass = [&](bool parallel) {
    par::parallel_for(static_cast<std::ptrdiff_t>(n),
                      [&](std::ptrdiff_t i) { b[static_cast<std::size_t>(i)] = std::sqrt(a[static_cast<std::size_t>(i)] + static_cast<double>(i)); },
                      parallel);
  };
  double t_es = timed([&] { pass(false); }, 3);
  std::vector<double> serial_b = b;
  double t_ep = timed([&] { pass(true); }, 3);
  std::printf("%-28s %12.2f %12.2f %8.2f  %s\n", "elementwise grid pass", 1e3 * t_es, 1e3 * t_ep,
              t_es / t_ep, serial_b == b ? "bit-identical" : "MISMATCH");

  bool ok = rs == rp && cs == cp && serial_b == b;
  if (!ok) {
    std::printf("determinism violated\n");
    return 1;
  }
  return 0;
}
