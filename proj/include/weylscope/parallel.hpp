#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "weylscope/common.hpp"

// OpenMP kernels with a deterministic reduction scheme. Sums are formed in
// fixed-size blocks (block boundaries depend only on the problem size), each
// block accumulated serially in index order with Neumaier compensation, and
// the per-block results combined in a fixed pairwise tree. The result is
// bit-identical for any thread count, and the serial reference path is the
// same code with the parallel loop disabled.

namespace weylscope::par {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int t) {
#ifdef _OPENMP
  if (t > 0) omp_set_num_threads(t);
#else
  (void)t;
#endif
}

struct NeumaierSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

inline constexpr std::size_t kBlock = 4096;

namespace detail {

// Fixed pairwise tree over the block partials; order independent of threads.
inline double tree_combine(std::vector<double>& p) {
  std::size_t m = p.size();
  if (m == 0) return 0.0;
  while (m > 1) {
    std::size_t h = (m + 1) / 2;
    for (std::size_t i = 0; i + h < m; ++i) p[i] += p[i + h];
    m = h;
  }
  return p[0];
}

}  // namespace detail

// term(i) -> double
template <class F>
double blocked_sum(std::size_t n, F&& term, bool parallel = true) {
  if (n == 0) return 0.0;
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nb);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
    NeumaierSum acc;
    for (std::size_t i = lo; i < hi; ++i) acc.add(term(i));
    partial[static_cast<std::size_t>(b)] = acc.value();
  }
  (void)parallel;
  return detail::tree_combine(partial);
}

// term(i) -> std::complex<double>
template <class F>
cplx blocked_sum_c(std::size_t n, F&& term, bool parallel = true) {
  if (n == 0) return {0.0, 0.0};
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> pre(nb), pim(nb);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
    NeumaierSum ar, ai;
    for (std::size_t i = lo; i < hi; ++i) {
      const cplx z = term(i);
      ar.add(z.real());
      ai.add(z.imag());
    }
    pre[static_cast<std::size_t>(b)] = ar.value();
    pim[static_cast<std::size_t>(b)] = ai.value();
  }
  (void)parallel;
  return {detail::tree_combine(pre), detail::tree_combine(pim)};
}

// Independent iterations, no reduction.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& body, bool parallel = true) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  (void)parallel;
}

}  // namespace weylscope::par
