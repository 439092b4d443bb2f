#include <doctest.h>

#include <cmath>
#include <vector>

#include "weylscope/parallel.hpp"

using namespace weylscope;

TEST_SUITE_BEGIN("parallel");

TEST_CASE("blocked sum is bit-identical across modes and sizes") {
  auto term = [](std::size_t i) {
    double x = static_cast<double>(i % 9973) * 1e-3;
    return std::sin(x) - 0.3 * std::cos(2.0 * x);
  };
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{4095}, std::size_t{4096},
                        std::size_t{4097}, std::size_t{1000000}}) {
    double s = par::blocked_sum(n, term, false);
    double p = par::blocked_sum(n, term, true);
    CHECK(s == p);
  }
}

TEST_CASE("complex blocked sum is bit-identical across modes") {
  auto term = [](std::size_t i) {
    double x = static_cast<double>(i) * 1e-5;
    return cplx(std::cos(x), std::sin(3.0 * x));
  };
  cplx s = par::blocked_sum_c(300000, term, false);
  cplx p = par::blocked_sum_c(300000, term, true);
  CHECK(s.real() == p.real());
  CHECK(s.imag() == p.imag());
}

TEST_CASE("blocked sum agrees with a long double reference") {
  auto term = [](std::size_t i) {
    double x = static_cast<double>(i + 1);
    return 1.0 / (x * x);
  };
  const std::size_t n = 200000;
  long double ref = 0.0L;
  for (std::size_t i = n; i-- > 0;) ref += static_cast<long double>(term(i));
  double got = par::blocked_sum(n, term);
  CHECK(std::abs(got - static_cast<double>(ref)) < 1e-14 * static_cast<double>(ref));
}

TEST_CASE("Neumaier compensation survives cancellation") {
  par::NeumaierSum acc;
  acc.add(1.0);
  acc.add(1e100);
  acc.add(1.0);
  acc.add(-1e100);
  CHECK(acc.value() == 2.0);
}

TEST_CASE("parallel_for touches every index exactly once") {
  const std::ptrdiff_t n = 100000;
  std::vector<int> hits(static_cast<std::size_t>(n), 0);
  par::parallel_for(n, [&](std::ptrdiff_t i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_SUITE_END();
