#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "weylscope/tridiag.hpp"

using namespace weylscope;
using tridiag::SymTridiag;

namespace {

// Dirichlet difference Laplacian: eigenvalues 2 - 2 cos(k pi / (n + 1)).
SymTridiag laplacian(int n) {
  SymTridiag T;
  T.diag.assign(static_cast<std::size_t>(n), 2.0);
  T.off.assign(static_cast<std::size_t>(n - 1), -1.0);
  return T;
}

std::vector<double> laplacian_exact(int n) {
  std::vector<double> ev;
  for (int k = 1; k <= n; ++k) ev.push_back(2.0 - 2.0 * std::cos(k * kPi / (n + 1)));
  return ev;
}

}  // namespace

TEST_SUITE_BEGIN("tridiag");

TEST_CASE("2x2 eigenvalues in closed form") {
  SymTridiag T;
  T.diag = {1.0, 3.0};
  T.off = {0.5};
  // eigenvalues 2 +- sqrt(1.25)
  auto ev = tridiag::eigenvalues_in(T, -10.0, 10.0, 1e-12);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0] == doctest::Approx(2.0 - std::sqrt(1.25)).epsilon(1e-10));
  CHECK(ev[1] == doctest::Approx(2.0 + std::sqrt(1.25)).epsilon(1e-10));
}

TEST_CASE("difference Laplacian spectrum matches the cosine formula") {
  const int n = 200;
  SymTridiag T = laplacian(n);
  auto exact = laplacian_exact(n);
  auto ev = tridiag::eigenvalues_in(T, -1.0, 5.0, 1e-11);
  REQUIRE(ev.size() == exact.size());
  for (int k = 0; k < n; ++k)
    CHECK(std::abs(ev[static_cast<std::size_t>(k)] - exact[static_cast<std::size_t>(k)]) < 1e-9);
}

TEST_CASE("Sturm count agrees with the exact eigenvalue count") {
  const int n = 157;
  SymTridiag T = laplacian(n);
  auto exact = laplacian_exact(n);
  for (double x : {0.0, 0.3, 1.0, 2.0, 3.7, 4.0, 5.0}) {
    int expect = static_cast<int>(std::count_if(exact.begin(), exact.end(),
                                                [&](double ev) { return ev < x; }));
    CHECK(tridiag::count_below(T, x) == expect);
  }
}

TEST_CASE("interval results concatenate to the full sweep") {
  const int n = 80;
  SymTridiag T = laplacian(n);
  auto all = tridiag::eigenvalues_in(T, 0.0, 4.5, 1e-11);
  auto low = tridiag::eigenvalues_in(T, 0.0, 2.0, 1e-11);
  auto high = tridiag::eigenvalues_in(T, 2.0, 4.5, 1e-11);
  REQUIRE(low.size() + high.size() == all.size());
  for (std::size_t i = 0; i < low.size(); ++i) CHECK(low[i] == doctest::Approx(all[i]).epsilon(1e-9));
  for (std::size_t i = 0; i < high.size(); ++i)
    CHECK(high[i] == doctest::Approx(all[low.size() + i]).epsilon(1e-9));
}

TEST_CASE("Gershgorin bounds enclose the spectrum") {
  SymTridiag T;
  T.diag = {0.5, -1.0, 4.0, 2.0};
  T.off = {0.3, -0.7, 1.1};
  double lo = tridiag::gershgorin_lower(T), hi = tridiag::gershgorin_upper(T);
  auto ev = tridiag::eigenvalues_in(T, lo, hi + 1e-9, 1e-12);
  REQUIRE(ev.size() == 4);
  CHECK(ev.front() >= lo);
  CHECK(ev.back() <= hi);
}

TEST_CASE("clustered diagonal still resolves to tolerance") {
  SymTridiag T;
  const int n = 50;
  T.diag.assign(n, 1.0);
  T.off.assign(n - 1, 1e-6);
  auto ev = tridiag::eigenvalues_in(T, 0.9, 1.1, 1e-13);
  REQUIRE(static_cast<int>(ev.size()) == n);
  // Perturbation theory: all eigenvalues within 2 |off| of the diagonal.
  for (double v : ev) CHECK(std::abs(v - 1.0) <= 2e-6 + 1e-12);
}

TEST_SUITE_END();
