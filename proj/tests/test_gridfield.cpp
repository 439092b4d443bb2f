#include <doctest.h>

#include <array>
#include <cmath>

#include "weylscope/gridfield.hpp"

using namespace weylscope;
using grid::GridField;

TEST_SUITE_BEGIN("gridfield");

TEST_CASE("signed winding convention") {
  CHECK(grid::signed_bin(0, 8) == 0);
  CHECK(grid::signed_bin(3, 8) == 3);
  CHECK(grid::signed_bin(4, 8) == 4);
  CHECK(grid::signed_bin(5, 8) == -3);
  CHECK(grid::signed_bin(7, 8) == -1);
}

TEST_CASE("flat index round trip") {
  GridField f = grid::make_box_field({4, 8, 2}, {1.0, 1.0, 1.0});
  std::array<int, 4> idx{};
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    grid::unflatten(f, flat, idx);
    CHECK(grid::flat_index(f, idx) == flat);
  }
}

TEST_CASE("pure mode transforms to a single unnormalized bin") {
  const int n = 32;
  GridField f = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  const int k1 = 3, k2 = -5;
  grid::fill(f, [&](const VecN& x) {
    return std::exp(cplx(0.0, k1 * x[0] + k2 * x[1]));
  });
  GridField fh = grid::to_frequency(f);
  std::array<int, 4> idx{};
  for (std::size_t flat = 0; flat < fh.size(); ++flat) {
    grid::unflatten(fh, flat, idx);
    cplx v = fh.values[flat];
    if (grid::signed_bin(idx[0], n) == k1 && grid::signed_bin(idx[1], n) == k2) {
      CHECK(std::abs(v - cplx(n * n, 0.0)) < 1e-9 * n * n);
    } else {
      CHECK(std::abs(v) < 1e-9 * n * n);
    }
  }
}

TEST_CASE("transform pair is an exact round trip with equal norms") {
  GridField f = grid::make_box_field({16, 64}, {3.0, 7.0});
  grid::fill(f, [](const VecN& x) {
    return cplx(std::sin(2.0 * kTwoPi * x[0] / 3.0), std::cos(3.0 * kTwoPi * x[1] / 7.0)) +
           cplx(0.25, 0.0);
  });
  GridField fh = grid::to_frequency(f);
  CHECK(fh.space == grid::Space::Frequency);
  CHECK(grid::l2_norm(fh) == doctest::Approx(grid::l2_norm(f)).epsilon(1e-13));
  GridField back = grid::to_position(fh);
  CHECK(grid::l2_error(back, f) < 1e-13 * grid::l2_norm(f));
}

TEST_CASE("frequency coordinates follow the box period") {
  GridField f = grid::make_box_field({8, 8}, {kTwoPi, 4.0 * kPi});
  f.space = grid::Space::Frequency;
  std::array<int, 4> idx{1, 1, 0, 0};
  VecN k = grid::frequency_at(f, idx);
  CHECK(k[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k[1] == doctest::Approx(0.5).epsilon(1e-14));
  idx = {7, 5, 0, 0};
  k = grid::frequency_at(f, idx);
  CHECK(k[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(k[1] == doctest::Approx(-1.5).epsilon(1e-14));
}

TEST_CASE("multiplier |k|^2 acts as the (positive) Laplacian on a mode") {
  const int n = 16;
  GridField f = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  grid::fill(f, [](const VecN& x) { return std::exp(cplx(0.0, 2.0 * x[0] - x[1])); });
  GridField fh = grid::to_frequency(f);
  grid::apply_multiplier(fh, [](const VecN& k) { return cplx(dot(k, k), 0.0); });
  GridField lap = grid::to_position(fh);
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(std::abs(lap.values[i] - 5.0 * f.values[i]) < 1e-10);
}

TEST_CASE("position norm matches the quadrature of |f|^2") {
  const int n = 64;
  const double L = 5.0;
  GridField f = grid::make_box_field({n}, {L});
  grid::fill(f, [&](const VecN& x) { return cplx(std::sin(kTwoPi * x[0] / L), 0.0); });
  // int_0^L sin^2(2 pi x / L) dx = L / 2, and the trapezoid rule on a full
  // period is exact here.
  CHECK(grid::l2_norm(f) == doctest::Approx(std::sqrt(L / 2.0)).epsilon(1e-12));
}

TEST_CASE("grids reject unusable dimensions") {
  CHECK_THROWS_AS(grid::make_box_field({48, 48}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(grid::make_box_field({0}, {1.0}), Error);
  CHECK_THROWS_AS(grid::make_box_field({8, 8}, {1.0}), Error);
}

TEST_SUITE_END();
