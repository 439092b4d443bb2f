#include <doctest.h>

#include <cmath>
#include <map>

#include "weylscope/geometry.hpp"
#include "weylscope/spectrum.hpp"
#include "weylscope/tridiag.hpp"

using namespace weylscope;
using geometry::ManifoldModel;
using spectrum::SpectrumTable;

namespace {

// Independent lattice enumeration for a rectangular torus with side lengths
// L1, L2: frequencies |2 pi (m1 / L1, m2 / L2)|.
std::map<double, int> rect_torus_modes(double L1, double L2, double lambda_max) {
  std::map<double, int> modes;
  int b1 = static_cast<int>(lambda_max * L1 / kTwoPi) + 1;
  int b2 = static_cast<int>(lambda_max * L2 / kTwoPi) + 1;
  for (int m1 = -b1; m1 <= b1; ++m1)
    for (int m2 = -b2; m2 <= b2; ++m2) {
      double k1 = kTwoPi * m1 / L1, k2 = kTwoPi * m2 / L2;
      double lam = std::hypot(k1, k2);
      if (lam <= lambda_max) {
        // quantize to kill float noise between +-m pairs
        double key = std::round(lam * 1e12) / 1e12;
        modes[key] += 1;
      }
    }
  return modes;
}

}  // namespace

TEST_SUITE_BEGIN("spectrum");

TEST_CASE("square torus table equals the lattice enumeration") {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto table = spectrum::compute_spectrum(m, 30.0);
  auto brute = rect_torus_modes(kTwoPi, kTwoPi, 30.0);
  REQUIRE(table.entries.size() == brute.size());
  auto it = brute.begin();
  for (const auto& e : table.entries) {
    CHECK(std::abs(e.lambda - it->first) < 1e-9);
    CHECK(e.mult == it->second);
    ++it;
  }
  CHECK(table.lambda_max == 30.0);
}

TEST_CASE("rectangular torus table equals the lattice enumeration") {
  ManifoldModel m = ManifoldModel::preset("torus-rect");
  auto table = spectrum::compute_spectrum(m, 18.0);
  auto brute = rect_torus_modes(kTwoPi, kTwoPi * std::sqrt(2.0), 18.0);
  REQUIRE(table.entries.size() == brute.size());
  auto it = brute.begin();
  long total = 0;
  for (const auto& e : table.entries) {
    CHECK(std::abs(e.lambda - it->first) < 1e-9);
    CHECK(e.mult == it->second);
    total += e.mult;
    ++it;
  }
  CHECK(table.total_count() == total);
}

TEST_CASE("sphere frequencies are sqrt(l(l+1)) with multiplicity 2l+1") {
  ManifoldModel m = ManifoldModel::sphere2(1.0);
  auto table = spectrum::compute_spectrum(m, 25.0);
  std::size_t i = 0;
  for (int l = 0; std::sqrt(static_cast<double>(l) * (l + 1)) <= 25.0; ++l, ++i) {
    REQUIRE(i < table.entries.size());
    CHECK(table.entries[i].lambda ==
          doctest::Approx(std::sqrt(static_cast<double>(l) * (l + 1))).epsilon(1e-13));
    CHECK(table.entries[i].mult == 2 * l + 1);
  }
  CHECK(i == table.entries.size());
}

TEST_CASE("sphere radius rescales frequencies") {
  auto unit = spectrum::compute_spectrum(ManifoldModel::sphere2(1.0), 10.0);
  auto big = spectrum::compute_spectrum(ManifoldModel::sphere2(2.0), 5.0);
  REQUIRE(unit.entries.size() == big.entries.size());
  for (std::size_t i = 0; i < unit.entries.size(); ++i) {
    CHECK(big.entries[i].lambda == doctest::Approx(unit.entries[i].lambda / 2.0).epsilon(1e-13));
    CHECK(big.entries[i].mult == unit.entries[i].mult);
  }
}

TEST_CASE("separated round-sphere profile reproduces l(l+1) through the solver") {
  // The revolution pipeline knows nothing about spherical harmonics, so the
  // closed form is an end-to-end oracle for meshing, symmetrization, and the
  // eigensolver together. Its table keeps one entry per azimuthal mode, so
  // the degenerate sphere levels are buckets of entries here.
  ManifoldModel m = ManifoldModel::revolution("sphere");
  auto table = spectrum::compute_spectrum(m, 12.0);
  long assigned = 0;
  for (int l = 0; std::sqrt(static_cast<double>(l) * (l + 1)) <= 12.0 - 0.3; ++l) {
    double exact = std::sqrt(static_cast<double>(l) * (l + 1));
    long mult = 0;
    for (const auto& e : table.entries)
      if (std::abs(e.lambda - exact) < 0.3) mult += e.mult;
    CHECK(mult == 2 * l + 1);
    assigned += mult;
  }
  // every entry below the last safely-complete level got bucketed
  long below = 0;
  for (const auto& e : table.entries)
    if (e.lambda <= 12.0 - 0.3) below += e.mult;
  CHECK(assigned >= below);
}

TEST_CASE("mode matrix is a discrete Sturm-Liouville operator") {
  auto prof = ManifoldModel::revolution("prolate").profile();
  auto T = spectrum::revolution_mode_matrix(prof, 3, 800);
  CHECK(T.diag.size() == 800);
  CHECK(T.off.size() == 799);
  // symmetrized positive operator: every eigenvalue of the m = 3 block is
  // at least as large as the centrifugal floor min (m^2 / r^2) > m^2 / r_max^2
  double rmax = 0.0;
  for (int i = 0; i <= 100; ++i) rmax = std::max(rmax, prof.r(prof.length * i / 100.0));
  double lo = tridiag::gershgorin_lower(T);
  auto ev = tridiag::eigenvalues_in(T, lo, 9.0 / (rmax * rmax) * 1.0001, 1e-10);
  CHECK(ev.empty());
}

TEST_CASE("revolution meshes gate against each other") {
  ManifoldModel m = ManifoldModel::preset("prolate");
  spectrum::RevolutionOptions opt;
  opt.mesh = 600;
  opt.gate = 1e-12;  // unreachable demand: the two meshes must disagree
  CHECK_THROWS_AS(spectrum::compute_spectrum(m, 10.0, opt), Error);
  opt.gate = 1e-3;
  auto table = spectrum::compute_spectrum(m, 10.0, opt);
  CHECK(!table.entries.empty());
}

TEST_CASE("counting function steps exactly at table entries") {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto table = spectrum::compute_spectrum(m, 10.0);
  CHECK(spectrum::counting_function(table, 0.0) == 1.0);  // the constant mode
  CHECK(spectrum::counting_function(table, 0.99) == 1.0);
  CHECK(spectrum::counting_function(table, 1.0) == 5.0);
  CHECK(spectrum::counting_function(table, 10.0) == static_cast<double>(table.total_count()));
  CHECK_THROWS_AS(spectrum::counting_function(table, 10.5), Error);
}

TEST_CASE("weyl fit approaches the phase-space prediction on the torus") {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto table = spectrum::compute_spectrum(m, 120.0);
  auto fit = spectrum::weyl_fit(m, table);
  CHECK(fit.coeff_expected == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(std::abs(fit.ratio.back().second - 1.0) < 0.05);
  CHECK(fit.rel_err_at_max < 0.05);
  CHECK(std::abs(fit.exponent - 2.0) < 0.1);
}

TEST_SUITE_END();
