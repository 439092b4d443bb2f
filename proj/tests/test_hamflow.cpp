#include <doctest.h>

#include <array>
#include <cmath>

#include "weylscope/geometry.hpp"
#include "weylscope/hamflow.hpp"

using namespace weylscope;
using geometry::ManifoldModel;
using hamflow::Hamiltonian;
using hamflow::PhasePoint;

namespace {

// Differences of the Hamiltonian itself, no library derivatives involved.
PhasePoint field_fd(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q) {
  const double eps = 1e-6;
  PhasePoint out;
  out.x = VecN(q.x.n);
  out.xi = VecN(q.x.n);
  for (int k = 0; k < q.x.n; ++k) {
    PhasePoint qp = q, qm = q;
    qp.xi[k] += eps;
    qm.xi[k] -= eps;
    out.x[k] = (hamflow::hamiltonian_value(m, h, qp) - hamflow::hamiltonian_value(m, h, qm)) /
               (2 * eps);
    qp = q;
    qm = q;
    qp.x[k] += eps;
    qm.x[k] -= eps;
    out.xi[k] = -(hamflow::hamiltonian_value(m, h, qp) - hamflow::hamiltonian_value(m, h, qm)) /
                (2 * eps);
  }
  return out;
}

PhasePoint sample_point(double a, double b, double c, double d) {
  PhasePoint q;
  q.x = VecN(a, b);
  q.xi = VecN(c, d);
  return q;
}

}  // namespace

TEST_SUITE_BEGIN("hamflow");

TEST_CASE("hamiltonian values on the flat torus") {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  PhasePoint q = sample_point(0.3, 1.0, 3.0, 4.0);
  CHECK(hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q) ==
        doctest::Approx(5.0).epsilon(1e-14));
  CHECK(hamflow::hamiltonian_value(m, Hamiltonian::Quadratic, q) ==
        doctest::Approx(25.0).epsilon(1e-14));
}

TEST_CASE("hamilton field matches differences of the hamiltonian") {
  for (const char* name : {"sphere", "prolate", "plane-trap"}) {
    ManifoldModel m = ManifoldModel::preset(name);
    PhasePoint q = sample_point(1.1, 0.6, 0.8, -0.5);
    for (auto h : {Hamiltonian::HalfWave, Hamiltonian::Quadratic}) {
      PhasePoint an = hamflow::hamilton_field(m, h, q);
      PhasePoint fd = field_fd(m, h, q);
      for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(an.x[k] - fd.x[k]) < 1e-8);
        CHECK(std::abs(an.xi[k] - fd.xi[k]) < 1e-8);
      }
    }
  }
}

TEST_CASE("field jacobian matches differences of the field") {
  ManifoldModel m = ManifoldModel::preset("plane-trap");
  PhasePoint q = sample_point(0.4, -0.3, 0.9, 0.2);
  std::array<std::array<double, 8>, 8> jac{};
  hamflow::hamilton_field_jacobian(m, Hamiltonian::Quadratic, q, jac);
  const double eps = 1e-6;
  for (int j = 0; j < 4; ++j) {
    PhasePoint qp = q, qm = q;
    double* pp = j < 2 ? &qp.x[j] : &qp.xi[j - 2];
    double* pm = j < 2 ? &qm.x[j] : &qm.xi[j - 2];
    *pp += eps;
    *pm -= eps;
    PhasePoint fp = hamflow::hamilton_field(m, Hamiltonian::Quadratic, qp);
    PhasePoint fm = hamflow::hamilton_field(m, Hamiltonian::Quadratic, qm);
    for (int i = 0; i < 4; ++i) {
      double fd = i < 2 ? (fp.x[i] - fm.x[i]) / (2 * eps) : (fp.xi[i - 2] - fm.xi[i - 2]) / (2 * eps);
      CHECK(std::abs(jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] - fd) < 1e-7);
    }
  }
}

TEST_CASE("poisson bracket canonical relations") {
  ManifoldModel m = ManifoldModel::preset("prolate");
  PhasePoint q = sample_point(1.2, 0.5, 0.4, 0.9);
  hamflow::Symbol x1 = [](const VecN& x, const VecN&) { return x[0]; };
  hamflow::Symbol x2 = [](const VecN& x, const VecN&) { return x[1]; };
  hamflow::Symbol xi1 = [](const VecN&, const VecN& xi) { return xi[0]; };
  hamflow::Symbol xi2 = [](const VecN&, const VecN& xi) { return xi[1]; };
  CHECK(hamflow::poisson_bracket(xi1, x1, q) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hamflow::poisson_bracket(xi2, x2, q) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(hamflow::poisson_bracket(x1, x2, q)) < 1e-10);
  CHECK(std::abs(hamflow::poisson_bracket(xi1, xi2, q)) < 1e-10);
  CHECK(std::abs(hamflow::poisson_bracket(xi1, x2, q)) < 1e-10);
}

TEST_CASE("bracket of the hamiltonian with itself vanishes along the flow") {
  ManifoldModel m = ManifoldModel::preset("plane-trap");
  PhasePoint q = sample_point(0.2, 0.4, 0.7, -0.3);
  hamflow::Symbol h2 = [&](const VecN& x, const VecN& xi) {
    PhasePoint p;
    p.x = x;
    p.xi = xi;
    return hamflow::hamiltonian_value(m, Hamiltonian::Quadratic, p);
  };
  CHECK(std::abs(hamflow::poisson_bracket(h2, h2, q)) < 1e-9);
}

TEST_CASE("energy is conserved along integrated bicharacteristics") {
  for (const char* name : {"plane", "plane-trap", "prolate"}) {
    ManifoldModel m = ManifoldModel::preset(name);
    PhasePoint q0 = hamflow::unit_cosphere(m, sample_point(0.4, 0.2, 0.6, 0.8));
    auto traj = hamflow::integrate_bicharacteristic(m, Hamiltonian::HalfWave, q0, 10.0);
    CHECK(traj.energy_drift < 1e-8);
    CHECK(traj.steps > 0);
    CHECK(traj.samples.front().t == 0.0);
    CHECK(traj.samples.back().t == doctest::Approx(10.0).epsilon(1e-12));
  }
}

TEST_CASE("flat geodesics are straight lines") {
  ManifoldModel m = geometry::ManifoldModel::perturbed_plane(0.0);
  PhasePoint q0 = sample_point(0.1, -0.2, 0.6, 0.8);
  auto traj = hamflow::integrate_bicharacteristic(m, Hamiltonian::HalfWave, q0, 3.0);
  const auto& last = traj.samples.back().q;
  CHECK(std::abs(last.x[0] - (0.1 + 3.0 * 0.6)) < 1e-9);
  CHECK(std::abs(last.x[1] - (-0.2 + 3.0 * 0.8)) < 1e-9);
  CHECK(std::abs(last.xi[0] - 0.6) < 1e-12);
  CHECK(std::abs(last.xi[1] - 0.8) < 1e-12);
}

TEST_CASE("great circles close after 2 pi, through the pole as well") {
  ManifoldModel m = ManifoldModel::preset("sphere");
  PhasePoint eq = hamflow::unit_cosphere(m, sample_point(kPi / 2, 0.0, 0.0, 1.0));
  auto t1 = hamflow::integrate_bicharacteristic(m, Hamiltonian::HalfWave, eq, kTwoPi);
  CHECK(hamflow::return_distance(m, eq, t1.samples.back().q) < 1e-6);

  // meridian through both poles, handled by the rotating chart
  PhasePoint mer = hamflow::unit_cosphere(m, sample_point(kPi / 2, 0.3, 1.0, 0.0));
  auto t2 = hamflow::integrate_bicharacteristic(m, Hamiltonian::HalfWave, mer, kTwoPi);
  CHECK(hamflow::return_distance(m, mer, t2.samples.back().q) < 1e-6);
}

TEST_CASE("trapping classifier separates the two plane bumps") {
  ManifoldModel open = ManifoldModel::preset("plane");
  PhasePoint q = hamflow::unit_cosphere(open, sample_point(0.1, 0.0, 1.0, 0.05));
  auto a = hamflow::classify_trapping(open, q, 60.0, 12.0);
  CHECK(a.forward == hamflow::Fate::Escaped);
  CHECK(a.backward == hamflow::Fate::Escaped);
  CHECK(a.t_escape_forward > 0.0);
}

TEST_CASE("torus closed geodesics carry lattice lengths and degenerate maps") {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto geos = hamflow::find_closed_geodesics(m, 4.1 * kPi);
  REQUIRE(!geos.empty());
  CHECK(geos.front().length == doctest::Approx(kTwoPi).epsilon(1e-12));
  bool saw_diag = false;
  for (const auto& g : geos) {
    if (std::abs(g.length - kTwoPi * std::sqrt(2.0)) < 1e-9) saw_diag = true;
    auto filled = hamflow::monodromy(m, g);
    CHECK(filled.has_monodromy);
    CHECK(std::abs(filled.det_factor) < 1e-8);
    CHECK(filled.det_residual < 1e-8);
  }
  CHECK(saw_diag);
}

TEST_CASE("sphere monodromy is the identity with two conjugate points") {
  ManifoldModel m = ManifoldModel::preset("sphere");
  auto geos = hamflow::find_closed_geodesics(m, 7.0);
  REQUIRE(!geos.empty());
  auto g = hamflow::monodromy(m, geos.front());
  CHECK(g.length == doctest::Approx(kTwoPi).epsilon(1e-10));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(g.dP(i, j) - (i == j ? 1.0 : 0.0)) < 1e-8);
  CHECK(g.conj_count == 2);
}

TEST_CASE("prolate equator matches the constant-curvature return map") {
  // r(s) = sin s - 0.2 sin^3 s: equator radius 0.8, length 1.6 pi, and
  // K = -r''/r = 0.5 there, so det(I - dP) = 2 - 2 cos(sqrt(K) L).
  ManifoldModel m = ManifoldModel::preset("prolate");
  auto geos = hamflow::find_closed_geodesics(m, 6.0);
  bool found = false;
  for (const auto& g : geos) {
    if (std::abs(g.length - 1.6 * kPi) > 1e-6) continue;
    found = true;
    auto filled = hamflow::monodromy(m, g);
    double oracle = 2.0 - 2.0 * std::cos(std::sqrt(0.5) * 1.6 * kPi);
    CHECK(std::abs(filled.det_factor - oracle) < 1e-4);
    CHECK(filled.det_residual < 1e-6);
  }
  CHECK(found);
}

TEST_CASE("unit cosphere normalization") {
  ManifoldModel m = ManifoldModel::preset("prolate");
  PhasePoint q = hamflow::unit_cosphere(m, sample_point(1.0, 0.2, 3.0, -4.0));
  CHECK(hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q) ==
        doctest::Approx(1.0).epsilon(1e-12));
  PhasePoint zero = sample_point(1.0, 0.2, 0.0, 0.0);
  CHECK_THROWS_AS(hamflow::unit_cosphere(m, zero), Error);
}

TEST_SUITE_END();
