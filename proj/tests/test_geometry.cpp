#include <doctest.h>

#include <cmath>

#include "weylscope/geometry.hpp"

using namespace weylscope;
using geometry::ManifoldModel;
using geometry::MetricData;

namespace {

double metric_gap(const ManifoldModel& a, const ManifoldModel& b, const VecN& x) {
  MetricData ma = a.metric_at(x, 1), mb = b.metric_at(x, 1);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(ma.g(i, j) - mb.g(i, j)));
  return worst;
}

// Central-difference check of the stored first derivatives.
double dg_fd_gap(const ManifoldModel& m, const VecN& x) {
  MetricData md = m.metric_at(x, 1);
  const double h = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < 2; ++k) {
    VecN xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    MetricData mp = m.metric_at(xp, 1), mm = m.metric_at(xm, 1);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        worst = std::max(worst, std::abs((mp.g(i, j) - mm.g(i, j)) / (2 * h) - md.dg[k](i, j)));
        worst = std::max(worst,
                         std::abs((mp.ginv(i, j) - mm.ginv(i, j)) / (2 * h) - md.dginv[k](i, j)));
      }
    worst = std::max(worst, std::abs((mp.sqrtdet - mm.sqrtdet) / (2 * h) - md.dsqrtdet[k]));
  }
  return worst;
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("flat torus metric is the identity") {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  MetricData md = m.metric_at(VecN(1.3, 5.1), 1);
  CHECK(md.g(0, 0) == 1.0);
  CHECK(md.g(1, 1) == 1.0);
  CHECK(md.g(0, 1) == 0.0);
  CHECK(md.sqrtdet == 1.0);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(md.dg[k](i, j) == 0.0);
}

TEST_CASE("sphere chart carries g = diag(r^2, r^2 sin^2 theta)") {
  ManifoldModel m = ManifoldModel::sphere2(1.7);
  const double th = 1.0;
  MetricData md = m.metric_at(VecN(th, 0.5), 1);
  CHECK(md.g(0, 0) == doctest::Approx(1.7 * 1.7).epsilon(1e-14));
  CHECK(md.g(1, 1) == doctest::Approx(1.7 * 1.7 * std::sin(th) * std::sin(th)).epsilon(1e-14));
  CHECK(md.g(0, 1) == 0.0);
  CHECK(md.sqrtdet == doctest::Approx(1.7 * 1.7 * std::sin(th)).epsilon(1e-14));
}

TEST_CASE("pole exclusion throws OutOfChart") {
  ManifoldModel sphere = ManifoldModel::preset("sphere");
  CHECK_THROWS_AS(sphere.metric_at(VecN(1e-9, 0.0), 1), Error);
  try {
    sphere.metric_at(VecN(kPi, 0.0), 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfChart);
  }
  ManifoldModel prolate = ManifoldModel::preset("prolate");
  try {
    prolate.metric_at(VecN(0.0, 1.0), 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfChart);
  }
}

TEST_CASE("stored metric derivatives match central differences") {
  CHECK(dg_fd_gap(ManifoldModel::preset("sphere"), VecN(1.1, 0.4)) < 1e-6);
  CHECK(dg_fd_gap(ManifoldModel::preset("prolate"), VecN(0.9, 0.3)) < 1e-6);
  CHECK(dg_fd_gap(ManifoldModel::preset("oblate"), VecN(1.4, 2.0)) < 1e-6);
  CHECK(dg_fd_gap(ManifoldModel::preset("plane"), VecN(0.4, -0.6)) < 1e-6);
  CHECK(dg_fd_gap(ManifoldModel::preset("plane-trap"), VecN(-0.7, 0.2)) < 1e-6);
}

TEST_CASE("second-order data matches differences of first-order data") {
  for (const char* name : {"prolate", "plane-trap"}) {
    ManifoldModel m = ManifoldModel::preset(name);
    VecN x(0.8, 0.35);
    MetricData md = m.metric_at(x, 2);
    REQUIRE(md.second_order);
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        VecN xp = x, xm = x;
        xp[l] += h;
        xm[l] -= h;
        MetricData mp = m.metric_at(xp, 1), mm = m.metric_at(xm, 1);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double fd = (mp.dg[k](i, j) - mm.dg[k](i, j)) / (2 * h);
            CHECK(std::abs(fd - md.d2g[k][l](i, j)) < 1e-5);
            double fdi = (mp.dginv[k](i, j) - mm.dginv[k](i, j)) / (2 * h);
            CHECK(std::abs(fdi - md.d2ginv[k][l](i, j)) < 1e-5);
          }
      }
  }
}

TEST_CASE("perturbed plane is exactly Euclidean outside the bump") {
  ManifoldModel m = ManifoldModel::preset("plane");
  double r = m.bump_support_radius();
  MetricData md = m.metric_at(VecN(r + 1.0, 0.0), 1);
  CHECK(md.g(0, 0) == 1.0);
  CHECK(md.g(1, 1) == 1.0);
  CHECK(md.g(0, 1) == 0.0);
  MetricData inside = m.metric_at(VecN(0.3, 0.1), 1);
  CHECK(std::abs(inside.g(0, 0) - 1.0) > 1e-4);

  ManifoldModel flat = geometry::ManifoldModel::perturbed_plane(0.0);
  MetricData fd = flat.metric_at(VecN(0.3, 0.1), 1);
  CHECK(fd.g(0, 0) == 1.0);
  CHECK(fd.g(1, 1) == 1.0);
}

TEST_CASE("revolution profile has unit pole slopes") {
  for (const char* name : {"sphere", "prolate", "oblate", "peanut"}) {
    const auto& p = ManifoldModel::revolution(name).profile();
    CHECK(p.r(0.0) == 0.0);
    CHECK(p.dr(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.dr(p.length) == doctest::Approx(-1.0).epsilon(1e-14));
    const double h = 1e-5;
    double mid = 0.6 * p.length;
    CHECK(std::abs((p.r(mid + h) - p.r(mid - h)) / (2 * h) - p.dr(mid)) < 1e-8);
    CHECK(std::abs((p.dr(mid + h) - p.dr(mid - h)) / (2 * h) - p.d2r(mid)) < 1e-8);
  }
}

TEST_CASE("phase volumes match closed forms") {
  auto tv = ManifoldModel::preset("torus-2pi").phase_volumes();
  CHECK(tv.vol_x == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-12));
  CHECK(tv.vol_bstar == doctest::Approx(4.0 * kPi * kPi * kPi).epsilon(1e-12));

  auto sv = ManifoldModel::preset("sphere").phase_volumes();
  CHECK(sv.vol_x == doctest::Approx(4.0 * kPi).epsilon(1e-10));
  CHECK(sv.vol_bstar == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-10));

  // 2 pi int_0^pi (sin s - 0.2 sin^3 s) ds = 2 pi (2 - 0.2 * 4/3)
  auto pv = ManifoldModel::preset("prolate").phase_volumes();
  double area = kTwoPi * (2.0 - 0.2 * 4.0 / 3.0);
  CHECK(pv.vol_x == doctest::Approx(area).epsilon(1e-8));
  CHECK(pv.vol_bstar == doctest::Approx(kPi * area).epsilon(1e-8));
}

TEST_CASE("descriptor round trip preserves the metric") {
  for (const char* name : {"torus-rect", "sphere", "prolate", "plane"}) {
    ManifoldModel a = ManifoldModel::preset(name);
    ManifoldModel b = ManifoldModel::from_descriptor(a.descriptor());
    CHECK(a.descriptor() == b.descriptor());
    CHECK(metric_gap(a, b, VecN(0.9, 0.7)) == 0.0);
  }
}

TEST_CASE("malformed descriptors are rejected as Config") {
  for (const char* bad : {"not json", "{}", R"({"kind":"klein-bottle"})",
                          R"({"kind":"sphere2"})"}) {
    try {
      ManifoldModel::from_descriptor(bad);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    } catch (const std::exception&) {
      // nlohmann surfaces missing fields as its own exception type
      CHECK(std::string(bad) == R"({"kind":"sphere2"})");
    }
  }
}

TEST_SUITE_END();
