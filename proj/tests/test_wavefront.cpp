#include <doctest.h>

#include <cmath>
#include <sstream>

#include "weylscope/gridfield.hpp"
#include "weylscope/wavefront.hpp"

using namespace weylscope;
using grid::GridField;
using wavefront::ConeProbe;
using wavefront::ScanClass;

namespace {

GridField disc(int n, double radius) {
  GridField u = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  grid::fill(u, [&](const VecN& x) {
    return cplx(std::hypot(x[0] - kPi, x[1] - kPi) <= radius ? 1.0 : 0.0, 0.0);
  });
  return u;
}

GridField gaussian(int n) {
  GridField u = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  grid::fill(u, [](const VecN& x) {
    double d2 = (x[0] - kPi) * (x[0] - kPi) + (x[1] - kPi) * (x[1] - kPi);
    return cplx(std::exp(-2.0 * d2), 0.0);
  });
  return u;
}

ConeProbe probe_at(double cx, double cy, double dx, double dy) {
  ConeProbe p;
  p.x0 = VecN(cx, cy);
  p.direction = VecN(dx, dy);
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("wavefront");

TEST_CASE("smooth data scans smooth in every direction") {
  GridField u = gaussian(256);
  std::vector<ConeProbe> probes;
  for (int k = 0; k < 8; ++k) {
    double th = kTwoPi * k / 8;
    probes.push_back(probe_at(kPi + 0.7 * std::cos(th), kPi + 0.7 * std::sin(th),
                              std::cos(th), std::sin(th)));
  }
  for (const auto& r : wavefront::wavefront_scan(u, probes)) {
    CHECK(r.cls == ScanClass::Smooth);
    CHECK(r.shell_sup.size() >= 4);
  }
}

TEST_CASE("disc boundary is singular along normals, smooth along tangents") {
  GridField u = disc(256, 0.7);
  std::vector<ConeProbe> normals, tangents;
  for (int k = 0; k < 8; ++k) {
    double th = kTwoPi * k / 8 + 0.1;
    double cx = kPi + 0.7 * std::cos(th), cy = kPi + 0.7 * std::sin(th);
    normals.push_back(probe_at(cx, cy, std::cos(th), std::sin(th)));
    tangents.push_back(probe_at(cx, cy, -std::sin(th), std::cos(th)));
  }
  for (const auto& r : wavefront::wavefront_scan(u, normals)) {
    CHECK(r.cls == ScanClass::Singular);
    CHECK(r.exponent < 2.5);
  }
  int smooth = 0;
  for (const auto& r : wavefront::wavefront_scan(u, tangents))
    smooth += r.cls == ScanClass::Smooth ? 1 : 0;
  CHECK(smooth >= 7);
}

TEST_CASE("probes away from the support scan smooth") {
  GridField u = disc(256, 0.7);
  auto reports = wavefront::wavefront_scan(u, {probe_at(kPi + 2.5, kPi, 1.0, 0.0)});
  CHECK(reports[0].cls == ScanClass::Smooth);
}

TEST_CASE("classification is stable under a smaller window") {
  GridField u = disc(256, 0.7);
  ConeProbe p = probe_at(kPi + 0.7, kPi, 1.0, 0.0);
  ConeProbe small = p;
  small.window_radius = 0.25;
  auto a = wavefront::wavefront_scan(u, {p});
  auto b = wavefront::wavefront_scan(u, {small});
  CHECK(a[0].cls == ScanClass::Singular);
  CHECK(b[0].cls == ScanClass::Singular);
}

TEST_CASE("coarse grids cannot carry enough shells") {
  GridField u = disc(64, 0.7);
  try {
    wavefront::wavefront_scan(u, {probe_at(kPi + 0.7, kPi, 1.0, 0.0)});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MeshTooCoarse);
  }
}

TEST_CASE("csv report carries one line per probe") {
  GridField u = disc(256, 0.7);
  auto reports = wavefront::wavefront_scan(
      u, {probe_at(kPi + 0.7, kPi, 1.0, 0.0), probe_at(kPi, kPi + 0.7, 0.0, 1.0)});
  std::string csv = wavefront::report_csv(reports);
  int lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 2);
  CHECK(csv.find("singular") != std::string::npos);
}

TEST_CASE("identity symbol quantizes to the identity") {
  GridField u = disc(64, 0.9);
  std::vector<wavefront::SymbolTerm> one(1);
  one[0].space = [](const VecN&) { return cplx(1.0, 0.0); };
  one[0].freq = [](const VecN&) { return cplx(1.0, 0.0); };
  GridField v = wavefront::quantize_symbol(one, u, wavefront::QuantizePath::Fourier);
  CHECK(grid::l2_error(u, v) < 1e-12 * grid::l2_norm(u));
}

TEST_CASE("quantization paths agree on a separable symbol") {
  GridField u = grid::make_box_field({32, 32}, {kTwoPi, kTwoPi});
  grid::fill(u, [](const VecN& x) {
    return std::exp(cplx(0.0, 4.0 * x[0])) * std::cos(3.0 * x[1]) + cplx(0.2, 0.0);
  });
  std::vector<wavefront::SymbolTerm> terms(2);
  terms[0].space = [](const VecN& x) { return cplx(1.0 + 0.3 * std::sin(x[0]), 0.0); };
  terms[0].freq = [](const VecN& k) { return cplx(std::exp(-0.01 * dot(k, k)), 0.0); };
  terms[1].space = [](const VecN& x) { return cplx(0.0, 0.1 * std::cos(x[1])); };
  terms[1].freq = [](const VecN& k) { return cplx(1.0 / (1.0 + dot(k, k)), 0.0); };
  GridField a = wavefront::quantize_symbol(terms, u, wavefront::QuantizePath::Direct);
  GridField b = wavefront::quantize_symbol(terms, u, wavefront::QuantizePath::Fourier);
  CHECK(grid::l2_error(a, b) < 1e-10 * grid::l2_norm(a));
}

TEST_CASE("a frequency cutoff symbol removes the cut content") {
  const int n = 32;
  GridField u = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  grid::fill(u, [](const VecN& x) {
    return std::exp(cplx(0.0, 2.0 * x[0])) + std::exp(cplx(0.0, 9.0 * x[0]));
  });
  std::vector<wavefront::SymbolTerm> low(1);
  low[0].space = [](const VecN&) { return cplx(1.0, 0.0); };
  low[0].freq = [](const VecN& k) { return cplx(norm(k) < 5.0 ? 1.0 : 0.0, 0.0); };
  GridField v = wavefront::quantize_symbol(low, u, wavefront::QuantizePath::Fourier);
  GridField vh = grid::to_frequency(v);
  std::array<int, 4> idx{};
  for (std::size_t flat = 0; flat < vh.size(); ++flat) {
    grid::unflatten(vh, flat, idx);
    if (std::abs(grid::signed_bin(idx[0], n)) > 5)
      CHECK(std::abs(vh.values[flat]) < 1e-10 * n * n);
  }
}

TEST_CASE("half-wave multiplier shifts a pure mode by exp(-i t |k|)") {
  const int n = 16;
  GridField u = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  grid::fill(u, [](const VecN& x) { return std::exp(cplx(0.0, 3.0 * x[0] + 4.0 * x[1])); });
  GridField v = wavefront::halfwave_evolve(u, 0.4);
  cplx phase = std::exp(cplx(0.0, -0.4 * 5.0));
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(v.values[i] - phase * u.values[i]) < 1e-12);
}

TEST_CASE("half-wave flow relocates disc singularities outward") {
  GridField u = disc(256, 0.7);
  std::vector<ConeProbe> probes;
  for (int k = 0; k < 3; ++k) {
    double th = kTwoPi * k / 3 + 0.35;
    ConeProbe p = probe_at(kPi + 0.7 * std::cos(th), kPi + 0.7 * std::sin(th), std::cos(th),
                           std::sin(th));
    probes.push_back(p);
  }
  auto rep = wavefront::halfwave_transport_check(u, probes, 0.75);
  REQUIRE(rep.entries.size() == 3);
  for (const auto& e : rep.entries) {
    CHECK(e.ok);
    CHECK(e.at_source_before == ScanClass::Singular);
    CHECK(e.at_target_after == ScanClass::Singular);
    double expect0 = e.probe.x0[0] + 0.75 * e.probe.direction[0];
    CHECK(std::abs(e.x_target[0] - expect0) < 2.0 * kTwoPi / 256.0);
  }
}

TEST_CASE("transport check pushes back on bad inputs") {
  GridField u = disc(256, 0.7);
  ConeProbe good = probe_at(kPi + 0.7, kPi, 1.0, 0.0);
  // time shorter than the window diameter cannot separate source and target
  CHECK_THROWS_AS(wavefront::halfwave_transport_check(u, {good}, 0.3), Error);
  // a tangential probe is not singular to begin with
  ConeProbe bad = probe_at(kPi + 0.7, kPi, 0.0, 1.0);
  try {
    wavefront::halfwave_transport_check(u, {bad}, 0.75);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GateFailed);
  }
}

TEST_SUITE_END();
