#include "weylscope/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "weylscope/cache.hpp"
#include "weylscope/geometry.hpp"
#include "weylscope/gridfield.hpp"
#include "weylscope/hamflow.hpp"
#include "weylscope/parallel.hpp"
#include "weylscope/parametrix.hpp"
#include "weylscope/schrodinger.hpp"
#include "weylscope/smoothing.hpp"
#include "weylscope/spectrum.hpp"
#include "weylscope/wavefront.hpp"
#include "weylscope/wavetrace.hpp"

namespace weylscope::selfcheck {
namespace {

using geometry::ManifoldModel;
using grid::GridField;
using hamflow::Hamiltonian;
using hamflow::PhasePoint;

void check(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- geometry ----

std::string geometry_metric_consistency() {
  struct Probe {
    const char* name;
    VecN x;
  };
  const Probe probes[] = {
      {"torus-2pi", VecN(0.3, 1.1)},   {"torus-rect", VecN(1.2, 0.4)},
      {"sphere", VecN(1.0, 0.5)},      {"prolate", VecN(0.8, 0.3)},
      {"plane", VecN(0.4, -0.2)},      {"plane-trap", VecN(-0.3, 0.5)},
  };
  double worst_inv = 0.0, worst_det = 0.0, worst_fd = 0.0;
  for (const auto& p : probes) {
    ManifoldModel m = ManifoldModel::preset(p.name);
    geometry::MetricData md = m.metric_at(p.x, 1);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) s += md.g(i, k) * md.ginv(k, j);
        worst_inv = std::max(worst_inv, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    double detg = md.g(0, 0) * md.g(1, 1) - md.g(0, 1) * md.g(1, 0);
    worst_det = std::max(worst_det, std::abs(md.sqrtdet * md.sqrtdet - detg));
    const double h = 1e-5;
    for (int k = 0; k < 2; ++k) {
      VecN xp = p.x, xm = p.x;
      xp[k] += h;
      xm[k] -= h;
      geometry::MetricData mp = m.metric_at(xp, 1), mm = m.metric_at(xm, 1);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double fd = (mp.g(i, j) - mm.g(i, j)) / (2.0 * h);
          worst_fd = std::max(worst_fd, std::abs(fd - md.dg[k](i, j)));
        }
    }
  }
  check(worst_inv < 1e-10, "g * ginv deviates from identity by " + fmt(worst_inv));
  check(worst_det < 1e-10, "sqrtdet^2 mismatches det g by " + fmt(worst_det));
  check(worst_fd < 1e-6, "analytic dg disagrees with differences by " + fmt(worst_fd));
  return "max |g*ginv - I| = " + fmt(worst_inv);
}

std::string geometry_descriptor_roundtrip() {
  const char* names[] = {"torus-rect", "sphere", "prolate", "plane"};
  double worst = 0.0;
  for (const char* name : names) {
    ManifoldModel a = ManifoldModel::preset(name);
    ManifoldModel b = ManifoldModel::from_descriptor(a.descriptor());
    check(a.descriptor() == b.descriptor(), std::string(name) + ": descriptor not stable");
    VecN x(0.7, 0.4);
    geometry::MetricData ma = a.metric_at(x, 1), mb = b.metric_at(x, 1);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        worst = std::max(worst, std::abs(ma.g(i, j) - mb.g(i, j)));
  }
  check(worst < 1e-12, "round-tripped metric deviates by " + fmt(worst));
  return "metric deviation " + fmt(worst);
}

// ---- hamflow ----

std::string hamflow_energy_conservation() {
  double worst = 0.0;
  for (const char* name : {"plane", "prolate"}) {
    ManifoldModel m = ManifoldModel::preset(name);
    PhasePoint q0;
    q0.x = VecN(0.4, 0.2);
    q0.xi = VecN(0.6, 0.8);
    q0 = hamflow::unit_cosphere(m, q0);
    auto traj = hamflow::integrate_bicharacteristic(m, Hamiltonian::HalfWave, q0, 10.0);
    worst = std::max(worst, traj.energy_drift);
  }
  check(worst < 1e-8, "energy drift " + fmt(worst));
  return "max drift " + fmt(worst);
}

std::string hamflow_sphere_return() {
  ManifoldModel m = ManifoldModel::preset("sphere");
  PhasePoint q0;
  q0.x = VecN(kPi / 2, 0.0);
  q0.xi = VecN(0.0, 1.0);
  q0 = hamflow::unit_cosphere(m, q0);
  auto traj = hamflow::integrate_bicharacteristic(m, Hamiltonian::HalfWave, q0, kTwoPi);
  const auto& last = traj.samples.back().q;
  double dist = hamflow::return_distance(m, q0, last);
  check(dist < 1e-6, "great circle misses its start by " + fmt(dist));
  return "return distance " + fmt(dist);
}

std::string hamflow_poisson_bracket() {
  ManifoldModel m = ManifoldModel::preset("plane");
  PhasePoint q;
  q.x = VecN(0.3, -0.1);
  q.xi = VecN(0.7, 0.2);
  auto xi1 = [](const VecN&, const VecN& xi) { return xi[0]; };
  auto x1 = [](const VecN& x, const VecN&) { return x[0]; };
  auto x2 = [](const VecN& x, const VecN&) { return x[1]; };
  double canon = hamflow::poisson_bracket(xi1, x1, q);
  double zero = hamflow::poisson_bracket(x1, x2, q);
  check(std::abs(canon - 1.0) < 1e-8, "{xi1, x1} = " + fmt(canon));
  check(std::abs(zero) < 1e-8, "{x1, x2} = " + fmt(zero));
  return "{xi1, x1} - 1 = " + fmt(canon - 1.0);
}

std::string hamflow_monodromy_presets() {
  ManifoldModel torus = ManifoldModel::preset("torus-2pi");
  auto geos = hamflow::find_closed_geodesics(torus, 7.0);
  check(!geos.empty(), "torus reported no closed geodesics below length 7");
  auto g0 = hamflow::monodromy(torus, geos.front());
  check(g0.has_monodromy, "torus monodromy not computed");
  check(std::abs(g0.det_factor) < 1e-8,
        "torus det(I - dP) = " + fmt(g0.det_factor) + ", expected 0");

  ManifoldModel sphere = ManifoldModel::preset("sphere");
  auto sg = hamflow::find_closed_geodesics(sphere, 7.0);
  check(!sg.empty(), "sphere reported no closed geodesics below length 7");
  auto s0 = hamflow::monodromy(sphere, sg.front());
  double dev = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      dev = std::max(dev, std::abs(s0.dP(i, j) - (i == j ? 1.0 : 0.0)));
  check(dev < 1e-8, "sphere dP deviates from identity by " + fmt(dev));
  check(s0.conj_count == 2, "sphere conjugate point count " + std::to_string(s0.conj_count));
  return "sphere |dP - I| = " + fmt(dev);
}

// ---- spectrum ----

std::string spectrum_torus_bruteforce() {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto table = spectrum::compute_spectrum(m, 25.0);
  std::map<long long, int> brute;
  int bound = 26;
  for (int a = -bound; a <= bound; ++a)
    for (int b = -bound; b <= bound; ++b) {
      long long q = static_cast<long long>(a) * a + static_cast<long long>(b) * b;
      if (q <= 625) ++brute[q];
    }
  check(table.entries.size() == brute.size(),
        "distinct frequency count " + std::to_string(table.entries.size()) + " vs " +
            std::to_string(brute.size()));
  std::size_t i = 0;
  for (const auto& [q, mult] : brute) {
    check(std::abs(table.entries[i].lambda - std::sqrt(static_cast<double>(q))) < 1e-12,
          "frequency mismatch at rank " + std::to_string(i));
    check(table.entries[i].mult == mult, "multiplicity mismatch at rank " + std::to_string(i));
    ++i;
  }
  return std::to_string(table.total_count()) + " lattice modes match";
}

std::string spectrum_sphere_formula() {
  ManifoldModel m = ManifoldModel::preset("sphere");
  auto table = spectrum::compute_spectrum(m, 20.0);
  std::size_t i = 0;
  for (int l = 0;; ++l) {
    double lam = std::sqrt(static_cast<double>(l) * (l + 1));
    if (lam > 20.0) break;
    check(i < table.entries.size(), "table ends before l = " + std::to_string(l));
    check(std::abs(table.entries[i].lambda - lam) < 1e-12,
          "sphere frequency off at l = " + std::to_string(l));
    check(table.entries[i].mult == 2 * l + 1, "sphere multiplicity off at l = " + std::to_string(l));
    ++i;
  }
  check(i == table.entries.size(), "table carries extra entries");
  return std::to_string(table.total_count()) + " modes match l(l+1)";
}

std::string spectrum_revolution_gate() {
  ManifoldModel m = ManifoldModel::preset("prolate");
  auto table = spectrum::compute_spectrum(m, 12.0);
  check(!table.entries.empty(), "empty revolution spectrum");
  for (std::size_t i = 1; i < table.entries.size(); ++i)
    check(table.entries[i].lambda >= table.entries[i - 1].lambda, "entries out of order");
  check(table.entries.front().lambda < 0.05, "constant mode missing from the table");
  check(table.entries.size() > 1 && table.entries[1].lambda > 0.5,
        "spurious near-zero frequency");
  return std::to_string(table.total_count()) + " meridian modes under 12";
}

std::string spectrum_cache_roundtrip() {
  ManifoldModel m = ManifoldModel::preset("torus-rect");
  auto fresh = spectrum::compute_spectrum(m, 15.0);
  fresh.model_id = m.descriptor();
  std::string path =
      (std::filesystem::temp_directory_path() / "weylscope-selfcheck-cache.csv").string();
  cache::write_spectrum_cache(path, fresh);
  auto loaded = cache::read_spectrum_cache(path);
  std::filesystem::remove(path);
  check(loaded.model_id == fresh.model_id, "model id changed in the round trip");
  check(loaded.lambda_max == fresh.lambda_max, "lambda_max changed in the round trip");
  check(loaded.entries.size() == fresh.entries.size(), "entry count changed");
  for (std::size_t i = 0; i < fresh.entries.size(); ++i) {
    check(loaded.entries[i].lambda == fresh.entries[i].lambda,
          "lambda not bit-identical at rank " + std::to_string(i));
    check(loaded.entries[i].mult == fresh.entries[i].mult,
          "multiplicity changed at rank " + std::to_string(i));
  }
  return std::to_string(fresh.entries.size()) + " rows bit-identical";
}

// ---- smoothing ----

std::string smoothing_kernel_mass() {
  smoothing::SmoothingKernel ker(0.5);
  check(std::abs(ker.rhohat(0.0) - 1.0) < 1e-14, "rhohat(0) != 1");
  check(ker.rhohat(0.51) == 0.0, "rhohat support leaks past delta");
  double r = ker.effective_radius(1e-14);
  int n = 400000;
  double h = 2.0 * r / n;
  double sum = 0.0;
  double worst_neg = 0.0, worst_odd = 0.0;
  for (int i = 0; i <= n; ++i) {
    double x = -r + h * i;
    double v = ker.rho(x);
    worst_neg = std::min(worst_neg, v);
    worst_odd = std::max(worst_odd, std::abs(v - ker.rho(-x)));
    sum += (i == 0 || i == n) ? 0.5 * v : v;
  }
  sum *= h;
  check(worst_neg >= 0.0, "rho dips negative: " + fmt(worst_neg));
  check(worst_odd == 0.0, "rho not even: " + fmt(worst_odd));
  double rel = std::abs(sum - kSqrtTwoPi) / kSqrtTwoPi;
  check(rel < 1e-6, "kernel mass off by relative " + fmt(rel));
  return "mass relative error " + fmt(rel);
}

// ---- wavetrace ----

std::string wavetrace_paths_agree() {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto table = spectrum::compute_spectrum(m, 85.0);
  auto direct = wavetrace::trace_signal(table, 0.5, 10.0, 1024, 20.0, "gaussian",
                                        wavetrace::TracePath::Direct);
  auto binned = wavetrace::trace_signal(table, 0.5, 10.0, 1024, 20.0, "gaussian",
                                        wavetrace::TracePath::Binned);
  double sup = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < direct.values.size(); ++i) {
    sup = std::max(sup, std::abs(direct.values[i] - binned.values[i]));
    scale = std::max(scale, std::abs(direct.values[i]));
  }
  check(sup <= 1e-8 * scale, "trace paths differ by " + fmt(sup / scale) + " relative");
  return "path deviation " + fmt(sup / scale);
}

std::string wavetrace_torus_peak() {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto table = spectrum::compute_spectrum(m, 125.0);
  auto sig = wavetrace::trace_signal(table, 0.5, 10.0, 4096, 30.0);
  auto rep = wavetrace::detect_singular_support(sig);
  bool found = false;
  for (const auto& p : rep.peaks)
    if (std::abs(p.t - kTwoPi) < 0.05) found = true;
  check(found, "no trace peak within 0.05 of 2 pi");
  return std::to_string(rep.peaks.size()) + " peaks, 2 pi located";
}

std::string wavetrace_heat_crosscheck() {
  ManifoldModel m = ManifoldModel::preset("torus-2pi");
  auto pair = wavetrace::kernel_trace_crosscheck(m, 0.1);
  double rel = std::abs(pair.spectral - pair.kernel) / pair.kernel;
  check(rel < 1e-10, "heat trace mismatch " + fmt(rel));
  return "relative mismatch " + fmt(rel);
}

// ---- gridfield ----

std::string gridfield_parseval() {
  GridField f = grid::make_box_field({64, 64}, {kTwoPi, kTwoPi});
  grid::fill(f, [](const VecN& x) {
    return cplx(std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]), std::cos(5.0 * x[1]));
  });
  GridField fh = grid::to_frequency(f);
  double a = grid::l2_norm(f), b = grid::l2_norm(fh);
  check(std::abs(a - b) <= 1e-12 * a, "Parseval violated by " + fmt(std::abs(a - b) / a));
  GridField back = grid::to_position(fh);
  double rt = grid::l2_error(f, back);
  check(rt <= 1e-13, "transform round trip error " + fmt(rt));
  return "Parseval gap " + fmt(std::abs(a - b) / a);
}

// ---- schrodinger ----

std::string schrodinger_unitarity() {
  GridField psi = grid::make_box_field({64, 64}, {kTwoPi, kTwoPi});
  grid::fill(psi, [](const VecN& x) {
    return std::exp(cplx(0.0, 3.0 * x[0] - 2.0 * x[1])) +
           0.5 * std::exp(cplx(0.0, -1.0 * x[0] + 4.0 * x[1]));
  });
  double n0 = grid::l2_norm(psi);
  GridField evolved = schrod::evolve(psi, 10.0);
  double n1 = grid::l2_norm(evolved);
  check(std::abs(n1 - n0) <= 1e-12 * n0, "L2 norm drifted by " + fmt(std::abs(n1 - n0) / n0));
  GridField period = schrod::evolve(psi, kTwoPi);
  double rel = grid::l2_error(psi, period) / n0;
  check(rel <= 1e-12, "2 pi periodicity broken at " + fmt(rel));
  return "norm drift " + fmt(std::abs(n1 - n0) / n0);
}

std::string schrodinger_free_kernel() {
  const int n = 512;
  const double L = 40.0, t = 0.5;
  GridField psi = grid::make_box_field({n}, {L});
  auto gauss = [&](double x) {
    double c = x - 0.5 * L;
    return std::exp(-0.5 * c * c);
  };
  grid::fill(psi, [&](const VecN& x) { return cplx(gauss(x[0]), 0.0); });
  GridField evolved = schrod::evolve(psi, t);
  double h = L / n;
  double sup = 0.0, scale = 0.0;
  for (int i = 0; i < n; i += 7) {
    double x = h * i;
    cplx conv(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      VecN d(1);
      d[0] = x - h * j;
      conv += schrod::free_kernel(t, d) * gauss(h * j) * h;
    }
    sup = std::max(sup, std::abs(conv - evolved.values[static_cast<std::size_t>(i)]));
    scale = std::max(scale, std::abs(conv));
  }
  check(sup <= 1e-6 * scale, "kernel convolution deviates by " + fmt(sup / scale));
  return "propagator deviation " + fmt(sup / scale);
}

std::string schrodinger_hardy_bound() {
  const int n = 32;
  const double L = 10.0, h = L / n;
  double bound = 1.0 + 2.0 * h * h;
  double worst = 0.0;
  for (double shift : {0.0, 0.8, 1.6}) {
    GridField u = grid::make_box_field({n, n, n}, {L, L, L});
    grid::fill(u, [&](const VecN& x) {
      double r2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        double c = x[k] - 0.5 * L - (k == 0 ? shift : 0.0);
        r2 += c * c;
      }
      return cplx(std::exp(-0.7 * r2), 0.0);
    });
    double ratio = schrod::hardy_ratio(u);
    check(ratio >= 0.0, "negative quotient");
    worst = std::max(worst, ratio);
  }
  check(worst <= bound, "quotient " + fmt(worst) + " above discrete bound " + fmt(bound));
  return "max quotient " + fmt(worst) + " <= " + fmt(bound);
}

// ---- wavefront ----

GridField disc_field(int n, double radius) {
  GridField u = grid::make_box_field({n, n}, {kTwoPi, kTwoPi});
  grid::fill(u, [&](const VecN& x) {
    double d = std::hypot(x[0] - kPi, x[1] - kPi);
    return cplx(d <= radius ? 1.0 : 0.0, 0.0);
  });
  return u;
}

std::string wavefront_classifier() {
  const double R = 0.7;
  GridField smooth = grid::make_box_field({256, 256}, {kTwoPi, kTwoPi});
  grid::fill(smooth, [&](const VecN& x) {
    double d2 = (x[0] - kPi) * (x[0] - kPi) + (x[1] - kPi) * (x[1] - kPi);
    return cplx(std::exp(-2.0 * d2), 0.0);
  });
  std::vector<wavefront::ConeProbe> probes;
  for (int k = 0; k < 4; ++k) {
    double th = kTwoPi * k / 4;
    wavefront::ConeProbe p;
    p.x0 = VecN(kPi + R * std::cos(th), kPi + R * std::sin(th));
    p.direction = VecN(std::cos(th), std::sin(th));
    probes.push_back(p);
  }
  auto smooth_reports = wavefront::wavefront_scan(smooth, probes);
  for (const auto& r : smooth_reports)
    check(r.cls == wavefront::ScanClass::Smooth,
          "Gaussian probe not smooth (exponent " + fmt(r.exponent) + ")");

  GridField disc = disc_field(256, R);
  auto disc_reports = wavefront::wavefront_scan(disc, probes);
  for (const auto& r : disc_reports)
    check(r.cls == wavefront::ScanClass::Singular,
          "disc normal probe not singular (exponent " + fmt(r.exponent) + ")");
  return "8 probes classified correctly";
}

std::string wavefront_quantize_paths() {
  GridField u = grid::make_box_field({32, 32}, {kTwoPi, kTwoPi});
  grid::fill(u, [](const VecN& x) {
    return std::exp(cplx(0.0, 4.0 * x[0])) * std::cos(3.0 * x[1]);
  });
  std::vector<wavefront::SymbolTerm> terms;
  wavefront::SymbolTerm term;
  term.space = [](const VecN& x) { return cplx(1.0 + 0.3 * std::sin(x[0]), 0.0); };
  term.freq = [](const VecN& k) { return cplx(std::exp(-0.01 * dot(k, k)), 0.0); };
  terms.push_back(term);
  GridField a = wavefront::quantize_symbol(terms, u, wavefront::QuantizePath::Direct);
  GridField b = wavefront::quantize_symbol(terms, u, wavefront::QuantizePath::Fourier);
  double rel = grid::l2_error(a, b) / grid::l2_norm(a);
  check(rel <= 1e-10, "quantization paths differ by " + fmt(rel));
  return "path deviation " + fmt(rel);
}

std::string wavefront_transport() {
  const double R = 0.7;
  GridField disc = disc_field(256, R);
  std::vector<wavefront::ConeProbe> probes;
  for (int k = 0; k < 3; ++k) {
    double th = kTwoPi * k / 3 + 0.2;
    wavefront::ConeProbe p;
    p.x0 = VecN(kPi + R * std::cos(th), kPi + R * std::sin(th));
    p.direction = VecN(std::cos(th), std::sin(th));
    probes.push_back(p);
  }
  auto rep = wavefront::halfwave_transport_check(disc, probes, 0.75);
  check(rep.entries.size() == probes.size(), "transport report incomplete");
  for (const auto& e : rep.entries) check(e.ok, "transport entry failed");
  return "3 singular probes relocated";
}

// ---- parametrix ----

std::string parametrix_flat_exactness() {
  ManifoldModel flat = geometry::ManifoldModel::perturbed_plane(0.0);
  const double box = 3.0 * kPi;
  parametrix::EikonalOptions opt;
  opt.nx = 16;
  opt.n_angle = 12;
  opt.nt_phys = 5;
  auto pt = parametrix::solve_eikonal(flat, box, opt);
  auto at = parametrix::solve_transport(flat, pt);

  GridField f = parametrix::band_data(64, box, 6.0, 11u);
  const double blo = 0.8 * 6.0, bhi = 2.4 * 6.0;

  GridField u0 = parametrix::apply_parametrix(pt, at, f, 0.0, blo, bhi);
  double worst0 = 0.0;
  int stride = 64 / opt.nx;
  for (int i1 = 0; i1 < opt.nx; ++i1)
    for (int i2 = 0; i2 < opt.nx; ++i2) {
      cplx ref = f.values[static_cast<std::size_t>(i1 * stride) * 64 +
                          static_cast<std::size_t>(i2 * stride)];
      cplx got = u0.values[static_cast<std::size_t>(i1) * opt.nx + i2];
      worst0 = std::max(worst0, std::abs(ref - got));
    }
  check(worst0 <= 1e-8, "t=0 reproduction off by " + fmt(worst0));

  const double t = 0.15;
  GridField ref_full = wavefront::halfwave_evolve(f, t);
  GridField ut = parametrix::apply_parametrix(pt, at, f, t, blo, bhi);
  double worst = 0.0;
  for (int i1 = 0; i1 < opt.nx; ++i1)
    for (int i2 = 0; i2 < opt.nx; ++i2) {
      cplx ref = ref_full.values[static_cast<std::size_t>(i1 * stride) * 64 +
                                 static_cast<std::size_t>(i2 * stride)];
      cplx got = ut.values[static_cast<std::size_t>(i1) * opt.nx + i2];
      worst = std::max(worst, std::abs(ref - got));
    }
  check(worst <= 1e-8, "flat half-wave deviates from multiplier by " + fmt(worst));
  return "multiplier deviation " + fmt(worst);
}

std::string parametrix_ray_integrity() {
  ManifoldModel m = ManifoldModel::preset("plane");
  double worst_drift = 0.0, worst_det = 0.0;
  for (double th : {0.0, 0.7, 2.1}) {
    VecN y(-0.3 * std::cos(th) - 0.2, -0.3 * std::sin(th) + 0.1);
    auto end = parametrix::trace_ray(m, y, th, 0.3, 64);
    worst_drift = std::max(worst_drift, end.h_drift);
    worst_det = std::max(worst_det, std::abs(end.det - 1.0));
  }
  check(worst_drift < 1e-9, "Hamiltonian drift " + fmt(worst_drift));
  check(worst_det < 0.2, "ray map determinant wandered to " + fmt(worst_det));
  return "drift " + fmt(worst_drift) + ", |det-1| " + fmt(worst_det);
}

// ---- parallel ----

std::string parallel_determinism() {
  auto term = [](std::size_t i) {
    double x = static_cast<double>(i % 10007) * 1e-4;
    return std::sin(x) * std::exp(-x * 0.01);
  };
  double serial = par::blocked_sum(1000000, term, false);
  double parallel = par::blocked_sum(1000000, term, true);
  check(serial == parallel, "blocked sum differs between serial and parallel");
  auto cterm = [&](std::size_t i) { return cplx(term(i), term(i + 1)); };
  cplx cs = par::blocked_sum_c(500000, cterm, false);
  cplx cp = par::blocked_sum_c(500000, cterm, true);
  check(cs == cp, "complex blocked sum differs between serial and parallel");
  return "reductions bit-identical";
}

}  // namespace

std::vector<CheckResult> run_all(std::ostream* log) {
  struct Entry {
    const char* name;
    std::function<std::string()> fn;
  };
  const Entry entries[] = {
      {"geometry.metric-consistency", geometry_metric_consistency},
      {"geometry.descriptor-roundtrip", geometry_descriptor_roundtrip},
      {"hamflow.energy-conservation", hamflow_energy_conservation},
      {"hamflow.sphere-return", hamflow_sphere_return},
      {"hamflow.poisson-bracket", hamflow_poisson_bracket},
      {"hamflow.monodromy-presets", hamflow_monodromy_presets},
      {"spectrum.torus-bruteforce", spectrum_torus_bruteforce},
      {"spectrum.sphere-formula", spectrum_sphere_formula},
      {"spectrum.revolution-gate", spectrum_revolution_gate},
      {"spectrum.cache-roundtrip", spectrum_cache_roundtrip},
      {"smoothing.kernel-mass", smoothing_kernel_mass},
      {"wavetrace.paths-agree", wavetrace_paths_agree},
      {"wavetrace.torus-peak", wavetrace_torus_peak},
      {"wavetrace.heat-crosscheck", wavetrace_heat_crosscheck},
      {"gridfield.parseval", gridfield_parseval},
      {"schrodinger.unitarity", schrodinger_unitarity},
      {"schrodinger.free-kernel", schrodinger_free_kernel},
      {"schrodinger.hardy-bound", schrodinger_hardy_bound},
      {"wavefront.classifier", wavefront_classifier},
      {"wavefront.quantize-paths", wavefront_quantize_paths},
      {"wavefront.transport", wavefront_transport},
      {"parametrix.flat-exactness", parametrix_flat_exactness},
      {"parametrix.ray-integrity", parametrix_ray_integrity},
      {"parallel.determinism", parallel_determinism},
  };

  std::vector<CheckResult> results;
  for (const auto& e : entries) {
    CheckResult r;
    r.name = e.name;
    auto start = std::chrono::steady_clock::now();
    try {
      r.note = e.fn();
      r.pass = true;
    } catch (const Error& err) {
      r.pass = false;
      r.note = err.what();
    } catch (const std::exception& err) {
      r.pass = false;
      r.note = err.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(r);
    if (log != nullptr) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%7.2fs", r.seconds);
      (*log) << (r.pass ? "ok   " : "FAIL ") << buf << "  " << r.name << ": " << r.note
             << std::endl;
    }
  }
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

}  // namespace weylscope::selfcheck
