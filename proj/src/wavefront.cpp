#include "weylscope/wavefront.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "weylscope/parallel.hpp"
#include "weylscope/smoothing.hpp"

namespace weylscope::wavefront {

namespace {

void require_axis_box(const grid::GridField& f, const char* who) {
  for (int i = 0; i < f.lattice.n; ++i)
    for (int j = 0; j < f.lattice.n; ++j)
      if (i != j)
        require(std::abs(f.lattice(i, j)) < 1e-14, ErrorKind::Config,
                std::string(who) + " needs an axis-aligned box");
}

// Shortest wrapped displacement from b to a on the box torus.
double wrapped_distance(const grid::GridField& f, const VecN& a, const VecN& b) {
  double r2 = 0.0;
  for (int i = 0; i < f.rank(); ++i) {
    const double ll = f.lattice(i, i);
    double d = std::fmod(a[i] - b[i], ll);
    if (d < -0.5 * ll) d += ll;
    if (d >= 0.5 * ll) d -= ll;
    r2 += d * d;
  }
  return std::sqrt(r2);
}

VecN wrap_point(const grid::GridField& f, VecN x) {
  for (int i = 0; i < f.rank(); ++i) {
    const double ll = f.lattice(i, i);
    x[i] = std::fmod(x[i], ll);
    if (x[i] < 0.0) x[i] += ll;
  }
  return x;
}

double smallest_nyquist(const grid::GridField& f) {
  double ny = 0.0;
  for (int a = 0; a < f.rank(); ++a) {
    const double v = kPi * static_cast<double>(f.dims[static_cast<size_t>(a)]) / f.lattice(a, a);
    ny = a == 0 ? v : std::min(ny, v);
  }
  return ny;
}

struct ShellFit {
  double exponent = 0.0;
  double residual = 0.0;
};

ShellFit fit_power_law(const std::vector<double>& sups) {
  const std::size_t s = sups.size();
  std::vector<double> y(s);
  for (std::size_t j = 0; j < s; ++j) y[j] = std::log2(std::max(sups[j], 1e-300));
  double xm = 0.5 * static_cast<double>(s - 1);
  double ym = 0.0;
  for (double v : y) ym += v;
  ym /= static_cast<double>(s);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    const double dx = static_cast<double>(j) - xm;
    sxx += dx * dx;
    sxy += dx * (y[j] - ym);
  }
  const double slope = sxy / sxx;
  double r2 = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    const double fitv = ym + slope * (static_cast<double>(j) - xm);
    r2 += (y[j] - fitv) * (y[j] - fitv);
  }
  ShellFit fit;
  fit.exponent = -slope;
  fit.residual = std::sqrt(r2 / static_cast<double>(s));
  return fit;
}

ProbeReport scan_one(const grid::GridField& u, const ConeProbe& probe) {
  require(probe.angular_width > 0.0 && probe.angular_width < 0.5 * kPi, ErrorKind::Config,
          "cone half-angle must lie in (0, pi/2)");
  require(probe.window_radius > 0.0, ErrorKind::Config, "window radius must be positive");
  const double dirn = norm(probe.direction);
  require(std::abs(dirn - 1.0) < 1e-8, ErrorKind::Config, "probe direction must be unit length");

  const double ny = smallest_nyquist(u);
  const int jmin = probe.shell_min;
  int jmax = jmin - 1;
  while (std::exp2(jmax + 2) <= ny) ++jmax;
  const int shells = jmax - jmin + 1;
  require(shells >= 4, ErrorKind::MeshTooCoarse,
          "fewer than 4 dyadic shells fit below the grid Nyquist frequency");

  grid::GridField v = u;
  par::parallel_for(v.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(v, i, idx);
    const VecN x = grid::position_at(v, idx);
    const double w =
        smoothing::bump_profile(wrapped_distance(v, x, probe.x0) / probe.window_radius);
    v.values[i] *= w;
  });
  grid::GridField vhat = grid::to_frequency(v);

  const double cos_gate = std::cos(probe.angular_width);
  std::vector<double> sups(static_cast<size_t>(shells), 0.0);
  std::vector<long> counts(static_cast<size_t>(shells), 0);
  for (std::size_t i = 0; i < vhat.size(); ++i) {
    std::array<int, 4> idx{};
    grid::unflatten(vhat, i, idx);
    const VecN k = grid::frequency_at(vhat, idx);
    const double kn = norm(k);
    if (kn <= 0.0) continue;
    if (dot(k, probe.direction) < cos_gate * kn) continue;
    const int j = static_cast<int>(std::floor(std::log2(kn)));
    if (j < jmin || j > jmax) continue;
    const std::size_t bin = static_cast<std::size_t>(j - jmin);
    sups[bin] = std::max(sups[bin], std::abs(vhat.values[i]));
    ++counts[bin];
  }
  for (int j = 0; j < shells; ++j)
    require(counts[static_cast<size_t>(j)] > 0, ErrorKind::MeshTooCoarse,
            "dyadic shell " + std::to_string(jmin + j) +
                " contains no lattice modes inside the probe cone");

  ProbeReport rep;
  rep.probe = probe;
  rep.shell_sup = sups;
  if (sups.front() <= 0.0 || sups.back() <= 1e-10 * sups.front()) {
    rep.exponent =
        sups.front() > 0.0
            ? std::log2(sups.front() / std::max(sups.back(), 1e-300)) / (shells - 1)
            : 50.0;
    rep.residual = 0.0;
    rep.cls = ScanClass::Smooth;
    return rep;
  }
  const ShellFit fit = fit_power_law(sups);
  rep.exponent = fit.exponent;
  rep.residual = fit.residual;
  if (fit.residual >= kResidualGate)
    rep.cls = ScanClass::Inconclusive;
  else if (fit.exponent >= kSmoothExponent)
    rep.cls = ScanClass::Smooth;
  else if (fit.exponent <= kSingularExponent)
    rep.cls = ScanClass::Singular;
  else
    rep.cls = ScanClass::Inconclusive;
  return rep;
}

}  // namespace

const char* to_string(ScanClass c) {
  switch (c) {
    case ScanClass::Smooth: return "smooth";
    case ScanClass::Singular: return "singular";
    default: return "inconclusive";
  }
}

std::vector<ProbeReport> wavefront_scan(const grid::GridField& u,
                                        const std::vector<ConeProbe>& probes) {
  require(u.space == grid::Space::Position, ErrorKind::Config,
          "wavefront_scan expects position-space data");
  require_axis_box(u, "wavefront_scan");
  std::vector<ProbeReport> out;
  out.reserve(probes.size());
  for (const ConeProbe& p : probes) out.push_back(scan_one(u, p));
  return out;
}

grid::GridField quantize_symbol(const std::vector<SymbolTerm>& terms, const grid::GridField& u,
                                QuantizePath path) {
  require(u.space == grid::Space::Position, ErrorKind::Config,
          "quantize_symbol expects position-space data");
  require(!terms.empty(), ErrorKind::Config, "empty symbol");
  if (path == QuantizePath::Auto) path = QuantizePath::Fourier;

  if (path == QuantizePath::Direct) {
    require(u.size() <= 8192, ErrorKind::Config,
            "direct quantization is quadratic; use the Fourier path above 8192 points");
    grid::GridField uhat = grid::to_frequency(u);
    grid::GridField out = u;
    const std::size_t nn = u.size();
    const double inv_n = 1.0 / static_cast<double>(nn);
    par::parallel_for(nn, [&](std::size_t i) {
      std::array<int, 4> ix{};
      grid::unflatten(u, i, ix);
      const VecN x = grid::position_at(u, ix);
      cplx acc(0.0, 0.0);
      for (std::size_t m = 0; m < nn; ++m) {
        std::array<int, 4> ik{};
        grid::unflatten(u, m, ik);
        const VecN k = grid::frequency_at(u, ik);
        cplx sym(0.0, 0.0);
        for (const SymbolTerm& t : terms) sym += t.space(x) * t.freq(k);
        acc += sym * uhat.values[m] * std::exp(cplx(0.0, dot(k, x)));
      }
      out.values[i] = inv_n * acc;
    });
    return out;
  }

  grid::GridField uhat = grid::to_frequency(u);
  grid::GridField out = u;
  std::fill(out.values.begin(), out.values.end(), cplx(0.0, 0.0));
  for (const SymbolTerm& t : terms) {
    grid::GridField part = uhat;
    par::parallel_for(part.size(), [&](std::size_t i) {
      std::array<int, 4> idx{};
      grid::unflatten(part, i, idx);
      part.values[i] *= t.freq(grid::frequency_at(part, idx));
    });
    grid::GridField pos = grid::to_position(part);
    par::parallel_for(pos.size(), [&](std::size_t i) {
      std::array<int, 4> idx{};
      grid::unflatten(pos, i, idx);
      out.values[i] += t.space(grid::position_at(pos, idx)) * pos.values[i];
    });
  }
  return out;
}

grid::GridField halfwave_evolve(const grid::GridField& u, double t) {
  require(u.space == grid::Space::Position, ErrorKind::Config,
          "halfwave_evolve expects position-space data");
  grid::GridField hat = grid::to_frequency(u);
  par::parallel_for(hat.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(hat, i, idx);
    const double phase = -t * norm(grid::frequency_at(hat, idx));
    hat.values[i] *= cplx(std::cos(phase), std::sin(phase));
  });
  return grid::to_position(hat);
}

TransportReport halfwave_transport_check(const grid::GridField& u,
                                         const std::vector<ConeProbe>& singular_probes,
                                         double t) {
  require(!singular_probes.empty(), ErrorKind::Config, "no probes given");
  require(t > 0.0, ErrorKind::Config, "transport check needs t > 0");
  for (const ConeProbe& p : singular_probes)
    require(t > 2.0 * p.window_radius, ErrorKind::Config,
            "transport time must clear the probe window diameter");

  const std::vector<ProbeReport> before = wavefront_scan(u, singular_probes);
  grid::GridField ut = halfwave_evolve(u, t);

  TransportReport rep;
  rep.t = t;
  std::string offenders;
  for (std::size_t i = 0; i < singular_probes.size(); ++i) {
    TransportEntry e;
    e.probe = singular_probes[i];
    e.at_source_before = before[i].cls;
    e.x_target = wrap_point(u, e.probe.x0 + t * e.probe.direction);

    ConeProbe target = e.probe;
    target.x0 = e.x_target;
    ConeProbe source = e.probe;
    const std::vector<ProbeReport> after = wavefront_scan(ut, {target, source});
    e.at_target_after = after[0].cls;
    e.at_source_after = after[1].cls;
    e.ok = e.at_source_before == ScanClass::Singular &&
           e.at_target_after == ScanClass::Singular && e.at_source_after == ScanClass::Smooth;
    if (!e.ok) {
      std::ostringstream os;
      os << " probe[" << i << "] x0=(";
      for (int a = 0; a < e.probe.x0.n; ++a) os << (a ? "," : "") << e.probe.x0[a];
      os << ") before=" << to_string(e.at_source_before)
         << " target=" << to_string(e.at_target_after)
         << " vacated=" << to_string(e.at_source_after) << ";";
      offenders += os.str();
    }
    rep.entries.push_back(e);
  }
  require(offenders.empty(), ErrorKind::GateFailed,
          "half-wave transport mismatch:" + offenders);
  return rep;
}

std::string report_csv(const std::vector<ProbeReport>& reports) {
  std::ostringstream os;
  os.precision(10);
  os << "x0_1,x0_2,dir_angle,exponent,residual,class\n";
  for (const ProbeReport& r : reports) {
    const double x1 = r.probe.x0[0];
    const double x2 = r.probe.x0.n > 1 ? r.probe.x0[1] : 0.0;
    const double ang =
        r.probe.direction.n > 1 ? std::atan2(r.probe.direction[1], r.probe.direction[0])
                                : (r.probe.direction[0] >= 0.0 ? 0.0 : kPi);
    os << x1 << "," << x2 << "," << ang << "," << r.exponent << "," << r.residual << ","
       << to_string(r.cls) << "\n";
  }
  return os.str();
}

}  // namespace weylscope::wavefront
