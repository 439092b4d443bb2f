#include "weylscope/wavetrace.hpp"

#include <algorithm>
#include <cmath>

#include "weylscope/fft.hpp"
#include "weylscope/parallel.hpp"

namespace weylscope::wavetrace {

using spectrum::SpectrumEntry;
using spectrum::SpectrumTable;

namespace {

// Index of the first entry with lambda >= value.
size_t lower_index(const std::vector<SpectrumEntry>& e, double value) {
  return static_cast<size_t>(
      std::lower_bound(e.begin(), e.end(), value,
                       [](const SpectrumEntry& a, double v) { return a.lambda < v; }) -
      e.begin());
}

double gaussian_weight(double u) { return std::exp(-u * u); }

// Weight below 1e-16: nothing past this frequency can move a double.
constexpr double kWeightCut = 6.1;

}  // namespace

double smoothed_density(const SpectrumTable& table, const smoothing::SmoothingKernel& kernel,
                        double lambda, double rel_tol) {
  const double radius = kernel.effective_radius(rel_tol);
  require(lambda + radius <= table.lambda_max, ErrorKind::BeyondCutoff,
          "kernel tail reaches past the complete part of the spectrum table");

  const auto& e = table.entries;
  // Two cursors walking outward from lambda give ascending |lambda - lambda_j|
  // without a sort.
  size_t right = lower_index(e, lambda);
  size_t left = right;  // left cursor points one past the next entry below
  par::NeumaierSum acc;
  while (true) {
    const bool has_l = left > 0 && lambda - e[left - 1].lambda <= radius;
    const bool has_r = right < e.size() && e[right].lambda - lambda <= radius;
    if (!has_l && !has_r) break;
    bool take_left;
    if (has_l && has_r)
      take_left = lambda - e[left - 1].lambda <= e[right].lambda - lambda;
    else
      take_left = has_l;
    const SpectrumEntry& s = take_left ? e[--left] : e[right++];
    acc.add(s.mult * kernel.rho(lambda - s.lambda));
  }
  return acc.value() / kernel.mass();
}

TraceSignal trace_signal(const SpectrumTable& table, double t0, double t1, int n, double Lambda,
                         const std::string& weight, TracePath path) {
  require(Lambda > 0.0, ErrorKind::Config, "regulator must be positive");
  require(n >= 2 && t1 > t0, ErrorKind::Config, "trace grid needs n >= 2 and t1 > t0");
  require(weight == "gaussian", ErrorKind::Config, "unknown trace weight: " + weight);
  require(table.lambda_max >= 4.0 * Lambda, ErrorKind::BeyondCutoff,
          "trace needs the spectrum complete to four times the regulator");

  // Entries past kWeightCut * Lambda carry weights below double resolution;
  // dropping them keeps the Nyquist requirement finite for oversized tables.
  const auto& e = table.entries;
  const size_t n_used = lower_index(e, kWeightCut * Lambda * (1.0 + 1e-12));
  const double band = std::min(table.lambda_max, kWeightCut * Lambda);
  const double dt = (t1 - t0) / (n - 1);
  require(dt * band <= kPi * (1.0 + 1e-12), ErrorKind::Nyquist,
          "grid spacing cannot represent the weighted band");

  TraceSignal out;
  out.Lambda = Lambda;
  out.weight = weight;
  out.t.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) out.t[static_cast<size_t>(k)] = t0 + dt * k;
  out.values.assign(static_cast<size_t>(n), cplx(0.0, 0.0));

  const bool binned =
      path == TracePath::Binned || (path == TracePath::Auto && n_used > 100000);
  if (!binned) {
    par::parallel_for(n, [&](std::ptrdiff_t k) {
      const double t = out.t[static_cast<size_t>(k)];
      out.values[static_cast<size_t>(k)] = par::blocked_sum_c(
          n_used,
          [&](size_t j) {
            const double w = e[j].mult * gaussian_weight(e[j].lambda / Lambda);
            const double ph = -t * e[j].lambda;
            return cplx(w * std::cos(ph), w * std::sin(ph));
          },
          false);
    });
    return out;
  }

  // S(t0 + k dt) = sum_j a_j e^{-i k (dt lambda_j)} with the t0 phase folded
  // into the coefficients.
  std::vector<double> x(n_used);
  std::vector<cplx> a(n_used);
  for (size_t j = 0; j < n_used; ++j) {
    x[j] = dt * e[j].lambda;
    const double w = e[j].mult * gaussian_weight(e[j].lambda / Lambda);
    const double ph = -t0 * e[j].lambda;
    a[j] = cplx(w * std::cos(ph), w * std::sin(ph));
  }
  out.values = fft::nufft_exponential_sum(x, a, 0, n - 1);
  return out;
}

PeakReport detect_singular_support(const TraceSignal& signal, double threshold_factor) {
  const size_t n = signal.values.size();
  require(n >= 5, ErrorKind::Config, "trace too short for peak detection");
  require(signal.t.front() > 0.3, ErrorKind::Config,
          "detection window must start past the t = 0 mass (t_min > 0.3)");
  require(threshold_factor > 1.0, ErrorKind::Config, "threshold factor must exceed 1");

  std::vector<double> mag(n);
  for (size_t i = 0; i < n; ++i) mag[i] = std::abs(signal.values[i]);

  std::vector<double> sorted = mag;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2),
                   sorted.end());
  const double median = sorted[n / 2];
  double mean = 0.0;
  for (double v : mag) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : mag) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  PeakReport rep;
  rep.median_abs = median;
  rep.stddev_abs = std::sqrt(var);
  rep.threshold = threshold_factor * median;

  const double dt = signal.t[1] - signal.t[0];
  for (size_t i = 1; i + 1 < n; ++i) {
    if (mag[i] <= rep.threshold) continue;
    if (!(mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])) continue;
    const double denom = mag[i - 1] - 2.0 * mag[i] + mag[i + 1];
    double off = 0.0;
    if (denom < 0.0) off = 0.5 * (mag[i - 1] - mag[i + 1]) / denom;
    off = std::clamp(off, -0.5, 0.5);
    Peak p;
    p.t = signal.t[i] + off * dt;
    p.height = mag[i] - 0.25 * (mag[i - 1] - mag[i + 1]) * off;
    rep.peaks.push_back(p);
  }
  return rep;
}

DgReport dg_amplitude_check(const geometry::ManifoldModel& m, const SpectrumTable& table,
                            const hamflow::ClosedGeodesic& geo,
                            const smoothing::SmoothingKernel& kernel, double Lambda,
                            int fit_points) {
  require(geo.has_monodromy, ErrorKind::Config, "geodesic record lacks monodromy data");
  require(std::abs(geo.det_factor) > 1e-6, ErrorKind::Degenerate,
          "return map has 1 as an eigenvalue; amplitude prediction blows up");
  require(fit_points >= 16, ErrorKind::Config, "fit window needs at least 16 samples");

  const double L = geo.length;
  const double delta = kernel.delta();
  // Nothing else in the length spectrum (iterates included) may fall inside
  // the kernel's time support around L.
  for (const auto& other : hamflow::find_closed_geodesics(m, L + delta)) {
    if (other.length <= 1e-12) continue;
    for (int k = 1;; ++k) {
      const double len = k * other.length;
      if (len > L + delta) break;
      const double gap = std::abs(len - L);
      if (gap < 1e-9) continue;  // the orbit under test, or a partner of equal length
      require(gap >= delta, ErrorKind::CrowdedLengths,
              "length " + std::to_string(len) + " sits inside the kernel window around " +
                  std::to_string(L));
    }
  }

  // A few main lobes of the frequency kernel must fit above the window.
  require(table.lambda_max >= Lambda + 10.0 / delta, ErrorKind::BeyondCutoff,
          "spectrum table ends too close to the fit window");
  require(Lambda > 0.0 && Lambda / 2.0 > 10.0 / delta, ErrorKind::Config,
          "fit window too low for the kernel resolution");

  const auto& e = table.entries;
  std::vector<double> phase_cos(e.size()), phase_sin(e.size());
  for (size_t j = 0; j < e.size(); ++j) {
    phase_cos[j] = std::cos(e[j].lambda * L);
    phase_sin[j] = std::sin(e[j].lambda * L);
  }

  std::vector<double> mags(static_cast<size_t>(fit_points));
  par::parallel_for(fit_points, [&](std::ptrdiff_t i) {
    const double lam =
        Lambda / 2.0 + (Lambda / 2.0) * (static_cast<double>(i) + 0.5) / fit_points;
    const cplx d = par::blocked_sum_c(
        e.size(),
        [&](size_t j) {
          const double w = e[j].mult * kernel.rho(lam - e[j].lambda);
          return cplx(w * phase_cos[j], -w * phase_sin[j]);
        },
        false);
    mags[static_cast<size_t>(i)] = std::abs(d);
  });

  DgReport rep;
  rep.length = L;
  double mean = 0.0;
  for (double v : mags) mean += v;
  mean /= static_cast<double>(fit_points);
  rep.spectral_amp = mean / (kSqrtTwoPi * kernel.rhohat(0.0));
  rep.classical_amp =
      rep.orientations * (L / kTwoPi) / std::sqrt(std::abs(geo.det_factor));
  rep.ratio = rep.spectral_amp / rep.classical_amp;
  return rep;
}

HeatTracePair kernel_trace_crosscheck(const geometry::ManifoldModel& m, double t) {
  require(m.kind() == geometry::ModelKind::FlatTorus, ErrorKind::Config,
          "heat crosscheck needs a flat torus");
  require(t > 0.0, ErrorKind::Config, "heat time must be positive");

  // e^{-t lambda^2} below 1e-20 past this cutoff.
  const double lambda_max = std::sqrt(46.0 / t);
  const SpectrumTable table = spectrum::torus_spectrum(m, lambda_max);
  HeatTracePair out;
  out.spectral = par::blocked_sum(table.entries.size(), [&](size_t j) {
    const auto& s = table.entries[j];
    return s.mult * std::exp(-t * s.lambda * s.lambda);
  });

  const MatN& A = m.lattice();
  // |v|^2 / 4t > 46 terms are invisible; bound the integer box through A^-1.
  const double vmax = std::sqrt(4.0 * t * 46.0);
  const MatN Ainv = inverse(A);
  double ainv_norm = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) ainv_norm += Ainv(i, j) * Ainv(i, j);
  const long K = static_cast<long>(std::sqrt(ainv_norm) * vmax) + 1;
  par::NeumaierSum images;
  for (long p = -K; p <= K; ++p)
    for (long q = -K; q <= K; ++q) {
      const double v0 = A(0, 0) * p + A(0, 1) * q;
      const double v1 = A(1, 0) * p + A(1, 1) * q;
      images.add(std::exp(-(v0 * v0 + v1 * v1) / (4.0 * t)));
    }
  const double area = m.phase_volumes().vol_x;
  out.kernel = area / (4.0 * kPi * t) * images.value();
  return out;
}

}  // namespace weylscope::wavetrace
