#include "weylscope/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace weylscope::fft {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft::Fft(std::vector<int> dims) : dims_(std::move(dims)) {
  require(!dims_.empty() && dims_.size() <= 4, ErrorKind::Config,
          "transforms support 1 to 4 axes");
  size_ = 1;
  for (int d : dims_) {
    require(d >= 2, ErrorKind::Config, "each transform axis needs at least 2 points");
    size_ *= static_cast<size_t>(d);
  }
  fftw_complex* tmp = fftw_alloc_complex(size_);
  require(tmp != nullptr, ErrorKind::Overflow, "transform scratch allocation failed");
  std::lock_guard<std::mutex> lock(plan_mutex());
  fwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), tmp, tmp, FFTW_FORWARD,
                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), tmp, tmp, FFTW_BACKWARD,
                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(tmp);
  require(fwd_ != nullptr && bwd_ != nullptr, ErrorKind::Internal, "transform planning failed");
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft::forward(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

void Fft::backward(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

std::vector<double> angular_freqs(int n, double dx) {
  require(n >= 2 && dx > 0, ErrorKind::Config, "bad frequency axis");
  std::vector<double> k(static_cast<size_t>(n));
  const double base = kTwoPi / (n * dx);
  for (int i = 0; i < n; ++i) {
    const int bin = i <= n / 2 ? i : i - n;
    k[static_cast<size_t>(i)] = base * bin;
  }
  return k;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  require(n >= 2, ErrorKind::Config, "quadrature order too small");
  nodes.assign(static_cast<size_t>(n), 0.0);
  weights.assign(static_cast<size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = -p0 / dp;
      x += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<size_t>(i)] = -x;
    nodes[static_cast<size_t>(n - 1 - i)] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[static_cast<size_t>(i)] = w;
    weights[static_cast<size_t>(n - 1 - i)] = w;
  }
}

namespace {

constexpr int kSpreadWidth = 16;
constexpr double kBeta = 2.30 * kSpreadWidth;

double spread_kernel(double z) {
  const double s = 1.0 - z * z;
  return s > 0.0 ? std::exp(kBeta * (std::sqrt(s) - 1.0)) : 0.0;
}

long next_pow2(long v) {
  long p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

std::vector<cplx> nufft_exponential_sum(const std::vector<double>& x, const std::vector<cplx>& c,
                                        long kmin, long kmax) {
  require(x.size() == c.size(), ErrorKind::Config, "source coordinate/weight length mismatch");
  require(kmax >= kmin, ErrorKind::Config, "empty target band");
  const long nk = kmax - kmin + 1;
  std::vector<cplx> out(static_cast<size_t>(nk), cplx(0.0, 0.0));
  if (x.empty()) return out;

  const long kabs = std::max(std::labs(kmin), std::labs(kmax));
  const long nf = std::max<long>(next_pow2(4 * (kabs + 1)), 4 * kSpreadWidth);
  require(nf <= (1L << 26), ErrorKind::Overflow, "oversampled grid too large");
  const double h = kTwoPi / static_cast<double>(nf);
  const double halfw = 0.5 * kSpreadWidth * h;

  std::vector<cplx> grid(static_cast<size_t>(nf), cplx(0.0, 0.0));
  for (size_t j = 0; j < x.size(); ++j) {
    double xj = std::fmod(x[j], kTwoPi);
    if (xj < 0) xj += kTwoPi;
    const long m0 = static_cast<long>(std::floor(xj / h));
    for (long m = m0 - kSpreadWidth / 2 + 1; m <= m0 + kSpreadWidth / 2; ++m) {
      const double z = (xj - m * h) / halfw;
      const double w = spread_kernel(z);
      if (w == 0.0) continue;
      long mi = m % nf;
      if (mi < 0) mi += nf;
      grid[static_cast<size_t>(mi)] += w * c[j];
    }
  }

  Fft plan({static_cast<int>(nf)});
  plan.forward(grid.data());

  // Kernel transform by quadrature: phihat(k) = halfw * int_-1^1 phi(z) e^{-i k halfw z} dz.
  std::vector<double> gl_x, gl_w;
  gauss_legendre(96, gl_x, gl_w);
  std::vector<double> phi_vals(gl_x.size());
  for (size_t i = 0; i < gl_x.size(); ++i) phi_vals[i] = spread_kernel(gl_x[i]);
  for (long k = kmin; k <= kmax; ++k) {
    double ph = 0.0;
    for (size_t i = 0; i < gl_x.size(); ++i)
      ph += gl_w[i] * phi_vals[i] * std::cos(k * halfw * gl_x[i]);
    ph *= halfw;
    require(std::abs(ph) > 1e-14, ErrorKind::Degenerate, "kernel transform vanished in band");
    long ki = k % nf;
    if (ki < 0) ki += nf;
    out[static_cast<size_t>(k - kmin)] = grid[static_cast<size_t>(ki)] * (h / ph);
  }
  return out;
}

}  // namespace weylscope::fft
