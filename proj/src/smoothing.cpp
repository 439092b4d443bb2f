#include "weylscope/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "weylscope/fft.hpp"
#include "weylscope/geometry.hpp"

namespace weylscope::smoothing {

namespace {

double base_bump(double s) {
  const double w = 1.0 - 4.0 * s * s;
  return w > 0.0 ? std::exp(-1.0 / w) : 0.0;
}

// Four-point Lagrange cubic on the nodes -1, 0, 1, 2; exact for cubics, so
// the interpolation error stays fourth order in the table spacing.
double cubic4(double p0, double p1, double p2, double p3, double s) {
  const double a = s + 1.0, b = s, c = s - 1.0, d = s - 2.0;
  return (-p0 * b * c * d + 3.0 * p1 * a * c * d - 3.0 * p2 * a * b * d + p3 * a * b * c) / 6.0;
}

struct ProfileTable {
  static constexpr int kCells = 8192;
  std::vector<double> v;  // bump_profile at j / kCells, j = 0 .. kCells
  ProfileTable() {
    v.resize(kCells + 1);
    const double norm = geometry::integrate_adaptive(
        [](double s) { return base_bump(s) * base_bump(-s); }, -0.5, 0.5, 1e-14);
    for (int j = 0; j <= kCells; ++j) {
      const double u = static_cast<double>(j) / kCells;
      const double a = std::max(-0.5, u - 0.5), b = std::min(0.5, u + 0.5);
      double val = 0.0;
      if (b > a)
        val = geometry::integrate_adaptive(
            [u](double s) { return base_bump(s) * base_bump(u - s); }, a, b, 1e-14);
      v[static_cast<size_t>(j)] = val / norm;
    }
  }
  double at(double u) const {
    const double au = std::abs(u);
    if (au >= 1.0) return 0.0;
    const double t = au * kCells;
    const int j = std::min(static_cast<int>(t), kCells - 1);
    const double s = t - j;
    const double p0 = j > 0 ? v[static_cast<size_t>(j - 1)] : v[1];  // even reflection
    const double p1 = v[static_cast<size_t>(j)];
    const double p2 = v[static_cast<size_t>(j + 1)];
    const double p3 = j + 2 <= kCells ? v[static_cast<size_t>(j + 2)] : 0.0;
    // the profile is an autocorrelation of bumps, so it is nonnegative;
    // interpolation noise near the support edge must not flip its sign
    return std::max(0.0, cubic4(p0, p1, p2, p3, s));
  }
};

const ProfileTable& profile_table() {
  static ProfileTable t;
  return t;
}

}  // namespace

double bump_profile(double u) { return profile_table().at(u); }

KernelTable::KernelTable(const std::function<double(double)>& symbol, double support,
                         int log2n) {
  require(support > 0.0, ErrorKind::Config, "kernel symbol support must be positive");
  require(log2n >= 12 && log2n <= 22, ErrorKind::Config, "kernel table size out of range");
  const long n = 1L << log2n;
  // 64x oversampling beyond the Nyquist spacing of the support keeps the
  // four-point cubic interpolation error below 1e-10 relative.
  dx_ = kPi / (64.0 * support);
  const double T = kTwoPi / dx_;
  const double dt = T / static_cast<double>(n);
  std::vector<cplx> buf(static_cast<size_t>(n));
  for (long k = 0; k < n; ++k) {
    const double t = -0.5 * T + k * dt;
    buf[static_cast<size_t>(k)] = cplx(symbol(t), 0.0);
  }
  fft::Fft plan({static_cast<int>(n)});
  plan.backward(buf.data());
  table_.resize(static_cast<size_t>(n / 2 + 1));
  const double scale = dt / kSqrtTwoPi;
  for (long j = 0; j <= n / 2; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    table_[static_cast<size_t>(j)] = scale * sign * buf[static_cast<size_t>(j)].real();
  }
  x_max_ = dx_ * static_cast<double>(n / 2);
}

double KernelTable::value(double x) const {
  const double ax = std::abs(x);
  const double t = ax / dx_;
  const long j = static_cast<long>(t);
  if (j + 2 >= static_cast<long>(table_.size())) return 0.0;
  const double s = t - static_cast<double>(j);
  const double p0 = j > 0 ? table_[static_cast<size_t>(j - 1)] : table_[1];
  return cubic4(p0, table_[static_cast<size_t>(j)], table_[static_cast<size_t>(j + 1)],
                table_[static_cast<size_t>(j + 2)], s);
}

double KernelTable::min_table_value() const {
  double m = table_[0];
  for (double v : table_) m = std::min(m, v);
  return m;
}

double KernelTable::max_table_value() const {
  double m = table_[0];
  for (double v : table_) m = std::max(m, std::abs(v));
  return m;
}

double KernelTable::effective_radius(double rel_tol) const {
  require(rel_tol > 0.0 && rel_tol < 1.0, ErrorKind::Config, "bad truncation tolerance");
  const double cut = rel_tol * max_table_value();
  for (size_t j = table_.size(); j-- > 0;)
    if (std::abs(table_[j]) >= cut) return dx_ * static_cast<double>(j + 1);
  return dx_;
}

namespace {

// Transform of the base bump, shared by every kernel width.
const std::shared_ptr<const KernelTable>& base_transform() {
  static const std::shared_ptr<const KernelTable> t =
      std::make_shared<const KernelTable>([](double s) { return base_bump(s); }, 0.5);
  return t;
}

double base_bump_square_integral() {
  static const double v = geometry::integrate_adaptive(
      [](double s) { return base_bump(s) * base_bump(s); }, -0.5, 0.5, 1e-14);
  return v;
}

}  // namespace

SmoothingKernel::SmoothingKernel(double delta) : delta_(delta) {
  require(delta > 0.0, ErrorKind::Config, "smoothing width must be positive");
  beta_ = base_transform();
  scale_ = delta_ * kSqrtTwoPi / base_bump_square_integral();
}

double SmoothingKernel::rhohat(double t) const { return bump_profile(t / delta_); }

double SmoothingKernel::rho(double x) const {
  const double b = beta_->value(delta_ * x);
  return scale_ * b * b;
}

double SmoothingKernel::effective_radius(double rel_tol) const {
  require(rel_tol > 0.0 && rel_tol < 1.0, ErrorKind::Config, "bad truncation tolerance");
  return beta_->effective_radius(std::sqrt(rel_tol)) / delta_;
}

}  // namespace weylscope::smoothing
