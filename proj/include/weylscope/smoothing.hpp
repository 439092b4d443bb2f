#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "weylscope/common.hpp"

namespace weylscope::smoothing {

// Normalized self-convolution of the standard compactly supported bump:
// even, smooth, supported on [-1, 1], value 1 at the origin.
double bump_profile(double u);

// Dense table of the inverse Fourier transform (symmetric convention)
//   value(x) = (2 pi)^(-1/2) * integral symbol(t) e^{i x t} dt
// for an even real symbol supported in [-support, support]. Built once with
// an oversampled FFT; evaluated by cubic interpolation. Evaluations beyond
// the tabulated range return zero (the transform of a smooth compactly
// supported symbol has decayed far below double precision there).
class KernelTable {
 public:
  KernelTable(const std::function<double(double)>& symbol, double support, int log2n = 20);
  double value(double x) const;
  double x_max() const { return x_max_; }
  double dx() const { return dx_; }
  double min_table_value() const;
  double max_table_value() const;
  // Largest |x| where |value| still exceeds rel_tol * max |value|; sums over
  // a spectrum can be truncated beyond it.
  double effective_radius(double rel_tol) const;

 private:
  std::vector<double> table_;  // values at j * dx_, j = 0 .. n/2
  double dx_ = 0, x_max_ = 0;
};

// Spectral smoothing pair (rho, rhohat): rhohat(t) = bump_profile(t/delta)
// is even, smooth, supported on [-delta, delta] with rhohat(0) = 1; rho is
// its inverse transform, with mass sqrt(2 pi). Because the profile is a
// self-convolution, rho is a scaled square of the base bump's transform and
// is evaluated in exactly that form, so rho >= 0 holds in floating point
// even where the tabulated transform is pure roundoff.
class SmoothingKernel {
 public:
  explicit SmoothingKernel(double delta);
  double delta() const { return delta_; }
  double rhohat(double t) const;
  double rho(double x) const;
  // Radius beyond which rho stays below rel_tol times its peak; sums over a
  // spectrum may be truncated there.
  double effective_radius(double rel_tol) const;
  static constexpr double mass() { return kSqrtTwoPi; }

 private:
  double delta_ = 0.0;
  double scale_ = 0.0;
  std::shared_ptr<const KernelTable> beta_;
};

}  // namespace weylscope::smoothing
