#pragma once

#include <string>
#include <vector>

#include "weylscope/common.hpp"
#include "weylscope/hamflow.hpp"
#include "weylscope/smoothing.hpp"
#include "weylscope/spectrum.hpp"

namespace weylscope::wavetrace {

// (rho * N')(lambda), normalized to unit kernel mass so the value tracks the
// local average of the counting density. Terms are added in ascending
// distance from lambda with compensated summation. The sum is truncated where
// the kernel has fallen below rel_tol times its peak; throws BeyondCutoff when
// that truncation radius reaches past the complete part of the table. The
// kernel transform decays like exp(-c sqrt(x)), so tightening rel_tol grows
// the required table length quickly: about 152/delta at 1e-9, 277/delta at
// 1e-12.
double smoothed_density(const spectrum::SpectrumTable& table,
                        const smoothing::SmoothingKernel& kernel, double lambda,
                        double rel_tol = 1e-9);

struct TraceSignal {
  std::vector<double> t;     // uniform grid
  std::vector<cplx> values;  // S(t) = sum_j mult_j w(lambda_j / Lambda) e^{-i t lambda_j}
  double Lambda = 0.0;
  std::string weight = "gaussian";
};

enum class TracePath { Auto, Direct, Binned };

// Regulated trace on a uniform grid of n points spanning [t0, t1]. The
// direct path evaluates the sum per grid point; the binned path spreads the
// frequencies onto an oversampled grid, runs one FFT, and corrects for the
// spreading window. Auto switches to binned past 1e5 table entries.
TraceSignal trace_signal(const spectrum::SpectrumTable& table, double t0, double t1, int n,
                         double Lambda, const std::string& weight = "gaussian",
                         TracePath path = TracePath::Auto);

struct Peak {
  double t = 0.0;
  double height = 0.0;
};

struct PeakReport {
  std::vector<Peak> peaks;  // ascending t
  double median_abs = 0.0;
  double stddev_abs = 0.0;
  double threshold = 0.0;  // detection level actually applied
};

// Local maxima of |S(t)| above threshold_factor times the median, refined by
// three-point parabolic interpolation. The grid must start past the mass of
// the t = 0 singularity (t > 0.3).
PeakReport detect_singular_support(const TraceSignal& signal, double threshold_factor = 5.0);

struct DgReport {
  double spectral_amp = 0.0;   // from the phased spectral sum
  double classical_amp = 0.0;  // orientations * (L / 2 pi) / sqrt |det(I - dP)|
  double ratio = 0.0;          // spectral / classical
  double length = 0.0;
  int orientations = 2;
};

// Compares the stationary-phase amplitude of the trace singularity at the
// geodesic's length against the linearized return map prediction. Magnitudes
// only; the phase factor is not checked. The geodesic must carry monodromy
// data, be nondegenerate, and be isolated in the length spectrum (iterates
// of shorter geodesics included) by at least the kernel width.
DgReport dg_amplitude_check(const geometry::ManifoldModel& m,
                            const spectrum::SpectrumTable& table,
                            const hamflow::ClosedGeodesic& geo,
                            const smoothing::SmoothingKernel& kernel, double Lambda,
                            int fit_points = 512);

struct HeatTracePair {
  double spectral = 0.0;  // sum_j mult_j e^{-t lambda_j^2}
  double kernel = 0.0;    // area * (4 pi t)^{-1} * lattice image sum
};

// Heat trace both ways on a flat torus: eigenvalue sum against the diagonal
// kernel integral evaluated by Poisson summation over the lattice. The two
// must agree to near machine precision for every t > 0.
HeatTracePair kernel_trace_crosscheck(const geometry::ManifoldModel& m, double t);

}  // namespace weylscope::wavetrace
