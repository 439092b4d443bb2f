#pragma once

#include <string>
#include <vector>

#include "weylscope/geometry.hpp"
#include "weylscope/tridiag.hpp"

namespace weylscope::spectrum {

using geometry::ManifoldModel;
using geometry::RevolutionProfile;

struct SpectrumEntry {
  double lambda;  // sqrt of a Laplace eigenvalue
  int mult;
};

struct SpectrumTable {
  std::string model_id;    // model descriptor, JSON
  double lambda_max = 0;   // the table is complete up to this frequency
  std::vector<SpectrumEntry> entries;  // ascending lambda
  long total_count() const;
};

struct RevolutionOptions {
  int mesh = 4000;         // meridian cells; the gate also runs at mesh/2
  double gate = 1e-3;      // max relative drift allowed between the two meshes
  bool richardson = true;  // keep the extrapolated eigenvalues
};

// Finite-volume discretization of the separated mode-m operator on the
// meridian, symmetrized to a standard tridiagonal eigenproblem in lambda^2.
tridiag::SymTridiag revolution_mode_matrix(const RevolutionProfile& prof, int m, int cells);

SpectrumTable torus_spectrum(const ManifoldModel& m, double lambda_max);
SpectrumTable sphere_spectrum(const ManifoldModel& m, double lambda_max);
SpectrumTable revolution_spectrum(const ManifoldModel& m, double lambda_max,
                                  const RevolutionOptions& opt = {});
SpectrumTable compute_spectrum(const ManifoldModel& m, double lambda_max,
                               const RevolutionOptions& opt = {});

// N(lambda): eigenvalues <= lambda, multiplicity included. Only valid up to
// the table's completeness cutoff.
double counting_function(const SpectrumTable& t, double lambda);

struct WeylFit {
  std::vector<std::pair<double, double>> ratio;  // (lambda, N / (expected * lambda^n)), log-spaced
  double remainder_sup;   // sup over the grid of |N - expected * lambda^n| / lambda^(n-1)
  double coeff_expected;  // (2 pi)^-n vol(B* X)
  double exponent;        // log-log slope of N over the upper half of the grid
  double rel_err_at_max;  // |ratio - 1| at the top of the table
};

WeylFit weyl_fit(const ManifoldModel& m, const SpectrumTable& t, int grid_points = 256);

}  // namespace weylscope::spectrum
