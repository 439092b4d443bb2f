#pragma once

#include "weylscope/gridfield.hpp"

// Free Schrodinger evolution on box tori, treated as truncations of R^n, and
// the dispersive functionals built on top of it: Sobolev norms, a Morawetz
// interaction functional, a local smoothing estimate, and a Hardy quotient.
//
// The propagator is the exact Fourier multiplier e^{-i t |k|^2} on the dual
// lattice, so discrete mass and every Sobolev norm are conserved to rounding.
// The functionals measure a wave packet launched well inside the box; each one
// monitors the mass within an eighth of a side length of the boundary and
// refuses to report once that exceeds 1e-6 of the total, since past that point
// the torus stops standing in for R^n.

namespace weylscope::schrod {

grid::GridField evolve(const grid::GridField& psi0, double t);

// (4 pi i t)^{-n/2} e^{i|x|^2/(4t)}, principal square root branch.
cplx free_kernel(double t, const VecN& x);

// Sobolev norm of order s: sqrt( sum <k>^{2s} |psi_hat(k)|^2 ) with the
// Plancherel weight that matches the physical L^2 norm at s = 0.
double sobolev_norm(const grid::GridField& psi, double s);

struct DispersiveReport {
  double angular_term = 0.0;
  double weight_term = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double excise_radius = 0.0;
  double boundary_mass_max = 0.0;
  int snapshots = 0;
};

// Morawetz functional over [0, t_final], sampled at steps+1 snapshots and
// integrated by the trapezoid rule:
//   2 int |angular grad psi|^2 / r  +  c_n int |psi|^2 / r^3,
// c_n = (n-1)(n-3)/2, r measured from the box center, divided by the H^{1/2}
// norm squared of the data. Grid points inside excise_radius of the center
// are dropped from both space integrals; the default radius is 1/32 of the
// shortest box side, a fixed physical ball, so refining the grid compares
// identical integration domains. Rank 3 or 4.
DispersiveReport morawetz_report(const grid::GridField& psi0, double t_final, int steps,
                                 double excise_radius = -1.0);

// Local smoothing functional: int_0^T || chi grad psi ||^2 dt / ||psi0||^2
// with chi a smooth radial bump of the given radius about the box center.
DispersiveReport local_smoothing_report(const grid::GridField& psi0, double t_final,
                                        double radius, int steps);

// ((n-2)^2/4) int |u|^2/r^2 / int |grad u|^2 with centered differences and
// the r = 0 grid point excised; returns 0 for u = 0.
double hardy_ratio(const grid::GridField& u);

}  // namespace weylscope::schrod
