#pragma once

#include <string>
#include <vector>

#include "weylscope/geometry.hpp"
#include "weylscope/gridfield.hpp"

// Oscillatory-integral solver for the half-wave equation on a weakly curved
// plane patch, periodized on a square box with the metric bump at the box
// center. Tables are built once per model by ray tracing and reused for every
// datum and band.
//
// Phase convention. For a unit covector direction eta the phase phi(t, x,
// eta) solves (d_t phi)^2 = |grad phi|_g^2 with phi(0, x, eta) = x.eta and
// d_t phi < 0; degree-1 homogeneity extends it to all frequencies, so only
// the unit-circle slice is tabulated. Rays launch from y with xi(0) = eta,
// phi is constant along each ray, and the table entry at (t, x) comes from a
// Newton inversion of the ray map y -> X(t; y). The stored d_t phi and
// grad_x phi come from the arriving ray (-|xi|_g and xi), not from finite
// differences. Coordinates inside the tables are shifted so the bump sits at
// the origin: x_table = x_box - L/2 per axis.
//
// Amplitudes. a0 solves the leading transport equation along rays and is
// accumulated during the ray trace; a_{-1} solves the next order, sourced by
// -i Box a0, with Box a0 formed by centered differences on the finished a0
// table and interpolated along the rays. On a flat model the tables must
// come out as phi = x.eta - t, a0 = 1, a_{-1} = 0; solve_transport enforces
// that gate and throws GateFailed if ray tracing ever disagrees.

namespace weylscope::parametrix {

using geometry::ManifoldModel;

struct TableGeometry {
  double box = 0.0;  // side length of the square patch
  int nx = 0;        // x points per axis; spacing box/nx; coord i*box/nx - box/2
  int nt = 0;        // time levels t0 + i*dt, one pad level on each end
  double dt = 0.0;
  double t0 = 0.0;
  int n_angle = 0;

  std::size_t per_angle() const {
    return static_cast<std::size_t>(nt) * static_cast<std::size_t>(nx) *
           static_cast<std::size_t>(nx);
  }
  std::size_t total() const { return per_angle() * static_cast<std::size_t>(n_angle); }
  std::size_t index(int l, int it, int i1, int i2) const {
    return ((static_cast<std::size_t>(l) * static_cast<std::size_t>(nt) +
             static_cast<std::size_t>(it)) *
                static_cast<std::size_t>(nx) +
            static_cast<std::size_t>(i1)) *
               static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(i2);
  }
  double t_level(int it) const { return t0 + dt * static_cast<double>(it); }
  double x_coord(int i) const {
    return box * static_cast<double>(i) / static_cast<double>(nx) - 0.5 * box;
  }
  double angle(int l) const { return kTwoPi * static_cast<double>(l) / n_angle; }
};

struct PhaseTable {
  TableGeometry geo;
  std::string model_id;
  std::vector<double> phi;
  std::vector<double> dphi_dt;
  std::vector<double> dphi_dx1, dphi_dx2;
  std::vector<double> ray_det;  // det dx/dy of the arriving ray
  std::vector<double> y1, y2;   // launch point of the arriving ray
  std::vector<double> a0_ray;   // leading amplitude accumulated along the ray
};

struct AmplitudeTable {
  TableGeometry geo;
  std::vector<double> a0;
  std::vector<cplx> am1;
};

struct EikonalOptions {
  double t_final = 0.3;
  int nt_phys = 9;  // levels spanning [0, t_final]; two pad levels are added
  int nx = 64;
  int n_angle = 96;
  double newton_tol = 1e-10;
  int max_newton = 12;
  double det_gate = 0.5;  // CausticReached below this ray-map determinant
  int rk_steps = 16;      // RK4 steps for a ray of length t_final
};

PhaseTable solve_eikonal(const ManifoldModel& m, double box, const EikonalOptions& opt = {});

AmplitudeTable solve_transport(const ManifoldModel& m, const PhaseTable& pt);

// Applies the parametrix to band-limited data f (a position-space field on
// the same box) at a tabulated time level. Returns u(t, .) sampled on the
// table's x subgrid. Frequencies are interpolated across tabulated angles by
// a cubic rule acting on phi - (x.eta - t), which vanishes identically on a
// flat model, so the flat case is exact up to rounding.
grid::GridField apply_parametrix(const PhaseTable& pt, const AmplitudeTable& at,
                                 const grid::GridField& f, double t, double band_lo,
                                 double band_hi, bool use_am1 = true);

// Pseudospectral reference: integrates the wave system u' = v,
// v' = -Laplace_g u by classic RK4 with the initial velocity -i sqrt(Lap) f
// built from a Chebyshev approximation of the square root on the band's
// spectral interval (validated against Lap f and gated at 1e-6).
grid::GridField reference_halfwave(const ManifoldModel& m, const grid::GridField& f, double t,
                                   double band_lo, double band_hi, double dt);

// Deterministic band-limited test datum: smooth radial envelope on
// [0.8 lambda, 2.4 lambda], hashed phases, unit L^2 norm.
grid::GridField band_data(int n_per_axis, double box, double lambda, unsigned seed);

// Re-integrates one ray and reports where it lands, how well the Hamiltonian
// was conserved along the way, and the ray-map determinant on arrival.
struct RayEnd {
  VecN x, xi;
  double h_drift = 0.0;
  double det = 0.0;
};
RayEnd trace_ray(const ManifoldModel& m, const VecN& y, double theta, double t, int steps);

// Substitutes the leading amplitude back into its transport equation along a
// subsample of stored rays, re-integrated densely; the time derivative comes
// from centered differences between substeps, everything else from the exact
// ray-local data. Returns the sup of the equation defect. Independent of the
// grid finite differences in residual_check.
double transport_ray_residual(const ManifoldModel& m, const PhaseTable& pt,
                              int node_stride = 16, int substeps = 768);

// Independent finite-difference substitution of the tables into the eikonal
// and transport equations over the strict interior of the time range.
// fd_order is 2 or 4.
struct ResidualReport {
  double eikonal_sup = 0.0;
  double transport0_sup = 0.0;
  double transport1_sup = 0.0;
};
ResidualReport residual_check(const ManifoldModel& m, const PhaseTable& pt,
                              const AmplitudeTable& at, int fd_order = 2);

// "WEYLSCOPE-PHASE v1": one header line, one JSON descriptor line, then the
// table arrays as raw little-endian doubles.
void write_phase_cache(const std::string& path, const PhaseTable& pt);
PhaseTable read_phase_cache(const std::string& path);

}  // namespace weylscope::parametrix
