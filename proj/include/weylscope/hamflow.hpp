#pragma once

#include <functional>
#include <string>
#include <vector>

#include "weylscope/geometry.hpp"

namespace weylscope::hamflow {

using geometry::ManifoldModel;

// Hamiltonians on T*X handled by the flow code: the cosphere generator
// |xi|_g (unit-speed geodesic flow) and the symbol |xi|_g^2.
enum class Hamiltonian { HalfWave, Quadratic };

struct PhasePoint {
  VecN x, xi;
};

double hamiltonian_value(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q);

// (dx/dt, dxi/dt) = (dH/dxi, -dH/dx).
PhasePoint hamilton_field(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q);

// Jacobian of the field at q, layout J[i][j] with state order (x, xi).
// Fills the leading 2n x 2n block.
void hamilton_field_jacobian(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q,
                             std::array<std::array<double, 8>, 8>& jac);

// Scalar symbols a(x, xi) for bracket experiments.
using Symbol = std::function<double(const VecN&, const VecN&)>;

// {f, g} = sum_j df/dxi_j dg/dx^j - df/dx^j dg/dxi_j, by Richardson-refined
// central differences (absolute accuracy ~1e-10 for smooth symbols).
double poisson_bracket(const Symbol& f, const Symbol& g, const PhasePoint& q, double step = 1e-4);

struct TrajectorySample {
  double t;
  PhasePoint q;  // primary-chart coordinates
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double energy_drift = 0.0;  // max |h(t) - h(0)| / |h(0)|
  long steps = 0, rejects = 0;
};

struct FlowOptions {
  double tol = 1e-9;      // local error per unit time; drift gate uses the same scale
  double h_init = 1e-2;
  double h_min = 1e-13;
  double h_max = 0.0;     // 0: no cap beyond chart safety
};

// RK4 with step doubling: each step is compared against two half steps and
// accepted when the Richardson error estimate is within tol * h; the
// extrapolated value is kept. Sphere trajectories are integrated in a
// rotated chart that is re-centered whenever the point comes within 0.1 rad
// of a pole; samples are reported in the primary chart.
Trajectory integrate_bicharacteristic(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q0,
                                      double T, const FlowOptions& opt = {});

// Distance between phase points respecting model identifications (lattice
// wrap on the torus, chart-free ambient comparison on the sphere).
double return_distance(const ManifoldModel& m, const PhasePoint& a, const PhasePoint& b);

struct ClosedGeodesic {
  double length = 0.0;
  PhasePoint seed;       // point on the unit cosphere
  int multiplicity = 1;  // lattice vectors sharing the length (torus)
  std::string note;      // "isolated", "family", ...

  // Filled by monodromy().
  bool has_monodromy = false;
  MatN dP{2};                  // 2x2 linearized return map on the transversal
  double det_factor = 0.0;     // det(I - dP)
  double det_residual = 0.0;   // |det dP - 1| (symplecticity proxy)
  int conj_count = 0;          // zeros of the Jacobi field over one period
  bool terminal_zero = false;  // Jacobi field vanishes again at t = L
};

// Model-aware catalog search: torus lattice lengths, sphere great circles,
// revolution equators (critical points of the profile) plus the meridian.
std::vector<ClosedGeodesic> find_closed_geodesics(const ManifoldModel& m, double length_max);

// Linearized return map of the |xi|_g flow around a closed geodesic, from the
// variational flow restricted to the unit-cosphere transversal spanned by the
// unit normal position variation and its conjugate momentum variation.
// Returns a copy of g with the monodromy fields filled.
ClosedGeodesic monodromy(const ManifoldModel& m, const ClosedGeodesic& g, double tol = 1e-12);

enum class Fate { Trapped, Escaped };

struct TrappingReport {
  Fate forward = Fate::Trapped, backward = Fate::Trapped;
  double t_escape_forward = -1.0, t_escape_backward = -1.0;
};

// Follows the |xi|_g^2 flow both ways from q0. Escape requires |x| to pass
// r_escape with an outgoing, monotonically opening direction cosine over the
// next 10 accepted steps (otherwise Inconclusive is thrown).
TrappingReport classify_trapping(const ManifoldModel& m, const PhasePoint& q0, double t_max,
                                 double r_escape);

// Scale xi so that |xi|_g = 1 at x.
PhasePoint unit_cosphere(const ManifoldModel& m, PhasePoint q);

}  // namespace weylscope::hamflow
