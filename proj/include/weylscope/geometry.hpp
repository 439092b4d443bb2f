#pragma once

#include <functional>
#include <string>

#include "weylscope/common.hpp"
#include "weylscope/smallmat.hpp"

namespace weylscope::geometry {

enum class ModelKind { FlatTorus, Sphere2, SurfaceOfRevolution, PerturbedPlane };

// Metric and its derivatives at a point, in the model's chart. First
// derivatives are always filled; second derivatives only when requested
// (they feed the variational flow).
struct MetricData {
  int n = 2;
  MatN g, ginv;
  double sqrtdet = 1.0;
  std::array<MatN, 4> dg{};        // dg[k](i,j)    = d g_ij / d x^k
  std::array<MatN, 4> dginv{};     // dginv[k](i,j) = d g^ij / d x^k
  VecN dsqrtdet;                   // d sqrt(det g) / d x^k
  bool second_order = false;
  std::array<std::array<MatN, 4>, 4> d2g{};     // d2g[k][l] = d^2 g / dx^k dx^l
  std::array<std::array<MatN, 4>, 4> d2ginv{};  // same layout for g^{-1}
};

// Meridian profile r(s) = sin s + beta sin^3 s on [0, pi]. Endpoint slopes
// are exactly +-1, so both poles are smooth for every catalog entry.
struct RevolutionProfile {
  std::string name;
  double beta = 0.0;
  double length = kPi;  // parameter range [0, length]

  double r(double s) const;
  double dr(double s) const;
  double d2r(double s) const;
};

struct PhaseVolumes {
  double vol_x = 0.0;      // Riemannian volume of the manifold
  double vol_bstar = 0.0;  // volume of the unit coball bundle
};

// Chart conventions:
//   FlatTorus            x in R^n mod lattice columns, metric identity
//   Sphere2              x = (theta, phi), poles excluded by 1e-6
//   SurfaceOfRevolution  x = (s, theta), s in (0, length)
//   PerturbedPlane       x in R^2, g = I + eps * b(x)
class ManifoldModel {
 public:
  static ManifoldModel flat_torus(const MatN& lattice);
  static ManifoldModel sphere2(double radius);
  static ManifoldModel revolution(const std::string& profile_name);
  static ManifoldModel perturbed_plane(double eps);
  static ManifoldModel from_descriptor(const std::string& json_text);
  // Named presets used by the CLI and tests: "torus-2pi", "torus-rect",
  // "sphere", "prolate", "oblate", "peanut", "plane", "plane-trap".
  static ManifoldModel preset(const std::string& name);

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool compact() const { return kind_ != ModelKind::PerturbedPlane; }

  const MatN& lattice() const;
  double radius() const;
  const RevolutionProfile& profile() const;
  double eps() const;

  // Radius beyond which the plane bump is below 1e-11 of the metric scale.
  double bump_support_radius() const;

  MetricData metric_at(const VecN& x, int order = 1) const;

  // Principal symbol of the Laplacian: |xi|_g^2 = g^{ij} xi_i xi_j.
  double cosymbol(const VecN& x, const VecN& xi) const;

  PhaseVolumes phase_volumes(double tol = 1e-10) const;

  std::string descriptor() const;

 private:
  ManifoldModel() = default;
  ModelKind kind_ = ModelKind::FlatTorus;
  int dim_ = 2;
  MatN lattice_;
  double radius_ = 1.0;
  RevolutionProfile profile_;
  double eps_ = 0.05;
};

inline constexpr double kPoleExclusion = 1e-6;

// Adaptive Simpson quadrature; throws ErrorKind::Quadrature when the
// requested tolerance is out of reach within the depth cap.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol);

}  // namespace weylscope::geometry
