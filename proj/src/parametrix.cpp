#include "weylscope/parametrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "weylscope/fft.hpp"
#include "weylscope/hamflow.hpp"
#include "weylscope/parallel.hpp"
#include "weylscope/smoothing.hpp"

namespace weylscope::parametrix {
namespace {

using geometry::MetricData;
using geometry::ModelKind;
using grid::GridField;
using hamflow::Hamiltonian;
using hamflow::PhasePoint;

// Ray state layout: q at 0..1, xi at 2..3, the 4x2 variational block
// d(x,xi)/dy row-major at 4..11, log a0 at 12, a_{-1} at 13..14.
constexpr int kStateLen = 15;
constexpr int kQ = 0;
constexpr int kXi = 2;
constexpr int kJ = 4;
constexpr int kLogA0 = 12;
constexpr int kAm1 = 13;

// Extra clearance, beyond the bump support radius, that a straight-line ray
// corridor must keep from the origin before the flat closed form is used.
constexpr double kFlatMargin = 0.6;

struct RayState {
  double v[kStateLen];
};

int wrap(int i, int n) { return ((i % n) + n) % n; }

void catmull_weights(double u, double w[4]) {
  double u2 = u * u, u3 = u2 * u;
  w[0] = -0.5 * u + u2 - 0.5 * u3;
  w[1] = 1.0 - 2.5 * u2 + 1.5 * u3;
  w[2] = 0.5 * u + 2.0 * u2 - 1.5 * u3;
  w[3] = -0.5 * u2 + 0.5 * u3;
}

double segment_origin_distance(double a0, double a1, double b0, double b1) {
  double d0 = b0 - a0, d1 = b1 - a1;
  double len2 = d0 * d0 + d1 * d1;
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp(-(a0 * d0 + a1 * d1) / len2, 0.0, 1.0);
  return std::hypot(a0 + s * d0, a1 + s * d1);
}

// Inverse metric entries and the first-order coefficients c_j of the
// divergence form, so that Delta_g f = -(g^{ij} f_ij + c_j f_j) with the
// positive-spectrum sign convention used throughout.
struct DivCoef {
  double g11 = 1.0, g12 = 0.0, g22 = 1.0;
  double c1 = 0.0, c2 = 0.0;
};

DivCoef div_coef(const ManifoldModel& m, const VecN& x) {
  MetricData md = m.metric_at(x, 1);
  DivCoef d;
  d.g11 = md.ginv(0, 0);
  d.g12 = md.ginv(0, 1);
  d.g22 = md.ginv(1, 1);
  double c[2] = {0.0, 0.0};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i)
      c[j] += md.dginv[i](i, j) + md.dsqrtdet[i] / md.sqrtdet * md.ginv(i, j);
  d.c1 = c[0];
  d.c2 = c[1];
  return d;
}

// Samples a tabulated scalar (here: box applied to a0) at an off-grid ray
// point: Catmull-Rom in x with periodic wrap, 4-point Lagrange cubic in t
// with one-sided segments at the two ends of the level range.
struct BoxSource {
  const TableGeometry* geo = nullptr;
  const std::vector<double>* values = nullptr;

  double sample(double t, double q1, double q2) const {
    const TableGeometry& g = *geo;
    double tau = (t - g.t0) / g.dt;
    int j0 = static_cast<int>(std::floor(tau)) - 1;
    j0 = std::max(0, std::min(j0, g.nt - 4));
    double s = tau - static_cast<double>(j0);
    double wt[4];
    wt[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    wt[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
    wt[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
    wt[3] = s * (s - 1.0) * (s - 2.0) / 6.0;

    double hx = g.box / g.nx;
    double f1 = (q1 + 0.5 * g.box) / hx;
    double f2 = (q2 + 0.5 * g.box) / hx;
    double fl1 = std::floor(f1), fl2 = std::floor(f2);
    double w1[4], w2[4];
    catmull_weights(f1 - fl1, w1);
    catmull_weights(f2 - fl2, w2);
    int ia[4], ib[4];
    for (int a = 0; a < 4; ++a) {
      ia[a] = wrap(static_cast<int>(fl1) - 1 + a, g.nx);
      ib[a] = wrap(static_cast<int>(fl2) - 1 + a, g.nx);
    }
    const double* val = values->data();
    std::size_t plane = static_cast<std::size_t>(g.nx) * g.nx;
    double acc = 0.0;
    for (int jt = 0; jt < 4; ++jt) {
      const double* lvl = val + static_cast<std::size_t>(j0 + jt) * plane;
      double acc_t = 0.0;
      for (int a = 0; a < 4; ++a) {
        const double* row = lvl + static_cast<std::size_t>(ia[a]) * g.nx;
        acc_t += w1[a] * (w2[0] * row[ib[0]] + w2[1] * row[ib[1]] +
                          w2[2] * row[ib[2]] + w2[3] * row[ib[3]]);
      }
      acc += wt[jt] * acc_t;
    }
    return acc;
  }
};

// Coupled right-hand side: Hamilton field for (q, xi), the linearized field
// for the variational block, and the transport sources for log a0 and
// a_{-1}. The zeroth-order symbol box(phi) is assembled ray-locally from the
// variational data: the phase Hessian is (dxi/dy)(dx/dy)^{-1}, the second
// time derivative follows from differentiating dt(phi) = -h along the ray,
// and the spatial part uses the divergence-form coefficients.
void ray_rhs(const ManifoldModel& m, const RayState& s, double tcur,
             const BoxSource* src, RayState& ds, bool& ok) {
  PhasePoint q;
  q.x = VecN(s.v[kQ], s.v[kQ + 1]);
  q.xi = VecN(s.v[kXi], s.v[kXi + 1]);

  PhasePoint f = hamflow::hamilton_field(m, Hamiltonian::HalfWave, q);
  ds.v[kQ] = f.x[0];
  ds.v[kQ + 1] = f.x[1];
  ds.v[kXi] = f.xi[0];
  ds.v[kXi + 1] = f.xi[1];

  std::array<std::array<double, 8>, 8> jac{};
  hamflow::hamilton_field_jacobian(m, Hamiltonian::HalfWave, q, jac);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += jac[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] * s.v[kJ + 2 * k + c];
      ds.v[kJ + 2 * r + c] = acc;
    }

  double a = s.v[kJ + 0], b = s.v[kJ + 1];
  double c2 = s.v[kJ + 2], d = s.v[kJ + 3];
  double det = a * d - b * c2;
  if (std::abs(det) < 1e-12 || !std::isfinite(det)) {
    ok = false;
    ds.v[kLogA0] = 0.0;
    ds.v[kAm1] = 0.0;
    ds.v[kAm1 + 1] = 0.0;
    return;
  }
  double i11 = d / det, i12 = -b / det, i21 = -c2 / det, i22 = a / det;
  double e = s.v[kJ + 4], f2 = s.v[kJ + 5], g = s.v[kJ + 6], h2 = s.v[kJ + 7];
  double H11 = e * i11 + f2 * i21;
  double H12 = e * i12 + f2 * i22;
  double H21 = g * i11 + h2 * i21;
  double H22 = g * i12 + h2 * i22;
  double Hs = 0.5 * (H12 + H21);

  double xd1 = f.x[0], xd2 = f.x[1];
  double xid1 = f.xi[0], xid2 = f.xi[1];
  double phi_tt = -(xd1 * xid1 + xd2 * xid2) +
                  (xd1 * (H11 * xd1 + Hs * xd2) + xd2 * (Hs * xd1 + H22 * xd2));

  DivCoef dc = div_coef(m, q.x);
  double lap_phi = -(dc.g11 * H11 + 2.0 * dc.g12 * Hs + dc.g22 * H22 +
                     dc.c1 * q.xi[0] + dc.c2 * q.xi[1]);
  double box_phi = phi_tt + lap_phi;

  double h = hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q);
  ds.v[kLogA0] = box_phi / (2.0 * h);

  if (src != nullptr) {
    double sig = src->sample(tcur, s.v[kQ], s.v[kQ + 1]);
    cplx am1(s.v[kAm1], s.v[kAm1 + 1]);
    cplx dam1 = (box_phi * am1 - cplx(0.0, 1.0) * sig) / (2.0 * h);
    ds.v[kAm1] = dam1.real();
    ds.v[kAm1 + 1] = dam1.imag();
  } else {
    ds.v[kAm1] = 0.0;
    ds.v[kAm1 + 1] = 0.0;
  }
}

void rk4_step(const ManifoldModel& m, RayState& s, double tcur, double h,
              const BoxSource* src, bool& ok) {
  RayState k1, k2, k3, k4, tmp;
  ray_rhs(m, s, tcur, src, k1, ok);
  if (!ok) return;
  for (int i = 0; i < kStateLen; ++i) tmp.v[i] = s.v[i] + 0.5 * h * k1.v[i];
  ray_rhs(m, tmp, tcur + 0.5 * h, src, k2, ok);
  if (!ok) return;
  for (int i = 0; i < kStateLen; ++i) tmp.v[i] = s.v[i] + 0.5 * h * k2.v[i];
  ray_rhs(m, tmp, tcur + 0.5 * h, src, k3, ok);
  if (!ok) return;
  for (int i = 0; i < kStateLen; ++i) tmp.v[i] = s.v[i] + h * k3.v[i];
  ray_rhs(m, tmp, tcur + h, src, k4, ok);
  if (!ok) return;
  for (int i = 0; i < kStateLen; ++i)
    s.v[i] += h / 6.0 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
}

RayState ray_initial(double y1, double y2, double cth, double sth) {
  RayState s{};
  s.v[kQ] = y1;
  s.v[kQ + 1] = y2;
  s.v[kXi] = cth;
  s.v[kXi + 1] = sth;
  s.v[kJ + 0] = 1.0;
  s.v[kJ + 3] = 1.0;
  return s;
}

RayState integrate_ray(const ManifoldModel& m, double y1, double y2, double cth,
                       double sth, double t, int steps, const BoxSource* src,
                       bool& ok) {
  RayState s = ray_initial(y1, y2, cth, sth);
  ok = true;
  if (t == 0.0) return s;
  double h = t / steps;
  for (int i = 0; i < steps && ok; ++i) rk4_step(m, s, h * i, h, src, ok);
  if (ok) {
    for (int i = 0; i < kStateLen; ++i)
      if (!std::isfinite(s.v[i])) ok = false;
  }
  return s;
}

int steps_for(const EikonalOptions& opt, double t) {
  double frac = std::abs(t) / opt.t_final;
  return std::max(2, static_cast<int>(std::ceil(opt.rk_steps * frac)));
}

struct NodeFill {
  double phi, dphit, dphix1, dphix2, det, y1, y2, a0;
};

std::string format_offender(double t, double theta) {
  std::ostringstream os;
  os.precision(6);
  os << " at t=" << t << ", angle=" << theta;
  return os.str();
}

void check_axis_square_box(const GridField& f, const TableGeometry& geo) {
  require(f.rank() == 2, ErrorKind::Config, "parametrix data must be a 2-D field");
  require(f.space == grid::Space::Position, ErrorKind::Config,
          "parametrix data must be in position space");
  require(f.dims[0] == f.dims[1], ErrorKind::Config, "parametrix data grid must be square");
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double want = (i == j) ? geo.box : 0.0;
      require(std::abs(f.lattice(i, j) - want) <= 1e-9 * geo.box, ErrorKind::Config,
              "parametrix data box does not match the tabulated patch");
    }
}

}  // namespace

PhaseTable solve_eikonal(const ManifoldModel& m, double box, const EikonalOptions& opt) {
  require(m.kind() == ModelKind::PerturbedPlane, ErrorKind::Config,
          "solve_eikonal: tables are built on the perturbed plane model");
  require(box > 0.0, ErrorKind::Config, "solve_eikonal: box must be positive");
  require(opt.nt_phys >= 3, ErrorKind::Config, "solve_eikonal: need at least 3 levels");
  require(opt.nx >= 8 && opt.n_angle >= 8, ErrorKind::Config,
          "solve_eikonal: grid too coarse");
  require(opt.t_final > 0.0, ErrorKind::Config, "solve_eikonal: t_final must be positive");

  PhaseTable pt;
  pt.geo.box = box;
  pt.geo.nx = opt.nx;
  pt.geo.nt = opt.nt_phys + 2;
  pt.geo.dt = opt.t_final / (opt.nt_phys - 1);
  pt.geo.t0 = -pt.geo.dt;
  pt.geo.n_angle = opt.n_angle;
  pt.model_id = m.descriptor();

  const TableGeometry& geo = pt.geo;
  std::size_t total = geo.total();
  pt.phi.resize(total);
  pt.dphi_dt.resize(total);
  pt.dphi_dx1.resize(total);
  pt.dphi_dx2.resize(total);
  pt.ray_det.resize(total);
  pt.y1.resize(total);
  pt.y2.resize(total);
  pt.a0_ray.resize(total);

  const bool all_flat = m.eps() == 0.0;
  const double r_safe = all_flat ? 0.0 : m.bump_support_radius() + kFlatMargin;
  const int nx = geo.nx, nt = geo.nt;
  const std::size_t plane = static_cast<std::size_t>(nx) * nx;
  const int i0 = 1;  // level carrying t = 0

  std::vector<double> xs(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = geo.x_coord(i);

  std::vector<std::string> errors(static_cast<std::size_t>(geo.n_angle));

  par::parallel_for(geo.n_angle, [&](std::ptrdiff_t lp) {
    int l = static_cast<int>(lp);
    double theta = geo.angle(l);
    double cth = std::cos(theta), sth = std::sin(theta);
    std::vector<double> warm(2 * plane);

    auto fill_node = [&](int it, std::size_t node, const NodeFill& nf) {
      std::size_t idx = geo.index(l, it, static_cast<int>(node / nx),
                                  static_cast<int>(node % nx));
      pt.phi[idx] = nf.phi;
      pt.dphi_dt[idx] = nf.dphit;
      pt.dphi_dx1[idx] = nf.dphix1;
      pt.dphi_dx2[idx] = nf.dphix2;
      pt.ray_det[idx] = nf.det;
      pt.y1[idx] = nf.y1;
      pt.y2[idx] = nf.y2;
      pt.a0_ray[idx] = nf.a0;
    };

    auto level_zero = [&]() {
      for (std::size_t node = 0; node < plane; ++node) {
        double x1 = xs[node / nx], x2 = xs[node % nx];
        PhasePoint q;
        q.x = VecN(x1, x2);
        q.xi = VecN(cth, sth);
        double h = hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q);
        NodeFill nf{x1 * cth + x2 * sth, -h, cth, sth, 1.0, x1, x2, 1.0};
        fill_node(i0, node, nf);
        warm[2 * node] = x1;
        warm[2 * node + 1] = x2;
      }
    };

    auto solve_level = [&](int it) -> bool {
      double t = geo.t_level(it);
      int steps = steps_for(opt, t);
      for (std::size_t node = 0; node < plane; ++node) {
        double x1 = xs[node / nx], x2 = xs[node % nx];
        double yf1 = x1 - t * cth, yf2 = x2 - t * sth;

        bool flat = all_flat;
        if (!flat && segment_origin_distance(yf1, yf2, x1, x2) > r_safe) flat = true;
        if (flat) {
          NodeFill nf{x1 * cth + x2 * sth - t, -1.0, cth, sth, 1.0, yf1, yf2, 1.0};
          fill_node(it, node, nf);
          warm[2 * node] = yf1;
          warm[2 * node + 1] = yf2;
          continue;
        }

        double y1 = warm[2 * node], y2 = warm[2 * node + 1];
        bool done = false;
        RayState end{};
        for (int iter = 0; iter < opt.max_newton; ++iter) {
          bool ok = true;
          end = integrate_ray(m, y1, y2, cth, sth, t, steps, nullptr, ok);
          if (!ok) {
            errors[static_cast<std::size_t>(l)] =
                "ray variational data degenerated" + format_offender(t, theta);
            return false;
          }
          double r1 = end.v[kQ] - x1, r2 = end.v[kQ + 1] - x2;
          if (std::hypot(r1, r2) < opt.newton_tol) {
            done = true;
            break;
          }
          double a = end.v[kJ + 0], b = end.v[kJ + 1];
          double c = end.v[kJ + 2], d = end.v[kJ + 3];
          double det = a * d - b * c;
          if (std::abs(det) < 1e-12) {
            errors[static_cast<std::size_t>(l)] =
                "ray map not invertible" + format_offender(t, theta);
            return false;
          }
          y1 -= (d * r1 - b * r2) / det;
          y2 -= (-c * r1 + a * r2) / det;
          if (std::hypot(y1 - x1, y2 - x2) > 2.0 * std::abs(t) + 2.0) {
            errors[static_cast<std::size_t>(l)] =
                "ray inversion diverged" + format_offender(t, theta);
            return false;
          }
        }
        if (!done) {
          errors[static_cast<std::size_t>(l)] =
              "ray inversion did not converge" + format_offender(t, theta);
          return false;
        }
        double det = end.v[kJ + 0] * end.v[kJ + 3] - end.v[kJ + 1] * end.v[kJ + 2];
        if (det < opt.det_gate) {
          errors[static_cast<std::size_t>(l)] =
              "ray map determinant fell below the gate" + format_offender(t, theta);
          return false;
        }
        PhasePoint q;
        q.x = VecN(end.v[kQ], end.v[kQ + 1]);
        q.xi = VecN(end.v[kXi], end.v[kXi + 1]);
        double h = hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q);
        NodeFill nf{y1 * cth + y2 * sth,
                    -h,
                    end.v[kXi],
                    end.v[kXi + 1],
                    det,
                    y1,
                    y2,
                    std::exp(end.v[kLogA0])};
        fill_node(it, node, nf);
        warm[2 * node] = y1;
        warm[2 * node + 1] = y2;
      }
      return true;
    };

    level_zero();
    for (int it = i0 + 1; it < nt; ++it)
      if (!solve_level(it)) return;
    for (std::size_t node = 0; node < plane; ++node) {
      std::size_t src = geo.index(l, i0 + 1, static_cast<int>(node / nx),
                                  static_cast<int>(node % nx));
      warm[2 * node] = 2.0 * xs[node / nx] - pt.y1[src];
      warm[2 * node + 1] = 2.0 * xs[node % nx] - pt.y2[src];
    }
    solve_level(0);
  });

  for (int l = 0; l < geo.n_angle; ++l)
    if (!errors[static_cast<std::size_t>(l)].empty())
      fail(ErrorKind::CausticReached, "solve_eikonal: " + errors[static_cast<std::size_t>(l)]);
  return pt;
}

AmplitudeTable solve_transport(const ManifoldModel& m, const PhaseTable& pt) {
  require(m.kind() == ModelKind::PerturbedPlane, ErrorKind::Config,
          "solve_transport: tables are built on the perturbed plane model");
  require(m.descriptor() == pt.model_id, ErrorKind::Config,
          "solve_transport: phase table was built for a different model");

  const TableGeometry& geo = pt.geo;
  AmplitudeTable at;
  at.geo = geo;
  at.a0 = pt.a0_ray;
  at.am1.assign(geo.total(), cplx(0.0, 0.0));

  if (m.eps() == 0.0) {
    double worst = 0.0;
    for (double v : at.a0) worst = std::max(worst, std::abs(v - 1.0));
    for (std::size_t i = 0; i < pt.phi.size(); ++i)
      worst = std::max(worst, std::abs(pt.dphi_dt[i] + 1.0));
    require(worst <= 1e-10, ErrorKind::GateFailed,
            "solve_transport: flat-metric gate violated, the transport data should "
            "be identically trivial");
    return at;
  }

  const int nx = geo.nx, nt = geo.nt;
  const std::size_t plane = static_cast<std::size_t>(nx) * nx;
  const double hx = geo.box / nx;
  const double dt = geo.dt;
  const double r_safe = m.bump_support_radius() + kFlatMargin;
  const int i0 = 1;

  std::vector<DivCoef> dcs(plane);
  for (std::size_t node = 0; node < plane; ++node) {
    VecN x(geo.x_coord(static_cast<int>(node / nx)),
           geo.x_coord(static_cast<int>(node % nx)));
    dcs[node] = div_coef(m, x);
  }

  // ray-step policy matching solve_eikonal: the table's physical horizon is
  // dt * (nt - 3) because of the two pad levels
  EikonalOptions opt;
  opt.t_final = geo.dt * (geo.nt - 3);
  std::vector<std::string> errors(static_cast<std::size_t>(geo.n_angle));

  par::parallel_for(geo.n_angle, [&](std::ptrdiff_t lp) {
    int l = static_cast<int>(lp);
    double theta = geo.angle(l);
    double cth = std::cos(theta), sth = std::sin(theta);

    // box applied to the tabulated a0: centered second difference in t on
    // interior levels, one-sided at the two pads, centered differences with
    // periodic wrap in x.
    std::vector<double> boxa0(static_cast<std::size_t>(nt) * plane);
    auto a0_at = [&](int it, int i1, int i2) {
      return pt.a0_ray[geo.index(l, it, wrap(i1, nx), wrap(i2, nx))];
    };
    for (int it = 0; it < nt; ++it) {
      for (int i1 = 0; i1 < nx; ++i1)
        for (int i2 = 0; i2 < nx; ++i2) {
          double att;
          if (it == 0)
            att = (2.0 * a0_at(0, i1, i2) - 5.0 * a0_at(1, i1, i2) +
                   4.0 * a0_at(2, i1, i2) - a0_at(3, i1, i2)) /
                  (dt * dt);
          else if (it == nt - 1)
            att = (2.0 * a0_at(nt - 1, i1, i2) - 5.0 * a0_at(nt - 2, i1, i2) +
                   4.0 * a0_at(nt - 3, i1, i2) - a0_at(nt - 4, i1, i2)) /
                  (dt * dt);
          else
            att = (a0_at(it + 1, i1, i2) - 2.0 * a0_at(it, i1, i2) +
                   a0_at(it - 1, i1, i2)) /
                  (dt * dt);

          double ax = (a0_at(it, i1 + 1, i2) - a0_at(it, i1 - 1, i2)) / (2.0 * hx);
          double ay = (a0_at(it, i1, i2 + 1) - a0_at(it, i1, i2 - 1)) / (2.0 * hx);
          double axx = (a0_at(it, i1 + 1, i2) - 2.0 * a0_at(it, i1, i2) +
                        a0_at(it, i1 - 1, i2)) /
                       (hx * hx);
          double ayy = (a0_at(it, i1, i2 + 1) - 2.0 * a0_at(it, i1, i2) +
                        a0_at(it, i1, i2 - 1)) /
                       (hx * hx);
          double axy = (a0_at(it, i1 + 1, i2 + 1) - a0_at(it, i1 + 1, i2 - 1) -
                        a0_at(it, i1 - 1, i2 + 1) + a0_at(it, i1 - 1, i2 - 1)) /
                       (4.0 * hx * hx);
          const DivCoef& dc = dcs[static_cast<std::size_t>(i1) * nx + i2];
          double lap = -(dc.g11 * axx + 2.0 * dc.g12 * axy + dc.g22 * ayy +
                         dc.c1 * ax + dc.c2 * ay);
          boxa0[static_cast<std::size_t>(it) * plane +
                static_cast<std::size_t>(i1) * nx + i2] = att + lap;
        }
    }

    BoxSource src{&geo, &boxa0};
    for (int it = 0; it < nt; ++it) {
      if (it == i0) continue;  // a_{-1}(0) = 0
      double t = geo.t_level(it);
      int steps = steps_for(opt, t);
      for (std::size_t node = 0; node < plane; ++node) {
        std::size_t idx = geo.index(l, it, static_cast<int>(node / nx),
                                    static_cast<int>(node % nx));
        double x1 = geo.x_coord(static_cast<int>(node / nx));
        double x2 = geo.x_coord(static_cast<int>(node % nx));
        double y1 = pt.y1[idx], y2 = pt.y2[idx];
        if (segment_origin_distance(y1, y2, x1, x2) > r_safe) continue;
        bool ok = true;
        RayState end = integrate_ray(m, y1, y2, cth, sth, t, steps, &src, ok);
        if (!ok) {
          errors[static_cast<std::size_t>(l)] =
              "amplitude ray re-integration failed" + format_offender(t, theta);
          return;
        }
        at.am1[idx] = cplx(end.v[kAm1], end.v[kAm1 + 1]);
      }
    }
  });

  for (int l = 0; l < geo.n_angle; ++l)
    if (!errors[static_cast<std::size_t>(l)].empty())
      fail(ErrorKind::CausticReached,
           "solve_transport: " + errors[static_cast<std::size_t>(l)]);
  return at;
}

grid::GridField apply_parametrix(const PhaseTable& pt, const AmplitudeTable& at,
                                 const grid::GridField& f, double t, double band_lo,
                                 double band_hi, bool use_am1) {
  const TableGeometry& geo = pt.geo;
  require(at.geo.total() == geo.total() && at.geo.n_angle == geo.n_angle,
          ErrorKind::Config, "apply_parametrix: tables do not share a geometry");
  check_axis_square_box(f, geo);
  const int nd = f.dims[0];
  require(nd % geo.nx == 0, ErrorKind::Config,
          "apply_parametrix: data grid must refine the table grid");

  double level = (t - geo.t0) / geo.dt;
  int it = static_cast<int>(std::lround(level));
  require(it >= 0 && it < geo.nt && std::abs(level - it) < 1e-9 * std::max(1.0, level),
          ErrorKind::Config, "apply_parametrix: t must coincide with a tabulated level");

  const double L = geo.box;
  const double dk = kTwoPi / L;
  const double nyquist = kPi * nd / L;
  require(band_lo > 0.0 && band_hi > band_lo, ErrorKind::Config,
          "apply_parametrix: band must satisfy 0 < lo < hi");
  require(band_hi < 0.999 * nyquist, ErrorKind::BeyondCutoff,
          "apply_parametrix: band reaches the data grid Nyquist frequency");

  GridField fh = grid::to_frequency(f);

  struct Mode {
    double w[4];
    std::size_t off[4];
    int slot[4];
    double k1, k2, kmag;
    cplx fsh;
  };
  std::vector<Mode> modes;
  double max_in = 0.0, max_out = 0.0;
  const std::size_t nn = fh.size();
  for (std::size_t flat = 0; flat < nn; ++flat) {
    int m1 = static_cast<int>(flat) / nd, m2 = static_cast<int>(flat) % nd;
    int w1 = grid::signed_bin(m1, nd), w2 = grid::signed_bin(m2, nd);
    double k1 = dk * w1, k2 = dk * w2;
    double kmag = std::hypot(k1, k2);
    double mag = std::abs(fh.values[flat]);
    if (kmag < band_lo || kmag > band_hi) {
      max_out = std::max(max_out, mag);
      continue;
    }
    max_in = std::max(max_in, mag);
    if (mag == 0.0) continue;
    Mode md;
    md.k1 = k1;
    md.k2 = k2;
    md.kmag = kmag;
    double sign = ((w1 + w2) % 2 == 0) ? 1.0 : -1.0;  // e^{i k . (L/2, L/2)}
    md.fsh = sign * fh.values[flat];
    double thk = std::atan2(k2, k1);
    if (thk < 0.0) thk += kTwoPi;
    double slot = thk / (kTwoPi / geo.n_angle);
    int base = static_cast<int>(std::floor(slot));
    double u = slot - base;
    if (base >= geo.n_angle) {
      base = 0;
      u = 0.0;
    }
    catmull_weights(u, md.w);
    for (int j = 0; j < 4; ++j) {
      int lj = wrap(base - 1 + j, geo.n_angle);
      md.slot[j] = lj;
      md.off[j] = geo.index(lj, it, 0, 0);
    }
    modes.push_back(md);
  }
  require(max_out <= 1e-12 * std::max(max_in, 1e-300), ErrorKind::BeyondCutoff,
          "apply_parametrix: data carries content outside the stated band");

  const int nx = geo.nx;
  const std::size_t plane = static_cast<std::size_t>(nx) * nx;
  std::vector<double> dot_table(static_cast<std::size_t>(geo.n_angle) * plane);
  std::vector<double> xs(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = geo.x_coord(i);
  for (int l = 0; l < geo.n_angle; ++l) {
    double th = geo.angle(l);
    double c = std::cos(th), s = std::sin(th);
    double* row = dot_table.data() + static_cast<std::size_t>(l) * plane;
    for (std::size_t node = 0; node < plane; ++node)
      row[node] = xs[node / nx] * c + xs[node % nx] * s;
  }

  GridField out = grid::make_box_field({nx, nx}, {L, L});
  const double norm = 1.0 / (static_cast<double>(nd) * nd);
  const double* phi = pt.phi.data();
  const double* a0 = at.a0.data();
  const cplx* am1 = at.am1.data();

  par::parallel_for(static_cast<std::ptrdiff_t>(plane), [&](std::ptrdiff_t nodep) {
    std::size_t node = static_cast<std::size_t>(nodep);
    double x1 = xs[node / nx], x2 = xs[node % nx];
    cplx acc(0.0, 0.0);
    for (const Mode& md : modes) {
      double psi = 0.0, a0i = 0.0;
      cplx am1i(0.0, 0.0);
      for (int j = 0; j < 4; ++j) {
        std::size_t idx = md.off[j] + node;
        std::size_t doff = static_cast<std::size_t>(md.slot[j]) * plane + node;
        double w = md.w[j];
        psi += w * (phi[idx] - dot_table[doff] + t);
        a0i += w * a0[idx];
        if (use_am1) am1i += w * am1[idx];
      }
      double phase = md.kmag * psi + (md.k1 * x1 + md.k2 * x2) - md.kmag * t;
      cplx amp = use_am1 ? cplx(a0i, 0.0) + am1i / md.kmag : cplx(a0i, 0.0);
      acc += md.fsh * amp * cplx(std::cos(phase), std::sin(phase));
    }
    out.values[node] = norm * acc;
  });
  return out;
}

grid::GridField band_data(int n_per_axis, double box, double lambda, unsigned seed) {
  require(n_per_axis >= 8, ErrorKind::Config, "band_data: grid too small");
  require(box > 0.0 && lambda > 0.0, ErrorKind::Config,
          "band_data: box and lambda must be positive");
  GridField f = grid::make_box_field({n_per_axis, n_per_axis}, {box, box});
  f.space = grid::Space::Frequency;
  const double dk = kTwoPi / box;
  const int nd = n_per_axis;
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    int m1 = static_cast<int>(flat) / nd, m2 = static_cast<int>(flat) % nd;
    int w1 = grid::signed_bin(m1, nd), w2 = grid::signed_bin(m2, nd);
    double kmag = dk * std::hypot(static_cast<double>(w1), static_cast<double>(w2));
    double env = smoothing::bump_profile((kmag / lambda - 1.6) / 0.8);
    if (env == 0.0) continue;
    std::uint64_t h = 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(seed + 1);
    h ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(w1) + (1 << 20));
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(w2) + (1 << 20));
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    double phase = kTwoPi * (static_cast<double>(h >> 11) * 0x1.0p-53);
    f.values[flat] = env * cplx(std::cos(phase), std::sin(phase));
  }
  f = grid::to_position(f);
  double nrm = grid::l2_norm(f);
  require(nrm > 0.0, ErrorKind::Degenerate, "band_data: band contains no lattice modes");
  for (cplx& v : f.values) v /= nrm;
  return f;
}

grid::GridField reference_halfwave(const ManifoldModel& m, const grid::GridField& f,
                                   double t, double band_lo, double band_hi, double dt) {
  require(m.kind() == ModelKind::PerturbedPlane, ErrorKind::Config,
          "reference_halfwave: needs the perturbed plane model");
  require(f.rank() == 2 && f.dims[0] == f.dims[1], ErrorKind::Config,
          "reference_halfwave: data must be a square 2-D field");
  require(f.space == grid::Space::Position, ErrorKind::Config,
          "reference_halfwave: data must be in position space");
  require(dt > 0.0, ErrorKind::Config, "reference_halfwave: dt must be positive");
  require(band_lo > 0.0 && band_hi > band_lo, ErrorKind::Config,
          "reference_halfwave: band must satisfy 0 < lo < hi");

  const int nd = f.dims[0];
  const double L = f.lattice(0, 0);
  const std::size_t nn = f.size();
  const double dk = kTwoPi / L;

  // sqrt(g) g^{ij} and 1/sqrt(g) on the shifted patch, plus the spectral
  // interval of the symbol over the band for the square-root approximation
  std::vector<double> c11(nn), c12(nn), c22(nn), isq(nn);
  double gmin = std::numeric_limits<double>::max(), gmax = 0.0;
  for (std::size_t flat = 0; flat < nn; ++flat) {
    int i1 = static_cast<int>(flat) / nd, i2 = static_cast<int>(flat) % nd;
    VecN x(L * i1 / nd - 0.5 * L, L * i2 / nd - 0.5 * L);
    MetricData md = m.metric_at(x, 0);
    c11[flat] = md.sqrtdet * md.ginv(0, 0);
    c12[flat] = md.sqrtdet * md.ginv(0, 1);
    c22[flat] = md.sqrtdet * md.ginv(1, 1);
    isq[flat] = 1.0 / md.sqrtdet;
    double tr = md.ginv(0, 0) + md.ginv(1, 1);
    double dd = std::sqrt(std::max(0.0, tr * tr - 4.0 * (md.ginv(0, 0) * md.ginv(1, 1) -
                                                         md.ginv(0, 1) * md.ginv(1, 0))));
    gmin = std::min(gmin, 0.5 * (tr - dd));
    gmax = std::max(gmax, 0.5 * (tr + dd));
  }

  fft::Fft plan({nd, nd});
  std::vector<double> k1(nn), k2(nn);
  for (std::size_t flat = 0; flat < nn; ++flat) {
    k1[flat] = dk * grid::signed_bin(static_cast<int>(flat) / nd, nd);
    k2[flat] = dk * grid::signed_bin(static_cast<int>(flat) % nd, nd);
  }

  using Buf = std::vector<cplx>;
  auto lap = [&](const Buf& in, Buf& out, Buf& t1, Buf& t2, Buf& t3) {
    t1 = in;
    plan.forward(t1.data());
    for (std::size_t i = 0; i < nn; ++i) {
      t2[i] = cplx(0.0, k1[i]) * t1[i];
      t3[i] = cplx(0.0, k2[i]) * t1[i];
    }
    plan.backward(t2.data());
    plan.backward(t3.data());
    double inv = 1.0 / static_cast<double>(nn);
    for (std::size_t i = 0; i < nn; ++i) {
      cplx d1 = inv * t2[i], d2 = inv * t3[i];
      cplx w1 = c11[i] * d1 + c12[i] * d2;
      cplx w2 = c12[i] * d1 + c22[i] * d2;
      t2[i] = w1;
      t3[i] = w2;
    }
    plan.forward(t2.data());
    plan.forward(t3.data());
    for (std::size_t i = 0; i < nn; ++i)
      t1[i] = cplx(0.0, k1[i]) * t2[i] + cplx(0.0, k2[i]) * t3[i];
    plan.backward(t1.data());
    for (std::size_t i = 0; i < nn; ++i) out[i] = -isq[i] * inv * t1[i];
  };

  Buf b1(nn), b2(nn), b3(nn), b4(nn), b5(nn);

  // Chebyshev expansion of sqrt on the symbol interval of the band
  const double alpha = 0.8 * gmin * band_lo * band_lo;
  const double beta = 1.25 * gmax * band_hi * band_hi;
  const int deg = 48, samples = 512;
  std::vector<double> coef(static_cast<std::size_t>(deg) + 1, 0.0);
  for (int j = 0; j < samples; ++j) {
    double thj = kPi * (j + 0.5) / samples;
    double mu = 0.5 * (beta + alpha) + 0.5 * (beta - alpha) * std::cos(thj);
    double val = std::sqrt(mu);
    for (int k = 0; k <= deg; ++k)
      coef[static_cast<std::size_t>(k)] += 2.0 / samples * val * std::cos(k * thj);
  }

  auto op_normalized = [&](const Buf& in, Buf& out) {
    lap(in, out, b1, b2, b3);
    double sc = 2.0 / (beta - alpha), sh = (beta + alpha) / (beta - alpha);
    for (std::size_t i = 0; i < nn; ++i) out[i] = sc * out[i] - sh * in[i];
  };

  auto sqrt_op = [&](const Buf& in, Buf& out, Buf& p1, Buf& p2, Buf& p3) {
    p1.assign(nn, cplx(0.0, 0.0));  // b_{k+1}
    p2.assign(nn, cplx(0.0, 0.0));  // b_{k+2}
    for (int k = deg; k >= 1; --k) {
      op_normalized(p1, p3);
      for (std::size_t i = 0; i < nn; ++i)
        p3[i] = coef[static_cast<std::size_t>(k)] * in[i] + 2.0 * p3[i] - p2[i];
      std::swap(p2, p1);
      std::swap(p1, p3);
    }
    op_normalized(p1, p3);
    for (std::size_t i = 0; i < nn; ++i)
      out[i] = 0.5 * coef[0] * in[i] + p3[i] - p2[i];
  };

  Buf u(nn), v(nn), w1(nn), w2(nn), w3(nn);
  u = f.values;

  // validation: applying the square root twice must reproduce the operator
  sqrt_op(u, v, w1, w2, w3);
  sqrt_op(v, b4, w1, w2, w3);
  lap(u, b5, b1, b2, b3);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < nn; ++i) {
    num += std::norm(b4[i] - b5[i]);
    den += std::norm(b5[i]);
  }
  require(den > 0.0, ErrorKind::Degenerate, "reference_halfwave: data is zero");
  require(std::sqrt(num / den) < 1e-6, ErrorKind::GateFailed,
          "reference_halfwave: square-root operator failed its self-test on this band");

  for (std::size_t i = 0; i < nn; ++i) v[i] = cplx(0.0, -1.0) * v[i];

  int steps = std::max(1, static_cast<int>(std::lround(std::abs(t) / dt)));
  double h = t / steps;
  Buf ku1(nn), kv1(nn), ku2(nn), kv2(nn), ku3(nn), kv3(nn), ku4(nn), kv4(nn), tu(nn),
      tv(nn);
  for (int sstep = 0; sstep < steps; ++sstep) {
    lap(u, kv1, b1, b2, b3);
    for (std::size_t i = 0; i < nn; ++i) {
      ku1[i] = v[i];
      kv1[i] = -kv1[i];
      tu[i] = u[i] + 0.5 * h * ku1[i];
      tv[i] = v[i] + 0.5 * h * kv1[i];
    }
    lap(tu, kv2, b1, b2, b3);
    for (std::size_t i = 0; i < nn; ++i) {
      ku2[i] = tv[i];
      kv2[i] = -kv2[i];
      tu[i] = u[i] + 0.5 * h * ku2[i];
      tv[i] = v[i] + 0.5 * h * kv2[i];
    }
    lap(tu, kv3, b1, b2, b3);
    for (std::size_t i = 0; i < nn; ++i) {
      ku3[i] = tv[i];
      kv3[i] = -kv3[i];
      tu[i] = u[i] + h * ku3[i];
      tv[i] = v[i] + h * kv3[i];
    }
    lap(tu, kv4, b1, b2, b3);
    for (std::size_t i = 0; i < nn; ++i) {
      ku4[i] = tv[i];
      kv4[i] = -kv4[i];
      u[i] += h / 6.0 * (ku1[i] + 2.0 * ku2[i] + 2.0 * ku3[i] + ku4[i]);
      v[i] += h / 6.0 * (kv1[i] + 2.0 * kv2[i] + 2.0 * kv3[i] + kv4[i]);
    }
  }

  GridField out = f;
  out.values = std::move(u);
  return out;
}

RayEnd trace_ray(const ManifoldModel& m, const VecN& y, double theta, double t,
                 int steps) {
  require(steps >= 1, ErrorKind::Config, "trace_ray: steps must be positive");
  double cth = std::cos(theta), sth = std::sin(theta);
  PhasePoint q0;
  q0.x = y;
  q0.xi = VecN(cth, sth);
  double h0 = hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q0);
  bool ok = true;
  RayState s = integrate_ray(m, y[0], y[1], cth, sth, t, steps, nullptr, ok);
  require(ok, ErrorKind::CausticReached,
          "trace_ray: variational data degenerated" + format_offender(t, theta));
  RayEnd e;
  e.x = VecN(s.v[kQ], s.v[kQ + 1]);
  e.xi = VecN(s.v[kXi], s.v[kXi + 1]);
  PhasePoint q1;
  q1.x = e.x;
  q1.xi = e.xi;
  e.h_drift = std::abs(hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q1) - h0);
  e.det = s.v[kJ + 0] * s.v[kJ + 3] - s.v[kJ + 1] * s.v[kJ + 2];
  return e;
}

double transport_ray_residual(const ManifoldModel& m, const PhaseTable& pt,
                              int node_stride, int substeps) {
  require(node_stride >= 1 && substeps >= 8, ErrorKind::Config,
          "transport_ray_residual: bad sampling parameters");
  const TableGeometry& geo = pt.geo;
  const int it = geo.nt - 2;  // the t_final level: the longest physical rays
  const double t = geo.t_level(it);
  std::vector<double> sups(static_cast<std::size_t>(geo.n_angle), 0.0);
  std::vector<std::string> errors(static_cast<std::size_t>(geo.n_angle));

  par::parallel_for(geo.n_angle, [&](std::ptrdiff_t lp) {
    int l = static_cast<int>(lp);
    double theta = geo.angle(l);
    double cth = std::cos(theta), sth = std::sin(theta);
    double tau = t / substeps;
    std::vector<double> a0s(static_cast<std::size_t>(substeps) + 1);
    std::vector<double> box_phi(static_cast<std::size_t>(substeps) + 1);
    std::vector<double> hs(static_cast<std::size_t>(substeps) + 1);
    for (int i1 = 0; i1 < geo.nx; i1 += node_stride)
      for (int i2 = 0; i2 < geo.nx; i2 += node_stride) {
        std::size_t idx = geo.index(l, it, i1, i2);
        RayState s = ray_initial(pt.y1[idx], pt.y2[idx], cth, sth);
        bool ok = true;
        for (int j = 0; j <= substeps; ++j) {
          RayState ds;
          ray_rhs(m, s, tau * j, nullptr, ds, ok);
          if (!ok) break;
          a0s[static_cast<std::size_t>(j)] = std::exp(s.v[kLogA0]);
          PhasePoint q;
          q.x = VecN(s.v[kQ], s.v[kQ + 1]);
          q.xi = VecN(s.v[kXi], s.v[kXi + 1]);
          double h = hamflow::hamiltonian_value(m, Hamiltonian::HalfWave, q);
          hs[static_cast<std::size_t>(j)] = h;
          box_phi[static_cast<std::size_t>(j)] = 2.0 * h * ds.v[kLogA0];
          if (j < substeps) rk4_step(m, s, tau * j, tau, nullptr, ok);
          if (!ok) break;
        }
        if (!ok) {
          errors[static_cast<std::size_t>(l)] =
              "ray re-integration failed" + format_offender(t, theta);
          return;
        }
        for (int j = 1; j < substeps; ++j) {
          double da = (a0s[static_cast<std::size_t>(j) + 1] -
                       a0s[static_cast<std::size_t>(j) - 1]) /
                      (2.0 * tau);
          double res = std::abs(-2.0 * hs[static_cast<std::size_t>(j)] * da +
                                box_phi[static_cast<std::size_t>(j)] *
                                    a0s[static_cast<std::size_t>(j)]);
          sups[static_cast<std::size_t>(l)] =
              std::max(sups[static_cast<std::size_t>(l)], res);
        }
      }
  });

  for (int l = 0; l < geo.n_angle; ++l)
    if (!errors[static_cast<std::size_t>(l)].empty())
      fail(ErrorKind::CausticReached,
           "transport_ray_residual: " + errors[static_cast<std::size_t>(l)]);
  double sup = 0.0;
  for (double v : sups) sup = std::max(sup, v);
  return sup;
}

ResidualReport residual_check(const ManifoldModel& m, const PhaseTable& pt,
                              const AmplitudeTable& at, int fd_order) {
  require(fd_order == 2 || fd_order == 4, ErrorKind::Config,
          "residual_check: fd_order must be 2 or 4");
  require(at.geo.total() == pt.geo.total(), ErrorKind::Config,
          "residual_check: tables do not share a geometry");
  const TableGeometry& geo = pt.geo;
  require(geo.nt >= 7, ErrorKind::Config,
          "residual_check: too few time levels for interior stencils");

  const int nx = geo.nx, nt = geo.nt;
  const std::size_t plane = static_cast<std::size_t>(nx) * nx;
  const double hx = geo.box / nx;
  const double dt = geo.dt;

  std::vector<DivCoef> dcs(plane);
  for (std::size_t node = 0; node < plane; ++node) {
    VecN x(geo.x_coord(static_cast<int>(node / nx)),
           geo.x_coord(static_cast<int>(node % nx)));
    dcs[node] = div_coef(m, x);
  }

  std::vector<std::array<double, 3>> sups(static_cast<std::size_t>(geo.n_angle),
                                          {0.0, 0.0, 0.0});

  par::parallel_for(geo.n_angle, [&](std::ptrdiff_t lp) {
    int l = static_cast<int>(lp);
    double theta = geo.angle(l);
    double cth = std::cos(theta), sth = std::sin(theta);

    // psi = phi - (x.eta - t) is periodic in x up to the bump's far tail, so
    // off-grid stencil points read the wrapped node's value
    auto psi = [&](int jt, int j1, int j2) {
      int w1 = wrap(j1, nx), w2 = wrap(j2, nx);
      std::size_t idx = geo.index(l, jt, w1, w2);
      double x1 = geo.x_coord(w1), x2 = geo.x_coord(w2);
      return pt.phi[idx] - (x1 * cth + x2 * sth - geo.t_level(jt));
    };
    auto a0f = [&](int jt, int j1, int j2) {
      return at.a0[geo.index(l, jt, wrap(j1, nx), wrap(j2, nx))];
    };
    auto am1f = [&](int jt, int j1, int j2) {
      return at.am1[geo.index(l, jt, wrap(j1, nx), wrap(j2, nx))];
    };

    auto d1 = [&](auto&& g, double h) {
      if (fd_order == 2) return (g(1) - g(-1)) / (2.0 * h);
      return (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * h);
    };
    auto d2 = [&](auto&& g, double h) {
      if (fd_order == 2) return (g(1) - 2.0 * g(0) + g(-1)) / (h * h);
      return (-g(2) + 16.0 * g(1) - 30.0 * g(0) + 16.0 * g(-1) - g(-2)) /
             (12.0 * h * h);
    };

    for (int jt = 2; jt <= nt - 3; ++jt)
      for (int j1 = 0; j1 < nx; ++j1)
        for (int j2 = 0; j2 < nx; ++j2) {
          const DivCoef& dc = dcs[static_cast<std::size_t>(j1) * nx + j2];

          auto psi_t = [&](int o) { return psi(jt + o, j1, j2); };
          auto psi_x = [&](int o) { return psi(jt, j1 + o, j2); };
          auto psi_y = [&](int o) { return psi(jt, j1, j2 + o); };
          double pt_fd = d1(psi_t, dt) - 1.0;
          double px = d1(psi_x, hx) + cth;
          double py = d1(psi_y, hx) + sth;
          double eik = std::abs(pt_fd * pt_fd - (dc.g11 * px * px +
                                                 2.0 * dc.g12 * px * py +
                                                 dc.g22 * py * py));

          double ptt = d2(psi_t, dt);
          double pxx = d2(psi_x, hx);
          double pyy = d2(psi_y, hx);
          double pxy;
          if (fd_order == 2) {
            pxy = (psi(jt, j1 + 1, j2 + 1) - psi(jt, j1 + 1, j2 - 1) -
                   psi(jt, j1 - 1, j2 + 1) + psi(jt, j1 - 1, j2 - 1)) /
                  (4.0 * hx * hx);
          } else {
            static const double wd[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
            double acc = 0.0;
            for (int a = 0; a < 5; ++a) {
              if (wd[a] == 0.0) continue;
              for (int b = 0; b < 5; ++b) {
                if (wd[b] == 0.0) continue;
                acc += wd[a] * wd[b] * psi(jt, j1 + a - 2, j2 + b - 2);
              }
            }
            pxy = acc / (144.0 * hx * hx);
          }
          double lap_phi = -(dc.g11 * pxx + 2.0 * dc.g12 * pxy + dc.g22 * pyy +
                             dc.c1 * px + dc.c2 * py);
          double box_phi = ptt + lap_phi;

          auto a_t = [&](int o) { return a0f(jt + o, j1, j2); };
          auto a_x = [&](int o) { return a0f(jt, j1 + o, j2); };
          auto a_y = [&](int o) { return a0f(jt, j1, j2 + o); };
          double at_fd = d1(a_t, dt);
          double ax = d1(a_x, hx);
          double ay = d1(a_y, hx);
          double t0 = std::abs(2.0 * pt_fd * at_fd -
                               2.0 * (dc.g11 * px * ax + dc.g12 * (px * ay + py * ax) +
                                      dc.g22 * py * ay) +
                               box_phi * a0f(jt, j1, j2));

          double att = d2(a_t, dt);
          double axx = d2(a_x, hx);
          double ayy = d2(a_y, hx);
          double axy;
          if (fd_order == 2) {
            axy = (a0f(jt, j1 + 1, j2 + 1) - a0f(jt, j1 + 1, j2 - 1) -
                   a0f(jt, j1 - 1, j2 + 1) + a0f(jt, j1 - 1, j2 - 1)) /
                  (4.0 * hx * hx);
          } else {
            static const double wd[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
            double acc = 0.0;
            for (int a = 0; a < 5; ++a) {
              if (wd[a] == 0.0) continue;
              for (int b = 0; b < 5; ++b) {
                if (wd[b] == 0.0) continue;
                acc += wd[a] * wd[b] * a0f(jt, j1 + a - 2, j2 + b - 2);
              }
            }
            axy = acc / (144.0 * hx * hx);
          }
          double box_a0 = att - (dc.g11 * axx + 2.0 * dc.g12 * axy + dc.g22 * ayy +
                                 dc.c1 * ax + dc.c2 * ay);

          auto b_t = [&](int o) { return am1f(jt + o, j1, j2); };
          auto b_x = [&](int o) { return am1f(jt, j1 + o, j2); };
          auto b_y = [&](int o) { return am1f(jt, j1, j2 + o); };
          cplx bt_fd, bx, by;
          if (fd_order == 2) {
            bt_fd = (b_t(1) - b_t(-1)) / (2.0 * dt);
            bx = (b_x(1) - b_x(-1)) / (2.0 * hx);
            by = (b_y(1) - b_y(-1)) / (2.0 * hx);
          } else {
            bt_fd = (-b_t(2) + 8.0 * b_t(1) - 8.0 * b_t(-1) + b_t(-2)) / (12.0 * dt);
            bx = (-b_x(2) + 8.0 * b_x(1) - 8.0 * b_x(-1) + b_x(-2)) / (12.0 * hx);
            by = (-b_y(2) + 8.0 * b_y(1) - 8.0 * b_y(-1) + b_y(-2)) / (12.0 * hx);
          }
          cplx t1 = 2.0 * pt_fd * bt_fd -
                    2.0 * (dc.g11 * px * bx + dc.g12 * (px * by + py * bx) +
                           dc.g22 * py * by) +
                    box_phi * am1f(jt, j1, j2) - cplx(0.0, 1.0) * box_a0;

          auto& sup = sups[static_cast<std::size_t>(l)];
          sup[0] = std::max(sup[0], eik);
          sup[1] = std::max(sup[1], t0);
          sup[2] = std::max(sup[2], std::abs(t1));
        }
  });

  ResidualReport rep;
  for (const auto& s : sups) {
    rep.eikonal_sup = std::max(rep.eikonal_sup, s[0]);
    rep.transport0_sup = std::max(rep.transport0_sup, s[1]);
    rep.transport1_sup = std::max(rep.transport1_sup, s[2]);
  }
  return rep;
}

void write_phase_cache(const std::string& path, const PhaseTable& pt) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "write_phase_cache: cannot open " + path);
  nlohmann::json desc;
  desc["arrays"] = {"phi", "dphi_dt", "dphi_dx1", "dphi_dx2",
                    "ray_det", "y1", "y2", "a0_ray"};
  desc["box"] = pt.geo.box;
  desc["nx"] = pt.geo.nx;
  desc["nt"] = pt.geo.nt;
  desc["dt"] = pt.geo.dt;
  desc["t0"] = pt.geo.t0;
  desc["n_angle"] = pt.geo.n_angle;
  desc["count"] = pt.geo.total();
  desc["model_id"] = pt.model_id;
  out << "WEYLSCOPE-PHASE v1\n" << desc.dump() << "\n";
  auto dump = [&](const std::vector<double>& a) {
    out.write(reinterpret_cast<const char*>(a.data()),
              static_cast<std::streamsize>(a.size() * sizeof(double)));
  };
  dump(pt.phi);
  dump(pt.dphi_dt);
  dump(pt.dphi_dx1);
  dump(pt.dphi_dx2);
  dump(pt.ray_det);
  dump(pt.y1);
  dump(pt.y2);
  dump(pt.a0_ray);
  require(out.good(), ErrorKind::Io, "write_phase_cache: write failed for " + path);
}

PhaseTable read_phase_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "read_phase_cache: cannot open " + path);
  std::string magic, desc_line;
  std::getline(in, magic);
  require(magic == "WEYLSCOPE-PHASE v1", ErrorKind::Io,
          "read_phase_cache: not a phase cache file");
  std::getline(in, desc_line);
  nlohmann::json desc = nlohmann::json::parse(desc_line, nullptr, false);
  require(!desc.is_discarded(), ErrorKind::Io, "read_phase_cache: bad descriptor line");

  PhaseTable pt;
  try {
    pt.geo.box = desc.at("box").get<double>();
    pt.geo.nx = desc.at("nx").get<int>();
    pt.geo.nt = desc.at("nt").get<int>();
    pt.geo.dt = desc.at("dt").get<double>();
    pt.geo.t0 = desc.at("t0").get<double>();
    pt.geo.n_angle = desc.at("n_angle").get<int>();
    pt.model_id = desc.at("model_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("read_phase_cache: descriptor field error: ") + e.what());
  }
  require(pt.geo.nx > 0 && pt.geo.nt > 0 && pt.geo.n_angle > 0 && pt.geo.box > 0.0 &&
              pt.geo.dt > 0.0,
          ErrorKind::Io, "read_phase_cache: descriptor carries an unusable geometry");
  std::size_t total = pt.geo.total();
  require(desc.value("count", std::size_t{0}) == total, ErrorKind::Io,
          "read_phase_cache: element count does not match the geometry");

  auto load = [&](std::vector<double>& a) {
    a.resize(total);
    in.read(reinterpret_cast<char*>(a.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(total * sizeof(double)),
            ErrorKind::Io, "read_phase_cache: truncated table data");
  };
  load(pt.phi);
  load(pt.dphi_dt);
  load(pt.dphi_dx1);
  load(pt.dphi_dx2);
  load(pt.ray_det);
  load(pt.y1);
  load(pt.y2);
  load(pt.a0_ray);
  return pt;
}

}  // namespace weylscope::parametrix
