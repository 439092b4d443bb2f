#include "weylscope/hamflow.hpp"

#include <algorithm>
#include <cmath>

using weylscope::geometry::MetricData;
using weylscope::geometry::ModelKind;

namespace weylscope::hamflow {

namespace {

void field_quadratic(const MetricData& md, const VecN& xi, VecN& dx, VecN& dxi) {
  dx = 2.0 * matvec(md.ginv, xi);
  dxi = VecN(md.n);
  for (int k = 0; k < md.n; ++k)
    dxi[k] = -dot(xi, matvec(md.dginv[static_cast<size_t>(k)], xi));
}

}  // namespace

double hamiltonian_value(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q) {
  const double hq = m.cosymbol(q.x, q.xi);
  return h == Hamiltonian::Quadratic ? hq : std::sqrt(hq);
}

PhasePoint hamilton_field(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q) {
  const MetricData md = m.metric_at(q.x);
  PhasePoint f;
  field_quadratic(md, q.xi, f.x, f.xi);
  if (h == Hamiltonian::HalfWave) {
    const double hv = std::sqrt(dot(q.xi, matvec(md.ginv, q.xi)));
    require(hv > 0.0, ErrorKind::Degenerate, "half-wave field needs xi != 0");
    f.x = (0.5 / hv) * f.x;
    f.xi = (0.5 / hv) * f.xi;
  }
  return f;
}

void hamilton_field_jacobian(const ManifoldModel& m, Hamiltonian h, const PhasePoint& q,
                             std::array<std::array<double, 8>, 8>& jac) {
  const int n = m.dim();
  const MetricData md = m.metric_at(q.x, 2);
  for (auto& row : jac) row.fill(0.0);

  // Quadratic Hamiltonian H = xi^T G xi, field (2 G xi, -(xi dG xi)).
  VecN fx, fxi;
  field_quadratic(md, q.xi, fx, fxi);
  std::array<std::array<double, 8>, 8> jq{};
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      jq[static_cast<size_t>(i)][static_cast<size_t>(l)] =
          2.0 * matvec(md.dginv[static_cast<size_t>(l)], q.xi)[i];
      jq[static_cast<size_t>(i)][static_cast<size_t>(n + l)] = 2.0 * md.ginv(i, l);
      jq[static_cast<size_t>(n + i)][static_cast<size_t>(l)] =
          -dot(q.xi,
               matvec(md.d2ginv[static_cast<size_t>(i)][static_cast<size_t>(l)], q.xi));
      jq[static_cast<size_t>(n + i)][static_cast<size_t>(n + l)] =
          -2.0 * matvec(md.dginv[static_cast<size_t>(i)], q.xi)[l];
    }
  }
  if (h == Hamiltonian::Quadratic) {
    jac = jq;
    return;
  }

  // Half wave: F = F_quad / (2 h), so
  // dF = dF_quad / (2h) - F_quad (grad h)^T / (2 h^2) with
  // grad_x h = -F_quad,xi / (2h), grad_xi h = F_quad,x / (2h).
  const double hv = std::sqrt(dot(q.xi, matvec(md.ginv, q.xi)));
  require(hv > 0.0, ErrorKind::Degenerate, "half-wave jacobian needs xi != 0");
  std::array<double, 8> fq{}, gradh{};
  for (int i = 0; i < n; ++i) {
    fq[static_cast<size_t>(i)] = fx[i];
    fq[static_cast<size_t>(n + i)] = fxi[i];
    gradh[static_cast<size_t>(i)] = -fxi[i] / (2.0 * hv);
    gradh[static_cast<size_t>(n + i)] = fx[i] / (2.0 * hv);
  }
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j)
      jac[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          jq[static_cast<size_t>(i)][static_cast<size_t>(j)] / (2.0 * hv) -
          fq[static_cast<size_t>(i)] * gradh[static_cast<size_t>(j)] / (2.0 * hv * hv);
}

double poisson_bracket(const Symbol& f, const Symbol& g, const PhasePoint& q, double step) {
  require(step > 0.0, ErrorKind::Config, "bracket step must be positive");
  const int n = q.x.n;
  auto partial = [&](const Symbol& s, bool wrt_xi, int j) {
    auto eval = [&](double d) {
      PhasePoint p = q;
      if (wrt_xi)
        p.xi[j] += d;
      else
        p.x[j] += d;
      return s(p.x, p.xi);
    };
    const double base = wrt_xi ? q.xi[j] : q.x[j];
    const double h1 = step * (1.0 + std::abs(base));
    const double d1 = (eval(h1) - eval(-h1)) / (2.0 * h1);
    const double d2 = (eval(0.5 * h1) - eval(-0.5 * h1)) / h1;
    return (4.0 * d2 - d1) / 3.0;
  };
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    sum += partial(f, true, j) * partial(g, false, j) - partial(f, false, j) * partial(g, true, j);
  return sum;
}

namespace {

constexpr int kMaxState = 24;
using State = std::array<double, kMaxState>;

struct Rot3 {
  // Columns are the images of e1, e2, e3.
  std::array<std::array<double, 3>, 3> c{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::array<double, 3> apply(const std::array<double, 3>& v) const {
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i)
      r[static_cast<size_t>(i)] = c[0][static_cast<size_t>(i)] * v[0] +
                                  c[1][static_cast<size_t>(i)] * v[1] +
                                  c[2][static_cast<size_t>(i)] * v[2];
    return r;
  }
  std::array<double, 3> apply_inv(const std::array<double, 3>& v) const {
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i)
      r[static_cast<size_t>(i)] = c[static_cast<size_t>(i)][0] * v[0] +
                                  c[static_cast<size_t>(i)][1] * v[1] +
                                  c[static_cast<size_t>(i)][2] * v[2];
    return r;
  }
};

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm3(const std::array<double, 3>& a) {
  return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

// Chart coordinates (th, ph, xith, xiph) in rotation R -> ambient position
// (unit sphere) and momentum vector (Euclidean pairing representation).
void sphere_to_ambient(double radius, const Rot3& R, const double* y, std::array<double, 3>& P,
                       std::array<double, 3>& W) {
  const double th = y[0], ph = y[1], xith = y[2], xiph = y[3];
  const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
  P = R.apply({st * cp, st * sp, ct});
  const auto Eth = R.apply({ct * cp * radius, ct * sp * radius, -st * radius});
  const auto Eph = R.apply({-st * sp * radius, st * cp * radius, 0.0});
  const double r2 = radius * radius;
  const double gthth = 1.0 / r2, gphph = 1.0 / (r2 * st * st);
  for (int i = 0; i < 3; ++i)
    W[static_cast<size_t>(i)] = xith * gthth * Eth[static_cast<size_t>(i)] +
                                xiph * gphph * Eph[static_cast<size_t>(i)];
}

void sphere_from_ambient(double radius, const Rot3& R, const std::array<double, 3>& P,
                         const std::array<double, 3>& W, double* y) {
  const auto s = R.apply_inv(P);
  const double th = std::acos(std::clamp(s[2], -1.0, 1.0));
  const double ph = std::atan2(s[1], s[0]);
  const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
  const auto Eth = R.apply({ct * cp * radius, ct * sp * radius, -st * radius});
  const auto Eph = R.apply({-st * sp * radius, st * cp * radius, 0.0});
  y[0] = th;
  y[1] = ph;
  y[2] = W[0] * Eth[0] + W[1] * Eth[1] + W[2] * Eth[2];
  y[3] = W[0] * Eph[0] + W[1] * Eph[1] + W[2] * Eph[2];
}

// New rotation placing (P, W) at the equator point (pi/2, 0) with the
// momentum along +phi.
Rot3 recenter_rotation(const std::array<double, 3>& P, const std::array<double, 3>& W) {
  Rot3 R;
  std::array<double, 3> u1 = P;
  const double np = norm3(u1);
  for (auto& v : u1) v /= np;
  std::array<double, 3> u2 = W;
  const double dw = u2[0] * u1[0] + u2[1] * u1[1] + u2[2] * u1[2];
  for (int i = 0; i < 3; ++i) u2[static_cast<size_t>(i)] -= dw * u1[static_cast<size_t>(i)];
  double nw = norm3(u2);
  if (nw < 1e-14) {
    // Momentum degenerate: any completion works.
    u2 = std::abs(u1[0]) < 0.9 ? std::array<double, 3>{1, 0, 0} : std::array<double, 3>{0, 1, 0};
    const double d = u2[0] * u1[0] + u2[1] * u1[1] + u2[2] * u1[2];
    for (int i = 0; i < 3; ++i) u2[static_cast<size_t>(i)] -= d * u1[static_cast<size_t>(i)];
    nw = norm3(u2);
  }
  for (auto& v : u2) v /= nw;
  const auto u3 = cross(u1, u2);
  for (int i = 0; i < 3; ++i) {
    R.c[0][static_cast<size_t>(i)] = u1[static_cast<size_t>(i)];
    R.c[1][static_cast<size_t>(i)] = u2[static_cast<size_t>(i)];
    R.c[2][static_cast<size_t>(i)] = u3[static_cast<size_t>(i)];
  }
  return R;
}

constexpr double kPoleMargin = 0.1;

struct AdaptiveDriver {
  std::function<void(const State&, State&)> rhs;
  int dim = 4;
  FlowOptions opt;
  std::function<double(const State&)> hcap;             // optional extra step cap
  std::function<void(double, State&)> on_accept;        // sampling / recentering
  long steps = 0, rejects = 0;

  void rk4(const State& y, double h, State& out) const {
    State k1{}, k2{}, k3{}, k4{}, tmp{};
    rhs(y, k1);
    for (int i = 0; i < dim; ++i)
      tmp[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] + 0.5 * h * k1[static_cast<size_t>(i)];
    rhs(tmp, k2);
    for (int i = 0; i < dim; ++i)
      tmp[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] + 0.5 * h * k2[static_cast<size_t>(i)];
    rhs(tmp, k3);
    for (int i = 0; i < dim; ++i)
      tmp[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] + h * k3[static_cast<size_t>(i)];
    rhs(tmp, k4);
    for (int i = 0; i < dim; ++i)
      out[static_cast<size_t>(i)] =
          y[static_cast<size_t>(i)] +
          h / 6.0 *
              (k1[static_cast<size_t>(i)] + 2.0 * k2[static_cast<size_t>(i)] +
               2.0 * k3[static_cast<size_t>(i)] + k4[static_cast<size_t>(i)]);
  }

  void run(State& y, double T) {
    double t = 0.0;
    double h = std::min(opt.h_init, T > 0 ? T : opt.h_init);
    while (t < T) {
      if (hcap) h = std::min(h, std::max(opt.h_min, hcap(y)));
      if (opt.h_max > 0) h = std::min(h, opt.h_max);
      h = std::min(h, T - t);
      require(h >= opt.h_min, ErrorKind::StepUnderflow,
              "adaptive step fell below the floor");
      bool bad = false;
      State big{}, half{}, two{};
      try {
        rk4(y, h, big);
        rk4(y, 0.5 * h, half);
        rk4(half, 0.5 * h, two);
      } catch (const Error&) {
        bad = true;  // trial point left the chart; retry smaller
      }
      double err = 0.0;
      if (!bad) {
        for (int i = 0; i < dim; ++i) {
          const double d = std::abs(big[static_cast<size_t>(i)] - two[static_cast<size_t>(i)]);
          const double sc = 1.0 + std::abs(y[static_cast<size_t>(i)]);
          err = std::max(err, d / sc);
          if (!std::isfinite(d)) bad = true;
        }
      }
      const double tol_local = opt.tol * h;
      if (bad || err / 15.0 > tol_local) {
        h *= bad ? 0.25 : 0.5;
        ++rejects;
        continue;
      }
      for (int i = 0; i < dim; ++i)
        y[static_cast<size_t>(i)] =
            two[static_cast<size_t>(i)] +
            (two[static_cast<size_t>(i)] - big[static_cast<size_t>(i)]) / 15.0;
      t += h;
      ++steps;
      if (on_accept) on_accept(t, y);
      const double grow =
          err > 0 ? 0.9 * std::pow(15.0 * tol_local / err, 0.2) : 2.5;
      h *= std::clamp(grow, 0.3, 2.5);
    }
  }
};

}  // namespace

PhasePoint unit_cosphere(const ManifoldModel& m, PhasePoint q) {
  const double h = std::sqrt(m.cosymbol(q.x, q.xi));
  require(h > 0.0, ErrorKind::Degenerate, "cannot normalize xi = 0");
  q.xi = (1.0 / h) * q.xi;
  return q;
}

Trajectory integrate_bicharacteristic(const ManifoldModel& m, Hamiltonian ham,
                                      const PhasePoint& q0, double T, const FlowOptions& opt) {
  require(T > 0.0, ErrorKind::Config, "integration time must be positive");
  const int n = m.dim();
  Trajectory traj;
  const double h0 = hamiltonian_value(m, ham, q0);
  require(std::isfinite(h0), ErrorKind::Config, "initial state has non-finite energy");

  const bool sphere = m.kind() == ModelKind::Sphere2;
  Rot3 rot;  // identity = primary chart

  auto pack = [&](const PhasePoint& q, State& y) {
    for (int i = 0; i < n; ++i) {
      y[static_cast<size_t>(i)] = q.x[i];
      y[static_cast<size_t>(n + i)] = q.xi[i];
    }
  };
  auto unpack = [&](const State& y) {
    PhasePoint q;
    q.x = VecN(n);
    q.xi = VecN(n);
    for (int i = 0; i < n; ++i) {
      q.x[i] = y[static_cast<size_t>(i)];
      q.xi[i] = y[static_cast<size_t>(n + i)];
    }
    return q;
  };
  auto primary = [&](const State& y) {
    PhasePoint q = unpack(y);
    if (sphere) {
      std::array<double, 3> P{}, W{};
      double tmp[4] = {q.x[0], q.x[1], q.xi[0], q.xi[1]};
      sphere_to_ambient(m.radius(), rot, tmp, P, W);
      Rot3 id;
      sphere_from_ambient(m.radius(), id, P, W, tmp);
      q.x[0] = tmp[0];
      q.x[1] = tmp[1];
      q.xi[0] = tmp[2];
      q.xi[1] = tmp[3];
    }
    return q;
  };

  AdaptiveDriver drv;
  drv.dim = 2 * n;
  drv.opt = opt;
  drv.rhs = [&](const State& y, State& dy) {
    const PhasePoint q = unpack(y);
    const PhasePoint f = hamilton_field(m, ham, q);
    for (int i = 0; i < n; ++i) {
      dy[static_cast<size_t>(i)] = f.x[i];
      dy[static_cast<size_t>(n + i)] = f.xi[i];
    }
  };
  if (sphere) {
    drv.hcap = [&](const State& y) {
      const PhasePoint q = unpack(y);
      PhasePoint f;
      try {
        f = hamilton_field(m, ham, q);
      } catch (const Error&) {
        return 1e-4;
      }
      const double st = std::sin(q.x[0]);
      const double speed = std::hypot(f.x[0], f.x[1] * st) + 1e-12;
      return 0.04 / speed;
    };
  }

  const double drift_cap = 1e3 * std::max(opt.tol, 1e-14);
  drv.on_accept = [&](double t, State& y) {
    if (sphere && (y[0] < kPoleMargin || y[0] > kPi - kPoleMargin)) {
      std::array<double, 3> P{}, W{};
      double tmp[4] = {y[0], y[1], y[2], y[3]};
      sphere_to_ambient(m.radius(), rot, tmp, P, W);
      rot = recenter_rotation(P, W);
      sphere_from_ambient(m.radius(), rot, P, W, tmp);
      y[0] = tmp[0];
      y[1] = tmp[1];
      y[2] = tmp[2];
      y[3] = tmp[3];
    }
    const PhasePoint q = unpack(y);
    const double hv = hamiltonian_value(m, ham, q);
    const double drift = std::abs(hv - h0) / std::max(std::abs(h0), 1e-300);
    traj.energy_drift = std::max(traj.energy_drift, drift);
    require(drift <= drift_cap * (1.0 + std::abs(t)), ErrorKind::DriftExceeded,
            "energy drift blew past 1000x the step tolerance");
    traj.samples.push_back({t, primary(y)});
  };

  State y{};
  PhasePoint qstart = q0;
  if (sphere) {
    // Start from a freshly centered chart so the seed may sit anywhere.
    std::array<double, 3> P{}, W{};
    double tmp[4] = {q0.x[0], q0.x[1], q0.xi[0], q0.xi[1]};
    require(q0.x[0] > 0.0 && q0.x[0] < kPi, ErrorKind::OutOfChart,
            "sphere seed must satisfy 0 < theta < pi");
    Rot3 id;
    sphere_to_ambient(m.radius(), id, tmp, P, W);
    rot = recenter_rotation(P, W);
    sphere_from_ambient(m.radius(), rot, P, W, tmp);
    qstart.x[0] = tmp[0];
    qstart.x[1] = tmp[1];
    qstart.xi[0] = tmp[2];
    qstart.xi[1] = tmp[3];
  }
  pack(qstart, y);
  traj.samples.push_back({0.0, q0});
  drv.run(y, T);
  traj.steps = drv.steps;
  traj.rejects = drv.rejects;
  return traj;
}

double return_distance(const ManifoldModel& m, const PhasePoint& a, const PhasePoint& b) {
  const int n = m.dim();
  switch (m.kind()) {
    case ModelKind::FlatTorus: {
      VecN dx = a.x - b.x;
      const MatN inv = inverse(m.lattice());
      VecN k = matvec(inv, dx);
      for (int i = 0; i < n; ++i) k[i] = std::round(k[i]);
      dx = dx - matvec(m.lattice(), k);
      const VecN dxi = a.xi - b.xi;
      return std::sqrt(dot(dx, dx) + dot(dxi, dxi));
    }
    case ModelKind::Sphere2: {
      std::array<double, 3> Pa{}, Wa{}, Pb{}, Wb{};
      const Rot3 id;
      double ta[4] = {a.x[0], a.x[1], a.xi[0], a.xi[1]};
      double tb[4] = {b.x[0], b.x[1], b.xi[0], b.xi[1]};
      sphere_to_ambient(m.radius(), id, ta, Pa, Wa);
      sphere_to_ambient(m.radius(), id, tb, Pb, Wb);
      double s = 0;
      for (int i = 0; i < 3; ++i) {
        const double dp = m.radius() * (Pa[static_cast<size_t>(i)] - Pb[static_cast<size_t>(i)]);
        const double dw = Wa[static_cast<size_t>(i)] - Wb[static_cast<size_t>(i)];
        s += dp * dp + dw * dw;
      }
      return std::sqrt(s);
    }
    default: {
      const VecN dx = a.x - b.x;
      const VecN dxi = a.xi - b.xi;
      return std::sqrt(dot(dx, dx) + dot(dxi, dxi));
    }
  }
}

namespace {

std::vector<ClosedGeodesic> torus_geodesics(const ManifoldModel& m, double length_max) {
  const int n = m.dim();
  const MatN& A = m.lattice();
  const MatN Ainv = inverse(A);
  // |k| <= |A^-1|_F * L is a safe enumeration box.
  double fro = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fro += Ainv(i, j) * Ainv(i, j);
  const long K = static_cast<long>(std::floor(std::sqrt(fro) * length_max)) + 1;
  const double count_est = std::pow(2.0 * static_cast<double>(K) + 1.0, n);
  require(count_est < 1e7, ErrorKind::Overflow, "lattice enumeration box exceeds 1e7 entries");

  struct Entry {
    double len;
    VecN v;
  };
  std::vector<Entry> entries;
  std::array<long, 4> k{};
  k.fill(-K);
  while (true) {
    bool zero = true;
    VecN ki(n);
    for (int i = 0; i < n; ++i) {
      ki[i] = static_cast<double>(k[static_cast<size_t>(i)]);
      if (k[static_cast<size_t>(i)] != 0) zero = false;
    }
    if (!zero) {
      const VecN v = matvec(A, ki);
      const double len = norm(v);
      if (len <= length_max) entries.push_back({len, v});
    }
    int d = 0;
    for (; d < n; ++d) {
      if (k[static_cast<size_t>(d)] < K) {
        ++k[static_cast<size_t>(d)];
        break;
      }
      k[static_cast<size_t>(d)] = -K;
    }
    if (d == n) break;
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.len < b.len; });
  std::vector<ClosedGeodesic> out;
  size_t i = 0;
  while (i < entries.size()) {
    size_t j = i;
    while (j + 1 < entries.size() && entries[j + 1].len - entries[i].len <= 1e-6) ++j;
    ClosedGeodesic g;
    g.length = entries[i].len;
    g.multiplicity = static_cast<int>(j - i + 1);
    g.note = "family (translates)";
    g.seed.x = VecN(n);
    g.seed.xi = (1.0 / entries[i].len) * entries[i].v;
    out.push_back(g);
    i = j + 1;
  }
  return out;
}

std::vector<ClosedGeodesic> revolution_geodesics(const ManifoldModel& m, double length_max) {
  const auto& prof = m.profile();
  std::vector<ClosedGeodesic> out;
  // Equators sit at the critical points of the profile radius.
  const int grid = 8192;
  const double a = 1e-9, b = prof.length - 1e-9;
  double sprev = a, fprev = prof.dr(a);
  for (int i = 1; i <= grid; ++i) {
    const double s = a + (b - a) * i / grid;
    const double f = prof.dr(s);
    if (fprev == 0.0 || fprev * f < 0.0) {
      double lo = sprev, hi = s;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (prof.dr(lo) * prof.dr(mid) <= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      const double sstar = 0.5 * (lo + hi);
      const double r = prof.r(sstar);
      if (r > 0.0 && kTwoPi * r <= length_max) {
        ClosedGeodesic g;
        g.length = kTwoPi * r;
        g.seed.x = VecN(sstar, 0.0);
        g.seed.xi = VecN(0.0, r);
        g.multiplicity = 1;
        g.note = prof.d2r(sstar) < 0.0 ? "isolated (elliptic)" : "isolated (hyperbolic)";
        out.push_back(g);
      }
    }
    sprev = s;
    fprev = f;
  }
  const double meridian = 2.0 * prof.length;
  if (meridian <= length_max) {
    ClosedGeodesic g;
    g.length = meridian;
    g.seed.x = VecN(0.5 * prof.length, 0.0);
    g.seed.xi = VecN(1.0, 0.0);
    g.multiplicity = 1;
    g.note = "family (meridians)";
    out.push_back(g);
  }
  std::sort(out.begin(), out.end(),
            [](const ClosedGeodesic& x, const ClosedGeodesic& y) { return x.length < y.length; });
  // Deduplicate coincident lengths (the round profile merges equator and
  // meridian into one great-circle family).
  std::vector<ClosedGeodesic> dedup;
  for (auto& g : out) {
    if (!dedup.empty() && g.length - dedup.back().length <= 1e-6) {
      dedup.back().note += " +merged";
      continue;
    }
    dedup.push_back(g);
  }
  return dedup;
}

}  // namespace

std::vector<ClosedGeodesic> find_closed_geodesics(const ManifoldModel& m, double length_max) {
  require(length_max > 0.0, ErrorKind::Config, "length_max must be positive");
  switch (m.kind()) {
    case ModelKind::FlatTorus:
      return torus_geodesics(m, length_max);
    case ModelKind::Sphere2: {
      std::vector<ClosedGeodesic> out;
      for (int w = 1; kTwoPi * m.radius() * w <= length_max; ++w) {
        ClosedGeodesic g;
        g.length = kTwoPi * m.radius() * w;
        g.seed.x = VecN(0.5 * kPi, 0.0);
        g.seed.xi = VecN(0.0, m.radius());
        g.multiplicity = 1;
        g.note = w == 1 ? "family (great circles)" : "family (iterate)";
        out.push_back(g);
      }
      return out;
    }
    case ModelKind::SurfaceOfRevolution:
      return revolution_geodesics(m, length_max);
    case ModelKind::PerturbedPlane:
      return {};
  }
  return {};
}

ClosedGeodesic monodromy(const ManifoldModel& m, const ClosedGeodesic& g, double tol) {
  require(m.dim() == 2, ErrorKind::Config, "monodromy implemented for surfaces");
  const PhasePoint q0 = unit_cosphere(m, g.seed);

  // Unit normal covector nu and normal vector nv = G nu at the seed.
  auto normal_pair = [&](const PhasePoint& q, VecN& nu, VecN& nv) {
    const MetricData md = m.metric_at(q.x);
    const VecN w = matvec(md.ginv, q.xi);  // velocity direction (up to scale)
    VecN nu0(-w[1], w[0]);
    const double nn = std::sqrt(dot(nu0, matvec(md.ginv, nu0)));
    require(nn > 0.0, ErrorKind::Degenerate, "cannot build a normal frame");
    nu = (1.0 / nn) * nu0;
    nv = matvec(md.ginv, nu);
  };
  VecN nu0, nv0;
  normal_pair(q0, nu0, nv0);

  // State: (x, xi, M) with M the 4x4 variational matrix, column major.
  AdaptiveDriver drv;
  drv.dim = 4 + 16;
  FlowOptions opt;
  opt.tol = tol;
  opt.h_max = g.length / 512.0;
  drv.opt = opt;
  drv.rhs = [&](const State& y, State& dy) {
    PhasePoint q;
    q.x = VecN(y[0], y[1]);
    q.xi = VecN(y[2], y[3]);
    const PhasePoint f = hamilton_field(m, Hamiltonian::HalfWave, q);
    dy[0] = f.x[0];
    dy[1] = f.x[1];
    dy[2] = f.xi[0];
    dy[3] = f.xi[1];
    std::array<std::array<double, 8>, 8> jac{};
    hamilton_field_jacobian(m, Hamiltonian::HalfWave, q, jac);
    for (int col = 0; col < 4; ++col)
      for (int row = 0; row < 4; ++row) {
        double s = 0;
        for (int k = 0; k < 4; ++k)
          s += jac[static_cast<size_t>(row)][static_cast<size_t>(k)] *
               y[static_cast<size_t>(4 + 4 * col + k)];
        dy[static_cast<size_t>(4 + 4 * col + row)] = s;
      }
  };

  // Track the Jacobi field component <dx, nu(t)> of the column started at
  // (0, nu): J(0) = 0, J'(0) = 1.
  std::vector<std::pair<double, double>> jsamples;
  drv.on_accept = [&](double t, State& y) {
    for (int i = 0; i < 20; ++i)
      require(std::abs(y[static_cast<size_t>(i)]) < 1e12, ErrorKind::Overflow,
              "variational solution exceeded 1e12");
    PhasePoint q;
    q.x = VecN(y[0], y[1]);
    q.xi = VecN(y[2], y[3]);
    VecN nu, nv;
    normal_pair(q, nu, nv);
    // M u2 with u2 = (0, 0, nu0[0], nu0[1]).
    double mx0 = 0, mx1 = 0;
    for (int k = 0; k < 4; ++k) {
      const double u2k = k == 2 ? nu0[0] : (k == 3 ? nu0[1] : 0.0);
      mx0 += y[static_cast<size_t>(4 + 4 * k + 0)] * u2k;
      mx1 += y[static_cast<size_t>(4 + 4 * k + 1)] * u2k;
    }
    jsamples.emplace_back(t, mx0 * nu[0] + mx1 * nu[1]);
  };

  State y{};
  y[0] = q0.x[0];
  y[1] = q0.x[1];
  y[2] = q0.xi[0];
  y[3] = q0.xi[1];
  for (int c = 0; c < 4; ++c) y[static_cast<size_t>(4 + 4 * c + c)] = 1.0;
  drv.run(y, g.length);

  MatN M(4);
  for (int col = 0; col < 4; ++col)
    for (int row = 0; row < 4; ++row)
      M(row, col) = y[static_cast<size_t>(4 + 4 * col + row)];

  // Basis {V, R, u1, u2} at the seed; dP reads off the u-components of the
  // returned u-columns.
  const PhasePoint f0 = hamilton_field(m, Hamiltonian::HalfWave, q0);
  MatN B(4);
  const double c_corr = f0.xi[0] * nv0[0] + f0.xi[1] * nv0[1];  // makes dh(u1) = 0
  const double cols[4][4] = {
      {f0.x[0], f0.x[1], f0.xi[0], f0.xi[1]},
      {0.0, 0.0, q0.xi[0], q0.xi[1]},
      {nv0[0], nv0[1], c_corr * q0.xi[0], c_corr * q0.xi[1]},
      {0.0, 0.0, nu0[0], nu0[1]},
  };
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) B(r, c) = cols[c][r];
  const MatN Binv = inverse(B);

  ClosedGeodesic out = g;
  out.has_monodromy = true;
  out.dP = MatN(2);
  for (int uc = 0; uc < 2; ++uc) {
    VecN mu(4);
    for (int r = 0; r < 4; ++r) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += M(r, k) * cols[2 + uc][k];
      mu[r] = s;
    }
    const VecN coef = matvec(Binv, mu);
    out.dP(0, uc) = coef[2];
    out.dP(1, uc) = coef[3];
  }
  out.det_residual = std::abs(det(out.dP) - 1.0);
  out.det_factor =
      (1.0 - out.dP(0, 0)) * (1.0 - out.dP(1, 1)) - out.dP(0, 1) * out.dP(1, 0);

  // Count sign changes of the Jacobi component; flag tangencies.
  double jmax = 0.0;
  for (const auto& [t, jval] : jsamples) jmax = std::max(jmax, std::abs(jval));
  require(jmax > 0.0, ErrorKind::Degenerate, "variational column stayed zero");
  int count = 0;
  for (size_t i = 1; i + 1 < jsamples.size(); ++i) {
    const double a = jsamples[i - 1].second, b = jsamples[i].second;
    if (a * b < 0.0) ++count;
    if (std::abs(b) < 1e-10 * jmax && a * jsamples[i + 1].second > 0.0)
      fail(ErrorKind::Inconclusive, "jacobi field tangent to zero away from the endpoint");
  }
  if (!jsamples.empty()) {
    const double a = jsamples[jsamples.size() - 2].second;
    const double b = jsamples.back().second;
    if (std::abs(b) < 1e-8 * jmax) {
      out.terminal_zero = true;
      ++count;
    } else if (a * b < 0.0) {
      ++count;
    }
  }
  out.conj_count = count;
  return out;
}

TrappingReport classify_trapping(const ManifoldModel& m, const PhasePoint& q0, double t_max,
                                 double r_escape) {
  require(m.kind() == ModelKind::PerturbedPlane, ErrorKind::Config,
          "trapping classification targets the perturbed plane");
  require(r_escape >= 2.0 * m.bump_support_radius(), ErrorKind::Config,
          "escape radius must exceed twice the bump support radius");

  // Outside the bumps the flow is a straight line, RK4 is exact there and the
  // step controller would otherwise grow h without bound; the cap keeps enough
  // accepted samples for the post-escape tail check.
  const double h_cap = 0.25;
  auto one_way = [&](PhasePoint q) {
    FlowOptions opt;
    opt.tol = 1e-10;
    opt.h_max = h_cap;
    AdaptiveDriver drv;
    drv.dim = 4;
    drv.opt = opt;
    drv.rhs = [&](const State& y, State& dy) {
      PhasePoint p;
      p.x = VecN(y[0], y[1]);
      p.xi = VecN(y[2], y[3]);
      const PhasePoint f = hamilton_field(m, Hamiltonian::Quadratic, p);
      dy[0] = f.x[0];
      dy[1] = f.x[1];
      dy[2] = f.xi[0];
      dy[3] = f.xi[1];
    };
    double t_escape = -1.0;
    int tail = 0;
    double last_cos = -2.0;
    bool escaped = false, inconclusive = false;
    drv.on_accept = [&](double t, State& y) {
      if (escaped || inconclusive) return;
      const double r = std::hypot(y[0], y[1]);
      const double c = (y[0] * y[2] + y[1] * y[3]) / (r * std::hypot(y[2], y[3]));
      if (t_escape < 0.0) {
        if (r >= r_escape && c > 0.0) {
          t_escape = t;
          last_cos = c;
        }
        return;
      }
      // Once escape is declared, the direction cosine must stay outgoing and
      // keep opening for 10 further accepted steps.
      if (c <= 0.0 || c < last_cos - 1e-12) {
        inconclusive = true;
        return;
      }
      last_cos = c;
      if (++tail >= 10) escaped = true;
    };
    State y{};
    y[0] = q.x[0];
    y[1] = q.x[1];
    y[2] = q.xi[0];
    y[3] = q.xi[1];
    // Escape verdict needs the post-escape tail, so allow a margin past t_max.
    const double horizon = t_max * 1.2 + 12.0 * h_cap + 1.0;
    drv.run(y, horizon);
    require(!inconclusive, ErrorKind::Inconclusive,
            "escape test never stabilized into an outgoing ray");
    if (escaped && t_escape <= t_max) return std::make_pair(Fate::Escaped, t_escape);
    return std::make_pair(Fate::Trapped, -1.0);
  };

  TrappingReport rep;
  auto fwd = one_way(q0);
  rep.forward = fwd.first;
  rep.t_escape_forward = fwd.second;
  PhasePoint qb = q0;
  qb.xi = -1.0 * qb.xi;
  auto bwd = one_way(qb);
  rep.backward = bwd.first;
  rep.t_escape_backward = bwd.second;
  return rep;
}

}  // namespace weylscope::hamflow
