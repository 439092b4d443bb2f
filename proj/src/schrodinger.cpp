#include "weylscope/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "weylscope/parallel.hpp"
#include "weylscope/smoothing.hpp"

namespace weylscope::schrod {

namespace {

void require_axis_box(const grid::GridField& f, const char* who) {
  for (int i = 0; i < f.lattice.n; ++i)
    for (int j = 0; j < f.lattice.n; ++j)
      if (i != j)
        require(std::abs(f.lattice(i, j)) < 1e-14, ErrorKind::Config,
                std::string(who) + " needs an axis-aligned box");
}

std::vector<double> squared_duals(const grid::GridField& f) {
  const MatN dual = kTwoPi * transpose(inverse(f.lattice));
  std::vector<double> ksq(f.size());
  const int n = f.rank();
  par::parallel_for(f.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(f, i, idx);
    VecN wind(n);
    for (int a = 0; a < n; ++a)
      wind[a] = static_cast<double>(
          grid::signed_bin(idx[static_cast<size_t>(a)], f.dims[static_cast<size_t>(a)]));
    VecN k = matvec(dual, wind);
    ksq[i] = dot(k, k);
  });
  return ksq;
}

// Mass fraction within one eighth of a side length of the boundary, any axis.
double boundary_fraction(const grid::GridField& pos) {
  const cplx* v = pos.values.data();
  double total = par::blocked_sum(pos.size(), [v](std::size_t i) { return std::norm(v[i]); });
  if (total == 0.0) return 0.0;
  double band = par::blocked_sum(pos.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(pos, i, idx);
    for (int a = 0; a < pos.rank(); ++a) {
      int nn = pos.dims[static_cast<size_t>(a)];
      int m = idx[static_cast<size_t>(a)];
      if (std::min(m, nn - m) < nn / 8) return std::norm(v[i]);
    }
    return 0.0;
  });
  return band / total;
}

void check_leak(const grid::GridField& pos, double t, double& worst) {
  double frac = boundary_fraction(pos);
  worst = std::max(worst, frac);
  require(frac < 1e-6, ErrorKind::BoundaryLeak,
          "boundary mass fraction " + std::to_string(frac) + " at t = " + std::to_string(t) +
              "; the box no longer approximates R^n");
}

}  // namespace

grid::GridField evolve(const grid::GridField& psi0, double t) {
  require(psi0.space == grid::Space::Position, ErrorKind::Config,
          "evolve expects position-space data");
  grid::GridField hat = grid::to_frequency(psi0);
  const std::vector<double> ksq = squared_duals(hat);
  par::parallel_for(hat.size(), [&](std::size_t i) {
    const double phase = -t * ksq[i];
    hat.values[i] *= cplx(std::cos(phase), std::sin(phase));
  });
  return grid::to_position(hat);
}

cplx free_kernel(double t, const VecN& x) {
  require(t != 0.0, ErrorKind::Config, "free kernel needs nonzero time");
  const cplx pref = std::pow(cplx(0.0, 4.0 * kPi * t), -0.5 * static_cast<double>(x.n));
  return pref * std::exp(cplx(0.0, dot(x, x) / (4.0 * t)));
}

double sobolev_norm(const grid::GridField& psi, double s) {
  grid::GridField hat = psi.space == grid::Space::Frequency ? psi : grid::to_frequency(psi);
  const std::vector<double> ksq = squared_duals(hat);
  const cplx* v = hat.values.data();
  double sum = par::blocked_sum(hat.size(), [&](std::size_t i) {
    return std::pow(1.0 + ksq[i], s) * std::norm(v[i]);
  });
  const double nn = static_cast<double>(hat.size());
  return std::sqrt(grid::box_volume(hat) / (nn * nn) * sum);
}

namespace {

struct FunctionalSetup {
  int n = 0;
  double dt = 0.0;
  std::vector<double> h;       // grid spacing per axis
  std::vector<double> center;  // box center coordinates
  std::vector<double> ksq;
  grid::GridField hat0{};
  double rhs = 0.0;
};

FunctionalSetup prepare(const grid::GridField& psi0, double t_final, int steps,
                        const char* who) {
  require(psi0.space == grid::Space::Position, ErrorKind::Config,
          std::string(who) + " expects position-space data");
  require(psi0.rank() >= 3, ErrorKind::Config, std::string(who) + " needs rank 3 or 4");
  require(t_final > 0.0 && steps >= 2, ErrorKind::Config,
          std::string(who) + " needs t_final > 0 and at least 2 time steps");
  require_axis_box(psi0, who);
  FunctionalSetup su;
  su.n = psi0.rank();
  su.dt = t_final / static_cast<double>(steps);
  for (int a = 0; a < su.n; ++a) {
    su.h.push_back(psi0.lattice(a, a) / static_cast<double>(psi0.dims[static_cast<size_t>(a)]));
    su.center.push_back(0.5 * psi0.lattice(a, a));
  }
  su.hat0 = grid::to_frequency(psi0);
  su.ksq = squared_duals(su.hat0);
  double h12 = sobolev_norm(su.hat0, 0.5);
  su.rhs = h12 * h12;
  require(su.rhs > 0.0, ErrorKind::Config, std::string(who) + " needs nonzero data");
  return su;
}

grid::GridField snapshot_hat(const FunctionalSetup& su, double t) {
  grid::GridField hat = su.hat0;
  par::parallel_for(hat.size(), [&](std::size_t i) {
    const double phase = -t * su.ksq[i];
    hat.values[i] *= cplx(std::cos(phase), std::sin(phase));
  });
  return hat;
}

// One spatial gradient component in position space.
grid::GridField gradient_component(const FunctionalSetup& su, const grid::GridField& hat,
                                   int axis) {
  grid::GridField g = hat;
  const double ka = kTwoPi / (su.h[static_cast<size_t>(axis)] *
                              static_cast<double>(g.dims[static_cast<size_t>(axis)]));
  par::parallel_for(g.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(g, i, idx);
    const double k = ka * static_cast<double>(grid::signed_bin(
                              idx[static_cast<size_t>(axis)], g.dims[static_cast<size_t>(axis)]));
    g.values[i] *= cplx(0.0, k);
  });
  return grid::to_position(g);
}

double radius_at(const FunctionalSetup& su, const grid::GridField& f, std::size_t i) {
  std::array<int, 4> idx{};
  grid::unflatten(f, i, idx);
  double r2 = 0.0;
  for (int a = 0; a < su.n; ++a) {
    const double d = su.h[static_cast<size_t>(a)] * idx[static_cast<size_t>(a)] -
                     su.center[static_cast<size_t>(a)];
    r2 += d * d;
  }
  return std::sqrt(r2);
}

}  // namespace

DispersiveReport morawetz_report(const grid::GridField& psi0, double t_final, int steps,
                                 double excise_radius) {
  FunctionalSetup su = prepare(psi0, t_final, steps, "morawetz_report");
  const std::size_t total = psi0.size();
  double min_side = psi0.lattice(0, 0);
  for (int a = 1; a < su.n; ++a) min_side = std::min(min_side, psi0.lattice(a, a));
  if (excise_radius <= 0.0) excise_radius = min_side / 32.0;
  const double weight_const =
      0.5 * static_cast<double>((su.n - 1) * (su.n - 3));

  std::vector<double> rad(total);
  par::parallel_for(total, [&](std::size_t i) { rad[i] = radius_at(su, psi0, i); });

  DispersiveReport rep;
  rep.rhs = su.rhs;
  rep.excise_radius = excise_radius;
  rep.snapshots = steps + 1;

  std::vector<double> sum_grad2(total);
  std::vector<cplx> sum_radial(total);
  double angular_time = 0.0;
  double weight_time = 0.0;
  for (int j = 0; j <= steps; ++j) {
    const double t = su.dt * static_cast<double>(j);
    grid::GridField hat = snapshot_hat(su, t);
    grid::GridField pos = grid::to_position(hat);
    check_leak(pos, t, rep.boundary_mass_max);

    std::fill(sum_grad2.begin(), sum_grad2.end(), 0.0);
    std::fill(sum_radial.begin(), sum_radial.end(), cplx(0.0, 0.0));
    for (int a = 0; a < su.n; ++a) {
      grid::GridField gp = gradient_component(su, hat, a);
      par::parallel_for(total, [&](std::size_t i) {
        if (rad[i] < excise_radius) return;
        std::array<int, 4> idx{};
        grid::unflatten(psi0, i, idx);
        const double xa = su.h[static_cast<size_t>(a)] * idx[static_cast<size_t>(a)] -
                          su.center[static_cast<size_t>(a)];
        sum_grad2[i] += std::norm(gp.values[i]);
        sum_radial[i] += (xa / rad[i]) * gp.values[i];
      });
    }
    double ang = par::blocked_sum(total, [&](std::size_t i) {
      if (rad[i] < excise_radius) return 0.0;
      return std::max(sum_grad2[i] - std::norm(sum_radial[i]), 0.0) / rad[i];
    });
    double wgt = 0.0;
    if (weight_const != 0.0)
      wgt = par::blocked_sum(total, [&](std::size_t i) {
        if (rad[i] < excise_radius) return 0.0;
        const double r = rad[i];
        return std::norm(pos.values[i]) / (r * r * r);
      });
    const double tw = (j == 0 || j == steps) ? 0.5 * su.dt : su.dt;
    angular_time += tw * ang;
    weight_time += tw * wgt;
  }
  const double dvol = grid::cell_volume(psi0);
  rep.angular_term = 2.0 * dvol * angular_time;
  rep.weight_term = weight_const * dvol * weight_time;
  rep.ratio = (rep.angular_term + rep.weight_term) / rep.rhs;
  return rep;
}

DispersiveReport local_smoothing_report(const grid::GridField& psi0, double t_final,
                                        double radius, int steps) {
  require(radius > 0.0, ErrorKind::Config, "local smoothing needs a positive cutoff radius");
  FunctionalSetup su = prepare(psi0, t_final, steps, "local_smoothing_report");
  const std::size_t total = psi0.size();

  std::vector<double> chi2(total);
  par::parallel_for(total, [&](std::size_t i) {
    const double c = smoothing::bump_profile(radius_at(su, psi0, i) / radius);
    chi2[i] = c * c;
  });

  DispersiveReport rep;
  rep.rhs = su.rhs;
  rep.excise_radius = 0.0;
  rep.snapshots = steps + 1;

  double lhs_time = 0.0;
  for (int j = 0; j <= steps; ++j) {
    const double t = su.dt * static_cast<double>(j);
    grid::GridField hat = snapshot_hat(su, t);
    grid::GridField pos = grid::to_position(hat);
    check_leak(pos, t, rep.boundary_mass_max);
    double lhs = 0.0;
    for (int a = 0; a < su.n; ++a) {
      grid::GridField gp = gradient_component(su, hat, a);
      lhs += par::blocked_sum(
          total, [&](std::size_t i) { return chi2[i] * std::norm(gp.values[i]); });
    }
    const double tw = (j == 0 || j == steps) ? 0.5 * su.dt : su.dt;
    lhs_time += tw * lhs;
  }
  rep.angular_term = grid::cell_volume(psi0) * lhs_time;
  rep.weight_term = 0.0;
  rep.ratio = rep.angular_term / rep.rhs;
  return rep;
}

double hardy_ratio(const grid::GridField& u) {
  require(u.space == grid::Space::Position, ErrorKind::Config,
          "hardy_ratio expects position-space data");
  require(u.rank() >= 3, ErrorKind::Config, "hardy_ratio needs rank >= 3");
  require_axis_box(u, "hardy_ratio");
  const int n = u.rank();
  const std::size_t total = u.size();
  std::vector<double> h(static_cast<size_t>(n));
  std::vector<double> center(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) {
    h[static_cast<size_t>(a)] =
        u.lattice(a, a) / static_cast<double>(u.dims[static_cast<size_t>(a)]);
    center[static_cast<size_t>(a)] = 0.5 * u.lattice(a, a);
  }

  double num = par::blocked_sum(total, [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(u, i, idx);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      const double d =
          h[static_cast<size_t>(a)] * idx[static_cast<size_t>(a)] - center[static_cast<size_t>(a)];
      r2 += d * d;
    }
    if (r2 < 1e-24) return 0.0;
    return std::norm(u.values[i]) / r2;
  });

  double den = par::blocked_sum(total, [&](std::size_t i) {
    std::array<int, 4> idx{};
    grid::unflatten(u, i, idx);
    double g2 = 0.0;
    for (int a = 0; a < n; ++a) {
      std::array<int, 4> up = idx;
      std::array<int, 4> dn = idx;
      const int nn = u.dims[static_cast<size_t>(a)];
      up[static_cast<size_t>(a)] = (idx[static_cast<size_t>(a)] + 1) & (nn - 1);
      dn[static_cast<size_t>(a)] = (idx[static_cast<size_t>(a)] + nn - 1) & (nn - 1);
      const cplx d = u.values[grid::flat_index(u, up)] - u.values[grid::flat_index(u, dn)];
      const double inv = 1.0 / (2.0 * h[static_cast<size_t>(a)]);
      g2 += std::norm(d) * inv * inv;
    }
    return g2;
  });

  if (den == 0.0) return 0.0;
  const double c = 0.25 * static_cast<double>((n - 2) * (n - 2));
  return c * num / den;
}

}  // namespace weylscope::schrod
