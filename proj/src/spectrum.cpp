#include "weylscope/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "weylscope/parallel.hpp"

using weylscope::geometry::ModelKind;

namespace weylscope::spectrum {

long SpectrumTable::total_count() const {
  long c = 0;
  for (const auto& e : entries) c += e.mult;
  return c;
}

namespace {

std::vector<SpectrumEntry> merge_equal(std::vector<double>& lambdas, double rel_tol) {
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<SpectrumEntry> out;
  size_t i = 0;
  while (i < lambdas.size()) {
    size_t j = i;
    while (j + 1 < lambdas.size() &&
           lambdas[j + 1] - lambdas[i] <= rel_tol * std::max(1.0, lambdas[i]))
      ++j;
    out.push_back({lambdas[i], static_cast<int>(j - i + 1)});
    i = j + 1;
  }
  return out;
}

}  // namespace

SpectrumTable torus_spectrum(const ManifoldModel& m, double lambda_max) {
  require(m.kind() == ModelKind::FlatTorus, ErrorKind::Config, "model is not a flat torus");
  require(lambda_max > 0, ErrorKind::Config, "lambda_max must be positive");
  const int n = m.dim();
  // Dual lattice B = 2 pi A^-T; eigenfrequencies are |B k|.
  const MatN B = kTwoPi * transpose(inverse(m.lattice()));
  const MatN Binv = inverse(B);
  double fro = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fro += Binv(i, j) * Binv(i, j);
  const long K = static_cast<long>(std::floor(std::sqrt(fro) * lambda_max)) + 1;
  require(std::pow(2.0 * static_cast<double>(K) + 1.0, n) < 5e7, ErrorKind::Overflow,
          "dual lattice enumeration box exceeds 5e7 points");

  std::vector<double> lambdas;
  std::array<long, 4> k{};
  k.fill(-K);
  while (true) {
    VecN ki(n);
    for (int i = 0; i < n; ++i) ki[i] = static_cast<double>(k[static_cast<size_t>(i)]);
    const double lam = norm(matvec(B, ki));
    if (lam <= lambda_max) lambdas.push_back(lam);
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
  SpectrumTable t;
  t.model_id = m.descriptor();
  t.lambda_max = lambda_max;
  t.entries = merge_equal(lambdas, 1e-9);
  return t;
}

SpectrumTable sphere_spectrum(const ManifoldModel& m, double lambda_max) {
  require(m.kind() == ModelKind::Sphere2, ErrorKind::Config, "model is not a sphere");
  require(lambda_max > 0, ErrorKind::Config, "lambda_max must be positive");
  const double r = m.radius();
  SpectrumTable t;
  t.model_id = m.descriptor();
  t.lambda_max = lambda_max;
  for (long l = 0;; ++l) {
    const double lam = std::sqrt(static_cast<double>(l) * (l + 1.0)) / r;
    if (lam > lambda_max) break;
    t.entries.push_back({lam, static_cast<int>(2 * l + 1)});
  }
  return t;
}

tridiag::SymTridiag revolution_mode_matrix(const RevolutionProfile& prof, int m, int cells) {
  require(cells >= 16, ErrorKind::Config, "meridian mesh too small");
  require(m >= 0, ErrorKind::Config, "mode index must be nonnegative");
  const double h = prof.length / cells;
  tridiag::SymTridiag T;
  T.diag.resize(static_cast<size_t>(cells));
  T.off.resize(static_cast<size_t>(cells - 1));
  std::vector<double> rc(static_cast<size_t>(cells));      // cell centers
  std::vector<double> rf(static_cast<size_t>(cells) + 1);  // faces
  for (int i = 0; i < cells; ++i) rc[static_cast<size_t>(i)] = prof.r((i + 0.5) * h);
  for (int i = 0; i <= cells; ++i) rf[static_cast<size_t>(i)] = prof.r(i * h);
  for (int i = 0; i < cells; ++i) {
    const double ri = rc[static_cast<size_t>(i)];
    require(ri > 0.0, ErrorKind::SingularMetric, "profile radius vanished inside the meridian");
    // Zero-flux boundary faces: the profile radius vanishes at the poles,
    // so the face conductance is dropped there.
    const double fl = i > 0 ? rf[static_cast<size_t>(i)] : 0.0;
    const double fr = i + 1 < cells ? rf[static_cast<size_t>(i + 1)] : 0.0;
    T.diag[static_cast<size_t>(i)] =
        (fl + fr) / (h * h * ri) + static_cast<double>(m) * m / (ri * ri);
    if (i + 1 < cells)
      T.off[static_cast<size_t>(i)] =
          -rf[static_cast<size_t>(i + 1)] / (h * h * std::sqrt(ri * rc[static_cast<size_t>(i + 1)]));
  }
  return T;
}

namespace {

std::vector<double> mode_eigenvalues(const RevolutionProfile& prof, int m, int cells,
                                     double mu_max, double tol) {
  const auto T = revolution_mode_matrix(prof, m, cells);
  return tridiag::eigenvalues_in(T, -1e-8, mu_max, tol);
}

}  // namespace

SpectrumTable revolution_spectrum(const ManifoldModel& m, double lambda_max,
                                  const RevolutionOptions& opt) {
  require(m.kind() == ModelKind::SurfaceOfRevolution, ErrorKind::Config,
          "model is not a surface of revolution");
  require(lambda_max > 0, ErrorKind::Config, "lambda_max must be positive");
  require(opt.mesh >= 64 && opt.mesh % 2 == 0, ErrorKind::Config,
          "meridian mesh must be even and at least 64");
  const auto& prof = m.profile();

  double r_max = 0.0;
  for (int i = 1; i < 20000; ++i)
    r_max = std::max(r_max, prof.r(prof.length * i / 20000.0));
  require(r_max > 0.0, ErrorKind::Degenerate, "profile radius is identically zero");

  // Modes with m > lambda_max * r_max start above the cutoff: their smallest
  // eigenvalue is at least (m / r_max)^2.
  const int m_top = static_cast<int>(std::floor(lambda_max * r_max));
  const double mu_pad = lambda_max * lambda_max * 1.05 + 1.0;
  const double bis_tol = std::max(1e-10, 1e-13 * mu_pad);

  std::vector<std::vector<double>> per_mode(static_cast<size_t>(m_top) + 1);
  std::vector<std::string> mode_error(static_cast<size_t>(m_top) + 1);
#pragma omp parallel for schedule(dynamic)
  for (int mm = 0; mm <= m_top; ++mm) {
    try {
      auto fine = mode_eigenvalues(prof, mm, opt.mesh, mu_pad, bis_tol);
      auto coarse = mode_eigenvalues(prof, mm, opt.mesh / 2, mu_pad, bis_tol);
      const size_t matched = std::min(fine.size(), coarse.size());
      std::vector<double> kept;
      for (size_t i = 0; i < matched; ++i) {
        const double mu_f = fine[i], mu_c = coarse[i];
        const double mu = opt.richardson ? mu_f + (mu_f - mu_c) / 3.0 : mu_f;
        if (mu > lambda_max * lambda_max) break;
        const double drift = std::abs(mu_f - mu_c) / std::max(1.0, std::abs(mu_f));
        if (drift > opt.gate)
          fail(ErrorKind::MeshTooCoarse,
               "meridian eigenvalue moved " + std::to_string(drift) +
                   " between meshes; refine the mesh or lower the cutoff");
        kept.push_back(std::sqrt(std::max(0.0, mu)));
      }
      per_mode[static_cast<size_t>(mm)] = std::move(kept);
    } catch (const Error& e) {
      mode_error[static_cast<size_t>(mm)] = e.what();
    }
  }
  for (const auto& msg : mode_error)
    if (!msg.empty()) fail(ErrorKind::MeshTooCoarse, msg);

  SpectrumTable t;
  t.model_id = m.descriptor();
  t.lambda_max = lambda_max;
  for (int mm = 0; mm <= m_top; ++mm)
    for (double lam : per_mode[static_cast<size_t>(mm)])
      t.entries.push_back({lam, mm == 0 ? 1 : 2});
  std::sort(t.entries.begin(), t.entries.end(),
            [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.lambda < b.lambda; });
  return t;
}

SpectrumTable compute_spectrum(const ManifoldModel& m, double lambda_max,
                               const RevolutionOptions& opt) {
  switch (m.kind()) {
    case ModelKind::FlatTorus:
      return torus_spectrum(m, lambda_max);
    case ModelKind::Sphere2:
      return sphere_spectrum(m, lambda_max);
    case ModelKind::SurfaceOfRevolution:
      return revolution_spectrum(m, lambda_max, opt);
    case ModelKind::PerturbedPlane:
      fail(ErrorKind::Config, "the plane model has no discrete spectrum");
  }
  fail(ErrorKind::Internal, "unreachable");
}

double counting_function(const SpectrumTable& t, double lambda) {
  require(lambda <= t.lambda_max * (1.0 + 1e-12), ErrorKind::BeyondCutoff,
          "counting past the complete part of the table");
  const double cut = lambda * (1.0 + 1e-12) + 1e-15;
  long c = 0;
  for (const auto& e : t.entries) {
    if (e.lambda > cut) break;
    c += e.mult;
  }
  return static_cast<double>(c);
}

WeylFit weyl_fit(const ManifoldModel& m, const SpectrumTable& t, int grid_points) {
  require(!t.entries.empty(), ErrorKind::Config, "empty spectrum table");
  require(grid_points >= 16, ErrorKind::Config, "fit grid needs at least 16 points");
  const int n = m.dim();
  const auto pv = m.phase_volumes();
  WeylFit fit{};
  fit.coeff_expected = pv.vol_bstar / std::pow(kTwoPi, n);

  const double hi = t.lambda_max;
  const double lo = std::max(1.0, hi / 100.0);
  require(hi > lo, ErrorKind::Config, "table cutoff too small for a fit grid");
  double slx = 0, sly = 0, slxx = 0, slxy = 0;
  int used = 0;
  fit.remainder_sup = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double lam = lo * std::pow(hi / lo, (i + 0.5) / grid_points);
    const double N = counting_function(t, lam);
    const double pred = fit.coeff_expected * std::pow(lam, n);
    fit.ratio.emplace_back(lam, N / pred);
    fit.remainder_sup =
        std::max(fit.remainder_sup, std::abs(N - pred) / std::pow(lam, n - 1));
    if (N > 0 && i >= grid_points / 2) {
      slx += std::log(lam);
      sly += std::log(N);
      slxx += std::log(lam) * std::log(lam);
      slxy += std::log(lam) * std::log(N);
      ++used;
    }
  }
  require(used >= 8, ErrorKind::Inconclusive, "too few usable samples in the fit window");
  const double denom = used * slxx - slx * slx;
  require(std::abs(denom) > 1e-12, ErrorKind::Degenerate, "degenerate log-log fit");
  fit.exponent = (used * slxy - slx * sly) / denom;
  const double Ntop = counting_function(t, t.lambda_max);
  fit.rel_err_at_max = std::abs(Ntop / (fit.coeff_expected * std::pow(t.lambda_max, n)) - 1.0);
  return fit;
}

}  // namespace weylscope::spectrum
