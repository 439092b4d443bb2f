#include "weylscope/geometry.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace weylscope {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::OutOfChart: return "out of chart";
    case ErrorKind::SingularMetric: return "singular metric";
    case ErrorKind::Quadrature: return "quadrature failure";
    case ErrorKind::StepUnderflow: return "step underflow";
    case ErrorKind::DriftExceeded: return "conserved quantity drift";
    case ErrorKind::Inconclusive: return "inconclusive";
    case ErrorKind::Overflow: return "enumeration overflow";
    case ErrorKind::MeshTooCoarse: return "mesh too coarse";
    case ErrorKind::BeyondCutoff: return "beyond table cutoff";
    case ErrorKind::Nyquist: return "nyquist violation";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::CrowdedLengths: return "crowded length spectrum";
    case ErrorKind::BoundaryLeak: return "boundary leak";
    case ErrorKind::CausticReached: return "caustic reached";
    case ErrorKind::GateFailed: return "sanity gate failed";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Internal: return "internal error";
  }
  return "unknown error";
}

double det(const MatN& m) {
  switch (m.n) {
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    default: {
      // LU with partial pivoting for n = 3, 4.
      MatN a = m;
      double d = 1.0;
      for (int c = 0; c < a.n; ++c) {
        int piv = c;
        for (int r = c + 1; r < a.n; ++r)
          if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (piv != c) {
          std::swap(a.a[static_cast<size_t>(piv)], a.a[static_cast<size_t>(c)]);
          d = -d;
        }
        if (a(c, c) == 0.0) return 0.0;
        d *= a(c, c);
        for (int r = c + 1; r < a.n; ++r) {
          const double f = a(r, c) / a(c, c);
          for (int j = c; j < a.n; ++j) a(r, j) -= f * a(c, j);
        }
      }
      return d;
    }
  }
}

MatN inverse(const MatN& m) {
  MatN a = m;
  MatN inv = MatN::identity(m.n);
  for (int c = 0; c < a.n; ++c) {
    int piv = c;
    for (int r = c + 1; r < a.n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    require(a(piv, c) != 0.0, ErrorKind::SingularMetric, "matrix not invertible");
    if (piv != c) {
      std::swap(a.a[static_cast<size_t>(piv)], a.a[static_cast<size_t>(c)]);
      std::swap(inv.a[static_cast<size_t>(piv)], inv.a[static_cast<size_t>(c)]);
    }
    const double d = a(c, c);
    for (int j = 0; j < a.n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (int r = 0; r < a.n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (int j = 0; j < a.n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

VecN solve(const MatN& m, const VecN& x) { return matvec(inverse(m), x); }

}  // namespace weylscope

namespace weylscope::geometry {

double RevolutionProfile::r(double s) const {
  const double sn = std::sin(s);
  return sn + beta * sn * sn * sn;
}

double RevolutionProfile::dr(double s) const {
  const double sn = std::sin(s), cs = std::cos(s);
  return cs * (1.0 + 3.0 * beta * sn * sn);
}

double RevolutionProfile::d2r(double s) const {
  const double sn = std::sin(s), cs = std::cos(s);
  return -sn * (1.0 + 3.0 * beta * sn * sn) + 6.0 * beta * sn * cs * cs;
}

namespace {

RevolutionProfile catalog_profile(const std::string& name) {
  RevolutionProfile p;
  p.name = name;
  if (name == "sphere")
    p.beta = 0.0;
  else if (name == "prolate")
    p.beta = -0.2;
  else if (name == "oblate")
    p.beta = 0.3;
  else if (name == "peanut")
    p.beta = -0.6;
  else
    fail(ErrorKind::Config, "unknown revolution profile '" + name + "'");
  return p;
}

// Plane bump b_ij(x) = chi(u) E(x) [ (1 - 9u) delta_ij + 9 x_i x_j ],
// E = exp(-u), u = |x|^2, chi a C^4 polynomial step equal to 1 for u <= 9
// and identically 0 for u >= 25, so the metric g = I + eps b is bitwise
// Euclidean outside radius 5. The radial eigenvalue of chi E core is
// evaluated directly in tests; positivity holds for eps <= 0.33 since
// 0 <= chi <= 1 only shrinks the perturbation.
struct Cutoff {
  double c = 0.0, dc = 0.0, d2c = 0.0;  // chi(u), d chi/du, d^2 chi/du^2
  explicit Cutoff(double u) {
    const double u0 = 9.0, u1 = 25.0;
    if (u <= u0) {
      c = 1.0;
    } else if (u < u1) {
      const double w = u1 - u0;
      const double s = (u1 - u) / w;
      // C^4 step: S(0)=0, S(1)=1, S'..S'''' vanish at both ends
      const double s2 = s * s, s4 = s2 * s2;
      c = s4 * s * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + s * 70.0))));
      const double ds =
          s4 * (630.0 + s * (-2520.0 + s * (3780.0 + s * (-2520.0 + s * 630.0))));
      const double d2s =
          s2 * s * (2520.0 + s * (-12600.0 + s * (22680.0 + s * (-17640.0 + s * 5040.0))));
      dc = -ds / w;
      d2c = d2s / (w * w);
    }
  }
};

struct Bump {
  double E, u;
  double x1, x2;
  Cutoff chi;
  explicit Bump(const VecN& x) : chi(x[0] * x[0] + x[1] * x[1]) {
    x1 = x[0];
    x2 = x[1];
    u = x1 * x1 + x2 * x2;
    E = std::exp(-u);
  }
  double b_raw(int i, int j) const {
    const double xi = i == 0 ? x1 : x2;
    const double xj = j == 0 ? x1 : x2;
    return E * ((1.0 - 9.0 * u) * (i == j ? 1.0 : 0.0) + 9.0 * xi * xj);
  }
  // d b_raw_ij / d x_k
  double db_raw(int i, int j, int k) const {
    const double xi = i == 0 ? x1 : x2;
    const double xj = j == 0 ? x1 : x2;
    const double xk = k == 0 ? x1 : x2;
    const double dij = i == j ? 1.0 : 0.0;
    const double core = (1.0 - 9.0 * u) * dij + 9.0 * xi * xj;
    const double dcore = -18.0 * xk * dij + 9.0 * ((i == k ? 1.0 : 0.0) * xj + xi * (j == k ? 1.0 : 0.0));
    return E * (dcore - 2.0 * xk * core);
  }
  // d^2 b_raw_ij / d x_k d x_l
  double d2b_raw(int i, int j, int k, int l) const {
    const double xi = i == 0 ? x1 : x2;
    const double xj = j == 0 ? x1 : x2;
    const double xk = k == 0 ? x1 : x2;
    const double xl = l == 0 ? x1 : x2;
    const double dij = i == j ? 1.0 : 0.0;
    const double dkl = k == l ? 1.0 : 0.0;
    const double dik = i == k ? 1.0 : 0.0, djk = j == k ? 1.0 : 0.0;
    const double dil = i == l ? 1.0 : 0.0, djl = j == l ? 1.0 : 0.0;
    const double core = (1.0 - 9.0 * u) * dij + 9.0 * xi * xj;
    const double dcore_k = -18.0 * xk * dij + 9.0 * (dik * xj + xi * djk);
    const double dcore_l = -18.0 * xl * dij + 9.0 * (dil * xj + xi * djl);
    const double d2core = -18.0 * dkl * dij + 9.0 * (dik * djl + dil * djk);
    // d/dx_l [ E (dcore_k - 2 x_k core) ]
    return E * (-2.0 * xl * (dcore_k - 2.0 * xk * core) + d2core - 2.0 * dkl * core -
                2.0 * xk * dcore_l);
  }
  double b(int i, int j) const { return chi.c == 0.0 ? 0.0 : chi.c * b_raw(i, j); }
  // product rule with chi(u(x)): du/dx_k = 2 x_k
  double db(int i, int j, int k) const {
    if (chi.c == 0.0 && chi.dc == 0.0) return 0.0;
    const double xk = k == 0 ? x1 : x2;
    return chi.c * db_raw(i, j, k) + chi.dc * 2.0 * xk * b_raw(i, j);
  }
  double d2b(int i, int j, int k, int l) const {
    if (chi.c == 0.0 && chi.dc == 0.0 && chi.d2c == 0.0) return 0.0;
    const double xk = k == 0 ? x1 : x2;
    const double xl = l == 0 ? x1 : x2;
    const double dkl = k == l ? 1.0 : 0.0;
    return chi.c * d2b_raw(i, j, k, l) + chi.dc * 2.0 * xl * db_raw(i, j, k) +
           chi.dc * 2.0 * xk * db_raw(i, j, l) +
           (chi.d2c * 4.0 * xk * xl + chi.dc * 2.0 * dkl) * b_raw(i, j);
  }
};

void derive_inverse_data(MetricData& md) {
  md.ginv = inverse(md.g);
  const double dg = det(md.g);
  require(dg > 0.0, ErrorKind::SingularMetric, "metric determinant not positive");
  md.sqrtdet = std::sqrt(dg);
  md.dsqrtdet = VecN(md.n);
  for (int k = 0; k < md.n; ++k) {
    // d g^{-1} = -g^{-1} (d g) g^{-1};  d sqrt(det g) = sqrt(det g) tr(g^{-1} dg) / 2
    md.dginv[static_cast<size_t>(k)] =
        -1.0 * matmul(md.ginv, matmul(md.dg[static_cast<size_t>(k)], md.ginv));
    double tr = 0;
    const MatN gd = matmul(md.ginv, md.dg[static_cast<size_t>(k)]);
    for (int i = 0; i < md.n; ++i) tr += gd(i, i);
    md.dsqrtdet[k] = 0.5 * md.sqrtdet * tr;
  }
  if (md.second_order) {
    for (int k = 0; k < md.n; ++k)
      for (int l = 0; l < md.n; ++l) {
        const MatN& gk = md.dg[static_cast<size_t>(k)];
        const MatN& gl = md.dg[static_cast<size_t>(l)];
        const MatN& gkl = md.d2g[static_cast<size_t>(k)][static_cast<size_t>(l)];
        MatN t = -1.0 * matmul(md.ginv, matmul(gkl, md.ginv));
        t = t + matmul(md.ginv, matmul(gl, matmul(md.ginv, matmul(gk, md.ginv))));
        t = t + matmul(md.ginv, matmul(gk, matmul(md.ginv, matmul(gl, md.ginv))));
        md.d2ginv[static_cast<size_t>(k)][static_cast<size_t>(l)] = t;
      }
  }
}

}  // namespace

ManifoldModel ManifoldModel::flat_torus(const MatN& lattice) {
  require(lattice.n >= 1 && lattice.n <= 4, ErrorKind::Config, "torus dimension must be 1..4");
  require(std::abs(det(lattice)) > 1e-12, ErrorKind::Config, "torus lattice is singular");
  ManifoldModel m;
  m.kind_ = ModelKind::FlatTorus;
  m.dim_ = lattice.n;
  m.lattice_ = lattice;
  return m;
}

ManifoldModel ManifoldModel::sphere2(double radius) {
  require(radius > 0.0, ErrorKind::Config, "sphere radius must be positive");
  ManifoldModel m;
  m.kind_ = ModelKind::Sphere2;
  m.dim_ = 2;
  m.radius_ = radius;
  return m;
}

ManifoldModel ManifoldModel::revolution(const std::string& profile_name) {
  ManifoldModel m;
  m.kind_ = ModelKind::SurfaceOfRevolution;
  m.dim_ = 2;
  m.profile_ = catalog_profile(profile_name);
  return m;
}

ManifoldModel ManifoldModel::perturbed_plane(double eps) {
  require(eps >= 0.0 && eps <= 0.33, ErrorKind::Config,
          "plane bump eps outside [0, 0.33] breaks positivity");
  ManifoldModel m;
  m.kind_ = ModelKind::PerturbedPlane;
  m.dim_ = 2;
  m.eps_ = eps;
  return m;
}

ManifoldModel ManifoldModel::preset(const std::string& name) {
  if (name == "torus-2pi") {
    MatN a(2);
    a(0, 0) = kTwoPi;
    a(1, 1) = kTwoPi;
    return flat_torus(a);
  }
  if (name == "torus-rect") {
    MatN a(2);
    a(0, 0) = kTwoPi;
    a(1, 1) = kTwoPi * std::sqrt(2.0);
    return flat_torus(a);
  }
  if (name == "sphere") return sphere2(1.0);
  if (name == "prolate" || name == "oblate" || name == "peanut") return revolution(name);
  if (name == "plane") return perturbed_plane(0.05);
  if (name == "plane-trap") return perturbed_plane(0.3);
  fail(ErrorKind::Config, "unknown model preset '" + name + "'");
}

const MatN& ManifoldModel::lattice() const {
  require(kind_ == ModelKind::FlatTorus, ErrorKind::Config, "lattice() needs a flat torus");
  return lattice_;
}

double ManifoldModel::radius() const {
  require(kind_ == ModelKind::Sphere2, ErrorKind::Config, "radius() needs a sphere");
  return radius_;
}

const RevolutionProfile& ManifoldModel::profile() const {
  require(kind_ == ModelKind::SurfaceOfRevolution, ErrorKind::Config,
          "profile() needs a surface of revolution");
  return profile_;
}

double ManifoldModel::eps() const {
  require(kind_ == ModelKind::PerturbedPlane, ErrorKind::Config, "eps() needs a perturbed plane");
  return eps_;
}

double ManifoldModel::bump_support_radius() const {
  require(kind_ == ModelKind::PerturbedPlane, ErrorKind::Config,
          "bump support radius needs a perturbed plane");
  return 5.0;
}

MetricData ManifoldModel::metric_at(const VecN& x, int order) const {
  require(x.n == dim_, ErrorKind::Config, "point dimension does not match the model");
  require(order == 1 || order == 2, ErrorKind::Config, "metric_at order must be 1 or 2");
  MetricData md;
  md.n = dim_;
  md.second_order = order == 2;
  md.g = MatN(dim_);
  for (auto& m : md.dg) m = MatN(dim_);
  for (auto& row : md.d2g)
    for (auto& m : row) m = MatN(dim_);

  switch (kind_) {
    case ModelKind::FlatTorus:
      md.g = MatN::identity(dim_);
      break;
    case ModelKind::Sphere2: {
      const double th = x[0];
      require(th > kPoleExclusion && th < kPi - kPoleExclusion, ErrorKind::OutOfChart,
              "polar angle within 1e-6 of a pole");
      const double r2 = radius_ * radius_;
      const double sn = std::sin(th);
      md.g(0, 0) = r2;
      md.g(1, 1) = r2 * sn * sn;
      md.dg[0](1, 1) = r2 * std::sin(2.0 * th);
      if (md.second_order) md.d2g[0][0](1, 1) = 2.0 * r2 * std::cos(2.0 * th);
      break;
    }
    case ModelKind::SurfaceOfRevolution: {
      const double s = x[0];
      require(s > 0.0 && s < profile_.length, ErrorKind::OutOfChart,
              "profile parameter outside (0, length)");
      const double r = profile_.r(s);
      require(r > 0.0, ErrorKind::SingularMetric, "profile radius not positive");
      const double r1 = profile_.dr(s), r2 = profile_.d2r(s);
      md.g(0, 0) = 1.0;
      md.g(1, 1) = r * r;
      md.dg[0](1, 1) = 2.0 * r * r1;
      if (md.second_order) md.d2g[0][0](1, 1) = 2.0 * (r1 * r1 + r * r2);
      break;
    }
    case ModelKind::PerturbedPlane: {
      const Bump bp(x);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          md.g(i, j) = (i == j ? 1.0 : 0.0) + eps_ * bp.b(i, j);
          for (int k = 0; k < 2; ++k) {
            md.dg[static_cast<size_t>(k)](i, j) = eps_ * bp.db(i, j, k);
            if (md.second_order)
              for (int l = 0; l < 2; ++l)
                md.d2g[static_cast<size_t>(k)][static_cast<size_t>(l)](i, j) =
                    eps_ * bp.d2b(i, j, k, l);
          }
        }
      break;
    }
  }
  derive_inverse_data(md);
  return md;
}

double ManifoldModel::cosymbol(const VecN& x, const VecN& xi) const {
  const MetricData md = metric_at(x);
  return dot(xi, matvec(md.ginv, xi));
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
  struct Rec {
    static double simpson(double a, double b, double fa, double fm, double fb) {
      return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }
    static double go(const std::function<double(double)>& f, double a, double b, double fa,
                     double fm, double fb, double whole, double tol, int depth) {
      require(depth < 60, ErrorKind::Quadrature, "adaptive quadrature depth cap reached");
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = simpson(a, m, fa, flm, fm);
      const double right = simpson(m, b, fm, frm, fb);
      if (std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
      return go(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) +
             go(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1);
    }
  };
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  require(finite(fa) && finite(fm) && finite(fb), ErrorKind::Quadrature,
          "integrand not finite");
  const double whole = Rec::simpson(a, b, fa, fm, fb);
  return Rec::go(f, a, b, fa, fm, fb, whole, tol, 0);
}

PhaseVolumes ManifoldModel::phase_volumes(double tol) const {
  PhaseVolumes pv;
  switch (kind_) {
    case ModelKind::FlatTorus:
      pv.vol_x = std::abs(det(lattice_));
      break;
    case ModelKind::Sphere2:
      pv.vol_x = 4.0 * kPi * radius_ * radius_;
      break;
    case ModelKind::SurfaceOfRevolution:
      pv.vol_x = kTwoPi * integrate_adaptive([this](double s) { return profile_.r(s); }, 0.0,
                                             profile_.length, tol / kTwoPi);
      break;
    case ModelKind::PerturbedPlane:
      fail(ErrorKind::Config, "phase volumes need a compact model");
  }
  pv.vol_bstar = unit_ball_volume(dim_) * pv.vol_x;
  return pv;
}

std::string ManifoldModel::descriptor() const {
  nlohmann::json j;
  switch (kind_) {
    case ModelKind::FlatTorus: {
      j["kind"] = "flat_torus";
      auto rows = nlohmann::json::array();
      for (int i = 0; i < dim_; ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < dim_; ++k) row.push_back(lattice_(i, k));
        rows.push_back(row);
      }
      j["lattice"] = rows;
      break;
    }
    case ModelKind::Sphere2:
      j["kind"] = "sphere2";
      j["radius"] = radius_;
      break;
    case ModelKind::SurfaceOfRevolution:
      j["kind"] = "revolution";
      j["profile"] = profile_.name;
      break;
    case ModelKind::PerturbedPlane:
      j["kind"] = "perturbed_plane";
      j["eps"] = eps_;
      break;
  }
  return j.dump();
}

ManifoldModel ManifoldModel::from_descriptor(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    fail(ErrorKind::Config, std::string("model descriptor is not valid json: ") + e.what());
  }
  require(j.contains("kind"), ErrorKind::Config, "model descriptor lacks 'kind'");
  const std::string kind = j["kind"];
  if (kind == "flat_torus") {
    const auto& rows = j.at("lattice");
    const int n = static_cast<int>(rows.size());
    require(n >= 1 && n <= 4, ErrorKind::Config, "lattice must be 1x1 .. 4x4");
    MatN a(n);
    for (int i = 0; i < n; ++i) {
      require(static_cast<int>(rows[static_cast<size_t>(i)].size()) == n, ErrorKind::Config,
              "lattice rows must be square");
      for (int k = 0; k < n; ++k) a(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
    }
    return flat_torus(a);
  }
  if (kind == "sphere2") return sphere2(j.at("radius").get<double>());
  if (kind == "revolution") return revolution(j.at("profile").get<std::string>());
  if (kind == "perturbed_plane") return perturbed_plane(j.at("eps").get<double>());
  fail(ErrorKind::Config, "unknown model kind '" + kind + "'");
}

}  // namespace weylscope::geometry
