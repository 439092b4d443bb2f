#include "weylscope/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace weylscope::tridiag {

namespace {

double pivot_floor(const SymTridiag& T) {
  double b2 = 1.0;
  for (double b : T.off) b2 = std::max(b2, b * b);
  return std::numeric_limits<double>::min() * b2 * 64.0;
}

int count_below_impl(const SymTridiag& T, double x, double pivmin) {
  int cnt = 0;
  double d = 1.0;
  const size_t n = T.diag.size();
  for (size_t i = 0; i < n; ++i) {
    const double b2 = i ? T.off[i - 1] * T.off[i - 1] : 0.0;
    d = (T.diag[i] - x) - b2 / d;
    if (std::abs(d) < pivmin) d = -pivmin;
    if (d < 0.0) ++cnt;
  }
  return cnt;
}

}  // namespace

int count_below(const SymTridiag& T, double x) {
  require(!T.diag.empty(), ErrorKind::Config, "empty tridiagonal matrix");
  require(T.off.size() + 1 == T.diag.size(), ErrorKind::Config,
          "tridiagonal off-diagonal length mismatch");
  return count_below_impl(T, x, pivot_floor(T));
}

double gershgorin_lower(const SymTridiag& T) {
  double lo = std::numeric_limits<double>::infinity();
  const size_t n = T.diag.size();
  for (size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(T.off[i - 1]);
    if (i + 1 < n) r += std::abs(T.off[i]);
    lo = std::min(lo, T.diag[i] - r);
  }
  return lo;
}

double gershgorin_upper(const SymTridiag& T) {
  double hi = -std::numeric_limits<double>::infinity();
  const size_t n = T.diag.size();
  for (size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(T.off[i - 1]);
    if (i + 1 < n) r += std::abs(T.off[i]);
    hi = std::max(hi, T.diag[i] + r);
  }
  return hi;
}

std::vector<double> eigenvalues_in(const SymTridiag& T, double lo, double hi, double tol) {
  require(tol > 0.0, ErrorKind::Config, "bisection tolerance must be positive");
  require(lo < hi, ErrorKind::Config, "empty bisection window");
  require(!T.diag.empty(), ErrorKind::Config, "empty tridiagonal matrix");
  require(T.off.size() + 1 == T.diag.size(), ErrorKind::Config,
          "tridiagonal off-diagonal length mismatch");
  const double pivmin = pivot_floor(T);

  struct Segment {
    double lo, hi;
    int nlo, nhi;  // Sturm counts at the endpoints
  };
  std::vector<Segment> work;
  std::vector<std::pair<int, double>> found;  // (index, value) for stable ordering
  work.push_back({lo, hi, count_below_impl(T, lo, pivmin), count_below_impl(T, hi, pivmin)});
  while (!work.empty()) {
    Segment s = work.back();
    work.pop_back();
    const int k = s.nhi - s.nlo;
    if (k <= 0) continue;
    if (s.hi - s.lo <= tol) {
      const double v = 0.5 * (s.lo + s.hi);
      for (int i = 0; i < k; ++i) found.emplace_back(s.nlo + i, v);
      continue;
    }
    const double mid = 0.5 * (s.lo + s.hi);
    const int nmid = count_below_impl(T, mid, pivmin);
    work.push_back({s.lo, mid, s.nlo, nmid});
    work.push_back({mid, s.hi, nmid, s.nhi});
  }
  std::sort(found.begin(), found.end());
  std::vector<double> out;
  out.reserve(found.size());
  for (auto& [idx, v] : found) out.push_back(v);
  return out;
}

}  // namespace weylscope::tridiag
