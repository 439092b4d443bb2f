#pragma once

#include <array>
#include <cmath>

#include "weylscope/common.hpp"

// Tiny fixed-capacity vectors and square matrices (n <= 4). Everything the
// geometry and flow code needs lives here; no external linear algebra.

namespace weylscope {

struct VecN {
  int n = 2;
  std::array<double, 4> v{};

  VecN() = default;
  explicit VecN(int dim) : n(dim) {}
  VecN(double a, double b) : n(2), v{a, b, 0, 0} {}
  VecN(double a, double b, double c) : n(3), v{a, b, c, 0} {}

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

inline VecN operator+(VecN a, const VecN& b) {
  for (int i = 0; i < a.n; ++i) a[i] += b[i];
  return a;
}
inline VecN operator-(VecN a, const VecN& b) {
  for (int i = 0; i < a.n; ++i) a[i] -= b[i];
  return a;
}
inline VecN operator*(double s, VecN a) {
  for (int i = 0; i < a.n; ++i) a[i] *= s;
  return a;
}
inline double dot(const VecN& a, const VecN& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const VecN& a) { return std::sqrt(dot(a, a)); }

struct MatN {
  int n = 2;
  std::array<std::array<double, 4>, 4> a{};

  MatN() = default;
  explicit MatN(int dim) : n(dim) {}

  double& operator()(int i, int j) { return a[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
  double operator()(int i, int j) const {
    return a[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }

  static MatN identity(int dim) {
    MatN m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline MatN operator+(MatN x, const MatN& y) {
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) x(i, j) += y(i, j);
  return x;
}
inline MatN operator*(double s, MatN x) {
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) x(i, j) *= s;
  return x;
}

inline VecN matvec(const MatN& m, const VecN& x) {
  VecN y(m.n);
  for (int i = 0; i < m.n; ++i) {
    double s = 0;
    for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline MatN matmul(const MatN& x, const MatN& y) {
  MatN z(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) {
      double s = 0;
      for (int k = 0; k < x.n; ++k) s += x(i, k) * y(k, j);
      z(i, j) = s;
    }
  return z;
}

inline MatN transpose(const MatN& m) {
  MatN t(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) t(i, j) = m(j, i);
  return t;
}

double det(const MatN& m);

// Gaussian elimination with partial pivoting; throws on singular input.
MatN inverse(const MatN& m);

// Solve m y = x.
VecN solve(const MatN& m, const VecN& x);

}  // namespace weylscope
