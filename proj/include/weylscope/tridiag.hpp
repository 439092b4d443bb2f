#pragma once

#include <vector>

#include "weylscope/common.hpp"

namespace weylscope::tridiag {

// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct SymTridiag {
  std::vector<double> diag;
  std::vector<double> off;
};

// Number of eigenvalues strictly below x (Sturm count via LDL^T pivots).
int count_below(const SymTridiag& T, double x);

// Gershgorin bounds enclosing the whole spectrum.
double gershgorin_lower(const SymTridiag& T);
double gershgorin_upper(const SymTridiag& T);

// All eigenvalues in [lo, hi), each located by bisection to absolute
// tolerance tol. Shared-prefix interval splitting keeps the cost near
// O(k n log(width/tol)) for k eigenvalues.
std::vector<double> eigenvalues_in(const SymTridiag& T, double lo, double hi, double tol);

}  // namespace weylscope::tridiag
