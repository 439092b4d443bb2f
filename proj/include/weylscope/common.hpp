#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace weylscope {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSqrtTwoPi = 2.50662827463100050241;

using cplx = std::complex<double>;

// Failure taxonomy shared by every module. The CLI maps these onto its exit
// codes; library code always throws instead of printing.
enum class ErrorKind {
  Config,          // bad arguments, malformed descriptors, unusable grids
  OutOfChart,      // point outside the coordinate chart of a model
  SingularMetric,  // metric not positive definite where required
  Quadrature,      // adaptive quadrature failed to reach tolerance
  StepUnderflow,   // adaptive integrator step fell below the floor
  DriftExceeded,   // conserved quantity drifted past its gate
  Inconclusive,    // a classifier could not decide (tangency, low contrast)
  Overflow,        // enumeration or table would exceed its hard cap
  MeshTooCoarse,   // resolution gate failed (Richardson, shells)
  BeyondCutoff,    // evaluation past the guaranteed-complete part of a table
  Nyquist,         // sampling grid cannot represent the requested band
  Degenerate,      // degenerate geometry where nondegeneracy was required
  CrowdedLengths,  // length spectrum too crowded for the requested window
  BoundaryLeak,    // mass reached the boundary monitor region
  CausticReached,  // ray map Jacobian collapsed before requested time
  GateFailed,      // a mandatory sanity gate did not pass
  Io,              // file format or filesystem trouble
  Internal,        // invariant broken inside the library
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool ok, ErrorKind k, const std::string& msg) {
  if (!ok) fail(k, msg);
}

inline bool finite(double x) { return std::isfinite(x); }

// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    case 4: return kPi * kPi / 2.0;
    default: fail(ErrorKind::Config, "unit_ball_volume: dimension must be 1..4");
  }
}

}  // namespace weylscope
