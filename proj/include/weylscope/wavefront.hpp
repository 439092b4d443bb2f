#pragma once

#include <string>
#include <vector>

#include "weylscope/gridfield.hpp"

// Windowed cone scanning for wavefront sets of sampled fields on flat box
// tori, a separable symbol quantizer, and the half-wave propagator used to
// verify that detected singularities travel along straight characteristics.
//
// A probe pins a base point, a unit direction, a smooth window radius and a
// cone half-angle. Scanning multiplies the field by the window, transforms,
// takes the sup of |v_hat| over each dyadic shell intersected with the cone,
// and fits a power law through the shell sups. Fast decay means no wavefront
// in that cone; slow decay means a singularity. The thresholds below were
// calibrated on a 1-D step (exponent 1) and a Gaussian, then frozen.

namespace weylscope::wavefront {

enum class ScanClass { Smooth, Singular, Inconclusive };

const char* to_string(ScanClass c);

inline constexpr double kSmoothExponent = 4.0;
inline constexpr double kSingularExponent = 1.5;
inline constexpr double kResidualGate = 0.3;

struct ConeProbe {
  VecN x0;
  VecN direction;               // unit vector
  double window_radius = 0.35;  // support radius of the smooth window
  double angular_width = 0.35;  // cone half-angle, radians, in (0, pi/2)
  int shell_min = 2;            // lowest dyadic shell [2^j, 2^{j+1})
};

struct ProbeReport {
  ConeProbe probe;
  double exponent = 0.0;
  double residual = 0.0;
  ScanClass cls = ScanClass::Inconclusive;
  std::vector<double> shell_sup;
};

std::vector<ProbeReport> wavefront_scan(const grid::GridField& u,
                                        const std::vector<ConeProbe>& probes);

// Left quantization of a sum of separable symbol terms f(x) g(k):
// Op(a)u = sum_r f_r(x) . F^{-1}[ g_r(k) u_hat(k) ].
struct SymbolTerm {
  std::function<cplx(const VecN&)> space;
  std::function<cplx(const VecN&)> freq;
};

enum class QuantizePath { Auto, Direct, Fourier };

grid::GridField quantize_symbol(const std::vector<SymbolTerm>& terms, const grid::GridField& u,
                                QuantizePath path = QuantizePath::Auto);

// Half-wave propagator e^{-it|D|} as the Fourier multiplier e^{-it|k|}.
grid::GridField halfwave_evolve(const grid::GridField& u, double t);

struct TransportEntry {
  ConeProbe probe;
  VecN x_target;
  ScanClass at_source_before = ScanClass::Inconclusive;
  ScanClass at_target_after = ScanClass::Inconclusive;
  ScanClass at_source_after = ScanClass::Inconclusive;
  bool ok = false;
};

struct TransportReport {
  double t = 0.0;
  std::vector<TransportEntry> entries;
};

// Evolves u for time t and checks that every given singular probe reappears
// at x0 + t * direction with the same direction, while the vacated base point
// scans smooth. Throws GateFailed listing the offending probes otherwise.
TransportReport halfwave_transport_check(const grid::GridField& u,
                                         const std::vector<ConeProbe>& singular_probes,
                                         double t);

// CSV lines "x0_1,x0_2,dir_angle,exponent,residual,class" for rank <= 2.
std::string report_csv(const std::vector<ProbeReport>& reports);

}  // namespace weylscope::wavefront
