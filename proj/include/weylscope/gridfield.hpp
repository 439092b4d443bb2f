#pragma once

#include <array>
#include <functional>
#include <vector>

#include "weylscope/common.hpp"
#include "weylscope/smallmat.hpp"

// Periodic sampled fields on a torus R^n / (lattice Z^n), n <= 4. Samples are
// complex, stored row major with the last axis fastest, and each axis length
// must be a power of two so the FFT paths stay radix-2. A field is tagged as
// holding position samples or DFT coefficients; the transforms below move
// between the two and keep the tag honest.
//
// Conventions. Grid point m = (m_0 .. m_{n-1}) sits at x = A (m_0/N_0, ...)
// where A is the lattice matrix (generators as columns). Frequency bin m
// carries the dual vector k = 2 pi A^{-T} w(m) with w the usual signed FFT
// winding. to_frequency is the plain unnormalized DFT sum; to_position divides
// by the total point count, so the pair is an exact round trip.

namespace weylscope::grid {

enum class Space { Position, Frequency };

struct GridField {
  std::vector<int> dims;
  MatN lattice{2};
  Space space = Space::Position;
  std::vector<cplx> values;

  int rank() const { return static_cast<int>(dims.size()); }
  std::size_t size() const { return values.size(); }
};

GridField make_field(const std::vector<int>& dims, const MatN& lattice);

// Axis-aligned box with side lengths len[i].
GridField make_box_field(const std::vector<int>& dims, const std::vector<double>& len);

std::size_t flat_index(const GridField& f, const std::array<int, 4>& idx);
void unflatten(const GridField& f, std::size_t flat, std::array<int, 4>& idx);

VecN position_at(const GridField& f, const std::array<int, 4>& idx);
VecN frequency_at(const GridField& f, const std::array<int, 4>& idx);

// Signed FFT winding of one index: m for m <= N/2, m - N above.
int signed_bin(int m, int n_axis);

double box_volume(const GridField& f);
double cell_volume(const GridField& f);

GridField to_frequency(const GridField& f);
GridField to_position(const GridField& f);

// Physical L^2 norm, valid for either tag (Parseval weight in frequency).
double l2_norm(const GridField& f);

double l2_error(const GridField& a, const GridField& b);

// Multiply in place by w(k) over all frequency bins; requires frequency tag.
void apply_multiplier(GridField& f, const std::function<cplx(const VecN&)>& w);

// Fill a position-space field from a pointwise function of x.
void fill(GridField& f, const std::function<cplx(const VecN&)>& fn);

}  // namespace weylscope::grid
