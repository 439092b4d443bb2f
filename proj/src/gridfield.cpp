#include "weylscope/gridfield.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "weylscope/fft.hpp"
#include "weylscope/parallel.hpp"

namespace weylscope::grid {

namespace {

bool power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

// One cached plan pair per grid shape; plans are reusable on any buffer.
const fft::Fft& plan_for(const std::vector<int>& dims) {
  static std::mutex mu;
  static std::map<std::vector<int>, std::unique_ptr<fft::Fft>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dims);
  if (it == cache.end()) it = cache.emplace(dims, std::make_unique<fft::Fft>(dims)).first;
  return *it->second;
}

MatN dual_matrix(const GridField& f) {
  return kTwoPi * transpose(inverse(f.lattice));
}

}  // namespace

GridField make_field(const std::vector<int>& dims, const MatN& lattice) {
  GridField f;
  require(!dims.empty() && dims.size() <= 4, ErrorKind::Config, "grid rank must be 1..4");
  require(lattice.n == static_cast<int>(dims.size()), ErrorKind::Config,
          "lattice dimension must match grid rank");
  std::size_t total = 1;
  for (int d : dims) {
    require(power_of_two(d), ErrorKind::Config, "grid axis lengths must be powers of two");
    total *= static_cast<std::size_t>(d);
  }
  require(std::abs(det(lattice)) > 1e-14, ErrorKind::Config, "degenerate grid lattice");
  f.dims = dims;
  f.lattice = lattice;
  f.values.assign(total, cplx(0.0, 0.0));
  return f;
}

GridField make_box_field(const std::vector<int>& dims, const std::vector<double>& len) {
  require(len.size() == dims.size(), ErrorKind::Config, "box lengths must match grid rank");
  MatN a(static_cast<int>(dims.size()));
  for (std::size_t i = 0; i < len.size(); ++i) {
    require(len[i] > 0.0, ErrorKind::Config, "box side lengths must be positive");
    a(static_cast<int>(i), static_cast<int>(i)) = len[i];
  }
  return make_field(dims, a);
}

std::size_t flat_index(const GridField& f, const std::array<int, 4>& idx) {
  std::size_t flat = 0;
  for (int a = 0; a < f.rank(); ++a) {
    int m = idx[static_cast<size_t>(a)];
    require(m >= 0 && m < f.dims[static_cast<size_t>(a)], ErrorKind::Config,
            "grid index out of range");
    flat = flat * static_cast<std::size_t>(f.dims[static_cast<size_t>(a)]) +
           static_cast<std::size_t>(m);
  }
  return flat;
}

void unflatten(const GridField& f, std::size_t flat, std::array<int, 4>& idx) {
  for (int a = f.rank() - 1; a >= 0; --a) {
    int d = f.dims[static_cast<size_t>(a)];
    idx[static_cast<size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(d));
    flat /= static_cast<std::size_t>(d);
  }
}

int signed_bin(int m, int n_axis) { return m <= n_axis / 2 ? m : m - n_axis; }

VecN position_at(const GridField& f, const std::array<int, 4>& idx) {
  VecN frac(f.rank());
  for (int a = 0; a < f.rank(); ++a)
    frac[a] = static_cast<double>(idx[static_cast<size_t>(a)]) /
              static_cast<double>(f.dims[static_cast<size_t>(a)]);
  return matvec(f.lattice, frac);
}

VecN frequency_at(const GridField& f, const std::array<int, 4>& idx) {
  VecN wind(f.rank());
  for (int a = 0; a < f.rank(); ++a)
    wind[a] = static_cast<double>(
        signed_bin(idx[static_cast<size_t>(a)], f.dims[static_cast<size_t>(a)]));
  return matvec(dual_matrix(f), wind);
}

double box_volume(const GridField& f) { return std::abs(det(f.lattice)); }

double cell_volume(const GridField& f) {
  return box_volume(f) / static_cast<double>(f.size());
}

GridField to_frequency(const GridField& f) {
  require(f.space == Space::Position, ErrorKind::Config,
          "to_frequency expects a position-space field");
  GridField out = f;
  plan_for(out.dims).forward(out.values.data());
  out.space = Space::Frequency;
  return out;
}

GridField to_position(const GridField& f) {
  require(f.space == Space::Frequency, ErrorKind::Config,
          "to_position expects a frequency-space field");
  GridField out = f;
  plan_for(out.dims).backward(out.values.data());
  const double inv = 1.0 / static_cast<double>(out.size());
  for (cplx& v : out.values) v *= inv;
  out.space = Space::Position;
  return out;
}

double l2_norm(const GridField& f) {
  const cplx* v = f.values.data();
  double s2 = par::blocked_sum(f.size(), [v](std::size_t i) { return std::norm(v[i]); });
  double weight = f.space == Space::Position
                      ? cell_volume(f)
                      : cell_volume(f) / static_cast<double>(f.size());
  return std::sqrt(weight * s2);
}

double l2_error(const GridField& a, const GridField& b) {
  require(a.dims == b.dims && a.space == b.space, ErrorKind::Config,
          "l2_error needs fields of identical shape and tag");
  const cplx* va = a.values.data();
  const cplx* vb = b.values.data();
  double s2 =
      par::blocked_sum(a.size(), [va, vb](std::size_t i) { return std::norm(va[i] - vb[i]); });
  double weight = a.space == Space::Position
                      ? cell_volume(a)
                      : cell_volume(a) / static_cast<double>(a.size());
  return std::sqrt(weight * s2);
}

void apply_multiplier(GridField& f, const std::function<cplx(const VecN&)>& w) {
  require(f.space == Space::Frequency, ErrorKind::Config,
          "frequency multipliers act on frequency-space fields");
  const MatN dual = dual_matrix(f);
  const int n = f.rank();
  par::parallel_for(f.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    unflatten(f, i, idx);
    VecN wind(n);
    for (int a = 0; a < n; ++a)
      wind[a] = static_cast<double>(
          signed_bin(idx[static_cast<size_t>(a)], f.dims[static_cast<size_t>(a)]));
    f.values[i] *= w(matvec(dual, wind));
  });
}

void fill(GridField& f, const std::function<cplx(const VecN&)>& fn) {
  require(f.space == Space::Position, ErrorKind::Config, "fill writes position samples");
  par::parallel_for(f.size(), [&](std::size_t i) {
    std::array<int, 4> idx{};
    unflatten(f, i, idx);
    f.values[i] = fn(position_at(f, idx));
  });
}

}  // namespace weylscope::grid
