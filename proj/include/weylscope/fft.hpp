#pragma once

#include <vector>

#include "weylscope/common.hpp"

namespace weylscope::fft {

// RAII wrapper around FFTW complex transforms of one fixed shape.
// Plans are created once (thread-safe via a global planning lock) and can be
// executed on any buffer of matching size, in place.
class Fft {
 public:
  explicit Fft(std::vector<int> dims);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void forward(cplx* data) const;   // sum with e^{-i k.x}, unnormalized
  void backward(cplx* data) const;  // sum with e^{+i k.x}, unnormalized
  size_t size() const { return size_; }
  const std::vector<int>& dims() const { return dims_; }

 private:
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  std::vector<int> dims_;
  size_t size_ = 0;
};

// Angular frequencies 2 pi k / (n dx) of an n-point axis, FFT bin order.
std::vector<double> angular_freqs(int n, double dx);

// F_k = sum_j c_j exp(-i k x_j) for every integer k in [kmin, kmax], via
// exponential-of-semicircle gridding and one 2x-oversampled FFT. Agrees
// with the direct sum to roughly 1e-12 relative.
std::vector<cplx> nufft_exponential_sum(const std::vector<double>& x, const std::vector<cplx>& c,
                                        long kmin, long kmax);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace weylscope::fft
