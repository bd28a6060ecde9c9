#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <stdexcept>
#include <utility>

namespace epdiff::fft {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using Buffer = std::unique_ptr<T[], FftwFree>;

inline Buffer<double> alloc_real(std::size_t n) {
  auto* p = fftw_alloc_real(n);
  if (p == nullptr) throw std::bad_alloc();
  return Buffer<double>(p);
}

inline Buffer<fftw_complex> alloc_complex(std::size_t n) {
  auto* p = fftw_alloc_complex(n);
  if (p == nullptr) throw std::bad_alloc();
  return Buffer<fftw_complex>(p);
}

namespace detail {
inline std::array<int, 3> smooth_exponents(int m) {
  std::array<int, 3> e{0, 0, 0};
  int k = 0;
  for (int p : {2, 3, 5}) {
    while (m % p == 0) {
      m /= p;
      ++e[static_cast<std::size_t>(k)];
    }
    ++k;
  }
  if (m != 1) e[0] = -1;
  return e;
}
}  // namespace detail

/// Smallest integer >= n whose only prime factors are 2, 3 and 5.
inline int smooth_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    if (detail::smooth_exponents(m)[0] >= 0) return m;
  }
}

/// Padded transform length: the smallest even integer >= n of the form
/// 2^a 3^b 5^c with b <= 1. With FFTW_ESTIMATE plans, odd lengths and
/// higher powers of 3 run two to three times slower per point in the
/// real-data transforms (for example 135 against 144 or 150).
inline int fft_friendly_size(int n) {
  for (int m = std::max(n, 2);; ++m) {
    const auto e = detail::smooth_exponents(m);
    if (e[0] >= 1 && e[1] <= 1) return m;
  }
}

/// Real <-> half-complex transforms on the cube n^dim. Unnormalized, FFTW sign
/// conventions: forward uses exp(-2 pi i k.x/n), backward exp(+2 pi i k.x/n).
///
/// Plans are built with FFTW_ESTIMATE so that the chosen algorithm, and hence
/// every result bit, is the same from one process to the next.
class RealTransform {
 public:
  RealTransform(int dim, int n) : dim_(dim), n_(n) {
    if (dim < 1 || dim > 3 || n < 1) throw std::invalid_argument("RealTransform: bad shape");
    int dims[3] = {n, n, n};
    real_size_ = 1;
    for (int k = 0; k < dim; ++k) real_size_ *= static_cast<std::size_t>(n);
    half_size_ = real_size_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);
    auto r = alloc_real(real_size_);
    auto c = alloc_complex(half_size_);
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c(dim, dims, r.get(), c.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(dim, dims, c.get(), r.get(), FFTW_ESTIMATE);
    if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("RealTransform: FFTW planning failed");
  }

  RealTransform(const RealTransform&) = delete;
  RealTransform& operator=(const RealTransform&) = delete;

  ~RealTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t real_size() const { return real_size_; }
  /// n^(dim-1) * (n/2 + 1); last axis is the halved one.
  std::size_t half_size() const { return half_size_; }
  int half_last() const { return n_ / 2 + 1; }

  /// Arrays must come from alloc_real / alloc_complex.
  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
  /// Destroys `in`.
  void backward(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(backward_, in, out); }

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

 private:
  int dim_;
  int n_;
  std::size_t real_size_ = 0;
  std::size_t half_size_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Shared, cached transform for the given shape.
inline std::shared_ptr<const RealTransform> real_transform(int dim, int n) {
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const RealTransform>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{dim, n}];
  if (!slot) slot = std::make_shared<const RealTransform>(dim, n);
  return slot;
}

}  // namespace epdiff::fft
