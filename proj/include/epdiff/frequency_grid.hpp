#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace epdiff {

inline constexpr int kMaxDim = 3;

/// Integer frequency vector; entries beyond the grid dimension are zero.
using Frequency = std::array<int, kMaxDim>;

/// The cube Z_{d,R} = {xi in Z^d : |xi|_inf <= R}, enumerated row-major with
/// the last axis fastest and each axis running from -R to R.
///
/// With this ordering the mirror frequency -xi of the i-th entry sits at
/// size() - 1 - i, and xi = 0 is the center entry.
class FrequencyGrid {
 public:
  FrequencyGrid() = default;

  FrequencyGrid(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
    if (dim < 1 || dim > kMaxDim) {
      throw std::invalid_argument("FrequencyGrid: dimension must be 1, 2 or 3, got " +
                                  std::to_string(dim));
    }
    if (cutoff < 0) {
      throw std::invalid_argument("FrequencyGrid: cutoff must be nonnegative, got " +
                                  std::to_string(cutoff));
    }
    size_ = 1;
    for (int k = 0; k < dim_; ++k) size_ *= static_cast<std::size_t>(side());
  }

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  int side() const { return 2 * cutoff_ + 1; }
  std::size_t size() const { return size_; }
  std::size_t center() const { return (size_ - 1) / 2; }
  std::size_t mirror(std::size_t i) const { return size_ - 1 - i; }

  bool contains(const Frequency& xi) const {
    for (int k = 0; k < dim_; ++k) {
      if (xi[k] < -cutoff_ || xi[k] > cutoff_) return false;
    }
    return true;
  }

  std::size_t index(const Frequency& xi) const {
    if (!contains(xi)) {
      throw std::out_of_range("FrequencyGrid::index: frequency outside Z_{d,R}");
    }
    std::size_t i = 0;
    for (int k = 0; k < dim_; ++k) {
      i = i * static_cast<std::size_t>(side()) + static_cast<std::size_t>(xi[k] + cutoff_);
    }
    return i;
  }

  Frequency frequency(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("FrequencyGrid::frequency: index out of range");
    Frequency xi{0, 0, 0};
    const auto s = static_cast<std::size_t>(side());
    for (int k = dim_ - 1; k >= 0; --k) {
      xi[k] = static_cast<int>(i % s) - cutoff_;
      i /= s;
    }
    return xi;
  }

  /// Euclidean |xi|^2 of the i-th frequency.
  double norm_sq(std::size_t i) const {
    const auto xi = frequency(i);
    double r = 0.0;
    for (int k = 0; k < dim_; ++k) r += static_cast<double>(xi[k]) * xi[k];
    return r;
  }

  friend bool operator==(const FrequencyGrid& a, const FrequencyGrid& b) {
    return a.dim_ == b.dim_ && a.cutoff_ == b.cutoff_;
  }

 private:
  int dim_ = 1;
  int cutoff_ = 0;
  std::size_t size_ = 1;
};

/// Calls fn(index, xi) for every frequency of the grid in enumeration order.
template <class Fn>
void for_each_frequency(const FrequencyGrid& grid, Fn&& fn) {
  Frequency xi{0, 0, 0};
  const int R = grid.cutoff();
  const int d = grid.dim();
  for (int k = 0; k < d; ++k) xi[k] = -R;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fn(i, static_cast<const Frequency&>(xi));
    for (int k = d - 1; k >= 0; --k) {
      if (++xi[k] <= R) break;
      xi[k] = -R;
    }
  }
}

}  // namespace epdiff
