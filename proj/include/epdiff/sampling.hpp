#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epdiff/fft.hpp"
#include "epdiff/fourier_multiplier.hpp"
#include "epdiff/spectral_field.hpp"

namespace epdiff {

using Point = std::array<double, kMaxDim>;

/// Real samples of an ncomp-component field on the uniform grid
/// x_n = n / N in [0,1)^d. Component-major, row-major nodes (last axis fastest).
struct GridSamples {
  int dim = 1;
  int n = 1;
  int ncomp = 1;
  std::vector<double> values;

  GridSamples() = default;
  GridSamples(int dim_, int n_, int ncomp_) : dim(dim_), n(n_), ncomp(ncomp_), values(nodes() * ncomp_) {}

  std::size_t nodes() const {
    std::size_t s = 1;
    for (int k = 0; k < dim; ++k) s *= static_cast<std::size_t>(n);
    return s;
  }
  std::span<double> component(int c) { return {values.data() + c * nodes(), nodes()}; }
  std::span<const double> component(int c) const { return {values.data() + c * nodes(), nodes()}; }

  Point node(std::size_t i) const {
    Point x{0.0, 0.0, 0.0};
    for (int k = dim - 1; k >= 0; --k) {
      x[k] = static_cast<double>(i % static_cast<std::size_t>(n)) / n;
      i /= static_cast<std::size_t>(n);
    }
    return x;
  }
};

namespace detail {

inline std::size_t wrapped_index(const Frequency& xi, int dim, int n, int last_extent) {
  std::size_t idx = 0;
  for (int k = 0; k < dim; ++k) {
    const int extent = (k == dim - 1) ? last_extent : n;
    idx = idx * static_cast<std::size_t>(extent) + static_cast<std::size_t>(((xi[k] % n) + n) % n);
  }
  return idx;
}

inline void check_sampling_size(int n, int cutoff, const char* who) {
  if (n < 2 * cutoff + 1) {
    throw std::invalid_argument(std::string(who) + ": grid size " + std::to_string(n) +
                                " below 2R+1 = " + std::to_string(2 * cutoff + 1));
  }
}

}  // namespace detail

/// Point values sum_xi f^(xi) exp(2 pi i xi.x_n) on the N^d grid.
inline GridSamples synthesize_on_grid(const SpectralField& f, int n) {
  detail::check_sampling_size(n, f.cutoff(), "synthesize_on_grid");
  if (!f.is_hermitian()) throw std::invalid_argument("synthesize_on_grid: field is not Hermitian");
  const auto transform = fft::real_transform(f.dim(), n);
  GridSamples out(f.dim(), n, f.ncomp());
  auto half = fft::alloc_complex(transform->half_size());
  auto real = fft::alloc_real(transform->real_size());
  for (int c = 0; c < f.ncomp(); ++c) {
    for (std::size_t k = 0; k < transform->half_size(); ++k) half[k][0] = half[k][1] = 0.0;
    const auto fc = f.component(c);
    for_each_frequency(f.grid(), [&](std::size_t i, const Frequency& xi) {
      if (xi[f.dim() - 1] < 0) return;
      const auto slot = detail::wrapped_index(xi, f.dim(), n, transform->half_last());
      half[slot][0] = fc[i].real();
      half[slot][1] = fc[i].imag();
    });
    transform->backward(half.get(), real.get());
    std::copy(real.get(), real.get() + transform->real_size(), out.component(c).begin());
  }
  return out;
}

/// Fourier coefficients on Z_{d,R} of gridded samples, normalized by N^d.
inline SpectralField analyze_from_grid(const GridSamples& samples, int cutoff) {
  detail::check_sampling_size(samples.n, cutoff, "analyze_from_grid");
  if (samples.values.size() != samples.nodes() * static_cast<std::size_t>(samples.ncomp)) {
    throw std::invalid_argument("analyze_from_grid: sample array has the wrong size");
  }
  const int d = samples.dim;
  const int n = samples.n;
  const auto transform = fft::real_transform(d, n);
  SpectralField out(d, cutoff, samples.ncomp);
  auto half = fft::alloc_complex(transform->half_size());
  auto real = fft::alloc_real(transform->real_size());
  const double norm = 1.0 / static_cast<double>(transform->real_size());
  for (int c = 0; c < samples.ncomp; ++c) {
    const auto src = samples.component(c);
    std::copy(src.begin(), src.end(), real.get());
    transform->forward(real.get(), half.get());
    auto oc = out.component(c);
    for_each_frequency(out.grid(), [&](std::size_t i, const Frequency& xi) {
      const bool neg = xi[d - 1] < 0;
      const Frequency key = neg ? Frequency{-xi[0], -xi[1], -xi[2]} : xi;
      const auto& h = half[detail::wrapped_index(key, d, n, transform->half_last())];
      oc[i] = norm * Complex(h[0], neg ? -h[1] : h[1]);
    });
  }
  return out;
}

/// Off-grid evaluation of a Hermitian field and of its Jacobian by direct
/// summation over half of the spectrum, f(p) = f^(0) + 2 Re sum_{xi > 0} f^(xi) e(xi.p).
///
/// The half spectrum is stored as rows along the last axis: every prefix
/// (xi_1..xi_{d-1}) after the central one contributes a full row, the
/// central prefix contributes xi_d > 0 only.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const SpectralField& f) : dim_(f.dim()), cutoff_(f.cutoff()), ncomp_(f.ncomp()) {
    const auto& grid = f.grid();
    const std::size_t side = static_cast<std::size_t>(grid.side());
    const std::size_t nrows_total = grid.size() / side;
    const std::size_t center_row = nrows_total / 2;
    nrows_ = nrows_total - center_row;
    mean_.resize(static_cast<std::size_t>(ncomp_));
    for (int c = 0; c < ncomp_; ++c) mean_[static_cast<std::size_t>(c)] = f(c, grid.center()).real();
    prefix_.resize(nrows_);
    re_.assign(nrows_ * static_cast<std::size_t>(ncomp_) * side, 0.0);
    im_.assign(re_.size(), 0.0);
    for (std::size_t r = 0; r < nrows_; ++r) {
      const std::size_t row = center_row + r;
      prefix_[r] = grid.frequency(row * side);
      for (int c = 0; c < ncomp_; ++c) {
        double* dr = re_.data() + (r * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(c)) * side;
        double* di = im_.data() + (r * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(c)) * side;
        for (std::size_t m = (r == 0 ? static_cast<std::size_t>(cutoff_) + 1 : 0); m < side; ++m) {
          dr[m] = f(c, row * side + m).real();
          di[m] = f(c, row * side + m).imag();
        }
      }
    }
  }

  int dim() const { return dim_; }
  int ncomp() const { return ncomp_; }

  /// values[c] = f_c(p); if jacobian is non-empty, jacobian[c * dim + j] = d_j f_c(p).
  void evaluate(const Point& p, std::span<double> values, std::span<double> jacobian = {}) const {
    constexpr int kMaxSide = 2 * 512 + 1;
    const int side = 2 * cutoff_ + 1;
    if (side > kMaxSide) throw std::invalid_argument("FieldEvaluator: cutoff too large");
    // exp(2 pi i m x_k) for m = -R..R by recurrence from exp(2 pi i x_k).
    std::array<std::array<double, kMaxSide>, kMaxDim> er, ei;
    std::array<double, kMaxSide> mw;
    for (int k = 0; k < dim_; ++k) {
      const double x = p[k] - std::floor(p[k]);
      const double c1 = std::cos(kTwoPi * x), s1 = std::sin(kTwoPi * x);
      double cr = 1.0, ci = 0.0;
      er[k][cutoff_] = 1.0;
      ei[k][cutoff_] = 0.0;
      for (int m = 1; m <= cutoff_; ++m) {
        if (m % 16 == 0) {
          cr = std::cos(kTwoPi * m * x);
          ci = std::sin(kTwoPi * m * x);
        } else {
          const double t = cr * c1 - ci * s1;
          ci = cr * s1 + ci * c1;
          cr = t;
        }
        er[k][cutoff_ + m] = cr;
        ei[k][cutoff_ + m] = ci;
        er[k][cutoff_ - m] = cr;
        ei[k][cutoff_ - m] = -ci;
      }
    }
    for (int m = 0; m < side; ++m) mw[m] = m - cutoff_;

    const bool want_jac = !jacobian.empty();
    const int last = dim_ - 1;
    const double* elr = er[last].data();
    const double* eli = ei[last].data();
    std::array<double, kMaxDim> val{};
    std::array<double, kMaxDim * kMaxDim> grad{};
    for (std::size_t r = 0; r < nrows_; ++r) {
      double qr = 1.0, qi = 0.0;
      for (int k = 0; k < last; ++k) {
        const int idx = prefix_[r][k] + cutoff_;
        const double t = qr * er[k][idx] - qi * ei[k][idx];
        qi = qr * ei[k][idx] + qi * er[k][idx];
        qr = t;
      }
      for (int c = 0; c < ncomp_; ++c) {
        const std::size_t off = (r * static_cast<std::size_t>(ncomp_) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(side);
        const double* fr = re_.data() + off;
        const double* fi = im_.data() + off;
        double sr = 0.0, si = 0.0, tr = 0.0, ti = 0.0;
#pragma omp simd reduction(+ : sr, si, tr, ti)
        for (int m = 0; m < side; ++m) {
          const double ar = fr[m] * elr[m] - fi[m] * eli[m];
          const double ai = fr[m] * eli[m] + fi[m] * elr[m];
          sr += ar;
          si += ai;
          tr += mw[m] * ar;
          ti += mw[m] * ai;
        }
        // Row sum times prefix phase.
        const double vr = qr * sr - qi * si;
        val[c] += vr;
        if (want_jac) {
          const double vi = qr * si + qi * sr;
          for (int k = 0; k < last; ++k) grad[c * dim_ + k] += prefix_[r][k] * vi;
          grad[c * dim_ + last] += qr * ti + qi * tr;
        }
      }
    }
    for (int c = 0; c < ncomp_; ++c) {
      values[static_cast<std::size_t>(c)] = mean_[static_cast<std::size_t>(c)] + 2.0 * val[c];
      if (want_jac) {
        for (int k = 0; k < dim_; ++k) {
          jacobian[static_cast<std::size_t>(c * dim_ + k)] = -2.0 * kTwoPi * grad[c * dim_ + k];
        }
      }
    }
  }

 private:
  int dim_;
  int cutoff_;
  int ncomp_;
  std::size_t nrows_ = 0;
  std::vector<double> mean_;
  std::vector<Frequency> prefix_;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// values[c * |pts| + q] = Re sum_xi f^_c(xi) exp(2 pi i xi.p_q).
inline std::vector<double> evaluate_at_points(const SpectralField& f, std::span<const Point> pts) {
  const FieldEvaluator eval(f);
  std::vector<double> out(static_cast<std::size_t>(f.ncomp()) * pts.size());
  std::vector<double> v(static_cast<std::size_t>(f.ncomp()));
  for (std::size_t q = 0; q < pts.size(); ++q) {
    eval.evaluate(pts[q], v);
    for (int c = 0; c < f.ncomp(); ++c) out[static_cast<std::size_t>(c) * pts.size() + q] = v[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace epdiff
