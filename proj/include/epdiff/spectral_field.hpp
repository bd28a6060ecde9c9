#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epdiff/frequency_grid.hpp"

namespace epdiff {

using Complex = std::complex<double>;

/// Real-valued (scalar or vector) field on the torus [0,1)^d stored by its
/// Fourier coefficients on Z_{d,R}, with the convention
/// f^(xi) = \int f(x) exp(-2 pi i xi.x) dx.
///
/// Coefficients are stored component-major: component c occupies the
/// contiguous block [c * grid.size(), (c+1) * grid.size()).
class SpectralField {
 public:
  SpectralField() = default;

  SpectralField(FrequencyGrid grid, int ncomp)
      : grid_(grid), ncomp_(ncomp), coeffs_(grid.size() * static_cast<std::size_t>(ncomp)) {
    if (ncomp < 1) throw std::invalid_argument("SpectralField: ncomp must be positive");
  }

  SpectralField(int dim, int cutoff, int ncomp) : SpectralField(FrequencyGrid(dim, cutoff), ncomp) {}

  const FrequencyGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  int cutoff() const { return grid_.cutoff(); }
  int ncomp() const { return ncomp_; }

  std::span<Complex> component(int c) {
    return {coeffs_.data() + static_cast<std::size_t>(c) * grid_.size(), grid_.size()};
  }
  std::span<const Complex> component(int c) const {
    return {coeffs_.data() + static_cast<std::size_t>(c) * grid_.size(), grid_.size()};
  }

  Complex& operator()(int c, std::size_t i) { return coeffs_[static_cast<std::size_t>(c) * grid_.size() + i]; }
  const Complex& operator()(int c, std::size_t i) const {
    return coeffs_[static_cast<std::size_t>(c) * grid_.size() + i];
  }

  Complex& at(int c, const Frequency& xi) { return (*this)(c, grid_.index(xi)); }
  const Complex& at(int c, const Frequency& xi) const { return (*this)(c, grid_.index(xi)); }

  std::span<Complex> coefficients() { return coeffs_; }
  std::span<const Complex> coefficients() const { return coeffs_; }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& z : coeffs_) z *= a;
    return *this;
  }

  /// this += a * x
  void axpy(double a, const SpectralField& x) {
    require_same_shape(x);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += a * x.coeffs_[i];
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend SpectralField operator-(SpectralField a) { return a *= -1.0; }

  bool same_shape(const SpectralField& o) const { return grid_ == o.grid_ && ncomp_ == o.ncomp_; }

  bool all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  /// max |f^(-xi) - conj(f^(xi))| over all components and frequencies.
  double hermitian_defect() const {
    double worst = 0.0;
    for (int c = 0; c < ncomp_; ++c) {
      const auto f = component(c);
      for (std::size_t i = 0; i < f.size(); ++i) {
        worst = std::max(worst, std::abs(f[grid_.mirror(i)] - std::conj(f[i])));
      }
    }
    return worst;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : coeffs_) m = std::max(m, std::abs(z));
    return m;
  }

  bool is_hermitian(double rel_tol = 1e-10) const {
    return hermitian_defect() <= rel_tol * std::max(1.0, max_abs());
  }

  /// Replaces f^(xi) by (f^(xi) + conj(f^(-xi))) / 2.
  void symmetrize() {
    for (int c = 0; c < ncomp_; ++c) {
      auto f = component(c);
      for (std::size_t i = 0; i <= grid_.center(); ++i) {
        const std::size_t j = grid_.mirror(i);
        const Complex avg = 0.5 * (f[i] + std::conj(f[j]));
        f[i] = avg;
        f[j] = std::conj(avg);
      }
    }
  }

  friend bool operator==(const SpectralField& a, const SpectralField& b) {
    return a.same_shape(b) && a.coeffs_ == b.coeffs_;
  }

 private:
  void require_same_shape(const SpectralField& o) const {
    if (!same_shape(o)) throw std::invalid_argument("SpectralField: shape mismatch");
  }

  FrequencyGrid grid_;
  int ncomp_ = 1;
  std::vector<Complex> coeffs_ = std::vector<Complex>(1);
};

inline bool is_finite(const SpectralField& f) { return f.all_finite(); }

/// Copies the coefficients of f on the common support into a field with the
/// given cutoff; frequencies outside f's support are zero.
inline SpectralField resample(const SpectralField& f, int cutoff) {
  SpectralField out(f.dim(), cutoff, f.ncomp());
  const int common = std::min(cutoff, f.cutoff());
  const FrequencyGrid inner(f.dim(), common);
  for_each_frequency(inner, [&](std::size_t, const Frequency& xi) {
    const std::size_t src = f.grid().index(xi);
    const std::size_t dst = out.grid().index(xi);
    for (int c = 0; c < f.ncomp(); ++c) out(c, dst) = f(c, src);
  });
  return out;
}

/// Projection onto the modes |xi|_inf <= r.
inline SpectralField truncate(const SpectralField& f, int r) {
  if (r < 0 || r > f.cutoff()) {
    throw std::invalid_argument("truncate: cutoff " + std::to_string(r) + " outside [0, " +
                                std::to_string(f.cutoff()) + "]");
  }
  return resample(f, r);
}

/// Zero extension to a larger cutoff.
inline SpectralField zero_extend(const SpectralField& f, int r) {
  if (r < f.cutoff()) throw std::invalid_argument("zero_extend: target cutoff below field cutoff");
  return resample(f, r);
}

enum class NormWeight {
  /// (1 + |xi|^2)^k
  bracket,
  /// 1 + |xi|^(2k)
  split,
};

inline double sobolev_weight(double xi_sq, double k, NormWeight w = NormWeight::bracket) {
  if (w == NormWeight::bracket) return std::pow(1.0 + xi_sq, k);
  if (xi_sq == 0.0) return k == 0.0 ? 2.0 : 1.0;
  return 1.0 + std::pow(xi_sq, k);
}

/// sqrt( sum_c sum_xi |f^_c(xi)|^2 w_k(xi) ).
inline double sobolev_norm(const SpectralField& f, double k, NormWeight weight = NormWeight::bracket) {
  const auto& grid = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = sobolev_weight(grid.norm_sq(i), k, weight);
    for (int c = 0; c < f.ncomp(); ++c) acc += std::norm(f(c, i)) * w;
  }
  return std::sqrt(acc);
}

/// L2 pairing \int P.W dx = Re sum_c sum_xi P^_c(xi) conj(W^_c(xi)) on the
/// common support of the two fields.
inline double weak_pairing(const SpectralField& p, const SpectralField& w) {
  if (p.dim() != w.dim() || p.ncomp() != w.ncomp()) {
    throw std::invalid_argument("weak_pairing: dimension or component mismatch");
  }
  const FrequencyGrid common(p.dim(), std::min(p.cutoff(), w.cutoff()));
  double acc = 0.0;
  for_each_frequency(common, [&](std::size_t, const Frequency& xi) {
    const std::size_t ip = p.grid().index(xi);
    const std::size_t iw = w.grid().index(xi);
    for (int c = 0; c < p.ncomp(); ++c) acc += (p(c, ip) * std::conj(w(c, iw))).real();
  });
  return acc;
}

/// Single component c of f as a scalar field.
inline SpectralField component_field(const SpectralField& f, int c) {
  SpectralField out(f.grid(), 1);
  std::copy(f.component(c).begin(), f.component(c).end(), out.component(0).begin());
  return out;
}

}  // namespace epdiff
