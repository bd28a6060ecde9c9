#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "epdiff/spectral_field.hpp"

namespace epdiff {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class MultiplierKind { sobolev_L, riesz_R, partial, custom };

/// Diagonal operator in Fourier space, f^(xi) -> eval(xi) f^(xi).
class FourierMultiplier {
 public:
  using Eval = std::function<Complex(const Frequency&)>;

  FourierMultiplier(MultiplierKind kind, std::string name, Eval eval, int axis = -1)
      : kind_(kind), name_(std::move(name)), eval_(std::move(eval)), axis_(axis) {}

  MultiplierKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  /// Differentiation axis for partial(j), -1 otherwise.
  int axis() const { return axis_; }

  Complex operator()(const Frequency& xi) const { return eval_(xi); }

  /// Symbol values on every frequency of the grid, in enumeration order.
  std::vector<Complex> sample(const FrequencyGrid& grid) const {
    if (axis_ >= grid.dim()) {
      throw std::invalid_argument("FourierMultiplier " + name_ + ": axis exceeds grid dimension");
    }
    std::vector<Complex> out(grid.size());
    for_each_frequency(grid, [&](std::size_t i, const Frequency& xi) { out[i] = eval_(xi); });
    return out;
  }

 private:
  MultiplierKind kind_;
  std::string name_;
  Eval eval_;
  int axis_;
};

namespace detail {
inline double xi_sq(const Frequency& xi) {
  return static_cast<double>(xi[0]) * xi[0] + static_cast<double>(xi[1]) * xi[1] +
         static_cast<double>(xi[2]) * xi[2];
}
}  // namespace detail

/// (1 - Delta)^m, symbol (1 + 4 pi^2 |xi|^2)^m. `scale` replaces the 4 pi^2.
inline FourierMultiplier sobolev_L(double m, double scale = kTwoPi * kTwoPi) {
  return {MultiplierKind::sobolev_L, "sobolev_L(" + std::to_string(m) + ")",
          [m, scale](const Frequency& xi) { return Complex(std::pow(1.0 + scale * detail::xi_sq(xi), m), 0.0); }};
}

/// Inverse of sobolev_L(m).
inline FourierMultiplier riesz_R(double m, double scale = kTwoPi * kTwoPi) {
  return {MultiplierKind::riesz_R, "riesz_R(" + std::to_string(m) + ")",
          [m, scale](const Frequency& xi) { return Complex(std::pow(1.0 + scale * detail::xi_sq(xi), -m), 0.0); }};
}

/// d/dx_axis (zero-based axis), symbol 2 pi i xi_axis.
inline FourierMultiplier partial(int axis) {
  if (axis < 0 || axis >= kMaxDim) throw std::invalid_argument("partial: axis out of range");
  return {MultiplierKind::partial, "partial(" + std::to_string(axis) + ")",
          [axis](const Frequency& xi) { return Complex(0.0, kTwoPi * xi[axis]); }, axis};
}

inline FourierMultiplier custom_multiplier(std::string name, FourierMultiplier::Eval eval) {
  return {MultiplierKind::custom, std::move(name), std::move(eval)};
}

/// Applies the multiplier to every component of f.
inline SpectralField apply_multiplier(const SpectralField& f, const FourierMultiplier& m) {
  const auto symbol = m.sample(f.grid());
  SpectralField out(f.grid(), f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c) {
    const auto src = f.component(c);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = symbol[i] * src[i];
  }
  return out;
}

/// Scalar field sum_j 2 pi i xi_j f^_j(xi) of a d-component vector field.
inline SpectralField divergence(const SpectralField& f) {
  if (f.ncomp() != f.dim()) throw std::invalid_argument("divergence: field must have d components");
  SpectralField out(f.grid(), 1);
  auto dst = out.component(0);
  for_each_frequency(f.grid(), [&](std::size_t i, const Frequency& xi) {
    Complex acc{};
    for (int j = 0; j < f.dim(); ++j) acc += Complex(0.0, kTwoPi * xi[j]) * f(j, i);
    dst[i] = acc;
  });
  return out;
}

}  // namespace epdiff
