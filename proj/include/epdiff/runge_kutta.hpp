#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "epdiff/spectral_field.hpp"

namespace epdiff {

/// Explicit Runge-Kutta coefficients (a strictly lower triangular).
template <class Real>
struct BasicButcherTableau {
  std::string name;
  int order = 0;
  std::vector<std::vector<Real>> a;
  std::vector<Real> b;
  std::vector<Real> c;

  int stages() const { return static_cast<int>(b.size()); }

  /// Throws if the tableau is not explicit or violates the row-sum and
  /// weight-sum conditions.
  void validate(Real tol = Real(1e-14)) const {
    const auto s = b.size();
    if (s == 0 || a.size() != s || c.size() != s) throw std::invalid_argument(name + ": inconsistent sizes");
    Real bsum = 0;
    for (std::size_t i = 0; i < s; ++i) {
      if (a[i].size() != i) throw std::invalid_argument(name + ": a must be strictly lower triangular");
      Real row = 0;
      for (const auto& x : a[i]) row += x;
      if (std::abs(row - c[i]) > tol) throw std::invalid_argument(name + ": c_i != sum_j a_ij");
      bsum += b[i];
    }
    if (std::abs(bsum - Real(1)) > tol) throw std::invalid_argument(name + ": weights do not sum to 1");
  }
};

using ButcherTableau = BasicButcherTableau<double>;

namespace detail {
template <class Real>
Real q(long long num, long long den) {
  return static_cast<Real>(num) / static_cast<Real>(den);
}
}  // namespace detail

/// First six stages of the Dormand-Prince 5(4) pair with the fifth-order
/// weights; the FSAL seventh stage and the embedded weights are not used.
template <class Real = double>
BasicButcherTableau<Real> dopri5_6stage() {
  using detail::q;
  BasicButcherTableau<Real> t;
  t.name = "dopri5";
  t.order = 5;
  t.a = {{},
         {q<Real>(1, 5)},
         {q<Real>(3, 40), q<Real>(9, 40)},
         {q<Real>(44, 45), q<Real>(-56, 15), q<Real>(32, 9)},
         {q<Real>(19372, 6561), q<Real>(-25360, 2187), q<Real>(64448, 6561), q<Real>(-212, 729)},
         {q<Real>(9017, 3168), q<Real>(-355, 33), q<Real>(46732, 5247), q<Real>(49, 176), q<Real>(-5103, 18656)}};
  t.b = {q<Real>(35, 384), Real(0), q<Real>(500, 1113), q<Real>(125, 192), q<Real>(-2187, 6784), q<Real>(11, 84)};
  t.c = {Real(0), q<Real>(1, 5), q<Real>(3, 10), q<Real>(4, 5), q<Real>(8, 9), Real(1)};
  return t;
}

template <class Real = double>
BasicButcherTableau<Real> rk4() {
  using detail::q;
  BasicButcherTableau<Real> t;
  t.name = "rk4";
  t.order = 4;
  t.a = {{}, {q<Real>(1, 2)}, {Real(0), q<Real>(1, 2)}, {Real(0), Real(0), Real(1)}};
  t.b = {q<Real>(1, 6), q<Real>(1, 3), q<Real>(1, 3), q<Real>(1, 6)};
  t.c = {Real(0), q<Real>(1, 2), q<Real>(1, 2), Real(1)};
  return t;
}

inline ButcherTableau tableau_by_name(const std::string& name) {
  if (name == "dopri5") return dopri5_6stage();
  if (name == "rk4") return rk4();
  throw std::invalid_argument("unknown tableau '" + name + "' (expected dopri5 or rk4)");
}

/// Non-finite value produced by a Runge-Kutta stage.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, int stage)
      : std::runtime_error("numerical blow-up at t = " + std::to_string(time) + " in stage " + std::to_string(stage)),
        time_(time),
        stage_(stage) {}
  double time() const { return time_; }
  int stage() const { return stage_; }

 private:
  double time_;
  int stage_;
};

template <class T>
  requires std::is_floating_point_v<T>
void axpy(T& y, T a, const T& x) {
  y += a * x;
}

template <class T>
  requires std::is_floating_point_v<T>
bool is_finite(const T& x) {
  return std::isfinite(x);
}

inline void axpy(SpectralField& y, double a, const SpectralField& x) { y.axpy(a, x); }

template <class S, class Real>
concept RkState = std::copyable<S> && requires(S& y, const S& x, Real a) {
  axpy(y, a, x);
  { is_finite(x) } -> std::convertible_to<bool>;
};

/// One explicit Runge-Kutta step of the autonomous system y' = rhs(y):
///   k_i = rhs(y + h sum_{j<i} a_ij k_j),   y+ = y + h sum_i b_i k_i.
/// `t` only labels a BlowUpError.
template <class Real, RkState<Real> State, class Rhs>
State rk_step(const State& y, Real h, const BasicButcherTableau<Real>& tab, Rhs&& rhs, double t = 0.0) {
  if (!(h > Real(0))) throw std::invalid_argument("rk_step: step size must be positive");
  const int s = tab.stages();
  std::vector<State> k;
  k.reserve(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    State stage = y;
    for (int j = 0; j < i; ++j) {
      const Real aij = tab.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (aij != Real(0)) axpy(stage, h * aij, k[static_cast<std::size_t>(j)]);
    }
    k.push_back(rhs(std::as_const(stage)));
    if (!is_finite(k.back())) throw BlowUpError(t, i + 1);
  }
  State next = y;
  for (int i = 0; i < s; ++i) {
    const Real bi = tab.b[static_cast<std::size_t>(i)];
    if (bi != Real(0)) axpy(next, h * bi, k[static_cast<std::size_t>(i)]);
  }
  if (!is_finite(next)) throw BlowUpError(t + static_cast<double>(h), s);
  return next;
}

}  // namespace epdiff
