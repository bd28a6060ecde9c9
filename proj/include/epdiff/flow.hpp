#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epdiff/geodesic.hpp"
#include "epdiff/sampling.hpp"

namespace epdiff {

/// Flow phi_t sampled at the nodes x_n = n / N: displacement phi_t(x_n) - x_n
/// (unwrapped, in R^d) and Jacobian D phi_t(x_n), both node-major.
struct FlowMap {
  int dim = 1;
  int n = 1;
  double t = 0.0;
  std::vector<double> disp;  // disp[node * d + i]
  std::vector<double> jac;   // jac[(node * d + i) * d + j] = d_j phi_i

  FlowMap() = default;
  FlowMap(int dim_, int n_) : dim(dim_), n(n_) {
    disp.assign(nodes() * static_cast<std::size_t>(dim), 0.0);
    jac.assign(nodes() * static_cast<std::size_t>(dim * dim), 0.0);
    for (std::size_t k = 0; k < nodes(); ++k) {
      for (int i = 0; i < dim; ++i) jac[(k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)] = 1.0;
    }
  }

  std::size_t nodes() const {
    std::size_t s = 1;
    for (int k = 0; k < dim; ++k) s *= static_cast<std::size_t>(n);
    return s;
  }

  Point node(std::size_t k) const {
    Point x{0.0, 0.0, 0.0};
    for (int a = dim - 1; a >= 0; --a) {
      x[a] = static_cast<double>(k % static_cast<std::size_t>(n)) / n;
      k /= static_cast<std::size_t>(n);
    }
    return x;
  }

  /// phi_t(x_k), unwrapped.
  Point position(std::size_t k) const {
    Point x = node(k);
    for (int i = 0; i < dim; ++i) x[i] += disp[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)];
    return x;
  }

  std::span<const double> jacobian(std::size_t k) const {
    const auto dd = static_cast<std::size_t>(dim * dim);
    return {jac.data() + k * dd, dd};
  }

  double min_det() const;
};

/// Non-positive Jacobian determinant of the numerical flow.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(double time, Point where, double det)
      : std::runtime_error("flow degenerate at t = " + std::to_string(time) + ", x = (" + std::to_string(where[0]) +
                           ", " + std::to_string(where[1]) + ", " + std::to_string(where[2]) +
                           "), det D phi = " + std::to_string(det)),
        time_(time),
        where_(where),
        det_(det) {}
  double time() const { return time_; }
  const Point& where() const { return where_; }
  double det() const { return det_; }

 private:
  double time_;
  Point where_;
  double det_;
};

namespace detail {

inline double det(std::span<const double> a, int d) {
  if (d == 1) return a[0];
  if (d == 2) return a[0] * a[3] - a[1] * a[2];
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6]);
}

/// Solves a y = b for d <= 3 by Cramer's rule.
inline std::array<double, kMaxDim> solve_small(std::span<const double> a, std::span<const double> b, int d) {
  const double D = det(a, d);
  if (!(D != 0.0) || !std::isfinite(D)) throw std::domain_error("singular Jacobian");
  std::array<double, kMaxDim> y{0.0, 0.0, 0.0};
  std::array<double, 9> m{};
  for (int col = 0; col < d; ++col) {
    for (int k = 0; k < d * d; ++k) m[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)];
    for (int r = 0; r < d; ++r) m[static_cast<std::size_t>(r * d + col)] = b[static_cast<std::size_t>(r)];
    y[static_cast<std::size_t>(col)] = det(std::span<const double>(m.data(), static_cast<std::size_t>(d * d)), d) / D;
  }
  return y;
}

}  // namespace detail

inline double FlowMap::min_det() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nodes(); ++k) m = std::min(m, detail::det(jacobian(k), dim));
  return m;
}

/// Joint state of the geodesic and the particle flow.
struct FlowState {
  SpectralField velocity;
  std::vector<double> disp;  // node-major, d entries per particle
  std::vector<double> jac;  // node-major, d*d entries per particle
};

inline void axpy(FlowState& y, double a, const FlowState& x) {
  y.velocity.axpy(a, x.velocity);
  for (std::size_t k = 0; k < y.disp.size(); ++k) y.disp[k] += a * x.disp[k];
  for (std::size_t k = 0; k < y.jac.size(); ++k) y.jac[k] += a * x.jac[k];
}

inline bool is_finite(const FlowState& s) {
  auto finite = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  return s.velocity.all_finite() && finite(s.disp) && finite(s.jac);
}

/// Rates of (V, phi - id, D phi): (discrete_rhs(V), V(phi), DV(phi) D phi).
/// `nodes` holds the particles' starting points, node-major.
inline FlowState flow_rhs(const FlowState& s, const DynamicsConfig& cfg, std::span<const double> nodes) {
  const int d = cfg.dim();
  const auto dd = static_cast<std::size_t>(d);
  FlowState r;
  r.velocity = discrete_rhs(s.velocity, cfg);
  r.disp.assign(s.disp.size(), 0.0);
  r.jac.assign(s.jac.size(), 0.0);
  const FieldEvaluator eval(s.velocity);
  const std::size_t np = s.disp.size() / dd;
  std::array<double, kMaxDim> val{};
  std::array<double, kMaxDim * kMaxDim> dv{};
  for (std::size_t k = 0; k < np; ++k) {
    Point p{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < dd; ++i) p[i] = nodes[k * dd + i] + s.disp[k * dd + i];
    eval.evaluate(p, std::span<double>(val.data(), dd), std::span<double>(dv.data(), dd * dd));
    for (std::size_t i = 0; i < dd; ++i) r.disp[k * dd + i] = val[i];
    const double* J = s.jac.data() + k * dd * dd;
    double* out = r.jac.data() + k * dd * dd;
    for (std::size_t i = 0; i < dd; ++i) {
      for (std::size_t j = 0; j < dd; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < dd; ++l) acc += dv[i * dd + l] * J[l * dd + j];
        out[i * dd + j] = acc;
      }
    }
  }
  return r;
}

/// Smallest 2-3-5 smooth size >= 2(2R+1).
inline int default_flow_grid(int cutoff) { return fft::smooth_size(2 * (2 * cutoff + 1)); }

/// Integrates phi' = V_t(phi) and (D phi)' = DV_t(phi) D phi from the
/// identity at the nodes of an N^d grid, re-running the geodesic from the
/// trajectory's initial velocity in lockstep so every stage sees the exact
/// stage velocity. Returns one FlowMap per trajectory sample time.
inline std::vector<FlowMap> integrate_flow(const Trajectory& traj, const DynamicsConfig& cfg, int n,
                                           const ButcherTableau& tab, std::size_t nsteps) {
  if (traj.states.empty()) throw std::invalid_argument("integrate_flow: empty trajectory");
  if (n < 1) throw std::invalid_argument("integrate_flow: grid size must be positive");
  std::vector<double> times = traj.sample_times;
  const auto marks = sample_steps(times, nsteps);
  const int d = cfg.dim();
  const auto dd = static_cast<std::size_t>(d);

  FlowMap ident(d, n);
  FlowState s;
  s.velocity = traj.initial();
  s.disp.assign(ident.nodes() * dd, 0.0);
  s.jac = ident.jac;
  std::vector<double> nodes(ident.nodes() * dd);
  for (std::size_t k = 0; k < ident.nodes(); ++k) {
    const Point x = ident.node(k);
    for (std::size_t i = 0; i < dd; ++i) nodes[k * dd + i] = x[i];
  }

  const double h = 1.0 / static_cast<double>(nsteps);
  auto rhs = [&cfg, &nodes](const FlowState& y) { return flow_rhs(y, cfg, nodes); };
  std::vector<FlowMap> out;
  std::size_t next = 0;
  auto record = [&](std::size_t step) {
    if (next < marks.size() && marks[next] == step) {
      FlowMap f(d, n);
      f.t = times[next];
      if (step > 0) {
        f.disp = s.disp;
        f.jac = s.jac;
      }
      out.push_back(std::move(f));
      ++next;
    }
  };
  record(0);
  for (std::size_t step = 0; step < marks.back(); ++step) {
    s = rk_step(s, h, tab, rhs, static_cast<double>(step) * h);
    const double t = static_cast<double>(step + 1) * h;
    for (std::size_t k = 0; k < ident.nodes(); ++k) {
      const double det = detail::det(std::span<const double>(s.jac.data() + k * dd * dd, dd * dd), d);
      if (!(det > 0.0)) throw DegeneracyError(t, ident.node(k), det);
    }
    record(step + 1);
  }
  return out;
}

/// Fourth-order centered finite-difference Jacobian of the displacement,
/// D phi = I + D(disp), on the periodic node grid.
inline std::vector<double> finite_difference_jacobian(const FlowMap& f) {
  const int d = f.dim;
  const auto dd = static_cast<std::size_t>(d);
  const int n = f.n;
  std::vector<double> out(f.nodes() * dd * dd, 0.0);
  std::array<std::size_t, kMaxDim> stride{1, 1, 1};
  for (int a = d - 2; a >= 0; --a) stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(n);
  for (std::size_t k = 0; k < f.nodes(); ++k) {
    for (int a = 0; a < d; ++a) {
      const auto sa = stride[static_cast<std::size_t>(a)];
      const int coord = static_cast<int>((k / sa) % static_cast<std::size_t>(n));
      auto shifted = [&](int off) {
        const int c = ((coord + off) % n + n) % n;
        return k - static_cast<std::size_t>(coord) * sa + static_cast<std::size_t>(c) * sa;
      };
      const std::size_t p1 = shifted(1), m1 = shifted(-1), p2 = shifted(2), m2 = shifted(-2);
      for (std::size_t i = 0; i < dd; ++i) {
        const double deriv = (-f.disp[p2 * dd + i] + 8.0 * f.disp[p1 * dd + i] - 8.0 * f.disp[m1 * dd + i] +
                              f.disp[m2 * dd + i]) *
                             static_cast<double>(n) / 12.0;
        out[(k * dd + i) * dd + static_cast<std::size_t>(a)] = (i == static_cast<std::size_t>(a) ? 1.0 : 0.0) + deriv;
      }
    }
  }
  return out;
}

/// Samples of Ad_{phi^-1} w (x_n) = (D phi(x_n))^-1 w(phi(x_n)).
inline GridSamples ad_inverse_apply(const FlowMap& flow, const SpectralField& w) {
  if (w.dim() != flow.dim || w.ncomp() != flow.dim) {
    throw std::invalid_argument("ad_inverse_apply: test field must be a d-component field of the flow's dimension");
  }
  const int d = flow.dim;
  const auto dd = static_cast<std::size_t>(d);
  const FieldEvaluator eval(w);
  GridSamples out(d, flow.n, d);
  std::array<double, kMaxDim> wv{};
  for (std::size_t k = 0; k < flow.nodes(); ++k) {
    eval.evaluate(flow.position(k), std::span<double>(wv.data(), dd));
    std::array<double, kMaxDim> y{};
    try {
      y = detail::solve_small(flow.jacobian(k), std::span<const double>(wv.data(), dd), d);
    } catch (const std::domain_error&) {
      throw DegeneracyError(flow.t, flow.node(k), detail::det(flow.jacobian(k), d));
    }
    for (int i = 0; i < d; ++i) out.component(i)[k] = y[static_cast<std::size_t>(i)];
  }
  return out;
}

/// Rectangle-rule quadrature of \int a . b dx over the node grid.
inline double grid_pairing(const GridSamples& a, const GridSamples& b) {
  if (a.dim != b.dim || a.n != b.n || a.ncomp != b.ncomp) throw std::invalid_argument("grid_pairing: shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) acc += a.values[k] * b.values[k];
  return acc / static_cast<double>(a.nodes());
}

/// Weak momentum-transport defect <P_t, w> - <P_0, Ad_{phi_t^-1} w> at each
/// sample time, the second pairing by quadrature on the flow grid.
inline std::vector<double> momentum_transport_residual(const Trajectory& traj, const std::vector<FlowMap>& flows,
                                                       const SpectralField& w, const DynamicsConfig& cfg) {
  if (flows.size() != traj.states.size()) throw std::invalid_argument("momentum_transport_residual: flows and samples differ in count");
  if (w.cutoff() > cfg.cutoff()) throw std::invalid_argument("momentum_transport_residual: test field cutoff exceeds R");
  for (std::size_t k = 0; k < flows.size(); ++k) {
    if (std::abs(flows[k].t - traj.states[k].t) > 1e-12) {
      throw std::invalid_argument("momentum_transport_residual: flow and trajectory times differ");
    }
  }
  const auto p0 = synthesize_on_grid(momentum(traj.initial(), cfg), flows.front().n);
  std::vector<double> out;
  for (std::size_t k = 0; k < flows.size(); ++k) {
    const double lhs = weak_pairing(momentum(traj.states[k].velocity, cfg), w);
    const double rhs = grid_pairing(p0, ad_inverse_apply(flows[k], w));
    out.push_back(lhs - rhs);
  }
  return out;
}

}  // namespace epdiff
