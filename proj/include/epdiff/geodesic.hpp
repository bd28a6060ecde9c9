#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epdiff/dynamics.hpp"
#include "epdiff/runge_kutta.hpp"

namespace epdiff {

/// Numerical velocity V_t at time t; the momentum is momentum(V, cfg).
struct GeodesicState {
  double t = 0.0;
  SpectralField velocity;
};

struct Trajectory {
  std::vector<double> sample_times;
  std::vector<GeodesicState> states;
  std::size_t steps = 0;
  std::string tableau;
  /// <L V_t, V_t> at each sample time.
  std::vector<double> energy_log;

  const SpectralField& initial() const { return states.front().velocity; }
  const SpectralField& final() const { return states.back().velocity; }
};

/// Converts sample times to step indices. Times must lie in [0,1], increase
/// strictly and be multiples of 1/nsteps; t = 0 is prepended if missing.
inline std::vector<std::size_t> sample_steps(std::vector<double>& times, std::size_t nsteps) {
  if (nsteps == 0) throw std::invalid_argument("integrate: nsteps must be positive");
  if (times.empty() || times.front() != 0.0) times.insert(times.begin(), 0.0);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("sample time " + std::to_string(t) + " outside [0,1]");
    const double x = t * static_cast<double>(nsteps);
    const double k = std::round(x);
    if (std::abs(x - k) > 1e-9 * static_cast<double>(nsteps)) {
      throw std::invalid_argument("sample time " + std::to_string(t) + " is not a multiple of the step 1/" +
                                  std::to_string(nsteps));
    }
    if (i > 0 && static_cast<std::size_t>(k) <= out.back()) {
      throw std::invalid_argument("sample times must be strictly increasing");
    }
    out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

/// Equally spaced sample times {0, 1/k, ..., 1} with k the largest divisor
/// of nsteps not exceeding max_samples.
inline std::vector<double> uniform_sample_times(std::size_t nsteps, std::size_t max_samples) {
  std::size_t k = std::max<std::size_t>(1, std::min(nsteps, max_samples));
  while (nsteps % k != 0) --k;
  std::vector<double> t;
  for (std::size_t i = 0; i <= k; ++i) t.push_back(static_cast<double>(i) / static_cast<double>(k));
  return t;
}

using StepObserver = std::function<void(std::size_t step, double t, const SpectralField& v)>;

/// Fixed-step integration of dV/dt = discrete_rhs(V) on [0,1] with
/// h = 1/nsteps. The observer, if set, sees every step including t = 0.
inline Trajectory integrate_geodesic(const SpectralField& v0, std::size_t nsteps, const ButcherTableau& tab,
                                     const DynamicsConfig& cfg, std::vector<double> sample_times = {0.0, 1.0},
                                     const StepObserver& observer = {}) {
  if (v0.grid() != cfg.grid() || v0.ncomp() != cfg.dim()) {
    throw std::invalid_argument("integrate_geodesic: initial velocity must be a d-component field on Z_{d,R}");
  }
  if (!v0.is_hermitian()) throw std::invalid_argument("integrate_geodesic: initial velocity is not Hermitian");
  const auto marks = sample_steps(sample_times, nsteps);
  Trajectory traj;
  traj.sample_times = sample_times;
  traj.steps = nsteps;
  traj.tableau = tab.name;
  const double h = 1.0 / static_cast<double>(nsteps);
  auto rhs = [&cfg](const SpectralField& v) { return discrete_rhs(v, cfg); };

  SpectralField v = v0;
  std::size_t next = 0;
  auto record = [&](std::size_t step) {
    if (observer) observer(step, static_cast<double>(step) * h, v);
    if (next < marks.size() && marks[next] == step) {
      traj.states.push_back({sample_times[next], v});
      traj.energy_log.push_back(energy(v, cfg));
      ++next;
    }
  };
  record(0);
  for (std::size_t n = 0; n < marks.back(); ++n) {
    v = rk_step(v, h, tab, rhs, static_cast<double>(n) * h);
    record(n + 1);
  }
  return traj;
}

}  // namespace epdiff
