#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "epdiff/field_io.hpp"
#include "epdiff/geodesic.hpp"

#ifndef EPDIFF_VERSION
#define EPDIFF_VERSION "0.1.0"
#endif

namespace epdiff {

inline constexpr const char* kVersion = EPDIFF_VERSION;

/// Recipe for a random initial velocity of Sobolev regularity s.
struct InitSpec {
  int dim = 2;
  double s = 3.0;
  int cutoff = 64;
  double eps = 0.1;
  std::uint64_t seed = 1;
  /// Draw w^(xi) from the real interval [0, bound] instead of a uniform
  /// magnitude in that interval times a uniform phase.
  bool literal_real_draw = false;
};

/// Per component: w^(xi) with |w^| ~ U[0, (1+|xi|^2)^-1/2 log(2+|xi|^2)^-(1/2+eps)]
/// and uniform phase, u^(xi) = w^(xi) + conj(w^(-xi)), v^(xi) = u^(xi) (1+|xi|^2)^(-s/2).
inline SpectralField random_sobolev_field(const InitSpec& spec) {
  if (spec.s < 0.0) throw std::invalid_argument("random_sobolev_field: s must be nonnegative");
  if (!(spec.eps > 0.0)) throw std::invalid_argument("random_sobolev_field: eps must be positive");
  const FrequencyGrid grid(spec.dim, spec.cutoff);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SpectralField v(grid, spec.dim);
  std::vector<Complex> w(grid.size());
  for (int c = 0; c < spec.dim; ++c) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double q = grid.norm_sq(i);
      const double bound = 1.0 / std::sqrt(1.0 + q) / std::pow(std::log(2.0 + q), 0.5 + spec.eps);
      const double mag = bound * unit(rng);
      if (spec.literal_real_draw) {
        w[i] = Complex(mag, 0.0);
      } else {
        w[i] = std::polar(mag, 2.0 * std::numbers::pi * unit(rng));
      }
    }
    auto vc = v.component(c);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Complex u = w[i] + std::conj(w[grid.mirror(i)]);
      vc[i] = u * std::pow(1.0 + grid.norm_sq(i), -spec.s / 2.0);
    }
  }
  return v;
}

struct RateFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  /// Points dropped because the error or R was not positive (or not finite).
  std::size_t excluded = 0;
};

/// Least-squares slope of log(error) against log(R).
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> logs;
  RateFit fit;
  for (const auto& [r, e] : points) {
    if (r > 0.0 && e > 0.0 && std::isfinite(r) && std::isfinite(e)) {
      logs.emplace_back(std::log(r), std::log(e));
    } else {
      ++fit.excluded;
    }
  }
  if (logs.size() < 2) throw std::invalid_argument("fit_rate: fewer than two valid points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(logs.size());
  my /= static_cast<double>(logs.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: all cutoffs coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.used = logs.size();
  return fit;
}

struct DriftResult {
  double value = 0.0;
  /// The initial energy was zero and `value` is an absolute drift.
  bool absolute = false;
};

/// max_t | |V_t|_L - |V_0|_L | / |V_0|_L over the trajectory's energy log.
inline DriftResult energy_drift(const Trajectory& traj) {
  if (traj.energy_log.empty()) throw std::invalid_argument("energy_drift: empty energy log");
  const double n0 = std::sqrt(traj.energy_log.front());
  double worst = 0.0;
  for (double e : traj.energy_log) worst = std::max(worst, std::abs(std::sqrt(e) - n0));
  if (n0 == 0.0) return {worst, true};
  return {worst / n0, false};
}

/// ||V - V_ref||_{H^k} with V zero-extended to the reference cutoff: the
/// difference on the common support plus the reference tail.
inline double cross_cutoff_error(const SpectralField& v, const SpectralField& ref, double k) {
  if (v.cutoff() > ref.cutoff()) throw std::invalid_argument("cross_cutoff_error: field cutoff exceeds reference");
  return sobolev_norm(zero_extend(v, ref.cutoff()) - ref, k);
}

/// Geodesic with the doubly truncated initial velocity Pi_r v0 solved at
/// cutoff R = cfg.cutoff().
inline Trajectory double_truncation_run(const SpectralField& v0, int r, const DynamicsConfig& cfg,
                                        std::size_t nsteps, const ButcherTableau& tab,
                                        std::vector<double> sample_times = {0.0, 1.0}) {
  if (r < 0 || r > cfg.cutoff()) throw std::invalid_argument("double_truncation_run: need 0 <= r <= R");
  if (v0.cutoff() < r) throw std::invalid_argument("double_truncation_run: v0 cutoff below r");
  const auto start = zero_extend(truncate(v0, r), cfg.cutoff());
  return integrate_geodesic(start, nsteps, tab, cfg, std::move(sample_times));
}

struct ConvergenceStudyConfig {
  int dim = 2;
  double m = 3.0;
  std::vector<double> s_list = {3.0, 4.0, 5.0, 6.0};
  std::vector<int> R_list = {4, 8, 16, 32};
  int R_ref = 64;
  std::size_t nsteps = 1024;
  std::string tableau = "dopri5";
  std::uint64_t seed = 1;
  double eps = 0.1;
  bool literal_real_draw = false;
  /// If set, every run starts from Pi_{min(r_inner, R)} v0.
  std::optional<int> r_inner;
  AssemblyCutoff assembly = AssemblyCutoff::doubled;
  unsigned threads = 1;

  std::vector<std::string> echo() const {
    std::ostringstream s, r;
    for (double x : s_list) s << (s.tellp() > 0 ? " " : "") << x;
    for (int x : R_list) r << (r.tellp() > 0 ? " " : "") << x;
    return {std::string("epdiff ") + kVersion,
            "d=" + std::to_string(dim) + " m=" + format_double(m) + " R_ref=" + std::to_string(R_ref) +
                " nsteps=" + std::to_string(nsteps) + " tableau=" + tableau,
            "s_list=" + s.str() + " R_list=" + r.str(),
            "seed=" + std::to_string(seed) + " eps=" + format_double(eps) +
                " literal_real_draw=" + (literal_real_draw ? "1" : "0") +
                " r_inner=" + (r_inner ? std::to_string(*r_inner) : std::string("none")) +
                " assembly=" + (assembly == AssemblyCutoff::doubled ? "2R" : "R")};
  }
};

struct ConvergenceRow {
  int R = 0;
  double s = 0.0;
  double error_Hm = std::numeric_limits<double>::quiet_NaN();
  double energy_drift = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  /// Set when the run (or its reference) blew up; error fields are NaN.
  std::optional<std::string> failure;
};

struct ConvergenceReport {
  double s = 0.0;
  std::vector<ConvergenceRow> rows;
  /// Absent when fewer than two rows have a positive error.
  std::optional<double> fitted_slope;
  int reference_R = 0;
  double reference_wall_time_s = 0.0;
  std::vector<std::string> config_echo;
};

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace detail

/// For each s: draw v0 at the reference cutoff, solve at R_ref and at every
/// R in R_list from the truncated data, and compare the t = 1 velocities in
/// H^m (cross_cutoff_error). A blow-up flags its row and leaves the rest of
/// the study intact.
inline std::vector<ConvergenceReport> run_convergence_study(const ConvergenceStudyConfig& cfg) {
  if (cfg.R_list.empty()) throw std::invalid_argument("run_convergence_study: empty R list");
  for (int R : cfg.R_list) {
    if (R < 0 || R >= cfg.R_ref) throw std::invalid_argument("run_convergence_study: every R must lie below R_ref");
  }
  const auto tab = tableau_by_name(cfg.tableau);

  struct Task {
    std::size_t s_index;
    int R;
    std::optional<SpectralField> final_state;
    double drift = std::numeric_limits<double>::quiet_NaN();
    double wall = 0.0;
    std::optional<std::string> failure;
  };
  std::vector<SpectralField> initial;
  std::vector<Task> tasks;
  std::vector<int> cutoffs = cfg.R_list;
  std::sort(cutoffs.begin(), cutoffs.end());
  for (std::size_t si = 0; si < cfg.s_list.size(); ++si) {
    InitSpec spec{cfg.dim, cfg.s_list[si], cfg.R_ref, cfg.eps, cfg.seed, cfg.literal_real_draw};
    initial.push_back(random_sobolev_field(spec));
    tasks.push_back({si, cfg.R_ref, {}, {}, {}, {}});
    for (int R : cutoffs) tasks.push_back({si, R, {}, {}, {}, {}});
  }

  detail::parallel_for(tasks.size(), cfg.threads, [&](std::size_t ti) {
    auto& task = tasks[ti];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const DynamicsConfig dyn(cfg.dim, cfg.m, task.R, cfg.assembly);
      const int r = cfg.r_inner ? std::min(*cfg.r_inner, task.R) : task.R;
      const auto traj = double_truncation_run(initial[task.s_index], r, dyn, cfg.nsteps, tab);
      task.final_state = traj.final();
      task.drift = energy_drift(traj).value;
    } catch (const BlowUpError& e) {
      task.failure = e.what();
    }
    task.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  std::vector<ConvergenceReport> reports;
  std::size_t ti = 0;
  for (std::size_t si = 0; si < cfg.s_list.size(); ++si) {
    ConvergenceReport rep;
    rep.s = cfg.s_list[si];
    rep.reference_R = cfg.R_ref;
    rep.config_echo = cfg.echo();
    const Task& ref = tasks[ti++];
    rep.reference_wall_time_s = ref.wall;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
      const Task& t = tasks[ti++];
      ConvergenceRow row;
      row.R = t.R;
      row.s = rep.s;
      row.wall_time_s = t.wall;
      if (ref.failure) {
        row.failure = "reference run failed: " + *ref.failure;
      } else if (t.failure) {
        row.failure = t.failure;
      } else {
        row.error_Hm = cross_cutoff_error(*t.final_state, *ref.final_state, cfg.m);
        row.energy_drift = t.drift;
        pts.emplace_back(static_cast<double>(t.R), row.error_Hm);
      }
      rep.rows.push_back(row);
    }
    const auto valid = std::count_if(pts.begin(), pts.end(), [](const auto& p) { return p.second > 0.0; });
    if (valid >= 2) rep.fitted_slope = fit_rate(pts).slope;
    reports.push_back(std::move(rep));
  }
  return reports;
}

/// `R,s,error_Hm,energy_drift,wall_time_s` with the configuration echoed in
/// '#' comment lines; failed rows carry nan values plus a comment.
inline std::string report_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  for (const auto& c : rep.config_echo) os << "# " << c << '\n';
  os << "# s=" << format_double(rep.s) << " reference_R=" << rep.reference_R << '\n';
  for (const auto& row : rep.rows) {
    if (row.failure) os << "# R=" << row.R << " failed: " << *row.failure << '\n';
  }
  os << "R,s,error_Hm,energy_drift,wall_time_s\n";
  for (const auto& row : rep.rows) {
    os << row.R << ',' << format_double(row.s) << ',' << format_double(row.error_Hm) << ','
       << format_double(row.energy_drift) << ',' << format_double(row.wall_time_s) << '\n';
  }
  return os.str();
}

/// `s,fitted_slope,reference_R,points`; the slope cell is empty when no
/// slope could be fitted.
inline std::string summary_csv(const std::vector<ConvergenceReport>& reports) {
  std::ostringstream os;
  if (!reports.empty()) {
    for (const auto& c : reports.front().config_echo) os << "# " << c << '\n';
  }
  os << "s,fitted_slope,reference_R,points\n";
  for (const auto& rep : reports) {
    const auto n = std::count_if(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return !r.failure; });
    os << format_double(rep.s) << ',' << (rep.fitted_slope ? format_double(*rep.fitted_slope) : std::string()) << ','
       << rep.reference_R << ',' << n << '\n';
  }
  return os.str();
}

/// Plot-ready columns `s,log2_R,log10_error`.
inline std::string plot_data(const std::vector<ConvergenceReport>& reports) {
  std::ostringstream os;
  if (!reports.empty()) {
    for (const auto& c : reports.front().config_echo) os << "# " << c << '\n';
  }
  os << "s,log2_R,log10_error\n";
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      if (row.failure || !(row.error_Hm > 0.0)) continue;
      os << format_double(rep.s) << ',' << format_double(std::log2(static_cast<double>(row.R))) << ','
         << format_double(std::log10(row.error_Hm)) << '\n';
    }
  }
  return os.str();
}

}  // namespace epdiff
