// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "epdiff/epdiff.hpp"

using namespace epdiff;

namespace {

constexpr double pi = std::numbers::pi;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SpectralField random_hermitian(int dim, int cutoff, int ncomp, std::mt19937_64& rng, double decay = 0.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField f(dim, cutoff, ncomp);
  const auto& grid = f.grid();
  for (int c = 0; c < ncomp; ++c) {
    for (std::size_t i = grid.center(); i < grid.size(); ++i) {
      const double w = std::pow(1.0 + grid.norm_sq(i), -decay / 2.0);
      const Complex z = i == grid.center() ? Complex(g(rng), 0.0) : Complex(g(rng), g(rng));
      f(c, i) = w * z;
      f(c, grid.mirror(i)) = std::conj(w * z);
    }
  }
  return f;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome convolution_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int d : {1, 2}) {
    for (int R : {2, 4, 8}) {
      for (int k = 0; k < 50; ++k) {
        const auto f = random_hermitian(d, R, 1, rng);
        const auto g = random_hermitian(d, R, 1, rng);
        const auto direct = convolve_direct(f, g, 2 * R);
        const auto fast = convolve_fft(f, g, 2 * R);
        worst = std::max(worst, sobolev_norm(fast - direct, 0.0) / sobolev_norm(direct, 0.0));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "max relative discrepancy " << worst << ", " << elapsed << " s";
  return {worst <= 1e-12 && elapsed < 10.0, os.str()};
}

Outcome energy_conservation() {
  const DynamicsConfig cfg(2, 3, 16);
  const auto times = uniform_sample_times(1024, 64);
  std::ostringstream os;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto v0 = truncate(random_sobolev_field({2, 4.0, 16, 0.1, seed, false}), 16);
    const double d1 = energy_drift(integrate_geodesic(v0, 1024, dopri5_6stage(), cfg, times)).value;
    const double d2 = energy_drift(integrate_geodesic(v0, 2048, dopri5_6stage(), cfg, times)).value;
    const double ratio = d1 / d2;
    ok = ok && d1 <= 1e-8 && ratio >= 20.0 && ratio <= 45.0;
    os << "seed " << seed << ": drift " << d1 << ", ratio " << ratio << "; ";
  }
  return {ok, os.str()};
}

Outcome stationary_translation() {
  const int R = 8;
  const DynamicsConfig cfg(2, 3, R);
  SpectralField v0(2, R, 2);
  const double c[2] = {0.6, 0.8};
  v0.at(0, {0, 0, 0}) = c[0];
  v0.at(1, {0, 0, 0}) = c[1];
  const auto traj = integrate_geodesic(v0, 64, dopri5_6stage(), cfg);
  double coeff = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    for (std::size_t i = 0; i < v0.grid().size(); ++i) coeff = std::max(coeff, std::abs(traj.final()(comp, i) - v0(comp, i)));
  }
  const auto flows = integrate_flow(traj, cfg, default_flow_grid(R), dopri5_6stage(), 64);
  const auto& last = flows.back();
  double disp = 0.0;
  for (std::size_t k = 0; k < last.nodes(); ++k) {
    for (int i = 0; i < 2; ++i) disp = std::max(disp, std::abs(last.disp[k * 2 + static_cast<std::size_t>(i)] - c[i]));
  }
  std::ostringstream os;
  os << "max coefficient change " << coeff << ", max displacement error " << disp;
  return {coeff <= 1e-14 && disp <= 1e-14, os.str()};
}

Outcome convergence_rates() {
  std::ostringstream os;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    ConvergenceStudyConfig cfg;
    cfg.seed = seed;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto reports = run_convergence_study(cfg);
    os << "seed " << seed << ":";
    for (const auto& rep : reports) {
      os << " s=" << rep.s << " slope ";
      if (rep.fitted_slope) {
        os << *rep.fitted_slope;
      } else {
        os << "none";
      }
      const auto& rows = rep.rows;
      if (rep.s == 5.0) ok = ok && rep.fitted_slope && *rep.fitted_slope >= -2.8 && *rep.fitted_slope <= -1.0;
      if (rep.s == 6.0) ok = ok && rep.fitted_slope && *rep.fitted_slope >= -3.8 && *rep.fitted_slope <= -2.0;
      if (rep.s == 4.0) {
        const bool conv = !rows.front().failure && !rows.back().failure && rows.back().error_Hm < rows.front().error_Hm;
        ok = ok && conv;
        os << " (R=32 below R=4: " << (conv ? "yes" : "no") << ")";
      }
      std::size_t failed = 0;
      for (const auto& row : rows) failed += row.failure ? 1 : 0;
      if (failed > 0) os << " [" << failed << " failed rows]";
    }
    os << "; ";
  }
  return {ok, os.str()};
}

Outcome single_mode() {
  double worst = 0.0;
  for (double m : {2.0, 3.0}) {
    for (int R : {1, 2, 3, 4, 8}) {
      const DynamicsConfig cfg(1, m, R);
      SpectralField v(1, R, 1);
      v.at(0, {1, 0, 0}) = Complex(0.0, -0.5);
      v.at(0, {-1, 0, 0}) = Complex(0.0, 0.5);
      SpectralField expected(1, R, 1);
      if (R >= 2) {
        const double amp = -3.0 * pi * std::pow((1.0 + 4.0 * pi * pi) / (1.0 + 16.0 * pi * pi), m);
        expected.at(0, {2, 0, 0}) = Complex(0.0, -0.5 * amp);
        expected.at(0, {-2, 0, 0}) = Complex(0.0, 0.5 * amp);
      }
      const auto rhs = discrete_rhs(v, cfg);
      for (std::size_t i = 0; i < rhs.grid().size(); ++i) worst = std::max(worst, std::abs(rhs(0, i) - expected(0, i)));
    }
  }
  std::ostringstream os;
  os << "max coefficient error " << worst;
  return {worst <= 1e-12, os.str()};
}

template <class Real>
Real integrate_decay(int nsteps) {
  const auto tab = dopri5_6stage<Real>();
  Real y = 1;
  const Real h = Real(1) / Real(nsteps);
  for (int n = 0; n < nsteps; ++n) y = rk_step(y, h, tab, [](Real x) { return -x; });
  return y;
}

Outcome rk_order() {
  const double z = -0.1;
  const double poly = 1 + z + z * z / 2 + z * z * z / 6 + std::pow(z, 4) / 24 + std::pow(z, 5) / 120 + std::pow(z, 6) / 600;
  const double step_error = std::abs(rk_step(1.0, 0.1, dopri5_6stage(), [](double y) { return -y; }) - poly);
  // Extended precision keeps roundoff below the h = 2^-8 error.
  std::vector<std::pair<double, double>> points;
  for (int k = 4; k <= 8; ++k) {
    const int n = 1 << k;
    points.emplace_back(n, static_cast<double>(std::abs(integrate_decay<long double>(n) - std::exp(-1.0L))));
  }
  const double order = -fit_rate(points).slope;
  std::ostringstream os;
  os << "stability polynomial error " << step_error << ", global order " << order;
  return {step_error <= 1e-15 && std::abs(order - 5.0) <= 0.1, os.str()};
}

Outcome weak_duality() {
  std::mt19937_64 rng(7);
  const int R = 8;
  const DynamicsConfig cfg(2, 3, R);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto v = random_hermitian(2, R, 2, rng, 4.0);
    const auto w = random_hermitian(2, R, 2, rng, 4.0);
    const auto p = momentum(v, cfg);
    const double pdot_w = weak_pairing(momentum(discrete_rhs(v, cfg), cfg), w);
    // ad_V W = -[V, W]_R.
    const double p_adw = -weak_pairing(p, lie_bracket_truncated(v, w, R));
    const double scale = std::max(std::abs(pdot_w), std::abs(p_adw));
    worst = std::max(worst, std::abs(pdot_w + p_adw) / scale);
  }
  std::ostringstream os;
  os << "max relative defect " << worst;
  return {worst <= 1e-10, os.str()};
}

Outcome momentum_transport() {
  const auto tab = dopri5_6stage();
  const std::size_t nsteps = 256;
  const auto field = random_sobolev_field({2, 6.0, 64, 0.1, 1, false});
  std::vector<double> maxima;
  std::ostringstream os;
  for (int R : {8, 16, 32}) {
    const DynamicsConfig cfg(2, 3, R);
    const auto v0 = truncate(field, R);
    const auto traj = integrate_geodesic(v0, nsteps, tab, cfg, {0.0, 0.25, 0.5, 0.75, 1.0});
    const int n = default_flow_grid(R);
    const auto flows = integrate_flow(traj, cfg, n, tab, nsteps);
    SpectralField w(2, R, 2);
    w.at(0, {1, 0, 0}) = Complex(0.0, -0.5);
    w.at(0, {-1, 0, 0}) = Complex(0.0, 0.5);
    const auto res = momentum_transport_residual(traj, flows, w, cfg);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    maxima.push_back(worst);
    os << "R=" << R << " (N=" << n << ") max residual " << worst << "; ";
  }
  return {maxima[1] <= maxima[0] && maxima[2] <= maxima[1], os.str()};
}

Outcome rhs_scaling() {
  std::mt19937_64 rng(3);
  std::vector<double> medians;
  std::ostringstream os;
  for (int R : {16, 32, 64}) {
    const DynamicsConfig cfg(2, 3, R);
    const auto v = random_hermitian(2, R, 2, rng, 4.0);
    auto sink = discrete_rhs(v, cfg);
    const int reps = R == 64 ? 40 : 160;
    std::vector<double> samples;
    for (int k = 0; k < 9; ++k) {
      const auto t0 = Clock::now();
      for (int r = 0; r < reps; ++r) sink = discrete_rhs(v, cfg);
      samples.push_back(seconds_since(t0) / reps);
    }
    std::nth_element(samples.begin(), samples.begin() + 4, samples.end());
    medians.push_back(samples[4]);
    os << "R=" << R << " " << samples[4] * 1e3 << " ms; ";
  }
  const double r1 = medians[1] / medians[0];
  const double r2 = medians[2] / medians[1];
  os << "ratios " << r1 << ", " << r2;
  return {r1 <= 5.5 && r2 <= 5.5, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 convolution oracle equivalence", convolution_oracle},
      {"2 energy conservation", energy_conservation},
      {"3 stationary translation", stationary_translation},
      {"4 convergence rates", convergence_rates},
      {"5 single-mode closed form", single_mode},
      {"6 Runge-Kutta order", rk_order},
      {"7 weak-form duality", weak_duality},
      {"8 momentum-transport diagnostic", momentum_transport},
      {"9 RHS evaluation scaling", rhs_scaling},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += out.pass ? 0 : 1;
    std::printf("%s %s: %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
