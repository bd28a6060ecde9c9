#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "epdiff/harness.hpp"
#include "support/oracles.hpp"

using namespace epdiff;
using Catch::Approx;
using epdiff::testing::relative_l2;

namespace {

double envelope(double q, double s, double eps) {
  return 2.0 * std::pow(1.0 + q, -(s + 1.0) / 2.0) * std::pow(std::log(2.0 + q), -(0.5 + eps));
}

/// sum_{|xi|_inf <= r} |v(xi)|^2 (1+|xi|^2)^k over all components.
double partial_sum(const SpectralField& v, int r, double k) {
  return std::pow(sobolev_norm(truncate(v, r), k), 2);
}

}  // namespace

TEST_CASE("random Sobolev initial data", "[harness][init]") {
  for (bool literal : {false, true}) {
    const InitSpec spec{2, 3.5, 12, 0.1, 5, literal};
    const auto v = random_sobolev_field(spec);
    REQUIRE(v.ncomp() == 2);
    const auto& g = v.grid();
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        REQUIRE(v(c, g.mirror(i)) == std::conj(v(c, i)));
        REQUIRE(std::abs(v(c, i)) <= envelope(g.norm_sq(i), spec.s, spec.eps) * (1 + 1e-15));
        if (literal) REQUIRE(v(c, i).real() >= 0.0);
      }
    }
    REQUIRE(random_sobolev_field(spec) == v);
  }
  const auto a = random_sobolev_field({2, 3.0, 8, 0.1, 1, false});
  const auto b = random_sobolev_field({2, 3.0, 8, 0.1, 2, false});
  REQUIRE_FALSE(a == b);
  REQUIRE_THROWS_AS(random_sobolev_field({2, -1.0, 8, 0.1, 1, false}), std::invalid_argument);
  REQUIRE_THROWS_AS(random_sobolev_field({2, 1.0, 8, 0.0, 1, false}), std::invalid_argument);
}

TEST_CASE("partial sums saturate at the target regularity only", "[harness][init]") {
  const double s = 3.0;
  const auto v = random_sobolev_field({2, s, 64, 0.1, 1, false});
  const double at_s = partial_sum(v, 64, s) / partial_sum(v, 32, s);
  const double above = partial_sum(v, 64, s + 1) / partial_sum(v, 32, s + 1);
  INFO("ratio at s " << at_s << ", at s+1 " << above);
  REQUIRE(at_s <= 1.1);
  REQUIRE(above >= 2.0);
}

TEST_CASE("fit_rate", "[harness][fit]") {
  REQUIRE(fit_rate({{4, 1.0 / 16}, {8, 1.0 / 64}, {16, 1.0 / 256}}).slope == Approx(-2.0).epsilon(1e-14));
  REQUIRE(fit_rate({{4, 0.3}, {8, 0.3}, {32, 0.3}}).slope == Approx(0.0).margin(1e-14));
  const auto fit = fit_rate({{4, 1.0 / 16}, {8, 0.0}, {16, 1.0 / 256}});
  REQUIRE(fit.excluded == 1);
  REQUIRE(fit.used == 2);
  REQUIRE(fit.slope == Approx(-2.0).epsilon(1e-14));
  REQUIRE_THROWS_AS(fit_rate({{4, 1.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_rate({{4, 1.0}, {8, -1.0}}), std::invalid_argument);

  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> noise(0.9, 1.1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int R : {4, 8, 16, 32, 64}) pts.emplace_back(R, 3.0 * std::pow(R, -2.5) * noise(rng));
    REQUIRE(fit_rate(pts).slope == Approx(-2.5).margin(0.15));
  }
}

TEST_CASE("energy drift", "[harness][drift]") {
  const DynamicsConfig cfg(2, 3, 4);
  SpectralField c(2, 4, 2);
  c.at(0, {0, 0, 0}) = 0.9;
  const auto traj = integrate_geodesic(c, 8, dopri5_6stage(), cfg, {0.5, 1.0});
  const auto d = energy_drift(traj);
  REQUIRE(d.value == 0.0);
  REQUIRE_FALSE(d.absolute);

  Trajectory manual;
  manual.energy_log = {0.0, 4e-6};
  const auto z = energy_drift(manual);
  REQUIRE(z.absolute);
  REQUIRE(z.value == Approx(2e-3));
  manual.energy_log = {4.0, 4.41, 3.61};
  REQUIRE(energy_drift(manual).value == Approx(0.05));
  REQUIRE_THROWS_AS(energy_drift(Trajectory{}), std::invalid_argument);
}

TEST_CASE("cross-cutoff error", "[harness][error]") {
  const auto v = random_sobolev_field({2, 4.0, 16, 0.1, 9, false});
  REQUIRE(cross_cutoff_error(v, v, 3.0) == 0.0);
  const auto t = truncate(v, 8);
  const double tail = std::sqrt(std::pow(sobolev_norm(v, 3.0), 2) - std::pow(sobolev_norm(t, 3.0), 2));
  REQUIRE(cross_cutoff_error(t, v, 3.0) == Approx(tail).epsilon(1e-10));
  REQUIRE_THROWS_AS(cross_cutoff_error(v, t, 3.0), std::invalid_argument);
}

TEST_CASE("double truncation", "[harness][double_truncation]") {
  const DynamicsConfig cfg(2, 3, 6);
  const auto v0 = random_sobolev_field({2, 3.0, 6, 0.1, 4, false});
  SECTION("r = R is the plain scheme") {
    const auto a = double_truncation_run(v0, 6, cfg, 32, dopri5_6stage());
    const auto b = integrate_geodesic(v0, 32, dopri5_6stage(), cfg);
    REQUIRE(a.final() == b.final());
  }
  SECTION("r = 0 gives the translation solution") {
    const auto traj = double_truncation_run(v0, 0, cfg, 16, dopri5_6stage());
    const auto expect = zero_extend(truncate(v0, 0), 6);
    REQUIRE(traj.final() == expect);
  }
  REQUIRE_THROWS_AS(double_truncation_run(v0, 7, cfg, 16, dopri5_6stage()), std::invalid_argument);
}

TEST_CASE("double truncation errors decrease for H^m data", "[harness][double_truncation][slow]") {
  // s = m: v0 only in H^m, with a shared inner cutoff so that the outer
  // cutoff R is the only thing that varies.
  const double m = 3.0;
  const auto v0 = random_sobolev_field({2, m, 64, 0.1, 1, false});
  const auto tab = dopri5_6stage();
  const int r = 6;
  const auto ref = double_truncation_run(v0, r, DynamicsConfig(2, m, 64), 1024, tab).final();
  std::vector<double> errors;
  for (int R : {8, 16, 32}) {
    const DynamicsConfig cfg(2, m, R);
    errors.push_back(cross_cutoff_error(double_truncation_run(v0, r, cfg, 1024, tab).final(), ref, m));
  }
  INFO("errors " << errors[0] << " " << errors[1] << " " << errors[2]);
  REQUIRE(errors[1] < errors[0]);
  REQUIRE(errors[2] < errors[1]);
}

TEST_CASE("small convergence study", "[harness][study]") {
  ConvergenceStudyConfig cfg;
  cfg.s_list = {3.0, 6.0};
  cfg.R_list = {8, 4};
  cfg.R_ref = 16;
  cfg.nsteps = 128;
  cfg.threads = 2;
  const auto reports = run_convergence_study(cfg);
  REQUIRE(reports.size() == 2);
  for (const auto& rep : reports) {
    REQUIRE(rep.rows.size() == 2);
    REQUIRE(rep.rows[0].R == 4);
    REQUIRE(rep.rows[1].R == 8);
  }
  // H^3 data is too stiff for h = 1/128 at the reference cutoff: the
  // reference blows up and both rows of that study are flagged.
  for (const auto& row : reports[0].rows) {
    REQUIRE(row.failure);
    REQUIRE(row.failure->find("reference run failed") == 0);
    REQUIRE(std::isnan(row.error_Hm));
  }
  REQUIRE_FALSE(reports[0].fitted_slope);
  for (const auto& row : reports[1].rows) {
    REQUIRE_FALSE(row.failure);
    REQUIRE(row.error_Hm > 0.0);
  }
  REQUIRE(reports[1].rows[1].error_Hm < reports[1].rows[0].error_Hm);
  REQUIRE(reports[1].fitted_slope.has_value());

  // Same seed and configuration: identical numbers.
  cfg.threads = 1;
  const auto again = run_convergence_study(cfg);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t k = 0; k < reports[i].rows.size(); ++k) {
      REQUIRE(again[i].rows[k].failure == reports[i].rows[k].failure);
      if (reports[i].rows[k].failure) continue;
      REQUIRE(again[i].rows[k].error_Hm == reports[i].rows[k].error_Hm);
      REQUIRE(again[i].rows[k].energy_drift == reports[i].rows[k].energy_drift);
    }
  }

  const auto csv = report_csv(reports[0]);
  REQUIRE(csv.find("# epdiff " + std::string(kVersion)) == 0);
  REQUIRE(csv.find("\n# R=4 failed: reference run failed") != std::string::npos);
  REQUIRE(csv.find("\nR,s,error_Hm,energy_drift,wall_time_s\n4,3,nan,nan,") != std::string::npos);
  const auto summary = summary_csv(reports);
  REQUIRE(summary.find("s,fitted_slope,reference_R,points\n3,,16,0\n6,-") != std::string::npos);
  const auto plot = plot_data(reports);
  REQUIRE(plot.find("s,log2_R,log10_error\n6,2,") != std::string::npos);
}

TEST_CASE("study edge cases", "[harness][study]") {
  ConvergenceStudyConfig cfg;
  cfg.s_list = {6.0};
  cfg.R_list = {4};
  cfg.R_ref = 8;
  cfg.nsteps = 64;
  const auto reports = run_convergence_study(cfg);
  REQUIRE_FALSE(reports[0].fitted_slope);
  REQUIRE(summary_csv(reports).find("\n6,,8,1\n") != std::string::npos);

  cfg.R_list = {8};
  REQUIRE_THROWS_AS(run_convergence_study(cfg), std::invalid_argument);

  // Failed rows keep their place in the report with nan values.
  ConvergenceReport rep;
  rep.s = 1.0;
  rep.rows.push_back({4, 1.0, std::nan(""), std::nan(""), 0.1, std::string("blow-up")});
  const auto csv = report_csv(rep);
  REQUIRE(csv.find("# R=4 failed: blow-up") != std::string::npos);
  REQUIRE(csv.find("\n4,1,nan,nan,") != std::string::npos);
}
