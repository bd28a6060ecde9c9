// Command-line front end: solve, converge and diagnose.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "epdiff/epdiff.hpp"

namespace fs = std::filesystem;
using namespace epdiff;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kBlowUp = 2, kDegenerate = 3 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Keys accepted in a config file; each mirrors the flag of the same name.
const std::vector<std::string> kKeys = {"d",     "m",       "R",    "R-ref",   "s",      "s-list",
                                        "R-list", "steps",  "tableau", "seed", "eps",    "r-inner",
                                        "N-flow", "in",     "out-dir", "literal-real-draw"};

struct RunConfig {
  std::string command;
  std::optional<int> d, R, R_ref, r_inner, N_flow;
  std::optional<double> m, s, eps;
  std::vector<double> s_list;
  std::vector<int> R_list;
  std::optional<long long> steps;
  std::string tableau = "dopri5";
  std::optional<std::string> seed, in;
  std::string out_dir = ".";
  bool literal_real_draw = false;

  /// Resolved configuration as key=value lines, preceded by the version.
  std::vector<std::string> echo() const {
    std::vector<std::string> out{std::string("epdiff ") + kVersion + " " + command};
    auto add = [&out](const std::string& k, const std::string& v) { out.push_back(k + "=" + v); };
    auto join = [](const auto& xs) {
      std::ostringstream os;
      for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
      return os.str();
    };
    if (d) add("d", std::to_string(*d));
    if (m) add("m", format_double(*m));
    if (R) add("R", std::to_string(*R));
    if (R_ref) add("R-ref", std::to_string(*R_ref));
    if (s) add("s", format_double(*s));
    if (!s_list.empty()) add("s-list", join(s_list));
    if (!R_list.empty()) add("R-list", join(R_list));
    if (steps) add("steps", std::to_string(*steps));
    add("tableau", tableau);
    add("seed", seed.value_or("none"));
    if (eps) add("eps", format_double(*eps));
    if (r_inner) add("r-inner", std::to_string(*r_inner));
    if (N_flow) add("N-flow", std::to_string(*N_flow));
    if (in) add("in", *in);
    add("out-dir", out_dir);
    add("literal-real-draw", literal_real_draw ? "true" : "false");
    return out;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

bool flag_given(const std::vector<std::string>& args, const std::string& key) {
  const std::string f = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == f || a.rfind(f + "=", 0) == 0; });
}

/// Command-line arguments with config-file entries inserted ahead of them
/// for every key not given as a flag.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (!path) return args;
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_config_file(*path)) {
    if (flag_given(args, key)) continue;
    if (key == "literal-real-draw") {
      if (value == "true" || value == "1" || value == "yes") {
        extra.push_back("--literal-real-draw");
      } else if (value != "false" && value != "0" && value != "no") {
        throw ConfigError("literal-real-draw expects true or false, got '" + value + "'");
      }
      continue;
    }
    extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin(), extra.begin(), extra.end());
  return args;
}

unsigned thread_budget() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EPDIFF_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw ConfigError(std::string("EPDIFF_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return n;
}

template <class T>
T require(const std::optional<T>& v, const char* key) {
  if (!v) throw ConfigError(std::string("missing required key: ") + key);
  return *v;
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::optional<std::uint64_t> parse_seed(const RunConfig& cfg) {
  if (!cfg.seed || *cfg.seed == "none") return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(*cfg.seed, &pos);
    if (pos != cfg.seed->size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("seed must be a nonnegative integer or 'none', got '" + *cfg.seed + "'");
  }
}

void validate_common(const RunConfig& cfg) {
  if (cfg.d) check(*cfg.d >= 1 && *cfg.d <= kMaxDim, "d must lie in 1..3");
  if (cfg.m) check(*cfg.m >= 1.0, "m must be >= 1");
  if (cfg.R) check(*cfg.R >= 0, "R must be >= 0");
  if (cfg.steps) check(*cfg.steps >= 1, "steps must be positive");
  if (cfg.eps) check(*cfg.eps > 0.0, "eps must be positive");
  if (cfg.s) check(*cfg.s >= 0.0, "s must be >= 0");
  if (cfg.r_inner) check(*cfg.r_inner >= 0, "r-inner must be >= 0");
  if (cfg.N_flow) check(*cfg.N_flow >= 1, "N-flow must be positive");
  check(cfg.tableau == "dopri5" || cfg.tableau == "rk4", "tableau must be dopri5 or rk4");
  parse_seed(cfg);
}

/// Initial velocity on Z_{d,R}: read from --in, or drawn at max(R, R-ref)
/// and truncated; --r-inner applies a further truncation.
SpectralField initial_velocity(const RunConfig& cfg, int d, int R) {
  SpectralField v;
  if (cfg.in) {
    try {
      v = read_field_csv(fs::path(*cfg.in));
    } catch (const std::exception& e) {
      throw ConfigError("cannot read input field " + *cfg.in + ": " + e.what());
    }
    check(v.dim() == d, "input field dimension " + std::to_string(v.dim()) + " differs from d = " + std::to_string(d));
    check(v.ncomp() == d, "input field must have d components");
    check(v.is_hermitian(), "input field is not Hermitian-symmetric (the velocity would not be real)");
    v = resample(v, R);
  } else {
    const auto seed = parse_seed(cfg);
    if (!seed) throw ConfigError("missing required key: in (or a numeric seed)");
    const double s = require(cfg.s, "s");
    const int gen = std::max(R, cfg.R_ref.value_or(R));
    v = truncate(random_sobolev_field({d, s, gen, cfg.eps.value_or(0.1), *seed, cfg.literal_real_draw}), R);
  }
  if (cfg.r_inner && *cfg.r_inner < R) v = zero_extend(truncate(v, *cfg.r_inner), R);
  return v;
}

std::vector<std::string> with_note(std::vector<std::string> echo, const std::string& note) {
  echo.push_back(note);
  return echo;
}

void write_output(const RunConfig& cfg, const std::string& name, const std::string& content) {
  fs::create_directories(cfg.out_dir);
  write_file_atomic(fs::path(cfg.out_dir) / name, content);
}

int cmd_solve(const RunConfig& cfg) {
  const int d = require(cfg.d, "d");
  const double m = require(cfg.m, "m");
  const int R = require(cfg.R, "R");
  const auto nsteps = static_cast<std::size_t>(cfg.steps.value_or(1024));
  const auto tab = tableau_by_name(cfg.tableau);
  const DynamicsConfig dyn(d, m, R);
  const auto v0 = initial_velocity(cfg, d, R);
  const auto echo = cfg.echo();

  const auto times = uniform_sample_times(nsteps, 64);
  const auto traj = integrate_geodesic(v0, nsteps, tab, dyn, times);
  const auto drift = energy_drift(traj);

  std::ostringstream log;
  for (const auto& c : echo) log << "# " << c << '\n';
  log << "# energy_drift=" << format_double(drift.value) << (drift.absolute ? " (absolute)" : "") << '\n';
  log << "t,energy,metric_norm\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    log << format_double(traj.states[k].t) << ',' << format_double(traj.energy_log[k]) << ','
        << format_double(std::sqrt(traj.energy_log[k])) << '\n';
  }
  write_output(cfg, "initial_rhs.csv", field_csv_string(discrete_rhs(v0, dyn), with_note(echo, "discrete_rhs(V_0)")));
  write_output(cfg, "energy_log.csv", log.str());
  write_output(cfg, "final_state.csv", field_csv_string(traj.final(), with_note(echo, "V_1")));
  std::cout << "solve: R=" << R << " steps=" << nsteps << " energy_drift=" << format_double(drift.value) << '\n';
  return kOk;
}

int cmd_converge(const RunConfig& cfg) {
  ConvergenceStudyConfig study;
  if (cfg.d) study.dim = *cfg.d;
  if (cfg.m) study.m = *cfg.m;
  if (!cfg.s_list.empty()) study.s_list = cfg.s_list;
  if (cfg.s && cfg.s_list.empty()) study.s_list = {*cfg.s};
  if (!cfg.R_list.empty()) study.R_list = cfg.R_list;
  if (cfg.R && cfg.R_list.empty()) study.R_list = {*cfg.R};
  if (cfg.R_ref) study.R_ref = *cfg.R_ref;
  if (cfg.steps) study.nsteps = static_cast<std::size_t>(*cfg.steps);
  study.tableau = cfg.tableau;
  if (const auto seed = parse_seed(cfg)) study.seed = *seed;
  if (cfg.eps) study.eps = *cfg.eps;
  study.literal_real_draw = cfg.literal_real_draw;
  study.r_inner = cfg.r_inner;
  study.threads = thread_budget();
  for (double s : study.s_list) check(s >= 0.0, "every s must be >= 0");
  for (int R : study.R_list) check(R >= 0 && R < study.R_ref, "every R in R-list must lie in [0, R-ref)");

  const auto reports = run_convergence_study(study);
  std::size_t ok = 0, total = 0;
  for (const auto& rep : reports) {
    std::ostringstream name;
    name << "convergence_s" << rep.s << ".csv";
    auto text = report_csv(rep);
    // Prepend the CLI echo so the run can be replayed from the file alone.
    std::string head;
    for (const auto& c : cfg.echo()) head += "# " + c + '\n';
    write_output(cfg, name.str(), head + text);
    for (const auto& row : rep.rows) {
      ++total;
      if (!row.failure) ++ok;
    }
    std::cout << "s=" << rep.s << " slope=" << (rep.fitted_slope ? format_double(*rep.fitted_slope) : "n/a") << '\n';
  }
  write_output(cfg, "convergence_summary.csv", summary_csv(reports));
  write_output(cfg, "convergence_plot.dat", plot_data(reports));
  if (total > 0 && ok == 0) {
    std::cerr << "converge: every run failed\n";
    return kBlowUp;
  }
  return kOk;
}

/// sin(2 pi x_1) e_1 truncated to Z_{d,R}.
SpectralField diagnostic_test_field(int d, int R) {
  SpectralField w(d, R, d);
  if (R >= 1) {
    w.at(0, {1, 0, 0}) = Complex(0.0, -0.5);
    w.at(0, {-1, 0, 0}) = Complex(0.0, 0.5);
  }
  return w;
}

int cmd_diagnose(const RunConfig& cfg) {
  const int d = require(cfg.d, "d");
  const double m = require(cfg.m, "m");
  const int R = require(cfg.R, "R");
  const auto nsteps = static_cast<std::size_t>(cfg.steps.value_or(1024));
  const int N = cfg.N_flow.value_or(default_flow_grid(R));
  check(N >= 2 * R + 1, "N-flow must be at least 2R+1");
  const auto tab = tableau_by_name(cfg.tableau);
  const DynamicsConfig dyn(d, m, R);
  const auto v0 = initial_velocity(cfg, d, R);
  const auto echo = cfg.echo();

  const auto traj = integrate_geodesic(v0, nsteps, tab, dyn, uniform_sample_times(nsteps, 8));
  const auto flows = integrate_flow(traj, dyn, N, tab, nsteps);
  const auto w = diagnostic_test_field(d, R);
  const auto residual = momentum_transport_residual(traj, flows, w, dyn);
  const auto drift = energy_drift(traj);

  double worst = 0.0, min_det = flows.front().min_det();
  std::ostringstream res;
  for (const auto& c : with_note(echo, "test field w = sin(2 pi x_1) e_1 truncated to R")) res << "# " << c << '\n';
  res << "t,residual,min_det\n";
  for (std::size_t k = 0; k < residual.size(); ++k) {
    worst = std::max(worst, std::abs(residual[k]));
    min_det = std::min(min_det, flows[k].min_det());
    res << format_double(flows[k].t) << ',' << format_double(residual[k]) << ',' << format_double(flows[k].min_det())
        << '\n';
  }

  std::ostringstream diag;
  for (const auto& c : echo) diag << "# " << c << '\n';
  diag << "quantity,value\n";
  diag << "energy_drift," << format_double(drift.value) << '\n';
  diag << "energy_drift_is_absolute," << (drift.absolute ? 1 : 0) << '\n';
  diag << "max_abs_momentum_residual," << format_double(worst) << '\n';
  diag << "min_det_final," << format_double(flows.back().min_det()) << '\n';
  diag << "min_det_overall," << format_double(min_det) << '\n';
  diag << "N_flow," << N << '\n';
  diag << "steps," << nsteps << '\n';

  const auto& fl = flows.back();
  std::ostringstream map;
  for (const auto& c : with_note(echo, "flow map at t=" + format_double(fl.t))) map << "# " << c << '\n';
  for (int a = 1; a <= d; ++a) map << "n_" << a << ',';
  map << "comp,disp";
  for (int j = 1; j <= d; ++j) map << ",jac_" << j;
  map << '\n';
  const auto dd = static_cast<std::size_t>(d);
  for (std::size_t k = 0; k < fl.nodes(); ++k) {
    std::vector<std::size_t> idx(dd);
    std::size_t rem = k;
    for (int a = d - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = rem % static_cast<std::size_t>(fl.n);
      rem /= static_cast<std::size_t>(fl.n);
    }
    const auto J = fl.jacobian(k);
    for (std::size_t i = 0; i < dd; ++i) {
      for (auto n : idx) map << n << ',';
      map << i + 1 << ',' << format_double(fl.disp[k * dd + i]);
      for (std::size_t j = 0; j < dd; ++j) map << ',' << format_double(J[i * dd + j]);
      map << '\n';
    }
  }
  write_output(cfg, "momentum_residual.csv", res.str());
  write_output(cfg, "diagnostics.csv", diag.str());
  write_output(cfg, "flow_map.csv", map.str());
  std::cout << "diagnose: energy_drift=" << format_double(drift.value) << " max_abs_residual=" << format_double(worst)
            << " min_det=" << format_double(min_det) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral solver for the EPDiff geodesic equation on the torus"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--config", "key=value configuration file (command-line flags take precedence)");
  app.add_option("--d", cfg.d, "space dimension (1..3)");
  app.add_option("--m", cfg.m, "metric order of L = (1 - Delta)^m");
  app.add_option("--R", cfg.R, "solver cutoff");
  app.add_option("--R-ref", cfg.R_ref, "reference cutoff (converge) or generation cutoff");
  app.add_option("--s", cfg.s, "Sobolev regularity of random initial data");
  app.add_option("--s-list", cfg.s_list, "regularities for converge")->delimiter(',');
  app.add_option("--R-list", cfg.R_list, "cutoffs for converge")->delimiter(',');
  app.add_option("--steps", cfg.steps, "fixed time steps on [0,1] (default 1024)");
  app.add_option("--tableau", cfg.tableau, "Runge-Kutta tableau")->check(CLI::IsMember({"dopri5", "rk4"}));
  app.add_option("--seed", cfg.seed, "random seed, or 'none' with --in");
  app.add_option("--eps", cfg.eps, "tail exponent of the random data (default 0.1)");
  app.add_option("--r-inner", cfg.r_inner, "inner cutoff r of the double truncation");
  app.add_option("--N-flow", cfg.N_flow, "particle grid size per axis (diagnose)");
  app.add_option("--in", cfg.in, "initial velocity field CSV");
  app.add_option("--out-dir", cfg.out_dir, "output directory (default .)");
  app.add_flag("--literal-real-draw", cfg.literal_real_draw, "draw random coefficients from a real interval");

  auto* solve = app.add_subcommand("solve", "integrate one bandlimited geodesic");
  auto* converge = app.add_subcommand("converge", "run the convergence study");
  auto* diagnose = app.add_subcommand("diagnose", "energy and momentum-transport diagnostics");
  for (auto* sub : {solve, converge, diagnose}) sub->fallthrough();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
    cfg.command = app.get_subcommands().front()->get_name();
    validate_common(cfg);
    if (*solve) return cmd_solve(cfg);
    if (*converge) return cmd_converge(cfg);
    return cmd_diagnose(cfg);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "epdiff: " << e.what() << '\n';
    return kConfigError;
  } catch (const BlowUpError& e) {
    std::cerr << "epdiff: " << e.what() << '\n';
    return kBlowUp;
  } catch (const DegeneracyError& e) {
    std::cerr << "epdiff: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "epdiff: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "epdiff: " << e.what() << '\n';
    return kConfigError;
  }
}
