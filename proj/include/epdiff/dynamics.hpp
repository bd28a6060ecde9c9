#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "epdiff/convolution.hpp"
#include "epdiff/fourier_multiplier.hpp"
#include "epdiff/spectral_field.hpp"

namespace epdiff {

/// Cutoff at which ad*_V P is assembled before the Riesz operator and the
/// final projection to the solver cutoff R are applied.
enum class AssemblyCutoff {
  doubled,  ///< 2R: the full product spectrum
  solver,   ///< R: every product truncated directly
};

/// Metric and discretization parameters of the bandlimited geodesic equation
/// with inertia operator L = (1 - Delta)^m and Riesz operator R = L^-1.
class DynamicsConfig {
 public:
  DynamicsConfig(int dim, double order, int cutoff, AssemblyCutoff assembly = AssemblyCutoff::doubled,
                 double laplace_scale = kTwoPi * kTwoPi)
      : dim_(dim),
        order_(order),
        cutoff_(cutoff),
        assembly_(assembly),
        inertia_(sobolev_L(order, laplace_scale)),
        riesz_(riesz_R(order, laplace_scale)) {
    if (order < 1.0) throw std::invalid_argument("DynamicsConfig: metric order m must be >= 1");
    if (cutoff < 0) throw std::invalid_argument("DynamicsConfig: cutoff must be nonnegative");
    const FrequencyGrid grid(dim, cutoff);
    const FrequencyGrid agrid(dim, assembly_cutoff());
    for (const auto& z : inertia_.sample(grid)) inertia_table_.push_back(z.real());
    for (const auto& z : riesz_.sample(agrid)) riesz_table_.push_back(z.real());
    plan_ = std::make_shared<const ConvolutionPlan>(dim, cutoff, assembly_cutoff());
  }

  int dim() const { return dim_; }
  double order() const { return order_; }
  int cutoff() const { return cutoff_; }
  AssemblyCutoff assembly() const { return assembly_; }
  int assembly_cutoff() const { return assembly_ == AssemblyCutoff::doubled ? 2 * cutoff_ : cutoff_; }
  FrequencyGrid grid() const { return {dim_, cutoff_}; }

  const FourierMultiplier& inertia() const { return inertia_; }
  const FourierMultiplier& riesz() const { return riesz_; }
  /// L^ on Z_{d,R}.
  const std::vector<double>& inertia_table() const { return inertia_table_; }
  /// R^ on Z_{d,assembly_cutoff()}.
  const std::vector<double>& riesz_table() const { return riesz_table_; }
  const ConvolutionPlan& plan() const { return *plan_; }

 private:
  int dim_;
  double order_;
  int cutoff_;
  AssemblyCutoff assembly_;
  FourierMultiplier inertia_;
  FourierMultiplier riesz_;
  std::vector<double> inertia_table_;
  std::vector<double> riesz_table_;
  std::shared_ptr<const ConvolutionPlan> plan_;
};

namespace detail {

inline void require_vector_pair(const SpectralField& a, const SpectralField& b, const char* who) {
  if (a.grid() != b.grid()) throw std::invalid_argument(std::string(who) + ": fields live on different grids");
  if (a.ncomp() != a.dim() || b.ncomp() != b.dim()) {
    throw std::invalid_argument(std::string(who) + ": vector fields with d components expected");
  }
}

/// 2 pi i xi_j on the grid, for j = 0..d-1.
inline std::vector<std::vector<Complex>> derivative_symbols(const FrequencyGrid& grid) {
  std::vector<std::vector<Complex>> out;
  for (int j = 0; j < grid.dim(); ++j) out.push_back(partial(j).sample(grid));
  return out;
}

/// Physical-space samples of the components of f and of all first partials,
/// on the padded grid of `plan`. values[i], grads[i * d + j] = d_j f_i.
/// Uses the plan's scratch slots [first_slot, first_slot + ncomp * (d + 1)).
struct PaddedSamples {
  std::vector<const double*> values;
  std::vector<const double*> grads;
};

inline PaddedSamples sample_with_gradient(const ConvolutionPlan& plan, const SpectralField& f,
                                          const std::vector<std::vector<Complex>>& dsym, std::size_t first_slot) {
  PaddedSamples s;
  const int d = f.dim();
  std::size_t slot = first_slot;
  for (int i = 0; i < f.ncomp(); ++i) {
    double* v = plan.scratch(slot++);
    plan.to_physical(f.component(i), {}, v);
    s.values.push_back(v);
    for (int j = 0; j < d; ++j) {
      double* g = plan.scratch(slot++);
      plan.to_physical(f.component(i), dsym[static_cast<std::size_t>(j)], g);
      s.grads.push_back(g);
    }
  }
  return s;
}

/// ad*_V P = div(P (x) V) + (DV)^T P evaluated on plan.output_grid(). The
/// three Fourier-side groupings
///   sum_j (D_j P_i) * V_j,   P_i * (sum_j D_j V_j),   sum_j (D_i V_j) * P_j
/// are all products of bandlimited factors, so every convolution shares the
/// same padded grid and the sum is formed pointwise before one forward
/// transform per component.
inline SpectralField coadjoint_star(const ConvolutionPlan& plan, const SpectralField& p, const SpectralField& v) {
  require_vector_pair(p, v, "coadjoint_star");
  if (p.grid() != plan.input_grid()) throw std::invalid_argument("coadjoint_star: plan/field cutoff mismatch");
  const int d = p.dim();
  const auto dsym = derivative_symbols(p.grid());
  const std::size_t per_field = static_cast<std::size_t>(d * (d + 1));
  const auto ps = sample_with_gradient(plan, p, dsym, 0);
  const auto vs = sample_with_gradient(plan, v, dsym, per_field);
  const std::size_t n = plan.physical_size();

  double* div = plan.scratch(2 * per_field);
  for (std::size_t k = 0; k < n; ++k) div[k] = 0.0;
  for (int j = 0; j < d; ++j) {
    const double* g = vs.grads[static_cast<std::size_t>(j * d + j)];
    for (std::size_t k = 0; k < n; ++k) div[k] += g[k];
  }

  SpectralField out(plan.output_grid(), d);
  double* acc = plan.scratch(2 * per_field + 1);
  for (int i = 0; i < d; ++i) {
    const double* pi = ps.values[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < n; ++k) acc[k] = pi[k] * div[k];
    for (int j = 0; j < d; ++j) {
      const double* dpij = ps.grads[static_cast<std::size_t>(i * d + j)];
      const double* vj = vs.values[static_cast<std::size_t>(j)];
      const double* dvji = vs.grads[static_cast<std::size_t>(j * d + i)];
      const double* pj = ps.values[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < n; ++k) acc[k] += dpij[k] * vj[k] + dvji[k] * pj[k];
    }
    plan.accumulate_spectrum(acc, out.component(i));
  }
  return out;
}

}  // namespace detail

/// Coadjoint operator ad*_V P = div(P (x) V) + (DV)^T P, exact up to
/// roundoff on Z_{d,r_out}, r_out <= 2R.
inline SpectralField coadjoint_star(const SpectralField& p, const SpectralField& v, int r_out) {
  detail::require_vector_pair(p, v, "coadjoint_star");
  detail::check_output_cutoff(p, r_out, "coadjoint_star");
  const ConvolutionPlan plan(p.dim(), p.cutoff(), r_out);
  return detail::coadjoint_star(plan, p, v);
}

/// Truncated Lie bracket [V,W]_r = Pi_r((DW)V - (DV)W).
inline SpectralField lie_bracket_truncated(const SpectralField& v, const SpectralField& w, int r) {
  detail::require_vector_pair(v, w, "lie_bracket_truncated");
  detail::check_output_cutoff(v, r, "lie_bracket_truncated");
  const ConvolutionPlan plan(v.dim(), v.cutoff(), r);
  const int d = v.dim();
  const auto dsym = detail::derivative_symbols(v.grid());
  const std::size_t per_field = static_cast<std::size_t>(d * (d + 1));
  const auto vs = detail::sample_with_gradient(plan, v, dsym, 0);
  const auto ws = detail::sample_with_gradient(plan, w, dsym, per_field);
  const std::size_t n = plan.physical_size();
  SpectralField out(plan.output_grid(), d);
  double* acc = plan.scratch(2 * per_field);
  for (int i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < n; ++k) acc[k] = 0.0;
    for (int j = 0; j < d; ++j) {
      const double* dwij = ws.grads[static_cast<std::size_t>(i * d + j)];
      const double* vj = vs.values[static_cast<std::size_t>(j)];
      const double* dvij = vs.grads[static_cast<std::size_t>(i * d + j)];
      const double* wj = ws.values[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < n; ++k) acc[k] += dwij[k] * vj[k] - dvij[k] * wj[k];
    }
    plan.accumulate_spectrum(acc, out.component(i));
  }
  return out;
}

/// Momentum P = L V.
inline SpectralField momentum(const SpectralField& v, const DynamicsConfig& cfg) {
  if (v.grid() != cfg.grid()) throw std::invalid_argument("momentum: field cutoff differs from the solver cutoff");
  SpectralField p(v.grid(), v.ncomp());
  const auto& lt = cfg.inertia_table();
  for (int c = 0; c < v.ncomp(); ++c) {
    const auto src = v.component(c);
    auto dst = p.component(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lt[i] * src[i];
  }
  return p;
}

/// Metric energy <L V, V>.
inline double energy(const SpectralField& v, const DynamicsConfig& cfg) {
  if (v.grid() != cfg.grid()) throw std::invalid_argument("energy: field cutoff differs from the solver cutoff");
  const auto& lt = cfg.inertia_table();
  double acc = 0.0;
  for (int c = 0; c < v.ncomp(); ++c) {
    const auto f = v.component(c);
    for (std::size_t i = 0; i < f.size(); ++i) acc += lt[i] * std::norm(f[i]);
  }
  return acc;
}

/// Velocity rate of the bandlimited geodesic equation,
///   dV/dt = -Pi_R( R^ ad*_V (L^ V) ),
/// with ad* assembled at cfg.assembly_cutoff(), multiplied by R^ there and
/// then projected to Z_{d,R}.
///
/// The mean of ad*_V(L V) is \int (d_i V) . L V dx, which vanishes because
/// d_i is skew and commutes with L; the zero mode is therefore set exactly
/// instead of keeping FFT roundoff of size eps |L V| |DV| there, which R^(0) = 1
/// would not damp. The mean velocity is conserved exactly as a result.
inline SpectralField discrete_rhs(const SpectralField& v, const DynamicsConfig& cfg) {
  if (v.grid() != cfg.grid() || v.ncomp() != cfg.dim()) {
    throw std::invalid_argument("discrete_rhs: velocity must be a d-component field on Z_{d,R}");
  }
  const auto p = momentum(v, cfg);
  auto a = detail::coadjoint_star(cfg.plan(), p, v);
  const auto& rt = cfg.riesz_table();
  const std::size_t mean = a.grid().center();
  for (int c = 0; c < a.ncomp(); ++c) {
    auto f = a.component(c);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= -rt[i];
    f[mean] = 0.0;
  }
  return truncate(a, cfg.cutoff());
}

}  // namespace epdiff
