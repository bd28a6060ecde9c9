#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <utility>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epdiff/fft.hpp"
#include "epdiff/spectral_field.hpp"

namespace epdiff {

/// Exact bandlimited products through a zero-padded real FFT grid.
///
/// Inputs live on Z_{d,R}. Their product has support in Z_{d,2R}; on a
/// periodic grid of size M >= 2R + r_out + 1 the aliased copies of that
/// support never reach Z_{d,r_out}, so reading the product spectrum back on
/// Z_{d,r_out} gives the linear convolution exactly. With r_out = 2R this is
/// the familiar M >= 4R + 1. M is rounded up to a 2-3-5 smooth size.
class ConvolutionPlan {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  ConvolutionPlan(int dim, int cutoff_in, int cutoff_out)
      : in_(dim, cutoff_in), out_(dim, cutoff_out) {
    if (cutoff_out > 2 * cutoff_in) {
      throw std::invalid_argument("ConvolutionPlan: output cutoff " + std::to_string(cutoff_out) +
                                  " exceeds 2R = " + std::to_string(2 * cutoff_in));
    }
    n_ = fft::fft_friendly_size(2 * cutoff_in + cutoff_out + 1);
    transform_ = fft::real_transform(dim, n_);

    in_slot_.assign(in_.size(), npos);
    for_each_frequency(in_, [&](std::size_t i, const Frequency& xi) {
      if (xi[dim - 1] >= 0) in_slot_[i] = half_index(xi);
    });
    out_slot_.resize(out_.size());
    out_conj_.resize(out_.size());
    for_each_frequency(out_, [&](std::size_t i, const Frequency& xi) {
      if (xi[dim - 1] >= 0) {
        out_slot_[i] = half_index(xi);
        out_conj_[i] = false;
      } else {
        Frequency neg{-xi[0], -xi[1], -xi[2]};
        out_slot_[i] = half_index(neg);
        out_conj_[i] = true;
      }
    });
  }

  const FrequencyGrid& input_grid() const { return in_; }
  const FrequencyGrid& output_grid() const { return out_; }
  int padded_size() const { return n_; }
  std::size_t physical_size() const { return transform_->real_size(); }

  fft::Buffer<double> make_physical() const { return fft::alloc_real(transform_->real_size()); }

  /// Per-thread scratch array `slot` of physical_size() doubles, reused
  /// across calls. Slots are owned by the caller for the duration of one
  /// operation; to_physical and accumulate_spectrum use none of them.
  double* scratch(std::size_t slot) const { return workspace().real(slot); }

  /// Samples sum_xi symbol(xi) f^(xi) exp(2 pi i xi.x) at the padded grid
  /// nodes. `coeffs` must be Hermitian on the input grid; an empty `symbol`
  /// means the identity.
  void to_physical(std::span<const Complex> coeffs, std::span<const Complex> symbol, double* out) const {
    fftw_complex* half = workspace().half();
    for (std::size_t k = 0; k < transform_->half_size(); ++k) half[k][0] = half[k][1] = 0.0;
    for (std::size_t i = 0; i < in_.size(); ++i) {
      const std::size_t slot = in_slot_[i];
      if (slot == npos) continue;
      const Complex v = symbol.empty() ? coeffs[i] : symbol[i] * coeffs[i];
      half[slot][0] = v.real();
      half[slot][1] = v.imag();
    }
    transform_->backward(half, out);
  }

  fft::Buffer<double> to_physical(std::span<const Complex> coeffs, std::span<const Complex> symbol = {}) const {
    auto out = make_physical();
    to_physical(coeffs, symbol, out.get());
    return out;
  }

  /// out(xi) += scale * (spectrum of `physical`)(xi) for xi in Z_{d,r_out},
  /// normalized so that to_physical followed by this is the identity.
  /// Destroys nothing; `physical` is left intact.
  void accumulate_spectrum(const double* physical, std::span<Complex> out, double scale = 1.0) const {
    auto& ws = workspace();
    double* work = ws.copy();
    std::copy(physical, physical + transform_->real_size(), work);
    fftw_complex* half = ws.half();
    transform_->forward(work, half);
    const double norm = scale / static_cast<double>(transform_->real_size());
    for (std::size_t i = 0; i < out_.size(); ++i) {
      const auto& h = half[out_slot_[i]];
      const Complex v(h[0], out_conj_[i] ? -h[1] : h[1]);
      out[i] += norm * v;
    }
  }

 private:
  class Workspace {
   public:
    Workspace(std::size_t real_size, std::size_t half_size)
        : real_size_(real_size), copy_(fft::alloc_real(real_size)), half_(fft::alloc_complex(half_size)) {}
    double* real(std::size_t slot) {
      while (slots_.size() <= slot) slots_.push_back(fft::alloc_real(real_size_));
      return slots_[slot].get();
    }
    double* copy() { return copy_.get(); }
    fftw_complex* half() { return half_.get(); }

   private:
    std::size_t real_size_;
    fft::Buffer<double> copy_;
    fft::Buffer<fftw_complex> half_;
    std::vector<fft::Buffer<double>> slots_;
  };

  Workspace& workspace() const {
    thread_local std::map<std::pair<int, int>, std::unique_ptr<Workspace>> pool;
    auto& w = pool[{in_.dim(), n_}];
    if (!w) w = std::make_unique<Workspace>(transform_->real_size(), transform_->half_size());
    return *w;
  }

  std::size_t half_index(const Frequency& xi) const {
    const int d = in_.dim();
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k) {
      const int extent = (k == d - 1) ? transform_->half_last() : n_;
      const int wrapped = ((xi[k] % n_) + n_) % n_;
      idx = idx * static_cast<std::size_t>(extent) + static_cast<std::size_t>(wrapped);
    }
    return idx;
  }

  FrequencyGrid in_;
  FrequencyGrid out_;
  int n_ = 1;
  std::shared_ptr<const fft::RealTransform> transform_;
  std::vector<std::size_t> in_slot_;
  std::vector<std::size_t> out_slot_;
  std::vector<bool> out_conj_;
};

namespace detail {

inline int product_components(const SpectralField& f, const SpectralField& g, const char* who) {
  if (f.grid() != g.grid()) {
    throw std::invalid_argument(std::string(who) + ": fields live on different grids");
  }
  if (f.ncomp() == g.ncomp()) return f.ncomp();
  if (f.ncomp() == 1) return g.ncomp();
  if (g.ncomp() == 1) return f.ncomp();
  throw std::invalid_argument(std::string(who) + ": incompatible component counts");
}

inline void check_output_cutoff(const SpectralField& f, int r_out, const char* who) {
  if (r_out < 0 || r_out > 2 * f.cutoff()) {
    throw std::invalid_argument(std::string(who) + ": output cutoff " + std::to_string(r_out) +
                                " outside [0, 2R]");
  }
}

}  // namespace detail

/// Linear convolution (f^ * g^)(xi) = sum_zeta f^(zeta) g^(xi - zeta) on
/// Z_{d,r_out}, evaluated with zero-padded FFTs. Scalar-vector pairs
/// broadcast; vector-vector pairs convolve component by component.
inline SpectralField convolve_fft(const SpectralField& f, const SpectralField& g, int r_out) {
  const int nc = detail::product_components(f, g, "convolve_fft");
  detail::check_output_cutoff(f, r_out, "convolve_fft");
  if (!f.is_hermitian() || !g.is_hermitian()) {
    throw std::invalid_argument("convolve_fft: inputs must be Hermitian (real-valued fields)");
  }
  const ConvolutionPlan plan(f.dim(), f.cutoff(), r_out);
  SpectralField out(f.dim(), r_out, nc);
  double* a = plan.scratch(0);
  double* b = plan.scratch(1);
  for (int c = 0; c < nc; ++c) {
    plan.to_physical(f.component(f.ncomp() == 1 ? 0 : c), {}, a);
    plan.to_physical(g.component(g.ncomp() == 1 ? 0 : c), {}, b);
    for (std::size_t k = 0; k < plan.physical_size(); ++k) a[k] *= b[k];
    plan.accumulate_spectrum(a, out.component(c));
  }
  return out;
}

/// Same contract as convolve_fft by the O(|Z_{d,R}|^2) double sum. Accepts
/// non-Hermitian inputs. Intended for small cutoffs.
inline SpectralField convolve_direct(const SpectralField& f, const SpectralField& g, int r_out) {
  const int nc = detail::product_components(f, g, "convolve_direct");
  detail::check_output_cutoff(f, r_out, "convolve_direct");
  const auto& grid = f.grid();
  SpectralField out(f.dim(), r_out, nc);
  const int d = f.dim();
  std::vector<Frequency> freqs(grid.size());
  for_each_frequency(grid, [&](std::size_t i, const Frequency& xi) { freqs[i] = xi; });
  for (int c = 0; c < nc; ++c) {
    const auto fc = f.component(f.ncomp() == 1 ? 0 : c);
    const auto gc = g.component(g.ncomp() == 1 ? 0 : c);
    auto oc = out.component(c);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (fc[i] == Complex{}) continue;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        Frequency sum{0, 0, 0};
        bool inside = true;
        for (int k = 0; k < d; ++k) {
          sum[k] = freqs[i][k] + freqs[j][k];
          inside = inside && sum[k] >= -r_out && sum[k] <= r_out;
        }
        if (inside) oc[out.grid().index(sum)] += fc[i] * gc[j];
      }
    }
  }
  return out;
}

}  // namespace epdiff
