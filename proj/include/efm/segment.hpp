#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "efm/exp_poly.hpp"
#include "efm/rates.hpp"
#include "efm/tensor.hpp"

namespace efm {

/// Per-word time profiles g_v of the EFM-signature of a linear segment: the
/// coefficient of word i1...in over a segment of duration h with slope x is
/// (x^{i1} ... x^{in}) g_v(h), where g_v is built from g_{v'} by one
/// step_integrate at the full word rate lambda^v (prefix sums of letter
/// rates). The table depends only on the rates and order, so it is built once
/// and evaluated at many durations.
class SegmentKernel {
 public:
  SegmentKernel(const Rates& rates, int order) : layout_(rates.alphabet(), order) {
    detail::require_rates_cover(rates, rates.alphabet(), order, "SegmentKernel");
    profiles_.resize(layout_.total());
    profiles_[0] = ExpPoly::constant(1.0);
    const std::size_t A = static_cast<std::size_t>(layout_.alphabet());
    for (int n = 1; n <= order; ++n) {
      auto rate = rates.level_rates(n);
      const std::size_t off = layout_.level_offset(n);
      const std::size_t parent_off = layout_.level_offset(n - 1);
      for (std::size_t i = 0; i < layout_.level_size(n); ++i) {
        const ExpPoly& parent = profiles_[parent_off + i / A];
        profiles_[off + i] = parent.step_integrate(rate[i]);
        if (profiles_[off + i].max_degree() > n)
          throw std::logic_error("SegmentKernel: polynomial degree exceeds word length");
      }
    }
  }

  const TensorLayout& layout() const { return layout_; }

  /// g_v(duration) for every word, flat TensorSeq indexing.
  std::vector<double> evaluate(double duration) const {
    std::vector<double> g(profiles_.size());
    for (std::size_t i = 0; i < profiles_.size(); ++i) g[i] = profiles_[i].eval(duration);
    return g;
  }

  /// Limits as duration -> infinity (the stationary profile values).
  std::vector<double> evaluate_at_infinity() const {
    std::vector<double> g(profiles_.size());
    for (std::size_t i = 0; i < profiles_.size(); ++i) g[i] = profiles_[i].limit_at_infinity();
    return g;
  }

  const ExpPoly& profile(const Word& w) const { return profiles_[layout_.flat_index(w)]; }

 private:
  TensorLayout layout_;
  std::vector<ExpPoly> profiles_;
};

namespace detail {

/// Word monomials prod_j x^{i_j} for all words up to the layout order,
/// written into out (flat layout indexing).
template <class T>
void fill_monomials(const TensorLayout& lo, std::span<const double> x, T* out) {
  const std::size_t A = static_cast<std::size_t>(lo.alphabet());
  if (x.size() != A) throw std::invalid_argument("fill_monomials: direction dimension mismatch");
  out[0] = T{1};
  for (int n = 1; n <= lo.order(); ++n) {
    T* cur = out + lo.level_offset(n);
    const T* prev = out + lo.level_offset(n - 1);
    const std::size_t parents = lo.level_size(n - 1);
    for (std::size_t ip = 0; ip < parents; ++ip) {
      const T m = prev[ip];
      T* row = cur + ip * A;
      for (std::size_t a = 0; a < A; ++a) row[a] = m * x[a];
    }
  }
}

}  // namespace detail

/// Exact EFM-signature of one linear segment of the given duration and slope.
inline TensorSeq segment_signature(const Rates& rates, std::span<const double> x, double duration,
                                   int order) {
  if (duration < 0) throw std::invalid_argument("segment_signature: duration must be >= 0");
  SegmentKernel kernel(rates, order);
  const std::vector<double> g = kernel.evaluate(duration);
  TensorSeq out(rates.alphabet(), order);
  detail::fill_monomials(out.layout(), x, out.data());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= g[i];
  return out;
}

/// Stationary EFM-signature of the linear path with slope x over (-inf, t]:
/// coefficient of i1...in is (prod_j x^{i_j}) prod_k 1/mu_k with mu_k the
/// prefix rates. Constant in t.
inline TensorSeq stationary_linear_signature(const Rates& rates, std::span<const double> x,
                                             int order) {
  if (rates.plain())
    throw std::domain_error("stationary_linear_signature: undefined for unweighted rates");
  detail::require_rates_cover(rates, rates.alphabet(), order, "stationary_linear_signature");
  TensorSeq out(rates.alphabet(), order);
  const TensorLayout& lo = out.layout();
  const std::size_t A = static_cast<std::size_t>(lo.alphabet());
  if (x.size() != A)
    throw std::invalid_argument("stationary_linear_signature: slope dimension mismatch");
  out.data()[0] = 1.0;
  for (int n = 1; n <= order; ++n) {
    double* cur = out.data() + lo.level_offset(n);
    const double* prev = out.data() + lo.level_offset(n - 1);
    auto rate = rates.level_rates(n);
    for (std::size_t i = 0; i < lo.level_size(n); ++i) cur[i] = prev[i / A] * x[i % A] / rate[i];
  }
  return out;
}

}  // namespace efm
