#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "efm/path.hpp"
#include "efm/rates.hpp"
#include "efm/segment.hpp"
#include "efm/tensor.hpp"

namespace efm {

/// Running EFM-signature of a streamed path. The scalar slot stays 1 and the
/// sequence is group-like up to truncation whenever it was produced by exact
/// segment updates.
struct SigState {
  double t = 0;
  TensorSeq sig;
};

enum class PathStart {
  start,      // signature over [times.front(), t]
  flat_past,  // path constant before times.front(); numerically identical fold
};

/// Streaming evaluator: one discounted-Chen update per linear segment,
///
///   sig <- D_dt(sig) (x) segment_signature(slope, dt),
///
/// with the dilation factors and segment time-profiles cached per distinct
/// step duration, so uniform grids cost one dense tensor product per step.
/// Instances keep mutable scratch buffers; use one per thread.
class SigStream {
 public:
  SigStream(const Rates& rates, int order)
      : rates_(rates), kernel_(rates, order), layout_(rates.alphabet(), order) {
    scaled_.resize(layout_.total());
    seg_.resize(layout_.total());
    next_.resize(layout_.total());
    mono_.resize(layout_.total());
  }

  const TensorLayout& layout() const { return layout_; }
  const Rates& rates() const { return rates_; }

  SigState initial(double t0) const {
    return SigState{t0, TensorSeq::unit(layout_.alphabet(), layout_.order())};
  }

  /// Advance by dt >= 0 with the effective-coordinate increment of the path
  /// over the step (for time-augmented paths, component 0 of the increment is
  /// dt itself).
  void step(SigState& state, double dt, std::span<const double> increment) {
    if (dt < 0) throw std::invalid_argument("SigStream::step: time regression");
    if (dt == 0) return;
    const std::uint64_t key = std::bit_cast<std::uint64_t>(dt);
    if (key != last_key_ || last_tab_ == nullptr) {
      last_tab_ = &tables(key, dt);
      last_key_ = key;
    }
    const StepTables& tab = *last_tab_;
    const std::size_t A = static_cast<std::size_t>(layout_.alphabet());
    if (increment.size() != A) throw std::invalid_argument("SigStream::step: increment dimension");

    slope_.resize(A);
    for (std::size_t i = 0; i < A; ++i) slope_[i] = increment[i] / dt;
    detail::fill_monomials(layout_, std::span<const double>(slope_), mono_.data());
    const double* __restrict g = tab.g.data();
    double* __restrict seg = seg_.data();
    for (std::size_t i = 0; i < seg_.size(); ++i) seg[i] = mono_[i] * g[i];

    const double* cur = state.sig.data();
    double* __restrict scaled = scaled_.data();
    const double* __restrict df = tab.d_factor.data();
    for (std::size_t i = 0; i < scaled_.size(); ++i) scaled[i] = cur[i] * df[i];

    // out[n] starts from the k = 0 split (scaled^{empty} times the segment
    // level), then the remaining splits accumulate
    const int N = layout_.order();
    double* __restrict out = next_.data();
    const double a0 = scaled[0];
    for (std::size_t i = 0; i < next_.size(); ++i) out[i] = a0 * seg[i];
    for (int n = 1; n <= N; ++n) {
      double* outn = out + layout_.level_offset(n);
      for (int k = 1; k <= n; ++k) {
        const double* ak = scaled + layout_.level_offset(k);
        const double* bk = seg + layout_.level_offset(n - k);
        const std::size_t na = layout_.level_size(k);
        const std::size_t nb = layout_.level_size(n - k);
        if (nb == 1) {  // k = n split: contiguous over the left factor
          const double b0 = bk[0];
          for (std::size_t i = 0; i < na; ++i) outn[i] += ak[i] * b0;
        } else {
          for (std::size_t i = 0; i < na; ++i) {
            const double ai = ak[i];
            double* row = outn + i * nb;
            for (std::size_t j = 0; j < nb; ++j) row[j] += ai * bk[j];
          }
        }
      }
    }
    state.sig.swap_data(next_);
    state.t += dt;
  }

 private:
  struct StepTables {
    std::vector<double> d_factor;
    std::vector<double> g;
  };

  const StepTables& tables(std::uint64_t key, double dt) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    StepTables tab;
    tab.g = kernel_.evaluate(dt);
    tab.d_factor.resize(layout_.total());
    for (int n = 0; n <= layout_.order(); ++n) {
      auto rates = rates_.level_rates(n);
      double* f = tab.d_factor.data() + layout_.level_offset(n);
      for (std::size_t i = 0; i < rates.size(); ++i) f[i] = std::exp(-rates[i] * dt);
    }
    return cache_.emplace(key, std::move(tab)).first->second;
  }

  Rates rates_;
  SegmentKernel kernel_;
  TensorLayout layout_;
  std::unordered_map<std::uint64_t, StepTables> cache_;
  const StepTables* last_tab_ = nullptr;
  std::uint64_t last_key_ = 0;
  std::vector<double> scaled_, seg_, next_, mono_, slope_;
};

/// One discounted-Chen update; increment is X(next_time) - X(state.t) in
/// effective coordinates. Convenience wrapper over SigStream for one-off use.
inline SigState chen_step(const Rates& rates, const SigState& state, double next_time,
                          std::span<const double> increment) {
  if (next_time < state.t) throw std::invalid_argument("chen_step: time regression");
  SigStream stream(rates, state.sig.order());
  SigState out = state;
  stream.step(out, next_time - state.t, increment);
  return out;
}

/// Fold of chen_step over the segments of a piecewise-linear path. Both start
/// conventions begin from the unit state at times.front(); flat_past records
/// that the path (time component included) is frozen before the first sample.
inline SigState signature_of_path(const Rates& rates, const PiecewisePath& path, int order,
                                  PathStart from = PathStart::flat_past) {
  path.validate();
  if (rates.alphabet() != path.effective_dim())
    throw std::invalid_argument("signature_of_path: rates/path dimension mismatch");
  (void)from;
  SigStream stream(rates, order);
  SigState state = stream.initial(path.times.front());
  std::vector<double> inc(static_cast<std::size_t>(path.effective_dim()));
  for (std::size_t k = 0; k + 1 < path.samples(); ++k) {
    const double dt = path.times[k + 1] - path.times[k];
    std::size_t c = 0;
    if (path.time_augmented) inc[c++] = dt;
    auto a = path.value(k);
    auto b = path.value(k + 1);
    for (int i = 0; i < path.dim; ++i) inc[c++] = b[i] - a[i];
    stream.step(state, dt, inc);
  }
  return state;
}

struct FadingMemoryGap {
  double gap = 0;             // || sig_a(T) - sig_b(T) ||_2
  double diff_at_split = 0;   // || sig_a(split) - sig_b(split) ||_2
  double tail_norm = 0;       // || signature of the shared tail ||_2
  double bound = 0;           // e^{-min rate (T - split)} * diff_at_split * tail_norm
};

/// Distance at the final time between signatures of two paths that share all
/// increments after the split, against the Chen-factorized product bound.
inline FadingMemoryGap fading_memory_gap(const Rates& rates, const PiecewisePath& path_a,
                                         const PiecewisePath& path_b, double split, int order) {
  path_a.validate();
  path_b.validate();
  if (path_a.dim != path_b.dim || path_a.time_augmented != path_b.time_augmented)
    throw std::invalid_argument("fading_memory_gap: path shapes differ");

  auto tail_from = [&](const PiecewisePath& p) {
    std::size_t k = 0;
    while (k < p.samples() && p.times[k] < split - 1e-12) ++k;
    if (k >= p.samples() || std::abs(p.times[k] - split) > 1e-12)
      throw std::invalid_argument("fading_memory_gap: split is not a breakpoint");
    return k;
  };
  const std::size_t ka = tail_from(path_a);
  const std::size_t kb = tail_from(path_b);
  if (path_a.samples() - ka != path_b.samples() - kb)
    throw std::invalid_argument("fading_memory_gap: paths differ after split");
  for (std::size_t j = 1; ka + j < path_a.samples(); ++j) {
    if (std::abs(path_a.times[ka + j] - path_b.times[kb + j]) > 1e-12)
      throw std::invalid_argument("fading_memory_gap: paths differ after split");
    auto a0 = path_a.value(ka + j - 1), a1 = path_a.value(ka + j);
    auto b0 = path_b.value(kb + j - 1), b1 = path_b.value(kb + j);
    for (int c = 0; c < path_a.dim; ++c)
      if (std::abs((a1[c] - a0[c]) - (b1[c] - b0[c])) > 1e-12)
        throw std::invalid_argument("fading_memory_gap: paths differ after split");
  }

  const double T = path_a.times.back();

  SigStream stream(rates, order);
  auto run = [&](const PiecewisePath& p, std::size_t upto, SigState* snapshot) {
    SigState state = stream.initial(p.times.front());
    std::vector<double> inc(static_cast<std::size_t>(p.effective_dim()));
    for (std::size_t k = 0; k + 1 < p.samples(); ++k) {
      const double dt = p.times[k + 1] - p.times[k];
      std::size_t c = 0;
      if (p.time_augmented) inc[c++] = dt;
      auto a = p.value(k), b = p.value(k + 1);
      for (int i = 0; i < p.dim; ++i) inc[c++] = b[i] - a[i];
      stream.step(state, dt, inc);
      if (snapshot && k + 1 == upto) *snapshot = state;
    }
    return state;
  };

  SigState a_split, b_split;
  const SigState a_end = run(path_a, ka, &a_split);
  const SigState b_end = run(path_b, kb, &b_split);
  if (ka == 0) a_split = stream.initial(split);
  if (kb == 0) b_split = stream.initial(split);

  PiecewisePath tail;
  tail.dim = path_a.dim;
  tail.time_augmented = path_a.time_augmented;
  tail.times.assign(path_a.times.begin() + static_cast<std::ptrdiff_t>(ka), path_a.times.end());
  tail.values.assign(path_a.values.begin() + static_cast<std::ptrdiff_t>(ka * path_a.dim),
                     path_a.values.end());

  FadingMemoryGap out;
  out.gap = norm(a_end.sig - b_end.sig, 2);
  out.diff_at_split = norm(a_split.sig - b_split.sig, 2);
  out.tail_norm =
      tail.samples() > 1 ? norm(signature_of_path(rates, tail, order, PathStart::start).sig, 2) : 1.0;
  out.bound = std::exp(-rates.min_rate() * (T - split)) * out.diff_at_split * out.tail_norm;
  return out;
}

struct BvBoundReport {
  double weighted_variation = 0;           // || X ||_{BV,lambda;[s,t]}
  std::vector<double> level_value;         // Euclidean norm of signature level n
  std::vector<double> level_bound;         // || X ||^n / n!
  std::vector<double> margin;              // bound - value
  bool all_within() const {
    for (double m : margin)
      if (m < 0) return false;
    return true;
  }
};

/// Checks |X^{lambda,n}_{s,t}| <= ||X||^n_{BV,lambda;[s,t]} / n! levelwise.
/// The weighted variation integral is evaluated per segment with fixed-order
/// Gauss-Legendre quadrature (the integrand is smooth within a segment).
inline BvBoundReport bv_bound_check(const Rates& rates, const PiecewisePath& path, int order) {
  path.validate();
  if (rates.alphabet() != path.effective_dim())
    throw std::invalid_argument("bv_bound_check: rates/path dimension mismatch");

  // 16-point Gauss-Legendre nodes/weights on [-1, 1].
  static const double node[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                 0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                 0.9445750230732326, 0.9894009349916499};
  static const double weight[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                   0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                   0.0622535239386479, 0.0271524594117541};

  const double T = path.times.back();
  const std::size_t A = static_cast<std::size_t>(path.effective_dim());
  double total = 0;
  std::vector<double> slope;
  for (std::size_t k = 0; k + 1 < path.samples(); ++k) {
    slope = path.segment_slope(k);
    const double a = path.times[k], b = path.times[k + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto integrand = [&](double u) {
      double s = 0;
      for (std::size_t i = 0; i < A; ++i) {
        const double w = std::exp(-rates.letter_rate(static_cast<int>(i)) * (T - u)) * slope[i];
        s += w * w;
      }
      return std::sqrt(s);
    };
    double acc = 0;
    for (int j = 0; j < 8; ++j)
      acc += weight[j] * (integrand(mid - half * node[j]) + integrand(mid + half * node[j]));
    total += half * acc;
  }

  const SigState sig = signature_of_path(rates, path, order, PathStart::start);
  BvBoundReport rep;
  rep.weighted_variation = total;
  double fact = 1, pow = 1;
  for (int n = 0; n <= order; ++n) {
    if (n > 0) {
      fact *= n;
      pow *= total;
    }
    double sq = 0;
    for (double v : sig.sig.level(n)) sq += v * v;
    rep.level_value.push_back(std::sqrt(sq));
    rep.level_bound.push_back(pow / fact);
    rep.margin.push_back(rep.level_bound.back() - rep.level_value.back());
  }
  return rep;
}

}  // namespace efm
