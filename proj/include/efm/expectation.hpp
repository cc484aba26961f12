#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "efm/exp_poly.hpp"
#include "efm/rates.hpp"
#include "efm/segment.hpp"
#include "efm/stream.hpp"
#include "efm/tensor.hpp"

namespace efm {

/// Expected EFM-signature of time-augmented Brownian motion over a horizon
/// (or at stationarity, horizon = +infinity). Nonzero coefficients live only
/// on words that factor into the blocks {0} and {ii}.
struct ExpectedSig {
  double horizon = 0;
  TensorSeq value;

  bool stationary() const { return std::isinf(horizon); }
};

namespace detail {

/// Walks the block words (letter 0, or a doubled spatial letter) up to the
/// truncation order, handing each word and its parent to the visitor.
template <class Visit>
void visit_block_words(int alphabet, int order, Visit&& visit) {
  struct Item {
    Word word;
    Word parent;
  };
  std::vector<Item> frontier{{Word::empty(), Word::empty()}};
  while (!frontier.empty()) {
    std::vector<Item> next;
    for (const auto& it : frontier) {
      if (!it.word.is_empty()) visit(it.word, it.parent);
      const int len = static_cast<int>(it.word.size());
      if (len + 1 <= order) {
        Word w0 = it.word;
        w0.append(0);
        next.push_back({std::move(w0), it.word});
      }
      if (len + 2 <= order) {
        for (int i = 1; i < alphabet; ++i) {
          Word wii = it.word;
          wii.append(i);
          wii.append(i);
          next.push_back({std::move(wii), it.word});
        }
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace detail

/// Stationary expected EFM-signature from the block recursion
/// E^{v0} = E^v / lambda^{v0}, E^{vii} = E^v / (2 lambda^{vii}), all other
/// extensions zero.
inline ExpectedSig expected_signature_stationary(const Rates& rates, int spatial_dim, int order) {
  const int alphabet = spatial_dim + 1;
  detail::require_rates_cover(rates, alphabet, order, "expected_signature_stationary");
  TensorSeq value(alphabet, order);
  value.set(Word::empty(), 1.0);
  detail::visit_block_words(alphabet, order, [&](const Word& w, const Word& parent) {
    const double scale = (w.size() == parent.size() + 2) ? 0.5 : 1.0;
    value.set(w, scale * value.coeff(parent) / rates.word_rate(w));
  });
  return {std::numeric_limits<double>::infinity(), std::move(value)};
}

/// Expected EFM-signature over a finite horizon h, built exactly: each block
/// word's time profile obeys f_{v0} = step_integrate(f_v, lambda^{v0}) and
/// f_{vii} = step_integrate(f_v, lambda^{vii}) / 2 from f_{empty} = 1, which
/// is the EFM-signature of a linear path on the block alphabet.
inline ExpectedSig expected_signature_transient(const Rates& rates, int spatial_dim, int order,
                                                double h) {
  if (h < 0) throw std::invalid_argument("expected_signature_transient: horizon must be >= 0");
  const int alphabet = spatial_dim + 1;
  detail::require_rates_cover(rates, alphabet, order, "expected_signature_transient");
  TensorSeq value(alphabet, order);
  value.set(Word::empty(), 1.0);

  std::vector<ExpPoly> profiles(value.layout().total());
  profiles[0] = ExpPoly::constant(1.0);
  detail::visit_block_words(alphabet, order, [&](const Word& w, const Word& parent) {
    const double scale = (w.size() == parent.size() + 2) ? 0.5 : 1.0;
    ExpPoly f = profiles[value.layout().flat_index(parent)].step_integrate(rates.word_rate(w));
    f *= scale;
    value.set(w, f.eval(h));
    profiles[value.layout().flat_index(w)] = std::move(f);
  });
  return {h, std::move(value)};
}

inline ExpectedSig expected_signature(const Rates& rates, int spatial_dim, int order, double h) {
  return std::isinf(h) ? expected_signature_stationary(rates, spatial_dim, order)
                       : expected_signature_transient(rates, spatial_dim, order, h);
}

/// The Ito drift direction letter0 + (1/2) sum_i letter_i (x) letter_i whose
/// resolvent series reproduces the stationary expected signature.
inline TensorSeq expected_sig_drift(int spatial_dim, int order) {
  const int alphabet = spatial_dim + 1;
  TensorSeq x(alphabet, order);
  x.set(Word{0}, 1.0);
  for (int i = 1; i < alphabet; ++i) x.set(Word{i, i}, 0.5);
  return x;
}

struct Prediction {
  double mean = 0;
  double variance = 0;
  bool variance_clipped = false;
};

/// Conditional mean and variance of <ell, sig_{t+h}> given the state at t:
/// mean = <ell, D_h sig (x) E_h>, variance via the shuffle square. Variance in
/// [-1e-10, 0) is clipped to zero; anything more negative signals a
/// truncation problem and throws.
inline Prediction predict(const Rates& rates, const TensorSeq& ell, const SigState& state,
                          double h) {
  if (h < 0) throw std::invalid_argument("predict: horizon must be >= 0");
  const int order = state.sig.order();
  if (ell.alphabet() != state.sig.alphabet())
    throw std::invalid_argument("predict: alphabet mismatch");
  if (2 * ell.degree() > order)
    throw std::invalid_argument("predict: truncation insufficient for the shuffle square");

  const int spatial_dim = state.sig.alphabet() - 1;
  const ExpectedSig eh = expected_signature_transient(rates, spatial_dim, order, h);
  const TensorSeq propagated = tensor_product(apply_D(rates, h, state.sig), eh.value);

  Prediction out;
  out.mean = bracket(ell, propagated);
  const double second_moment = bracket(shuffle(ell, ell), propagated);
  double var = second_moment - out.mean * out.mean;
  if (var < 0) {
    if (var < -1e-10)
      throw std::domain_error("predict: negative variance beyond tolerance (truncation problem)");
    var = 0;
    out.variance_clipped = true;
  }
  out.variance = var;
  return out;
}

inline double predict_mean(const Rates& rates, const TensorSeq& ell, const SigState& state,
                           double h) {
  const int spatial_dim = state.sig.alphabet() - 1;
  const ExpectedSig eh = expected_signature_transient(rates, spatial_dim, state.sig.order(), h);
  return bracket(ell, tensor_product(apply_D(rates, h, state.sig), eh.value));
}

}  // namespace efm
