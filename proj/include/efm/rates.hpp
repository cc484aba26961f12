#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "efm/tensor.hpp"
#include "efm/words.hpp"

namespace efm {

/// Per-letter mean-reversion rates. The word rate lambda^v is the sum of the
/// letter rates, with lambda^{empty} = 0, so it is additive under
/// concatenation. Per-level word-rate tables are built once at construction
/// (same indexing as TensorSeq levels) and read-only afterwards.
///
/// Rates::unweighted() builds the all-zero rate vector used by the plain
/// (classical) signature code path, where D is the identity and Lambda
/// vanishes; the generalized inverse is unavailable there.
class Rates {
 public:
  Rates(std::vector<double> lambda, int max_order) : lambda_(std::move(lambda)) {
    if (lambda_.empty()) throw std::invalid_argument("Rates: empty rate vector");
    for (double l : lambda_)
      if (!(l > 0) || !std::isfinite(l))
        throw std::invalid_argument("Rates: every rate must be positive and finite");
    build_tables(max_order);
  }

  static Rates unweighted(int alphabet, int max_order) {
    Rates r;
    r.lambda_.assign(static_cast<std::size_t>(alphabet), 0.0);
    r.plain_ = true;
    r.build_tables(max_order);
    return r;
  }

  int alphabet() const { return static_cast<int>(lambda_.size()); }
  int max_order() const { return static_cast<int>(level_rates_.size()) - 1; }
  bool plain() const { return plain_; }

  double letter_rate(int i) const { return lambda_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& lambda() const { return lambda_; }

  double min_rate() const { return *std::min_element(lambda_.begin(), lambda_.end()); }

  /// lambda^v for any word over the alphabet (not restricted to max_order).
  double word_rate(const Word& w) const {
    double s = 0;
    for (Letter a : w) s += letter_rate(a);
    return s;
  }

  /// Table of lambda^v for all words of level n, TensorSeq level indexing.
  std::span<const double> level_rates(int n) const {
    return {level_rates_[static_cast<std::size_t>(n)].data(),
            level_rates_[static_cast<std::size_t>(n)].size()};
  }

 private:
  Rates() = default;

  void build_tables(int max_order) {
    if (max_order < 0) throw std::invalid_argument("Rates: max_order must be >= 0");
    const std::size_t A = lambda_.size();
    level_rates_.resize(static_cast<std::size_t>(max_order) + 1);
    level_rates_[0] = {0.0};
    for (int n = 1; n <= max_order; ++n) {
      const auto& prev = level_rates_[static_cast<std::size_t>(n) - 1];
      auto& cur = level_rates_[static_cast<std::size_t>(n)];
      cur.resize(prev.size() * A);
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = prev[i / A] + lambda_[i % A];
    }
  }

  std::vector<double> lambda_;
  std::vector<std::vector<double>> level_rates_;
  bool plain_ = false;
};

inline double lambda_of_word(const Rates& r, const Word& w) { return r.word_rate(w); }

namespace detail {

inline void require_rates_cover(const Rates& r, int alphabet, int order, const char* who) {
  if (r.alphabet() != alphabet) throw std::invalid_argument(std::string(who) + ": alphabet mismatch");
  if (r.max_order() < order) throw std::invalid_argument(std::string(who) + ": rate tables too short");
}

/// (1 - e^{-x}) / x with the removable singularity filled in; evaluated via
/// expm1 so small x does not cancel.
inline double one_minus_exp_over(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

}  // namespace detail

/// (Lambda a)^v = lambda^v a^v.
template <class T>
TensorSeqT<T> apply_Lambda(const Rates& r, const TensorSeqT<T>& a) {
  detail::require_rates_cover(r, a.alphabet(), a.order(), "apply_Lambda");
  TensorSeqT<T> out = a;
  for (int n = 0; n <= a.order(); ++n) {
    auto lvl = out.level(n);
    auto rates = r.level_rates(n);
    for (std::size_t i = 0; i < lvl.size(); ++i) lvl[i] *= rates[i];
  }
  return out;
}

/// Generalized inverse of Lambda: divides by lambda^v on levels >= 1 and
/// sends the empty-word slot to zero.
template <class T>
TensorSeqT<T> apply_Lambda_dagger(const Rates& r, const TensorSeqT<T>& a) {
  detail::require_rates_cover(r, a.alphabet(), a.order(), "apply_Lambda_dagger");
  if (r.plain()) throw std::domain_error("apply_Lambda_dagger: undefined for unweighted rates");
  TensorSeqT<T> out = a;
  out.level(0)[0] = T{};
  for (int n = 1; n <= a.order(); ++n) {
    auto lvl = out.level(n);
    auto rates = r.level_rates(n);
    for (std::size_t i = 0; i < lvl.size(); ++i) lvl[i] /= rates[i];
  }
  return out;
}

/// Dilation semigroup: (D_h a)^v = e^{-lambda^v h} a^v. Negative h is allowed.
template <class T>
TensorSeqT<T> apply_D(const Rates& r, double h, const TensorSeqT<T>& a) {
  detail::require_rates_cover(r, a.alphabet(), a.order(), "apply_D");
  TensorSeqT<T> out = a;
  for (int n = 0; n <= a.order(); ++n) {
    auto lvl = out.level(n);
    auto rates = r.level_rates(n);
    for (std::size_t i = 0; i < lvl.size(); ++i) lvl[i] *= std::exp(-rates[i] * h);
  }
  return out;
}

/// Semi-integrated step operator: (C_h a)^v = ((1 - e^{-lambda^v h}) / lambda^v) a^v,
/// with the value h on the kernel of Lambda (the empty-word slot).
template <class T>
TensorSeqT<T> apply_C(const Rates& r, double h, const TensorSeqT<T>& a) {
  detail::require_rates_cover(r, a.alphabet(), a.order(), "apply_C");
  if (h < 0) throw std::invalid_argument("apply_C: h must be >= 0");
  TensorSeqT<T> out = a;
  for (int n = 0; n <= a.order(); ++n) {
    auto lvl = out.level(n);
    auto rates = r.level_rates(n);
    for (std::size_t i = 0; i < lvl.size(); ++i)
      lvl[i] *= h * detail::one_minus_exp_over(rates[i] * h);
  }
  return out;
}

/// Resolvent series sum_{k=0..max_terms} H_x^k(empty word) with
/// H_x l = Lambda^dagger (l (x) x). Requires x^{empty} = 0; every application
/// of H_x raises the minimum degree, so the series is exact once max_terms
/// exceeds order / min-degree(x).
template <class T>
TensorSeqT<T> stationary_series_H(const Rates& r, const TensorSeqT<T>& x, int max_terms) {
  if (x.coeff(Word::empty()) != T{})
    throw std::invalid_argument("stationary_series_H: x must have zero empty-word coefficient");
  TensorSeqT<T> acc = TensorSeqT<T>::unit(x.alphabet(), x.order());
  TensorSeqT<T> term = acc;
  for (int k = 1; k <= max_terms; ++k) {
    term = apply_Lambda_dagger(r, tensor_product(term, x));
    acc += term;
  }
  return acc;
}

}  // namespace efm
