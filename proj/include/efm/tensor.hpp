#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "efm/words.hpp"

namespace efm {

/// Dense layout of a truncated tensor algebra over the alphabet {0,...,d}:
/// level n holds (d+1)^n coefficients, one per word of length n, ordered by
/// the base-(d+1) value of the word with its leading letter most significant.
/// Construction refuses layouts whose coefficient count exceeds the budget.
class TensorLayout {
 public:
  static constexpr std::size_t default_budget = 10'000'000;

  TensorLayout() = default;

  TensorLayout(int alphabet, int order, std::size_t budget = default_budget)
      : alphabet_(alphabet), order_(order) {
    if (alphabet < 1) throw std::invalid_argument("TensorLayout: alphabet must be >= 1");
    if (order < 0) throw std::invalid_argument("TensorLayout: order must be >= 0");
    offset_.resize(static_cast<std::size_t>(order) + 2);
    offset_[0] = 0;
    std::size_t sz = 1;
    for (int n = 0; n <= order; ++n) {
      offset_[static_cast<std::size_t>(n) + 1] = offset_[static_cast<std::size_t>(n)] + sz;
      if (offset_.back() > budget)
        throw std::length_error("TensorLayout: coefficient budget exceeded");
      if (n < order) {
        if (sz > budget / static_cast<std::size_t>(alphabet))
          throw std::length_error("TensorLayout: coefficient budget exceeded");
        sz *= static_cast<std::size_t>(alphabet);
      }
    }
  }

  int alphabet() const { return alphabet_; }
  int order() const { return order_; }

  std::size_t level_size(int n) const { return offset_[n + 1] - offset_[n]; }
  std::size_t level_offset(int n) const { return offset_[n]; }
  std::size_t total() const { return offset_.back(); }

  /// Index of a word within its level.
  std::size_t word_index(const Word& w) const {
    std::size_t idx = 0;
    for (Letter a : w) {
      if (a >= alphabet_) throw std::out_of_range("word letter outside alphabet");
      idx = idx * static_cast<std::size_t>(alphabet_) + a;
    }
    return idx;
  }

  std::size_t flat_index(const Word& w) const {
    if (static_cast<int>(w.size()) > order_) throw std::out_of_range("word longer than order");
    return level_offset(static_cast<int>(w.size())) + word_index(w);
  }

  Word word_at(int level, std::size_t index) const {
    std::vector<Letter> letters(static_cast<std::size_t>(level));
    for (int k = level - 1; k >= 0; --k) {
      letters[static_cast<std::size_t>(k)] =
          static_cast<Letter>(index % static_cast<std::size_t>(alphabet_));
      index /= static_cast<std::size_t>(alphabet_);
    }
    return Word(std::move(letters));
  }

  friend bool operator==(const TensorLayout& a, const TensorLayout& b) {
    return a.alphabet_ == b.alphabet_ && a.order_ == b.order_;
  }
  friend bool operator!=(const TensorLayout& a, const TensorLayout& b) { return !(a == b); }

 private:
  int alphabet_ = 0;
  int order_ = 0;
  std::vector<std::size_t> offset_{0};
};

/// Truncated element of the extended tensor algebra with dense per-level
/// coefficient storage. Values are immutable in spirit: all operations below
/// are pure functions returning new sequences, so instances can be shared
/// freely across threads.
template <class T>
class TensorSeqT {
 public:
  using value_type = T;

  TensorSeqT() = default;

  TensorSeqT(int alphabet, int order, std::size_t budget = TensorLayout::default_budget)
      : layout_(alphabet, order, budget), data_(layout_.total(), T{}) {}

  explicit TensorSeqT(TensorLayout layout)
      : layout_(std::move(layout)), data_(layout_.total(), T{}) {}

  /// The unit element: coefficient 1 on the empty word, 0 elsewhere.
  static TensorSeqT unit(int alphabet, int order) {
    TensorSeqT r(alphabet, order);
    r.data_[0] = T{1};
    return r;
  }

  /// Single-word element c * w.
  static TensorSeqT word(int alphabet, int order, const Word& w, T c = T{1}) {
    TensorSeqT r(alphabet, order);
    r.set(w, c);
    return r;
  }

  int alphabet() const { return layout_.alphabet(); }
  int order() const { return layout_.order(); }
  const TensorLayout& layout() const { return layout_; }

  std::span<T> level(int n) { return {data_.data() + layout_.level_offset(n), layout_.level_size(n)}; }
  std::span<const T> level(int n) const {
    return {data_.data() + layout_.level_offset(n), layout_.level_size(n)};
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  T coeff(const Word& w) const {
    if (static_cast<int>(w.size()) > order()) return T{};
    return data_[layout_.flat_index(w)];
  }

  void set(const Word& w, T v) { data_[layout_.flat_index(w)] = v; }

  void add(const Word& w, T v) { data_[layout_.flat_index(w)] += v; }

  /// Highest level carrying a nonzero coefficient (0 for the zero element).
  int degree() const {
    for (int n = order(); n >= 1; --n)
      for (T v : level(n))
        if (v != T{}) return n;
    return 0;
  }

  TensorSeqT& operator+=(const TensorSeqT& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  TensorSeqT& operator-=(const TensorSeqT& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  TensorSeqT& operator*=(T c) {
    for (auto& v : data_) v *= c;
    return *this;
  }

  friend TensorSeqT operator+(TensorSeqT a, const TensorSeqT& b) { return a += b; }
  friend TensorSeqT operator-(TensorSeqT a, const TensorSeqT& b) { return a -= b; }
  friend TensorSeqT operator*(TensorSeqT a, T c) { return a *= c; }
  friend TensorSeqT operator*(T c, TensorSeqT a) { return a *= c; }

  void require_same(const TensorSeqT& o) const {
    if (layout_ != o.layout_) throw std::invalid_argument("tensor sequences over different algebras");
  }

  /// Exchanges the coefficient storage with an equally sized flat buffer
  /// (streaming hot loops avoid a copy this way).
  void swap_data(std::vector<T>& other) {
    if (other.size() != data_.size())
      throw std::invalid_argument("swap_data: buffer size mismatch");
    data_.swap(other);
  }

  void require_alphabet(const TensorSeqT& o) const {
    if (alphabet() != o.alphabet()) throw std::invalid_argument("alphabet mismatch");
  }

 private:
  TensorLayout layout_{1, 0};
  std::vector<T> data_ = std::vector<T>(1, T{});
};

using TensorSeq = TensorSeqT<double>;
using CTensorSeq = TensorSeqT<std::complex<double>>;

namespace detail {

/// out += a (x) b, all three dense over the same layout, truncated at
/// out's order. Raw kernel shared by the value-semantics wrapper and the
/// streaming hot loops.
template <class T>
void tensor_product_accumulate(const TensorLayout& lo, const T* a, const T* b, T* out) {
  const int N = lo.order();
  for (int n = 0; n <= N; ++n) {
    T* outn = out + lo.level_offset(n);
    for (int k = 0; k <= n; ++k) {
      const T* ak = a + lo.level_offset(k);
      const T* bk = b + lo.level_offset(n - k);
      const std::size_t na = lo.level_size(k);
      const std::size_t nb = lo.level_size(n - k);
      for (std::size_t i = 0; i < na; ++i) {
        const T ai = ak[i];
        if (ai == T{}) continue;
        T* row = outn + i * nb;
        for (std::size_t j = 0; j < nb; ++j) row[j] += ai * bk[j];
      }
    }
  }
}

/// All ways of interleaving p left slots into a word of length p+q, as bit
/// masks over positions (bit set = letter comes from the left word).
inline std::vector<std::uint32_t> interleave_masks(int p, int q) {
  std::vector<std::uint32_t> masks;
  const int n = p + q;
  std::vector<char> take(static_cast<std::size_t>(n), 0);
  std::fill(take.begin(), take.begin() + p, 1);
  std::sort(take.begin(), take.end());
  do {
    std::uint32_t m = 0;
    for (int i = 0; i < n; ++i)
      if (take[static_cast<std::size_t>(i)]) m |= (1u << i);
    masks.push_back(m);
  } while (std::next_permutation(take.begin(), take.end()));
  return masks;
}

}  // namespace detail

/// Concatenation product: (a (x) b)^v = sum over splits v = uw of a^u b^w,
/// truncated at min(a.order, b.order).
template <class T>
TensorSeqT<T> tensor_product(const TensorSeqT<T>& a, const TensorSeqT<T>& b) {
  a.require_alphabet(b);
  const int order = std::min(a.order(), b.order());
  TensorSeqT<T> out(a.alphabet(), order);
  for (int n = 0; n <= order; ++n) {
    auto outn = out.level(n);
    for (int k = 0; k <= n; ++k) {
      auto ak = a.level(k);
      auto bk = b.level(n - k);
      const std::size_t nb = bk.size();
      for (std::size_t i = 0; i < ak.size(); ++i) {
        const T ai = ak[i];
        if (ai == T{}) continue;
        T* row = outn.data() + i * nb;
        for (std::size_t j = 0; j < nb; ++j) row[j] += ai * bk[j];
      }
    }
  }
  return out;
}

/// Bilinear extension of the recursive word shuffle, truncated at
/// min(a.order, b.order). Commutative.
template <class T>
TensorSeqT<T> shuffle(const TensorSeqT<T>& a, const TensorSeqT<T>& b) {
  a.require_alphabet(b);
  const int order = std::min(a.order(), b.order());
  const int A = a.alphabet();
  TensorSeqT<T> out(A, order);
  std::vector<Letter> lu, lw;
  for (int p = 0; p <= order; ++p) {
    auto ap = a.level(p);
    for (int q = 0; p + q <= order; ++q) {
      auto bq = b.level(q);
      const auto masks = detail::interleave_masks(p, q);
      auto outn = out.level(p + q);
      for (std::size_t iu = 0; iu < ap.size(); ++iu) {
        const T cu = ap[iu];
        if (cu == T{}) continue;
        lu.resize(static_cast<std::size_t>(p));
        {
          std::size_t rest = iu;
          for (int k = p - 1; k >= 0; --k) {
            lu[static_cast<std::size_t>(k)] = static_cast<Letter>(rest % static_cast<std::size_t>(A));
            rest /= static_cast<std::size_t>(A);
          }
        }
        for (std::size_t iw = 0; iw < bq.size(); ++iw) {
          const T c = cu * bq[iw];
          if (c == T{}) continue;
          lw.resize(static_cast<std::size_t>(q));
          {
            std::size_t rest = iw;
            for (int k = q - 1; k >= 0; --k) {
              lw[static_cast<std::size_t>(k)] = static_cast<Letter>(rest % static_cast<std::size_t>(A));
              rest /= static_cast<std::size_t>(A);
            }
          }
          for (std::uint32_t m : masks) {
            std::size_t idx = 0, ku = 0, kw = 0;
            for (int pos = 0; pos < p + q; ++pos) {
              const Letter letter = (m >> pos) & 1u ? lu[ku++] : lw[kw++];
              idx = idx * static_cast<std::size_t>(A) + letter;
            }
            outn[idx] += c;
          }
        }
      }
    }
  }
  return out;
}

/// Projection onto words ending with the given suffix: (a|_u)^v = a^{vu}.
template <class T>
TensorSeqT<T> project(const TensorSeqT<T>& a, const Word& suffix) {
  if (!suffix.valid_for_alphabet(a.alphabet()))
    throw std::invalid_argument("project: suffix letter outside alphabet");
  TensorSeqT<T> out(a.alphabet(), a.order());
  const int m = static_cast<int>(suffix.size());
  if (m > a.order()) return out;
  std::size_t suffix_idx = 0, suffix_block = 1;
  for (Letter l : suffix) {
    suffix_idx = suffix_idx * static_cast<std::size_t>(a.alphabet()) + l;
    suffix_block *= static_cast<std::size_t>(a.alphabet());
  }
  for (int n = m; n <= a.order(); ++n) {
    auto src = a.level(n);
    auto dst = out.level(n - m);
    for (std::size_t iv = 0; iv < dst.size(); ++iv) dst[iv] = src[iv * suffix_block + suffix_idx];
  }
  return out;
}

/// <a, b> = sum over words of a^v b^v (over the shared truncation).
template <class T>
T bracket(const TensorSeqT<T>& a, const TensorSeqT<T>& b) {
  a.require_alphabet(b);
  const int order = std::min(a.order(), b.order());
  T s{};
  for (int n = 0; n <= order; ++n) {
    auto an = a.level(n);
    auto bn = b.level(n);
    for (std::size_t i = 0; i < an.size(); ++i) s += an[i] * bn[i];
  }
  return s;
}

/// l^q norm of the coefficient vector, q in {1, 2}.
template <class T>
double norm(const TensorSeqT<T>& a, int q) {
  if (q != 1 && q != 2) throw std::invalid_argument("norm: q must be 1 or 2");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double m = std::abs(a.data()[i]);
    s += (q == 1) ? m : m * m;
  }
  return (q == 1) ? s : std::sqrt(s);
}

/// Tensor exponential exp((x) x) = sum_k x^{(x)k} / k!, truncated at x's
/// order. Requires a vanishing scalar coefficient so the series terminates.
template <class T>
TensorSeqT<T> exp_tensor(const TensorSeqT<T>& x) {
  if (x.coeff(Word::empty()) != T{})
    throw std::invalid_argument("exp_tensor: argument must have zero coefficient on the empty word");
  TensorSeqT<T> result = TensorSeqT<T>::unit(x.alphabet(), x.order());
  TensorSeqT<T> power = TensorSeqT<T>::unit(x.alphabet(), x.order());
  double factorial = 1;
  for (int k = 1; k <= x.order(); ++k) {
    power = tensor_product(power, x);
    factorial *= k;
    result += power * static_cast<T>(1.0 / factorial);
  }
  return result;
}

}  // namespace efm
