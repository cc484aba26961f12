#pragma once

// Independent test oracles: brute-force word combinatorics and direct ODE
// integration. These deliberately avoid the library's fast paths.

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "efm/rates.hpp"
#include "efm/tensor.hpp"
#include "efm/words.hpp"

namespace oracle {

using WordMap = std::map<std::vector<efm::Letter>, double>;

/// All interleavings of u and w by direct recursion.
inline void shuffle_words_into(const std::vector<efm::Letter>& u, const std::vector<efm::Letter>& w,
                               std::vector<efm::Letter>& acc, WordMap& out) {
  if (u.empty() && w.empty()) {
    out[acc] += 1.0;
    return;
  }
  if (!u.empty()) {
    std::vector<efm::Letter> ur(u.begin() + 1, u.end());
    acc.push_back(u.front());
    shuffle_words_into(ur, w, acc, out);
    acc.pop_back();
  }
  if (!w.empty()) {
    std::vector<efm::Letter> wr(w.begin() + 1, w.end());
    acc.push_back(w.front());
    shuffle_words_into(u, wr, acc, out);
    acc.pop_back();
  }
}

inline WordMap shuffle_words(const efm::Word& u, const efm::Word& w) {
  WordMap out;
  std::vector<efm::Letter> acc;
  shuffle_words_into(u.letters(), w.letters(), acc, out);
  return out;
}

/// Dense shuffle by the recursive enumeration, for cross-checking.
inline efm::TensorSeq shuffle_bruteforce(const efm::TensorSeq& a, const efm::TensorSeq& b) {
  const int order = std::min(a.order(), b.order());
  efm::TensorSeq out(a.alphabet(), order);
  const auto& la = a.layout();
  const auto& lb = b.layout();
  for (int p = 0; p <= a.order(); ++p)
    for (std::size_t i = 0; i < la.level_size(p); ++i) {
      const double ca = a.level(p)[i];
      if (ca == 0) continue;
      for (int q = 0; p + q <= order && q <= b.order(); ++q)
        for (std::size_t j = 0; j < lb.level_size(q); ++j) {
          const double c = ca * b.level(q)[j];
          if (c == 0) continue;
          for (const auto& [letters, mult] : shuffle_words(la.word_at(p, i), lb.word_at(q, j)))
            out.add(efm::Word(letters), c * mult);
        }
    }
  return out;
}

/// Dense concatenation product by a double loop over word pairs.
inline efm::TensorSeq tensor_product_bruteforce(const efm::TensorSeq& a, const efm::TensorSeq& b) {
  const int order = std::min(a.order(), b.order());
  efm::TensorSeq out(a.alphabet(), order);
  const auto& la = a.layout();
  const auto& lb = b.layout();
  for (int p = 0; p <= a.order(); ++p)
    for (std::size_t i = 0; i < la.level_size(p); ++i) {
      const double ca = a.level(p)[i];
      if (ca == 0) continue;
      for (int q = 0; p + q <= order && q <= b.order(); ++q)
        for (std::size_t j = 0; j < lb.level_size(q); ++j) {
          const double c = ca * b.level(q)[j];
          if (c == 0) continue;
          out.add(la.word_at(p, i) + lb.word_at(q, j), c);
        }
    }
  return out;
}

inline efm::TensorSeq random_tensor(std::mt19937_64& rng, int alphabet, int order,
                                    double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  efm::TensorSeq t(alphabet, order);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  return t;
}

/// RK4 integration of the segment-coefficient ODE system
///   d/dt sig^v = -lambda^v sig^v + sig^{v'} x^{last letter of v},
/// the drift form of the signature dynamics for a linear path.
inline efm::TensorSeq rk4_segment_signature(const efm::Rates& rates, std::span<const double> x,
                                            double duration, int order, double dt) {
  const int A = rates.alphabet();
  efm::TensorSeq y = efm::TensorSeq::unit(A, order);
  const auto& lo = y.layout();
  auto deriv = [&](const efm::TensorSeq& s) {
    efm::TensorSeq d(A, order);
    for (int n = 1; n <= order; ++n) {
      auto rate = rates.level_rates(n);
      auto sn = s.level(n);
      auto sprev = s.level(n - 1);
      auto dn = d.level(n);
      for (std::size_t i = 0; i < lo.level_size(n); ++i) {
        const std::size_t last = i % static_cast<std::size_t>(A);
        dn[i] = -rate[i] * sn[i] + sprev[i / static_cast<std::size_t>(A)] * x[last];
      }
    }
    return d;
  };
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(duration / dt));
  for (std::size_t k = 0; k < n_steps; ++k) {
    const efm::TensorSeq k1 = deriv(y);
    const efm::TensorSeq k2 = deriv(y + k1 * (dt / 2));
    const efm::TensorSeq k3 = deriv(y + k2 * (dt / 2));
    const efm::TensorSeq k4 = deriv(y + k3 * dt);
    y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
  }
  return y;
}

inline double max_abs_diff(const efm::TensorSeq& a, const efm::TensorSeq& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace oracle
