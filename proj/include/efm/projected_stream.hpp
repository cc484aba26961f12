#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "efm/exp_poly.hpp"
#include "efm/rates.hpp"
#include "efm/tensor.hpp"
#include "efm/words.hpp"

namespace efm {

/// Chen streaming restricted to the prefix closure of a target word set. The
/// closure is stable under the discounted-Chen update, because every split
/// v = uw of a tracked word has its prefix u tracked, while the segment
/// factor for the suffix w is available in closed form. Monte Carlo of a
/// fixed linear functional only needs the closure of its support, which is
/// typically far smaller than the dense truncated algebra.
class ProjectedStream {
 public:
  ProjectedStream(const Rates& rates, const std::vector<Word>& support) : rates_(rates) {
    // Prefix closure, ordered by (length, letters).
    std::map<std::vector<Letter>, std::uint32_t> slot_of;
    for (const Word& w : support) {
      if (!w.valid_for_alphabet(rates.alphabet()))
        throw std::invalid_argument("ProjectedStream: word letter outside alphabet");
      for (std::size_t k = 0; k <= w.size(); ++k)
        slot_of.emplace(w.prefix(k).letters(), 0);
    }
    words_.reserve(slot_of.size());
    for (auto& [letters, slot] : slot_of) words_.push_back(Word(letters));
    std::sort(words_.begin(), words_.end(), [](const Word& a, const Word& b) {
      if (a.size() != b.size()) return a.size() < b.size();
      return a.letters() < b.letters();
    });
    for (std::uint32_t i = 0; i < words_.size(); ++i) slot_of[words_[i].letters()] = i;

    word_rate_.reserve(words_.size());
    for (const Word& w : words_) word_rate_.push_back(rates.word_rate(w));

    std::map<std::vector<Letter>, std::uint32_t> suffix_id;
    for (std::uint32_t v = 0; v < words_.size(); ++v) {
      const Word& w = words_[v];
      for (std::size_t k = 0; k <= w.size(); ++k) {
        std::vector<Letter> suffix(w.letters().begin() + static_cast<std::ptrdiff_t>(k),
                                   w.letters().end());
        auto [it, inserted] = suffix_id.emplace(suffix, static_cast<std::uint32_t>(suffixes_.size()));
        if (inserted) {
          Suffix s;
          s.letters = suffix;
          ExpPoly f = ExpPoly::constant(1.0);
          double mu = 0;
          for (Letter a : suffix) {
            mu += rates.letter_rate(a);
            f = f.step_integrate(mu);
          }
          s.profile = std::move(f);
          suffixes_.push_back(std::move(s));
        }
        splits_.push_back({v, slot_of.at(w.prefix(k).letters()), it->second});
      }
    }
  }

  const std::vector<Word>& words() const { return words_; }
  const Rates& rates() const { return rates_; }

  /// State aligned with words(): the unit signature.
  std::vector<double> initial() const {
    std::vector<double> s(words_.size(), 0.0);
    s[0] = 1.0;  // closure always contains the empty word at slot 0
    return s;
  }

  void step(std::vector<double>& state, double dt, std::span<const double> increment) {
    if (dt < 0) throw std::invalid_argument("ProjectedStream::step: time regression");
    if (dt == 0) return;
    if (increment.size() != static_cast<std::size_t>(rates_.alphabet()))
      throw std::invalid_argument("ProjectedStream::step: increment dimension");
    const std::uint64_t key = std::bit_cast<std::uint64_t>(dt);
    if (key != last_key_ || last_tab_ == nullptr) {
      last_tab_ = &tables(key, dt);
      last_key_ = key;
    }
    const StepTables& tab = *last_tab_;

    slope_.assign(increment.begin(), increment.end());
    for (double& s : slope_) s /= dt;
    suffix_val_.resize(suffixes_.size());
    for (std::size_t s = 0; s < suffixes_.size(); ++s) {
      double mono = 1;
      for (Letter a : suffixes_[s].letters) mono *= slope_[a];
      suffix_val_[s] = mono * tab.g[s];
    }

    next_.assign(state.size(), 0.0);
    for (const Split& sp : splits_)
      next_[sp.target] += tab.d_factor[sp.prefix] * state[sp.prefix] * suffix_val_[sp.suffix];
    state.swap(next_);
  }

  /// Pairing plan for <sig, ell>; requires the support of ell to be covered
  /// by the tracked closure.
  std::vector<std::pair<std::uint32_t, double>> bracket_plan(const TensorSeq& ell) const {
    std::vector<std::pair<std::uint32_t, double>> plan;
    const TensorLayout& lo = ell.layout();
    for (int n = 0; n <= ell.order(); ++n) {
      auto lvl = ell.level(n);
      for (std::size_t i = 0; i < lvl.size(); ++i) {
        if (lvl[i] == 0) continue;
        const Word w = lo.word_at(n, i);
        const auto it = std::find(words_.begin(), words_.end(), w);
        if (it == words_.end())
          throw std::invalid_argument("ProjectedStream: functional support not tracked");
        plan.emplace_back(static_cast<std::uint32_t>(it - words_.begin()), lvl[i]);
      }
    }
    return plan;
  }

  static double pair_value(const std::vector<double>& state,
                           const std::vector<std::pair<std::uint32_t, double>>& plan) {
    double s = 0;
    for (const auto& [slot, c] : plan) s += state[slot] * c;
    return s;
  }

 private:
  struct Suffix {
    std::vector<Letter> letters;
    ExpPoly profile;
  };
  struct Split {
    std::uint32_t target;
    std::uint32_t prefix;
    std::uint32_t suffix;
  };
  struct StepTables {
    std::vector<double> d_factor;  // per closure word
    std::vector<double> g;         // per suffix
  };

  const StepTables& tables(std::uint64_t key, double dt) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    StepTables tab;
    tab.d_factor.resize(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) tab.d_factor[i] = std::exp(-word_rate_[i] * dt);
    tab.g.resize(suffixes_.size());
    for (std::size_t s = 0; s < suffixes_.size(); ++s) tab.g[s] = suffixes_[s].profile.eval(dt);
    return cache_.emplace(key, std::move(tab)).first->second;
  }

  Rates rates_;
  std::vector<Word> words_;
  std::vector<double> word_rate_;
  std::vector<Suffix> suffixes_;
  std::vector<Split> splits_;
  std::unordered_map<std::uint64_t, StepTables> cache_;
  const StepTables* last_tab_ = nullptr;
  std::uint64_t last_key_ = 0;
  std::vector<double> slope_, suffix_val_, next_;
};

}  // namespace efm
