#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace efm {

/// Letters are small integers in [0, d]. Letter 0 is reserved for the time
/// component when paths are time-augmented.
using Letter = std::uint8_t;

/// A word over the alphabet {0, ..., d}; the empty word indexes the scalar
/// slot of a tensor sequence and is rendered as "e".
class Word {
 public:
  Word() = default;

  explicit Word(std::vector<Letter> letters) : letters_(std::move(letters)) {}

  Word(std::initializer_list<int> letters) {
    letters_.reserve(letters.size());
    for (int a : letters) {
      if (a < 0 || a > 255) throw std::invalid_argument("Word: letter out of range");
      letters_.push_back(static_cast<Letter>(a));
    }
  }

  static Word empty() { return Word{}; }

  static Word single(int letter) { return Word{letter}; }

  /// n copies of the same letter.
  static Word repeated(int letter, std::size_t n) {
    Word w;
    w.letters_.assign(n, static_cast<Letter>(letter));
    return w;
  }

  std::size_t size() const { return letters_.size(); }
  bool is_empty() const { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }

  auto begin() const { return letters_.begin(); }
  auto end() const { return letters_.end(); }

  const std::vector<Letter>& letters() const { return letters_; }

  Word& append(int letter) {
    letters_.push_back(static_cast<Letter>(letter));
    return *this;
  }

  /// Concatenation uw.
  friend Word operator+(const Word& u, const Word& w) {
    Word r = u;
    r.letters_.insert(r.letters_.end(), w.letters_.begin(), w.letters_.end());
    return r;
  }

  /// First n letters.
  Word prefix(std::size_t n) const {
    return Word(std::vector<Letter>(letters_.begin(), letters_.begin() + n));
  }

  bool ends_with(const Word& suffix) const {
    if (suffix.size() > size()) return false;
    return std::equal(suffix.letters_.begin(), suffix.letters_.end(),
                      letters_.end() - static_cast<std::ptrdiff_t>(suffix.size()));
  }

  bool valid_for_alphabet(int alphabet) const {
    for (Letter a : letters_)
      if (a >= alphabet) return false;
    return true;
  }

  friend bool operator==(const Word& a, const Word& b) { return a.letters_ == b.letters_; }
  friend bool operator!=(const Word& a, const Word& b) { return !(a == b); }

  /// Letters joined by "-"; the empty word renders as "e".
  std::string str() const {
    if (letters_.empty()) return "e";
    std::string s;
    for (std::size_t i = 0; i < letters_.size(); ++i) {
      if (i) s += '-';
      s += std::to_string(static_cast<int>(letters_[i]));
    }
    return s;
  }

  /// Inverse of str(). Accepts "e" or dash-separated letters, e.g. "1-0-2".
  static Word parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("Word::parse: empty string");
    if (text == "e") return Word{};
    Word w;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t dash = text.find('-', pos);
      std::string tok = text.substr(pos, dash == std::string::npos ? std::string::npos : dash - pos);
      if (tok.empty()) throw std::invalid_argument("Word::parse: bad word '" + text + "'");
      int v = std::stoi(tok);
      if (v < 0 || v > 255) throw std::invalid_argument("Word::parse: letter out of range");
      w.append(v);
      if (dash == std::string::npos) break;
      pos = dash + 1;
    }
    return w;
  }

 private:
  std::vector<Letter> letters_;
};

}  // namespace efm
