#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "efm/path.hpp"
#include "efm/tensor.hpp"
#include "efm/words.hpp"

namespace efm {

/// Decimal rendering with 17 significant digits (round-trips doubles).
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Complex values render as re+imj (e.g. "1.5+0.25j", "2-3j").
inline std::string format_value(std::complex<double> v) {
  std::string s = format_value(v.real());
  s += (v.imag() < 0 || std::signbit(v.imag())) ? "-" : "+";
  s += format_value(std::abs(v.imag()));
  s += 'j';
  return s;
}

inline double parse_real(const std::string& tok) {
  std::size_t used = 0;
  const double v = std::stod(tok, &used);
  if (used != tok.size()) throw std::invalid_argument("bad numeric value '" + tok + "'");
  return v;
}

/// Parses "a", "a+bj" or "a-bj".
inline std::complex<double> parse_complex(const std::string& tok) {
  if (tok.empty()) throw std::invalid_argument("empty value");
  if (tok.back() != 'j') return {parse_real(tok), 0.0};
  const std::string body = tok.substr(0, tok.size() - 1);
  for (std::size_t i = body.size(); i-- > 1;) {
    const char c = body[i];
    if ((c == '+' || c == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      const double re = parse_real(body.substr(0, i));
      const double im = parse_real(body[i] == '+' ? body.substr(i + 1) : body.substr(i));
      return {re, im};
    }
  }
  return {0.0, parse_real(body)};  // pure imaginary, e.g. "2.5j"
}

/// Coefficient CSV: header "word,value", words joined by "-" ("e" for the
/// empty word), nonzero coefficients only.
template <class T>
void write_coefficients_csv(std::ostream& os, const TensorSeqT<T>& seq) {
  os << "word,value\n";
  const TensorLayout& lo = seq.layout();
  for (int n = 0; n <= seq.order(); ++n) {
    auto lvl = seq.level(n);
    for (std::size_t i = 0; i < lvl.size(); ++i) {
      if (lvl[i] == T{} && n > 0) continue;
      os << lo.word_at(n, i).str() << ',' << format_value(lvl[i]) << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

}  // namespace detail

template <class T>
TensorSeqT<T> read_coefficients_csv(std::istream& is, int alphabet, int order) {
  TensorSeqT<T> seq(alphabet, order);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("coefficient CSV: empty input");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw std::invalid_argument("coefficient CSV: expected word,value");
    const Word w = Word::parse(cells[0]);
    if (!w.valid_for_alphabet(alphabet))
      throw std::invalid_argument("coefficient CSV: word '" + cells[0] + "' outside alphabet");
    if (static_cast<int>(w.size()) > order)
      throw std::invalid_argument("coefficient CSV: word '" + cells[0] + "' beyond order");
    if constexpr (std::is_same_v<T, std::complex<double>>)
      seq.set(w, parse_complex(cells[1]));
    else
      seq.set(w, parse_real(cells[1]));
  }
  return seq;
}

/// Longest word appearing in a coefficient CSV (to size the algebra).
inline std::pair<int, int> scan_coefficients_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("coefficient CSV: empty input");
  int max_letter = 0, max_len = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw std::invalid_argument("coefficient CSV: expected word,value");
    const Word w = Word::parse(cells[0]);
    max_len = std::max(max_len, static_cast<int>(w.size()));
    for (Letter a : w) max_letter = std::max(max_letter, static_cast<int>(a));
  }
  return {max_letter, max_len};
}

/// Path CSV: header "t,x1,...,xd".
inline void write_path_csv(std::ostream& os, const PiecewisePath& path) {
  os << 't';
  for (int c = 1; c <= path.dim; ++c) os << ",x" << c;
  os << '\n';
  for (std::size_t i = 0; i < path.samples(); ++i) {
    os << format_value(path.times[i]);
    auto v = path.value(i);
    for (int c = 0; c < path.dim; ++c) os << ',' << format_value(v[static_cast<std::size_t>(c)]);
    os << '\n';
  }
}

inline PiecewisePath read_path_csv(std::istream& is, bool time_augmented) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("path CSV: empty input");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw std::invalid_argument("path CSV: header must be t,x1,...,xd");
  PiecewisePath p;
  p.dim = static_cast<int>(header.size()) - 1;
  p.time_augmented = time_augmented;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("path CSV: row width mismatch");
    p.times.push_back(parse_real(cells[0]));
    for (std::size_t c = 1; c < cells.size(); ++c) p.values.push_back(parse_real(cells[c]));
  }
  p.validate();
  return p;
}

/// FNV-1a 64-bit digest of a file, hex-encoded; used in run manifests.
inline std::string file_digest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 14];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!f) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace efm
