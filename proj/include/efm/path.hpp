#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace efm {

/// Sampled path in R^d with strictly increasing times. When time_augmented is
/// set the effective dimension is d+1, with component 0 equal to the clock t
/// (letter 0), followed by the d spatial components.
struct PiecewisePath {
  std::vector<double> times;
  std::vector<double> values;  // row-major, d per sample
  int dim = 0;
  bool time_augmented = false;

  std::size_t samples() const { return times.size(); }
  int effective_dim() const { return dim + (time_augmented ? 1 : 0); }

  std::span<const double> value(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  void validate() const {
    if (times.empty()) throw std::invalid_argument("PiecewisePath: empty path");
    if (dim < 1) throw std::invalid_argument("PiecewisePath: dim must be >= 1");
    if (values.size() != times.size() * static_cast<std::size_t>(dim))
      throw std::invalid_argument("PiecewisePath: times/values size mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw std::invalid_argument("PiecewisePath: times must be strictly increasing");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("PiecewisePath: non-finite value");
  }

  /// Effective-coordinate slope of segment k (time slope 1 when augmented).
  std::vector<double> segment_slope(std::size_t k) const {
    const double dt = times[k + 1] - times[k];
    std::vector<double> s;
    s.reserve(static_cast<std::size_t>(effective_dim()));
    if (time_augmented) s.push_back(1.0);
    auto a = value(k);
    auto b = value(k + 1);
    for (int c = 0; c < dim; ++c) s.push_back((b[c] - a[c]) / dt);
    return s;
  }
};

/// Path made of uniform steps, the common case for simulated drivers.
inline PiecewisePath make_uniform_path(double t0, double dt, std::vector<double> values, int dim,
                                       bool time_augmented) {
  PiecewisePath p;
  p.dim = dim;
  p.time_augmented = time_augmented;
  p.values = std::move(values);
  const std::size_t n = p.values.size() / static_cast<std::size_t>(dim);
  p.times.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.times[i] = t0 + static_cast<double>(i) * dt;
  p.validate();
  return p;
}

}  // namespace efm
