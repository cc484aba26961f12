#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "efm/path.hpp"
#include "efm/rng.hpp"

namespace efm {

/// Numerical blow-up in a simulation or solver; the CLI maps this to its own
/// exit code.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Simulation window. The grid starts at t0 - burn_in (the flat-past
/// emulation of the infinite past) and ends at t1. counter_offset shifts the
/// per-step RNG counters so a sub-window of a longer run can be reproduced.
struct SimConfig {
  std::uint64_t seed = 0;
  double dt = 1e-3;
  double t0 = 0;
  double t1 = 1;
  int d = 1;
  double burn_in = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter_offset = 0;

  void validate() const {
    if (!(dt > 0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (!(t1 > t0)) throw std::invalid_argument("SimConfig: t1 must be > t0");
    if (burn_in < 0) throw std::invalid_argument("SimConfig: burn_in must be >= 0");
    if (d < 1) throw std::invalid_argument("SimConfig: d must be >= 1");
  }

  double start() const { return t0 - burn_in; }
  std::size_t steps() const {
    return static_cast<std::size_t>(std::llround((t1 - start()) / dt));
  }
};

/// Two-sided Brownian motion sampled on the grid, increments N(0, dt), one
/// counter per (step, component).
inline PiecewisePath simulate_bm(const SimConfig& cfg) {
  cfg.validate();
  GaussianStream g(cfg.seed, cfg.stream_id);
  const std::size_t n = cfg.steps();
  const double sd = std::sqrt(cfg.dt);
  std::vector<double> values((n + 1) * static_cast<std::size_t>(cfg.d), 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (int c = 0; c < cfg.d; ++c) {
      const std::size_t i = k * static_cast<std::size_t>(cfg.d) + static_cast<std::size_t>(c);
      values[i + static_cast<std::size_t>(cfg.d)] =
          values[i] + sd * g.normal(cfg.counter_offset + i);
    }
  return make_uniform_path(cfg.start(), cfg.dt, std::move(values), cfg.d, false);
}

/// Ornstein-Uhlenbeck via the exact conditional Gaussian step
/// U_{k+1} = e^{-mu dt} U_k + sqrt((1 - e^{-2 mu dt}) / (2 mu)) xi_k,
/// optionally started from the stationary law N(0, 1/(2 mu)).
inline PiecewisePath simulate_ou(const SimConfig& cfg, double mu, bool from_stationary) {
  cfg.validate();
  if (!(mu > 0)) throw std::invalid_argument("simulate_ou: mu must be > 0");
  if (cfg.d != 1) throw std::invalid_argument("simulate_ou: univariate only");
  GaussianStream g(cfg.seed, cfg.stream_id);
  const std::size_t n = cfg.steps();
  const double decay = std::exp(-mu * cfg.dt);
  const double step_sd = std::sqrt(-std::expm1(-2.0 * mu * cfg.dt) / (2.0 * mu));
  std::vector<double> values(n + 1);
  // Counter n is reserved for the initial draw so the increment stream
  // matches a same-window Brownian run.
  values[0] = from_stationary ? g.normal(cfg.counter_offset + n) / std::sqrt(2.0 * mu) : 0.0;
  for (std::size_t k = 0; k < n; ++k)
    values[k + 1] = decay * values[k] + step_sd * g.normal(cfg.counter_offset + k);
  return make_uniform_path(cfg.start(), cfg.dt, std::move(values), 1, false);
}

/// Euler-Maruyama for dY = -mu Y^p dt + dW with odd p. Throws
/// numerical_error once |Y| exceeds 1e6 (the step size is too coarse).
inline PiecewisePath simulate_langevin(const SimConfig& cfg, double mu, int p) {
  cfg.validate();
  if (!(mu > 0)) throw std::invalid_argument("simulate_langevin: mu must be > 0");
  if (p < 1 || p % 2 == 0) throw std::invalid_argument("simulate_langevin: p must be odd >= 1");
  if (cfg.d != 1) throw std::invalid_argument("simulate_langevin: univariate only");
  GaussianStream g(cfg.seed, cfg.stream_id);
  const std::size_t n = cfg.steps();
  const double sd = std::sqrt(cfg.dt);
  std::vector<double> values(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double drift = values[k];
    for (int j = 1; j < p; ++j) drift *= values[k];
    values[k + 1] = values[k] - mu * drift * cfg.dt + sd * g.normal(cfg.counter_offset + k);
    if (std::abs(values[k + 1]) > 1e6)
      throw numerical_error("simulate_langevin: instability detected, reduce dt");
  }
  return make_uniform_path(cfg.start(), cfg.dt, std::move(values), 1, false);
}

}  // namespace efm
