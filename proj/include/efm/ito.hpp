#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "efm/rates.hpp"
#include "efm/rng.hpp"
#include "efm/stream.hpp"
#include "efm/tensor.hpp"

namespace efm {

/// Ito decomposition of d<sig, ell> for the time-augmented Brownian
/// EFM-signature: the dt integrand and one dW^i integrand per spatial letter.
struct FunctionalDecomposition {
  TensorSeq drift;
  std::vector<TensorSeq> vol;
};

/// drift = ell_dot - Lambda ell + ell|_0 + (1/2) sum_i ell|_{ii},
/// vol[i] = ell|_i for the spatial letters i = 1..d.
inline FunctionalDecomposition ito_decompose(const Rates& rates, const TensorSeq& ell,
                                             const TensorSeq* ell_dot = nullptr) {
  const int alphabet = ell.alphabet();
  if (alphabet < 2) throw std::invalid_argument("ito_decompose: needs a time-augmented alphabet");
  FunctionalDecomposition out;
  out.drift = apply_Lambda(rates, ell) * -1.0 + project(ell, Word{0});
  for (int i = 1; i < alphabet; ++i) {
    out.drift += project(ell, Word{i, i}) * 0.5;
    out.vol.push_back(project(ell, Word{i}));
  }
  if (ell_dot) {
    ell.require_same(*ell_dot);
    out.drift += *ell_dot;
  }
  return out;
}

/// RMS of the per-step residual of the Ito decomposition along one simulated
/// Brownian path: the realized increment of <sig, ell> minus the discretized
/// drift and volatility integrals. The leading term is the (dW^2 - dt)
/// correction, so the RMS shrinks linearly in the step size. Steps are built
/// from a fixed base grid of base_dt increments, `substeps` per step, so runs
/// at different resolutions share the same underlying path and the dt scaling
/// is measured with common random numbers.
inline double ito_residual_rms(const Rates& rates, const TensorSeq& ell, std::uint64_t seed,
                               double base_dt, std::size_t n_base_steps,
                               std::size_t substeps = 1) {
  const int d = ell.alphabet() - 1;
  const FunctionalDecomposition dec = ito_decompose(rates, ell);
  SigStream stream(rates, ell.order());
  SigState state = stream.initial(0.0);
  GaussianStream g(seed, 0);
  const double sd = std::sqrt(base_dt);
  const double dt = base_dt * static_cast<double>(substeps);
  const std::size_t n_steps = n_base_steps / substeps;
  std::vector<double> inc(static_cast<std::size_t>(d) + 1);
  double sumsq = 0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double z0 = bracket(ell, state.sig);
    const double drift0 = bracket(dec.drift, state.sig);
    double vol_term = 0;
    inc[0] = dt;
    for (int i = 0; i < d; ++i) {
      double dw = 0;
      for (std::size_t j = 0; j < substeps; ++j)
        dw += sd * g.normal((k * substeps + j) * static_cast<std::size_t>(d) +
                            static_cast<std::size_t>(i));
      inc[static_cast<std::size_t>(i) + 1] = dw;
      vol_term += bracket(dec.vol[static_cast<std::size_t>(i)], state.sig) * dw;
    }
    stream.step(state, dt, inc);
    const double r = bracket(ell, state.sig) - z0 - drift0 * dt - vol_term;
    sumsq += r * r;
  }
  return std::sqrt(sumsq / static_cast<double>(n_steps));
}

/// Coefficients of the OU representation l^{mu,N} = sum_{k=0..N} c_k 1 0^k,
/// c_0 = 1, c_{k+1} = (k lambda^0 + lambda^1 - mu) c_k.
inline std::vector<double> ou_representation_coeffs(const Rates& rates, double mu, int order) {
  if (!(mu > 0)) throw std::invalid_argument("ou_representation: mu must be > 0");
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  c[0] = 1.0;
  for (int k = 0; k < order; ++k)
    c[static_cast<std::size_t>(k) + 1] =
        (k * rates.letter_rate(0) + rates.letter_rate(1) - mu) * c[static_cast<std::size_t>(k)];
  return c;
}

/// The truncated linear functional representing an OU process of rate mu on
/// the EFM-signature of time-augmented one-dimensional Brownian motion. Words
/// "1 0^k" reach length order+1, so the result lives at truncation order+1.
inline TensorSeq ou_representation(const Rates& rates, double mu, int order) {
  if (rates.alphabet() != 2)
    throw std::invalid_argument("ou_representation: requires the d = 1 time-augmented alphabet");
  const auto c = ou_representation_coeffs(rates, mu, order);
  TensorSeq ell(2, order + 1);
  for (int k = 0; k <= order; ++k) {
    Word w{1};
    for (int j = 0; j < k; ++j) w.append(0);
    ell.set(w, c[static_cast<std::size_t>(k)]);
  }
  return ell;
}

}  // namespace efm
