#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "efm/rates.hpp"
#include "efm/sim.hpp"
#include "efm/tensor.hpp"
#include "efm/words.hpp"

namespace efm {

/// Quadratic part of the mean-reverting Riccati field:
/// F(psi) = psi|_0 + (1/2) sum_i psi|_{ii} + (1/2) sum_i (psi|_i)^{shuffle 2},
/// truncated at psi's order.
inline CTensorSeq riccati_F(const Rates& rates, const CTensorSeq& psi) {
  detail::require_rates_cover(rates, psi.alphabet(), psi.order(), "riccati_F");
  CTensorSeq F = project(psi, Word{0});
  for (int i = 1; i < psi.alphabet(); ++i) {
    F += project(psi, Word{i, i}) * std::complex<double>(0.5);
    const CTensorSeq pi = project(psi, Word{i});
    F += shuffle(pi, pi) * std::complex<double>(0.5);
  }
  return F;
}

struct CharFuncSolution {
  std::complex<double> phi;  // e^{psi_T^{empty}}
  std::complex<double> psi0_final;
  std::vector<double> times;                   // recorded trajectory times
  std::vector<std::complex<double>> psi0;      // psi^{empty} along the way
  std::vector<std::complex<double>> phi_traj;  // e^{psi^{empty}}
  std::vector<double> tail_mass;               // l2 mass off the empty word
  bool stationary = false;      // non-empty-word mass fell below 1e-8
  double stationary_time = -1;  // first time that happened
};

/// Characteristic function phi_T(ell) = e^{psi_T^{empty}} of <sig_{0,T}, ell>
/// by the semi-integrated predictor-corrector scheme
///   psi^P    = D_h psi + C_h F(psi)
///   psi_next = D_h psi + C_h (F(psi) + F(psi^P)) / 2.
///
/// This solves the order-N truncation of the Riccati system: shuffle squares
/// beyond the truncation drop out, and convergence in N is an empirical
/// matter (the exponential-martingale premise behind the probabilistic
/// reading is not checkable numerically, so the Monte Carlo lab provides the
/// cross-check). Coefficients above 1e8 in magnitude abort with the blow-up
/// time; halving dt is the usual fix.
inline CharFuncSolution solve_charfunc(const Rates& rates, const TensorSeq& ell, double T,
                                       double dt, int order, std::size_t record_stride = 1) {
  if (T < 0) throw std::invalid_argument("solve_charfunc: T must be >= 0");
  if (!(dt > 0)) throw std::invalid_argument("solve_charfunc: dt must be > 0");
  detail::require_rates_cover(rates, ell.alphabet(), order, "solve_charfunc");

  CTensorSeq psi(ell.alphabet(), order);
  for (int n = 0; n <= std::min(order, ell.order()); ++n) {
    auto src = ell.level(n);
    auto dst = psi.level(n);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::complex<double>(0.0, src[i]);
  }
  CharFuncSolution out;
  const std::size_t n_steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  double t = 0;
  auto tail_norm = [&] {
    double tail_sq = 0;
    for (std::size_t i = 1; i < psi.size(); ++i) tail_sq += std::norm(psi.data()[i]);
    return std::sqrt(tail_sq);
  };
  auto record = [&](double time) {
    out.times.push_back(time);
    const std::complex<double> p0 = psi.level(0)[0];
    out.psi0.push_back(p0);
    out.phi_traj.push_back(std::exp(p0));
    out.tail_mass.push_back(tail_norm());
  };
  record(0.0);

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, T - t);
    const CTensorSeq f0 = riccati_F(rates, psi);
    const CTensorSeq dpsi = apply_D(rates, h, psi);
    const CTensorSeq predictor = dpsi + apply_C(rates, h, f0);
    const CTensorSeq f1 = riccati_F(rates, predictor);
    psi = dpsi + apply_C(rates, h, (f0 + f1) * std::complex<double>(0.5));
    t += h;

    double max_abs = 0;
    for (std::size_t i = 0; i < psi.size(); ++i)
      max_abs = std::max(max_abs, std::abs(psi.data()[i]));
    if (max_abs > 1e8)
      throw numerical_error("solve_charfunc: blow-up at t = " + std::to_string(t) +
                            "; try halving dt");
    if (!out.stationary && tail_norm() < 1e-8) {
      out.stationary = true;
      out.stationary_time = t;
    }
    if ((k + 1) % record_stride == 0 || k + 1 == n_steps) record(t);
  }

  out.psi0_final = psi.level(0)[0];
  out.phi = std::exp(out.psi0_final);
  return out;
}

}  // namespace efm
