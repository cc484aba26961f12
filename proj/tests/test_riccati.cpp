#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "efm/lab.hpp"
#include "efm/riccati.hpp"

using namespace efm;
using cplx = std::complex<double>;

TEST_CASE("riccati field on simple inputs") {
  Rates r({1.0, 1.0}, 4);

  SUBCASE("a pure spatial letter produces the shuffle-square constant") {
    CTensorSeq psi(2, 4);
    const double a = 0.7;
    psi.set(Word{1}, cplx(0, a));
    const CTensorSeq F = riccati_F(r, psi);
    CHECK(F.coeff(Word::empty()).real() == doctest::Approx(-0.5 * a * a));
    CHECK(F.coeff(Word::empty()).imag() == doctest::Approx(0));
    CHECK(norm(F, 1) == doctest::Approx(0.5 * a * a));
  }

  SUBCASE("the unit has empty projections") {
    CTensorSeq psi(2, 4);
    psi.set(Word::empty(), cplx(2, 3));
    CHECK(norm(riccati_F(r, psi), 1) == doctest::Approx(0));
  }

  SUBCASE("the clock letter projects onto the unit") {
    CTensorSeq psi(2, 4);
    psi.set(Word{0}, cplx(0, 1));
    const CTensorSeq F = riccati_F(r, psi);
    CHECK(F.coeff(Word::empty()).imag() == doctest::Approx(1));
    CHECK(norm(F, 1) == doctest::Approx(1));
  }
}

TEST_CASE("zero functional has characteristic function one") {
  Rates r({1.0, 0.5}, 3);
  TensorSeq ell(2, 3);
  const CharFuncSolution sol = solve_charfunc(r, ell, 5.0, 1e-2, 3);
  CHECK(sol.phi.real() == doctest::Approx(1));
  CHECK(sol.phi.imag() == doctest::Approx(0));
}

TEST_CASE("Gaussian closed form: a single spatial letter") {
  const double lam = 0.8, a = 1.2, T = 3.0;
  Rates r({1.0, lam}, 3);
  TensorSeq ell(2, 3);
  ell.set(Word{1}, a);
  const CharFuncSolution sol = solve_charfunc(r, ell, T, 1e-3, 3);
  const double expected = std::exp(-a * a * -std::expm1(-2 * lam * T) / (4 * lam));
  CHECK(std::abs(sol.phi.real() - expected) < 1e-6);
  CHECK(std::abs(sol.phi.imag()) < 1e-6);
}

TEST_CASE("predictor-corrector converges at second order") {
  const double lam = 0.8, a = 1.2, T = 2.0;
  Rates r({1.0, lam}, 2);
  TensorSeq ell(2, 2);
  ell.set(Word{1}, a);
  const double exact = -a * a * -std::expm1(-2 * lam * T) / (4 * lam);
  auto err = [&](double dt) {
    const CharFuncSolution sol = solve_charfunc(r, ell, T, dt, 2);
    return std::abs(sol.psi0_final - cplx(exact, 0.0));
  };
  const double e1 = err(2e-2), e2 = err(1e-2);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("mean reversion empties every coefficient except the constant") {
  Rates r({1.0, 0.6}, 4);
  TensorSeq ell(2, 4);
  ell.set(Word{1, 1}, 0.8);
  ell.set(Word{0, 1}, -0.4);
  const CharFuncSolution sol = solve_charfunc(r, ell, 34.0, 1e-2, 4, 50);
  CHECK(sol.stationary);
  CHECK(sol.stationary_time < 34.0);

  // log tail mass decays at least at min lambda, 10% slack on the fitted slope
  std::vector<double> ts, logs;
  for (std::size_t i = 0; i < sol.times.size(); ++i)
    if (sol.times[i] >= 3.0 && sol.times[i] <= 10.0 && sol.tail_mass[i] > 0) {
      ts.push_back(sol.times[i]);
      logs.push_back(std::log(sol.tail_mass[i]));
    }
  const auto fit = detail::fit_line(ts, logs);
  CHECK(-fit.slope >= 0.6 * 0.9);

  // the constant-coefficient trajectory is flat once the tail has emptied
  double max_jump = 0;
  for (std::size_t i = 1; i < sol.phi_traj.size(); ++i) {
    if (sol.times[i] < 12.0) continue;
    max_jump = std::max(max_jump, std::abs(sol.phi_traj[i] - sol.phi_traj[i - 1]));
  }
  CHECK(max_jump < 1e-6);
}

TEST_CASE("conjugate symmetry") {
  Rates r({1.0, 0.6}, 4);
  TensorSeq ell(2, 4);
  ell.set(Word{1}, 0.9);
  ell.set(Word{1, 1}, -0.3);
  ell.set(Word{0}, 0.2);
  const CharFuncSolution plus = solve_charfunc(r, ell, 4.0, 1e-3, 4);
  const CharFuncSolution minus = solve_charfunc(r, ell * -1.0, 4.0, 1e-3, 4);
  CHECK(std::abs(plus.phi - std::conj(minus.phi)) < 1e-12);
}

TEST_CASE("blow-up is reported with a time stamp") {
  Rates r({1.0, 1.0}, 2);
  TensorSeq ell(2, 2);
  ell.set(Word{1}, 1e9);
  CHECK_THROWS_AS(solve_charfunc(r, ell, 1.0, 1e-2, 2), numerical_error);
}

TEST_CASE("quartic functional: solver versus Monte Carlo at two truncations") {
  // ell = 1^{(x)4}, lambda = (1, 1), desk-scale paths
  Rates r4(std::vector<double>{1.0, 1.0}, 4);
  TensorSeq ell(2, 4);
  ell.set(Word{1, 1, 1, 1}, 1.0);

  SimConfig cfg;
  cfg.seed = 2222;
  cfg.dt = 2e-3;
  const std::vector<double> horizons = {1.0, 4.0};
  const auto mc = mc_charfunc(cfg, r4, ell, horizons, 20000, 2);

  for (int order : {4, 6}) {
    Rates r(std::vector<double>{1.0, 1.0}, order);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const CharFuncSolution sol = solve_charfunc(r, ell, horizons[h], 1e-3, order);
      CHECK(std::abs(sol.phi.real() - mc[h].phi.real()) < 3.3 * mc[h].se_re + 3e-3);
      CHECK(std::abs(sol.phi.imag() - mc[h].phi.imag()) < 3.3 * mc[h].se_im + 3e-3);
    }
  }
}
