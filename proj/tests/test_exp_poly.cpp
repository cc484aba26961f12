#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "efm/exp_poly.hpp"
#include "efm/rates.hpp"
#include "efm/words.hpp"

using namespace efm;

TEST_CASE("first-level time integral") {
  const ExpPoly g = ExpPoly::constant(1.0).step_integrate(2.0);
  for (double t : {0.0, 0.3, 1.0, 5.0})
    CHECK(g.eval(t) == doctest::Approx((1.0 - std::exp(-2.0 * t)) / 2.0).epsilon(1e-14));
  CHECK(g.limit_at_infinity() == doctest::Approx(0.5));
}

TEST_CASE("confluent case raises the polynomial degree") {
  const ExpPoly g = ExpPoly::exponential(1.0, 1.0).step_integrate(1.0);
  for (double t : {0.0, 0.5, 2.0}) CHECK(g.eval(t) == doctest::Approx(t * std::exp(-t)).epsilon(1e-14));
  CHECK(g.eval(0.0) == doctest::Approx(0));
  CHECK(g.limit_at_infinity() == doctest::Approx(0));
}

TEST_CASE("distinct-rate case splits into partial fractions") {
  const ExpPoly g = ExpPoly::exponential(1.0, 1.0).step_integrate(3.0);
  for (double t : {0.0, 0.4, 2.0})
    CHECK(g.eval(t) == doctest::Approx((std::exp(-t) - std::exp(-3.0 * t)) / 2.0).epsilon(1e-14));
}

TEST_CASE("eval basics") {
  CHECK(ExpPoly::constant(1.0).eval(123.0) == doctest::Approx(1));
  CHECK(ExpPoly::zero().eval(1.0) == doctest::Approx(0));
}

TEST_CASE("limit at infinity keeps only rate-zero constants") {
  ExpPoly f = ExpPoly::constant(3.0) + ExpPoly::exponential(1.0, 1.0);
  CHECK(f.limit_at_infinity() == doctest::Approx(3));
  // the linear-in-t profile diverges
  const ExpPoly t_profile = ExpPoly::constant(1.0).step_integrate(0.0);
  CHECK_THROWS_AS(t_profile.limit_at_infinity(), std::domain_error);
}

TEST_CASE("word 12 profile: exact partial fractions and stationary value") {
  // lambda = (1, 2), slope (1, 1): prefix rates mu = (1, 3)
  ExpPoly g = ExpPoly::constant(1.0).step_integrate(1.0).step_integrate(3.0);
  // expected c over rates (0, 1, 3): 1/3, -1/2, 1/6
  for (double t : {0.0, 0.2, 1.0, 4.0}) {
    const double expected = 1.0 / 3.0 - 0.5 * std::exp(-t) + std::exp(-3.0 * t) / 6.0;
    CHECK(g.eval(t) == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(g.eval(0.0) == doctest::Approx(0).epsilon(1e-15));
  CHECK(g.limit_at_infinity() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("distinct-rate profiles match the product formula term by term") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<double> mu(static_cast<std::size_t>(n) + 1, 0.0);
    ExpPoly g = ExpPoly::constant(1.0);
    bool distinct = true;
    for (int k = 1; k <= n; ++k) {
      mu[static_cast<std::size_t>(k)] = mu[static_cast<std::size_t>(k) - 1] + u(rng);
      g = g.step_integrate(mu[static_cast<std::size_t>(k)]);
    }
    for (int i = 0; i <= n && distinct; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (std::abs(mu[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(j)]) < 1e-6)
          distinct = false;
    if (!distinct) continue;

    // closed form: sum_k c_k e^{-mu_k t}, c_k = prod_{l != k} 1/(mu_l - mu_k)
    REQUIRE(g.terms().size() == static_cast<std::size_t>(n) + 1);
    double coeff_sum = 0;
    for (const auto& term : g.terms()) {
      REQUIRE(term.poly.size() == 1);
      int k = -1;
      for (int i = 0; i <= n; ++i)
        if (std::abs(mu[static_cast<std::size_t>(i)] - term.mu) < 1e-9) k = i;
      REQUIRE(k >= 0);
      double c = 1;
      for (int l = 0; l <= n; ++l)
        if (l != k) c /= (mu[static_cast<std::size_t>(l)] - mu[static_cast<std::size_t>(k)]);
      CHECK(term.poly[0] == doctest::Approx(c).epsilon(1e-9));
      coeff_sum += term.poly[0];
    }
    // vanishing at zero: the coefficients sum to 0 for n >= 1
    CHECK(coeff_sum == doctest::Approx(0).epsilon(1e-10));
    CHECK(std::abs(g.eval(0.0)) < 1e-12);
  }
}

TEST_CASE("near-confluent rates agree with the exactly confluent branch") {
  const double eps = 1e-6;
  // word 12 with lambda = (1, 1+eps) versus (1, 1): prefix rates (1, 2+eps) vs (1, 2)
  ExpPoly g_near = ExpPoly::constant(1.0).step_integrate(1.0).step_integrate(2.0 + eps);
  ExpPoly g_conf = ExpPoly::constant(1.0).step_integrate(1.0).step_integrate(2.0);
  for (double t : {0.1, 0.5, 1.0, 3.0})
    CHECK(g_near.eval(t) == doctest::Approx(g_conf.eval(t)).epsilon(1e-5));
}

TEST_CASE("merge tolerance treats sub-1e-12 rate gaps as confluent") {
  ExpPoly g = ExpPoly::exponential(1.0, 1.0).step_integrate(1.0 + 1e-14);
  // must take the confluent branch, not the 1e14-sized partial fraction
  for (const auto& term : g.terms()) CHECK(std::abs(term.poly[0]) < 10.0);
  CHECK(g.eval(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}
