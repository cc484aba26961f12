#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "efm/lab.hpp"
#include "efm/sim.hpp"
#include "oracles.hpp"

using namespace efm;

TEST_CASE("philox stream determinism and separation") {
  GaussianStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  CHECK(a.normal(7) == b.normal(7));
  CHECK(a.normal(7) != c.normal(7));
  CHECK(a.normal(7) != d.normal(7));
  CHECK(a.normal(7) != a.normal(8));
  // uniform draws live strictly inside (0, 1)
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double u = a.uniform(k);
    CHECK(u > 0);
    CHECK(u < 1);
  }
}

TEST_CASE("gaussian stream moments") {
  GaussianStream g(1234, 5);
  const std::size_t n = 200000;
  double s = 0, s2 = 0, s3 = 0, s4 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = g.normal(k);
    s += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  const double nd = static_cast<double>(n);
  CHECK(std::abs(s / nd) < 4.0 / std::sqrt(nd));
  CHECK(s2 / nd == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(s3 / nd) < 0.05);
  CHECK(s4 / nd == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("simulate_bm determinism and increment variance") {
  SimConfig cfg;
  cfg.seed = 9;
  cfg.dt = 1e-3;
  cfg.t0 = 0;
  cfg.t1 = 100;
  const PiecewisePath a = simulate_bm(cfg);
  const PiecewisePath b = simulate_bm(cfg);
  CHECK(a.values == b.values);  // bitwise reproducible

  double s2 = 0;
  const std::size_t n = a.samples() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double inc = a.values[k + 1] - a.values[k];
    s2 += inc * inc;
  }
  // chi^2: sample variance of increments within 3 sigma of dt
  const double var = s2 / static_cast<double>(n);
  CHECK(std::abs(var - cfg.dt) < 3.0 * cfg.dt * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("sub-window replay via counter offset") {
  SimConfig whole;
  whole.seed = 21;
  whole.dt = 0.01;
  whole.t0 = 0;
  whole.t1 = 2;
  const PiecewisePath full = simulate_bm(whole);

  SimConfig sub = whole;
  sub.t0 = 1.0;
  sub.counter_offset = 100;  // steps skipped before the sub-window
  const PiecewisePath tail = simulate_bm(sub);
  for (std::size_t k = 0; k + 1 < tail.samples(); ++k) {
    const double inc_full = full.values[100 + k + 1] - full.values[100 + k];
    const double inc_tail = tail.values[k + 1] - tail.values[k];
    CHECK(inc_full == doctest::Approx(inc_tail).epsilon(1e-15));
  }
}

TEST_CASE("simulate_ou hits the stationary law") {
  const double mu = 1.7;
  SimConfig cfg;
  cfg.seed = 33;
  cfg.dt = 0.05;
  cfg.t0 = 0;
  cfg.t1 = 5;
  double s2 = 0, lag = 0, s2_prev = 0;
  const std::size_t n_paths = 20000;
  for (std::size_t p = 0; p < n_paths; ++p) {
    cfg.stream_id = p;
    const PiecewisePath path = simulate_ou(cfg, mu, true);
    const double last = path.values.back();
    const double prev = path.values[path.values.size() - 2];
    s2 += last * last;
    s2_prev += prev * prev;
    lag += last * prev;
  }
  const double nd = static_cast<double>(n_paths);
  // stationary variance 1/(2 mu), within ~3 sigma of the chi^2 spread
  const double var_hat = s2 / nd;
  CHECK(var_hat == doctest::Approx(1.0 / (2 * mu)).epsilon(3.0 * std::sqrt(2.0 / nd)));
  // lag-1 autocorrelation e^{-mu dt}
  CHECK(lag / std::sqrt(s2 * s2_prev) == doctest::Approx(std::exp(-mu * cfg.dt)).epsilon(0.02));
}

TEST_CASE("simulate_ou from zero keeps a zero mean") {
  const double mu = 0.8;
  SimConfig cfg;
  cfg.seed = 55;
  cfg.dt = 0.05;
  cfg.t0 = 0;
  cfg.t1 = 3;
  double s = 0, s2 = 0;
  const std::size_t n_paths = 5000;
  for (std::size_t p = 0; p < n_paths; ++p) {
    cfg.stream_id = p;
    const double last = simulate_ou(cfg, mu, false).values.back();
    s += last;
    s2 += last * last;
  }
  const double mean = s / static_cast<double>(n_paths);
  const double se = std::sqrt(s2 / static_cast<double>(n_paths)) / std::sqrt(5000.0);
  CHECK(std::abs(mean) < 4 * se);
}

TEST_CASE("simulate_langevin") {
  SUBCASE("p = 1 tracks the exact OU scheme to O(dt)") {
    const double mu = 1.0;
    SimConfig cfg;
    cfg.seed = 77;
    cfg.t0 = 0;
    cfg.t1 = 1;
    auto max_gap = [&](double dt) {
      cfg.dt = dt;
      const PiecewisePath euler = simulate_langevin(cfg, mu, 1);
      const PiecewisePath exact = simulate_ou(cfg, mu, false);
      double m = 0;
      for (std::size_t k = 0; k < euler.samples(); ++k)
        m = std::max(m, std::abs(euler.values[k] - exact.values[k]));
      return m;
    };
    const double gap3 = max_gap(1e-3);
    const double gap4 = max_gap(1e-4);
    CHECK(gap3 < 0.05);
    CHECK(gap4 < gap3);
  }

  SUBCASE("production-scale parameters run stably") {
    SimConfig cfg;
    cfg.seed = 1;
    cfg.dt = 1.0 / 3650.0;
    cfg.t0 = 0;
    cfg.t1 = 4;
    CHECK_NOTHROW(simulate_langevin(cfg, 10.0, 5));
  }

  SUBCASE("coarse steps blow up and are reported") {
    SimConfig cfg;
    cfg.seed = 2;
    cfg.dt = 0.5;
    cfg.t0 = 0;
    cfg.t1 = 50;
    CHECK_THROWS_AS(simulate_langevin(cfg, 10.0, 5), numerical_error);
  }

  SUBCASE("even p is rejected") {
    SimConfig cfg;
    CHECK_THROWS_AS(simulate_langevin(cfg, 1.0, 2), std::invalid_argument);
  }
}

TEST_CASE("signature moments: deterministic clock coefficient and odd-degree symmetry") {
  Rates r({1.0, 0.5}, 3);
  SimConfig cfg;
  cfg.seed = 101;
  cfg.dt = 0.01;
  const double horizon = 4.0;
  const SignatureMoments m = mc_signature_moments(cfg, r, 3, 600, horizon, 2);

  // the time coordinate is deterministic: exact value, zero spread
  CHECK(m.mean.coeff(Word{0}) == doctest::Approx(-std::expm1(-horizon)).epsilon(1e-12));
  CHECK(m.stderr_of_mean.coeff(Word{0}) <= 1e-8);  // numerically zero spread

  // odd spatial degree implies zero mean by symmetry
  const TensorLayout& lo = m.mean.layout();
  for (int n = 1; n <= 3; ++n)
    for (std::size_t i = 0; i < lo.level_size(n); ++i) {
      const Word w = lo.word_at(n, i);
      int spatial = 0;
      for (Letter a : w) spatial += (a == 1);
      if (spatial % 2 == 1)
        CHECK(std::abs(m.mean.level(n)[i]) < 4.0 * m.stderr_of_mean.level(n)[i] + 1e-12);
    }

  // thread count does not change the reduction
  const SignatureMoments m1 = mc_signature_moments(cfg, r, 3, 600, horizon, 1);
  CHECK(oracle::max_abs_diff(m1.mean, m.mean) == 0);
}

TEST_CASE("ergodic decay experiment recovers the rate 2 min lambda") {
  Rates r({1.0, 0.5}, 3);
  SimConfig cfg;
  cfg.seed = 303;
  cfg.dt = 0.01;
  cfg.t0 = 0;
  cfg.t1 = 6;
  cfg.burn_in = 20;
  const ErgodicDecayReport rep = ergodic_decay_experiment(cfg, r, 3, 600, 2, 2.5, 6.0);
  CHECK(rep.expected_rate == doctest::Approx(1.0));
  CHECK(std::abs(rep.fitted_rate - 1.0) < 0.15);
  // slope of log gap^2 + 2 min lambda t is nonpositive within its CI
  CHECK(rep.excess_slope <= 2.58 * rep.excess_slope_se);
  // the start gap at t = 0 is the distance between the burned-in state and
  // the unit, already nonzero on the shared increments
  CHECK(rep.times.front() == 0.0);
  CHECK(rep.mean_sq_gap.front() > 0);
}

TEST_CASE("stationarity check") {
  Rates r({1.0, 0.5}, 2);
  SimConfig cfg;
  cfg.seed = 404;
  cfg.dt = 0.02;
  cfg.t0 = 0;
  cfg.t1 = 45;

  SUBCASE("equal times give zero statistics") {
    const StationarityReport rep = stationarity_check(cfg, r, 2, 400, 25.0, 25.0, 0.01, 2);
    for (const auto& w : rep.words) {
      CHECK(w.statistic == doctest::Approx(0));
      CHECK_FALSE(w.rejected);
    }
  }

  SUBCASE("well burned-in times pass") {
    const StationarityReport rep = stationarity_check(cfg, r, 2, 800, 25.0, 45.0, 0.01, 2);
    CHECK_FALSE(rep.any_rejected);
  }

  SUBCASE("a cold start is detected on the deterministic clock words") {
    const StationarityReport rep = stationarity_check(cfg, r, 2, 800, 0.02, 45.0, 0.01, 2);
    bool rejected_00 = false;
    for (const auto& w : rep.words)
      if (w.word == Word{0, 0}) rejected_00 = w.rejected;
    CHECK(rejected_00);
    CHECK(rep.any_rejected);
  }
}

TEST_CASE("l2 bound check") {
  Rates r({1.0, 0.5}, 3);
  SimConfig cfg;
  cfg.seed = 505;
  cfg.dt = 0.01;
  cfg.t0 = 0;
  cfg.t1 = 12;
  const L2BoundReport rep = l2_bound_check(cfg, r, 3, 2000, 2);
  CHECK(rep.c_lambda == doctest::Approx(4.0));  // max(1, 1/0.25, 1/1)
  CHECK(rep.empirical_sup < rep.bound);

  // E[(sig^{"1"})^2] at the end matches the OU variance 1/(2 lambda^1)
  const double v = rep.second_moment_final.coeff(Word{1});
  CHECK(v == doctest::Approx(1.0).epsilon(0.15));

  // deterministic clock words approach prod_k 1/(k lambda^0)
  CHECK(rep.second_moment_final.coeff(Word{0, 0}) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("appendix-style integral identity") {
  Rates r({1.0, 0.7}, 4);
  auto residual_at = [&](int k, double dt) {
    SimConfig cfg;
    cfg.seed = 606;
    cfg.dt = dt;
    cfg.t0 = 0;
    cfg.t1 = 8;
    PiecewisePath path = simulate_bm(cfg);
    path.time_augmented = true;
    return appendix_c_identity_check(r, k, path, 4);
  };
  for (int k : {1, 2, 3}) {
    const IdentityCheck coarse_check{residual_at(k, 1e-3)};
    const double coarse = coarse_check.lhs;  // silence unused in release
    (void)coarse;
    const double r3 = residual_at(k, 1e-3).residual;
    const double r4 = residual_at(k, 2e-4).residual;
    CHECK(r3 < 5e-3);
    CHECK(r4 < r3);
  }
}

TEST_CASE("monte carlo characteristic function agrees with the Gaussian law") {
  // <sig, a * letter1> is N(0, (1 - e^{-2 lambda t}) / (2 lambda))
  Rates r({1.0, 1.0}, 2);
  TensorSeq ell(2, 2);
  const double a = 1.3;
  ell.set(Word{1}, a);
  SimConfig cfg;
  cfg.seed = 707;
  cfg.dt = 1e-2;
  const std::vector<double> horizons = {1.0, 3.0};
  const auto cf = mc_charfunc(cfg, r, ell, horizons, 20000, 2);
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const double var = -std::expm1(-2.0 * horizons[h]) / 2.0;
    const double expected = std::exp(-0.5 * a * a * var);
    CHECK(std::abs(cf[h].phi.real() - expected) < 4.0 * cf[h].se_re + 2e-3);
    CHECK(std::abs(cf[h].phi.imag()) < 4.0 * cf[h].se_im + 1e-3);
  }
}
