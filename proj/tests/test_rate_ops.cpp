#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "efm/rates.hpp"
#include "efm/tensor.hpp"
#include "oracles.hpp"

using namespace efm;

TEST_CASE("word rates are additive") {
  Rates r({1.0, 2.0}, 4);
  CHECK(lambda_of_word(r, Word::empty()) == doctest::Approx(0));
  CHECK(lambda_of_word(r, Word{0, 1}) == doctest::Approx(3));
  CHECK(lambda_of_word(r, Word{1, 1, 1}) == doctest::Approx(6));
  const Word u{0, 1}, w{1, 1, 1};
  CHECK(lambda_of_word(r, u + w) == doctest::Approx(lambda_of_word(r, u) + lambda_of_word(r, w)));
  // level tables agree with per-word sums
  TensorLayout lo(2, 4);
  for (int n = 0; n <= 4; ++n) {
    auto rates = r.level_rates(n);
    for (std::size_t i = 0; i < rates.size(); ++i)
      CHECK(rates[i] == doctest::Approx(r.word_rate(lo.word_at(n, i))));
  }
}

TEST_CASE("rates must be positive") {
  CHECK_THROWS_AS(Rates({1.0, 0.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Rates({-1.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Rates({}, 2), std::invalid_argument);
  CHECK(Rates::unweighted(3, 2).plain());
}

TEST_CASE("Lambda kills the empty word and scales by word rate") {
  Rates r({1.0, 2.0}, 3);
  CHECK(norm(apply_Lambda(r, TensorSeq::unit(2, 3)), 1) == doctest::Approx(0));
  const TensorSeq a = apply_Lambda(r, TensorSeq::word(2, 3, Word{1}, 5.0));
  CHECK(a.coeff(Word{1}) == doctest::Approx(10));
}

TEST_CASE("Lambda satisfies the Leibniz rule over the tensor product") {
  std::mt19937_64 rng(5);
  Rates r({0.7, 1.3, 2.1}, 4);
  const TensorSeq p = oracle::random_tensor(rng, 3, 4);
  const TensorSeq q = oracle::random_tensor(rng, 3, 4);
  const TensorSeq lhs = apply_Lambda(r, tensor_product(p, q));
  const TensorSeq rhs =
      tensor_product(apply_Lambda(r, p), q) + tensor_product(p, apply_Lambda(r, q));
  CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("Lambda dagger inverts Lambda off the empty word") {
  std::mt19937_64 rng(9);
  Rates r({1.0, 2.0}, 3);
  CHECK(norm(apply_Lambda_dagger(r, TensorSeq::unit(2, 3)), 1) == doctest::Approx(0));
  CHECK(apply_Lambda_dagger(r, TensorSeq::word(2, 3, Word{0, 1}, 6.0)).coeff(Word{0, 1}) ==
        doctest::Approx(2));
  TensorSeq a = oracle::random_tensor(rng, 2, 3);
  a.set(Word::empty(), 0.0);
  CHECK(oracle::max_abs_diff(apply_Lambda(r, apply_Lambda_dagger(r, a)), a) < 1e-12);
  CHECK_THROWS_AS(apply_Lambda_dagger(Rates::unweighted(2, 3), a), std::domain_error);
}

TEST_CASE("dilation semigroup") {
  std::mt19937_64 rng(31);
  Rates r({0.5, 1.5}, 4);
  const TensorSeq a = oracle::random_tensor(rng, 2, 4);
  CHECK(oracle::max_abs_diff(apply_D(r, 0.0, a), a) == 0);
  const TensorSeq lhs = apply_D(r, 0.3, apply_D(r, 1.1, a));
  const TensorSeq rhs = apply_D(r, 1.4, a);
  CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
  // negative h inverts
  CHECK(oracle::max_abs_diff(apply_D(r, -1.4, rhs), a) < 1e-10);
}

TEST_CASE("dilation is multiplicative over the tensor product") {
  std::mt19937_64 rng(37);
  Rates r({0.5, 1.5, 2.5}, 4);
  const TensorSeq p = oracle::random_tensor(rng, 3, 4);
  const TensorSeq q = oracle::random_tensor(rng, 3, 4);
  const TensorSeq lhs = apply_D(r, 0.8, tensor_product(p, q));
  const TensorSeq rhs = tensor_product(apply_D(r, 0.8, p), apply_D(r, 0.8, q));
  CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("dilation commutes with the shuffle product") {
  std::mt19937_64 rng(41);
  Rates r({0.9, 1.7}, 4);
  const TensorSeq a = oracle::random_tensor(rng, 2, 4);
  const TensorSeq b = oracle::random_tensor(rng, 2, 4);
  const TensorSeq lhs = apply_D(r, 0.6, shuffle(a, b));
  const TensorSeq rhs = shuffle(apply_D(r, 0.6, a), apply_D(r, 0.6, b));
  CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("dilation contracts the l2 norm at rate min lambda") {
  std::mt19937_64 rng(43);
  Rates r({0.5, 1.5}, 4);
  TensorSeq a = oracle::random_tensor(rng, 2, 4);
  a.set(Word::empty(), 0.0);
  for (double h : {0.1, 1.0, 3.0})
    CHECK(norm(apply_D(r, h, a), 2) <= std::exp(-h * 0.5) * norm(a, 2) + 1e-12);
}

TEST_CASE("C operator") {
  Rates r({1.0, 2.0}, 3);
  std::mt19937_64 rng(47);
  const TensorSeq a = oracle::random_tensor(rng, 2, 3);
  // C_h on the empty word gives h
  CHECK(apply_C(r, 0.7, TensorSeq::unit(2, 3)).coeff(Word::empty()) == doctest::Approx(0.7));
  // rate-1 word scales by 1 - e^{-1}
  CHECK(apply_C(r, 1.0, TensorSeq::word(2, 3, Word{0})).coeff(Word{0}) ==
        doctest::Approx(0.6321205588285577).epsilon(1e-12));
  CHECK(norm(apply_C(r, 0.0, a), 1) == doctest::Approx(0));
  CHECK_THROWS_AS(apply_C(r, -1.0, a), std::invalid_argument);
  // tiny lambda h hits the Taylor branch smoothly
  Rates tiny({1e-9, 1e-9}, 2);
  const double c = apply_C(tiny, 1.0, TensorSeq::word(2, 2, Word{0})).coeff(Word{0});
  CHECK(c == doctest::Approx(1.0 - 0.5e-9).epsilon(1e-12));
}

TEST_CASE("stationary resolvent series") {
  // x = 0 keeps only the unit
  Rates r({2.0}, 4);
  TensorSeq zero(1, 4);
  const TensorSeq only_unit = stationary_series_H(r, zero, 10);
  CHECK(only_unit.coeff(Word::empty()) == doctest::Approx(1));
  CHECK(norm(only_unit, 1) == doctest::Approx(1));

  // single letter with rate 2: level n coefficient 1/(n! 2^n)
  TensorSeq x(1, 4);
  x.set(Word{0}, 1.0);
  const TensorSeq s = stationary_series_H(r, x, 4);
  double fact = 1;
  for (int n = 1; n <= 4; ++n) {
    fact *= n;
    CHECK(s.coeff(Word::repeated(0, static_cast<std::size_t>(n))) ==
          doctest::Approx(1.0 / (fact * std::pow(2.0, n))));
  }
  CHECK(s.coeff(Word::repeated(0, 2)) == doctest::Approx(0.125));

  // one more term than needed changes nothing
  const TensorSeq s5 = stationary_series_H(r, x, 5);
  CHECK(oracle::max_abs_diff(s, s5) == 0);

  TensorSeq bad = TensorSeq::unit(1, 4);
  CHECK_THROWS_AS(stationary_series_H(r, bad, 3), std::invalid_argument);
}
