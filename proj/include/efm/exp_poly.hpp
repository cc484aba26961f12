#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace efm {

/// A finite sum of terms p(t) e^{-mu t} with polynomial p and mu >= 0. This
/// family is closed under the one integration step that builds EFM-signature
/// coefficients of linear segments,
///
///     g(t) = int_0^t e^{-mu_new (t-u)} f(u) du,
///
/// including the confluent case mu_new == mu, where the polynomial degree
/// rises by one instead of producing a partial fraction. Rates closer than a
/// relative 1e-12 are treated as confluent so the partial-fraction
/// coefficients prod 1/(mu_l - mu_k) never blow up.
class ExpPoly {
 public:
  struct Term {
    double mu = 0;
    std::vector<double> poly;  // poly[k] multiplies t^k
  };

  ExpPoly() = default;

  static ExpPoly zero() { return ExpPoly{}; }

  static ExpPoly constant(double c) {
    ExpPoly f;
    if (c != 0) f.terms_.push_back({0.0, {c}});
    return f;
  }

  static ExpPoly exponential(double c, double mu) {
    ExpPoly f;
    if (c != 0) f.terms_.push_back({mu, {c}});
    return f;
  }

  const std::vector<Term>& terms() const { return terms_; }

  ExpPoly& operator*=(double c) {
    if (c == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_)
      for (auto& p : t.poly) p *= c;
    return *this;
  }

  friend ExpPoly operator*(ExpPoly f, double c) { return f *= c; }
  friend ExpPoly operator*(double c, ExpPoly f) { return f *= c; }

  ExpPoly& operator+=(const ExpPoly& o) {
    for (const auto& t : o.terms_) add_term(t.mu, t.poly);
    return *this;
  }
  friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }

  int max_degree() const {
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, static_cast<int>(t.poly.size()) - 1);
    return d;
  }

  /// g(t) = int_0^t e^{-mu_new (t-u)} f(u) du, exactly.
  ExpPoly step_integrate(double mu_new) const {
    if (!(mu_new >= 0)) throw std::invalid_argument("step_integrate: mu_new must be >= 0");
    ExpPoly g;
    const double tol = merge_tolerance(mu_new);
    for (const auto& term : terms_) {
      const double delta = mu_new - term.mu;
      if (std::abs(delta) <= tol) {
        // Confluent: int_0^t p(u) du under the same exponential.
        std::vector<double> prim(term.poly.size() + 1, 0.0);
        for (std::size_t k = 0; k < term.poly.size(); ++k)
          prim[k + 1] = term.poly[k] / static_cast<double>(k + 1);
        g.add_term(mu_new, prim);
      } else {
        // int_0^t e^{delta u} p(u) du = [e^{delta u} q(u)]_0^t with
        // q = p/delta - p'/delta^2 + p''/delta^3 - ...
        std::vector<double> q(term.poly.size(), 0.0);
        std::vector<double> deriv = term.poly;
        double sign = 1.0, denom = delta;
        while (true) {
          for (std::size_t k = 0; k < deriv.size(); ++k) q[k] += sign * deriv[k] / denom;
          // next derivative
          if (deriv.size() <= 1) break;
          for (std::size_t k = 0; k + 1 < deriv.size(); ++k)
            deriv[k] = deriv[k + 1] * static_cast<double>(k + 1);
          deriv.pop_back();
          sign = -sign;
          denom *= delta;
        }
        g.add_term(term.mu, q);
        g.add_term(mu_new, {-q[0]});
      }
    }
    g.prune();
    return g;
  }

  double eval(double t) const {
    double s = 0;
    for (const auto& term : terms_) {
      double p = 0;
      for (std::size_t k = term.poly.size(); k-- > 0;) p = p * t + term.poly[k];
      s += p * std::exp(-term.mu * t);
    }
    return s;
  }

  /// Limit as t -> +infinity: terms with mu > 0 vanish; a mu = 0 term must be
  /// constant or the limit diverges (a degenerate rate configuration).
  double limit_at_infinity() const {
    double s = 0;
    const double tol = merge_tolerance(0.0);
    for (const auto& term : terms_) {
      if (term.mu > tol) continue;
      for (std::size_t k = 1; k < term.poly.size(); ++k)
        if (term.poly[k] != 0)
          throw std::domain_error("ExpPoly::limit_at_infinity: polynomial growth at rate 0");
      if (!term.poly.empty()) s += term.poly[0];
    }
    return s;
  }

 private:
  /// Relative merge tolerance 1e-12 * max |mu| over the terms involved.
  double merge_tolerance(double extra_mu) const {
    double m = std::abs(extra_mu);
    for (const auto& t : terms_) m = std::max(m, std::abs(t.mu));
    return 1e-12 * m;
  }

  void add_term(double mu, const std::vector<double>& poly) {
    const double tol = merge_tolerance(mu);
    for (auto& t : terms_) {
      if (std::abs(t.mu - mu) <= tol) {
        if (t.poly.size() < poly.size()) t.poly.resize(poly.size(), 0.0);
        for (std::size_t k = 0; k < poly.size(); ++k) t.poly[k] += poly[k];
        return;
      }
    }
    terms_.push_back({mu, poly});
  }

  void prune() {
    auto all_zero = [](const Term& t) {
      return std::all_of(t.poly.begin(), t.poly.end(), [](double c) { return c == 0.0; });
    };
    terms_.erase(std::remove_if(terms_.begin(), terms_.end(), all_zero), terms_.end());
  }

  std::vector<Term> terms_;
};

}  // namespace efm
