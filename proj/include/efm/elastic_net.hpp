#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace efm {

/// Row-major dense matrix, just enough for the regression harness.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {a.data() + r * cols, cols}; }
};

struct ElasticNetOptions {
  double tol = 1e-10;            // max coefficient change per sweep
  std::size_t max_sweeps = 100000;
  std::vector<char> penalized;   // per column; empty = all penalized
};

struct ElasticNetFit {
  std::vector<double> beta;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Precomputed normal equations: G = X'X / n, b = X'y / n, yty = y'y / n.
struct GramSystem {
  std::size_t n = 0;
  std::vector<double> G;  // p x p
  std::vector<double> b;  // p
  double yty = 0;
  std::size_t p = 0;
};

inline GramSystem make_gram(const Matrix& X, std::span<const double> y) {
  if (X.rows != y.size()) throw std::invalid_argument("make_gram: row count mismatch");
  for (double v : X.a)
    if (!std::isfinite(v)) throw std::invalid_argument("make_gram: non-finite feature");
  GramSystem g;
  g.n = X.rows;
  g.p = X.cols;
  g.G.assign(X.cols * X.cols, 0.0);
  g.b.assign(X.cols, 0.0);
  const double inv_n = 1.0 / static_cast<double>(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) {
    const double* row = X.a.data() + r * X.cols;
    for (std::size_t j = 0; j < X.cols; ++j) {
      const double xj = row[j];
      if (xj == 0) continue;
      g.b[j] += xj * y[r];
      double* Gj = g.G.data() + j * X.cols;
      for (std::size_t k = j; k < X.cols; ++k) Gj[k] += xj * row[k];
    }
    g.yty += y[r] * y[r];
  }
  for (std::size_t j = 0; j < X.cols; ++j) {
    g.b[j] *= inv_n;
    for (std::size_t k = j; k < X.cols; ++k) {
      g.G[j * X.cols + k] *= inv_n;
      g.G[k * X.cols + j] = g.G[j * X.cols + k];
    }
  }
  g.yty *= inv_n;
  return g;
}

/// Cyclic coordinate descent with soft thresholding for
///   (1/2n) sum r^2 + alpha omega ||beta||_1 + (alpha/2)(1 - omega) ||beta||_2^2,
/// running on the normal equations. Deterministic given data and tolerance.
inline ElasticNetFit fit_elastic_net_gram(const GramSystem& g, double alpha, double omega,
                                          const ElasticNetOptions& opts = {}) {
  if (alpha < 0 || omega < 0 || omega > 1)
    throw std::invalid_argument("fit_elastic_net: alpha >= 0 and omega in [0,1] required");
  const std::size_t p = g.p;
  std::vector<char> pen = opts.penalized;
  if (pen.empty()) pen.assign(p, 1);
  if (pen.size() != p) throw std::invalid_argument("fit_elastic_net: penalty mask size");

  ElasticNetFit fit;
  fit.beta.assign(p, 0.0);
  std::vector<double> gbeta(p, 0.0);  // G beta, maintained incrementally

  const double l1 = alpha * omega;
  const double l2 = alpha * (1.0 - omega);
  for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0;
    for (std::size_t j = 0; j < p; ++j) {
      const double gjj = g.G[j * p + j];
      const double pen_l1 = pen[j] ? l1 : 0.0;
      const double pen_l2 = pen[j] ? l2 : 0.0;
      if (gjj == 0 && pen_l2 == 0) continue;
      const double rho = g.b[j] - gbeta[j] + gjj * fit.beta[j];
      double bj;
      if (rho > pen_l1)
        bj = (rho - pen_l1) / (gjj + pen_l2);
      else if (rho < -pen_l1)
        bj = (rho + pen_l1) / (gjj + pen_l2);
      else
        bj = 0.0;
      const double delta = bj - fit.beta[j];
      if (delta != 0) {
        const double* Gj = g.G.data() + j * p;
        for (std::size_t k = 0; k < p; ++k) gbeta[k] += delta * Gj[k];
        fit.beta[j] = bj;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    fit.sweeps = sweep + 1;
    if (max_change < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

inline ElasticNetFit fit_elastic_net(const Matrix& X, std::span<const double> y, double alpha,
                                     double omega, const ElasticNetOptions& opts = {}) {
  return fit_elastic_net_gram(make_gram(X, y), alpha, omega, opts);
}

/// Max KKT violation |d/dbeta_j smooth part| - alpha omega over the zero
/// penalized coordinates (should be <= ~1e-8 at convergence).
inline double elastic_net_kkt_violation(const GramSystem& g, std::span<const double> beta,
                                        double alpha, double omega,
                                        std::span<const char> penalized) {
  const std::size_t p = g.p;
  std::vector<double> gbeta(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    if (beta[k] == 0) continue;
    for (std::size_t j = 0; j < p; ++j) gbeta[j] += g.G[j * p + k] * beta[k];
  }
  double worst = 0;
  for (std::size_t j = 0; j < p; ++j) {
    if (!penalized.empty() && !penalized[j]) continue;
    if (beta[j] != 0) continue;
    const double grad = g.b[j] - gbeta[j];
    worst = std::max(worst, std::abs(grad) - alpha * omega);
  }
  return worst;
}

}  // namespace efm
