#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "efm/expectation.hpp"
#include "efm/projected_stream.hpp"
#include "efm/rng.hpp"
#include "efm/sim.hpp"
#include "efm/stream.hpp"
#include "efm/tensor.hpp"

namespace efm {
namespace detail {

/// Deterministic chunked map over [0, n_items): chunk boundaries are fixed
/// (independent of the worker count), each chunk is processed by a single
/// worker in path order, and the caller reduces the per-chunk slots in chunk
/// order afterwards. Results are therefore identical for any thread count.
template <class MakeState, class RunChunk>
void chunked_mc(std::size_t n_items, std::size_t chunk_size, int threads, MakeState make_state,
                RunChunk run_chunk) {
  const std::size_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    auto state = make_state();
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      const std::size_t lo = c * chunk_size;
      const std::size_t hi = std::min(lo + chunk_size, n_items);
      run_chunk(state, c, lo, hi);
    }
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

/// Ordinary least squares y ~ a + b x, returning slope, intercept and the
/// slope's standard error.
struct LineFit {
  double slope = 0, intercept = 0, slope_se = 0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (static_cast<double>(n) - 2.0) / sxx);
  }
  return f;
}

/// Survival function of the Kolmogorov distribution,
/// Q(x) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 x^2}.
inline double kolmogorov_q(double x) {
  if (x < 1e-8) return 1.0;
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * s));
}

struct KsTest {
  double statistic = 0;
  double p_value = 1;
};

/// Two-sample Kolmogorov-Smirnov test (sorts copies; ties handled by
/// advancing both sides together).
inline KsTest ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsTest t;
  t.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  t.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Signature moments of time-augmented Brownian motion
// ---------------------------------------------------------------------------

struct SignatureMoments {
  TensorSeq mean;
  TensorSeq stderr_of_mean;
  std::size_t n_paths = 0;
  double horizon = 0;
};

/// Empirical mean and standard error of the flat-past EFM-signature of
/// time-augmented Brownian motion at the given horizon. rates covers the
/// alphabet {0,...,d}; cfg supplies seed and dt; paths use stream ids
/// cfg.stream_id + path index.
inline SignatureMoments mc_signature_moments(const SimConfig& cfg, const Rates& rates, int order,
                                             std::size_t n_paths, double horizon, int threads = 1) {
  if (n_paths < 2) throw std::invalid_argument("mc_signature_moments: need at least 2 paths");
  if (!(cfg.dt > 0) || !(horizon > 0)) throw std::invalid_argument("mc_signature_moments: bad grid");
  const int d = rates.alphabet() - 1;
  if (d < 1) throw std::invalid_argument("mc_signature_moments: need a time-augmented alphabet");
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));
  const std::size_t chunk = 64;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;

  TensorLayout layout(rates.alphabet(), order);
  const std::size_t W = layout.total();
  std::vector<std::vector<double>> sum(n_chunks), sumsq(n_chunks);

  struct Worker {
    SigStream stream;
    SigState state;
    std::vector<double> inc;
  };
  detail::chunked_mc(
      n_paths, chunk, threads,
      [&] {
        return Worker{SigStream(rates, order), SigState{}, std::vector<double>(rates.lambda().size())};
      },
      [&](Worker& w, std::size_t c, std::size_t lo, std::size_t hi) {
        sum[c].assign(W, 0.0);
        sumsq[c].assign(W, 0.0);
        const double sd = std::sqrt(cfg.dt);
        for (std::size_t p = lo; p < hi; ++p) {
          GaussianStream g(cfg.seed, cfg.stream_id + p);
          w.state = w.stream.initial(cfg.t0);
          std::array<double, 2> pair{};
          for (std::size_t k = 0; k < n_steps; ++k) {
            w.inc[0] = cfg.dt;
            for (int i = 0; i < d; ++i) {
              const std::uint64_t ctr =
                  cfg.counter_offset + k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i);
              if ((ctr & 1) == 0) pair = g.normal_pair(ctr >> 1);
              w.inc[static_cast<std::size_t>(i) + 1] = sd * pair[ctr & 1];
            }
            w.stream.step(w.state, cfg.dt, w.inc);
          }
          const double* v = w.state.sig.data();
          for (std::size_t i = 0; i < W; ++i) {
            sum[c][i] += v[i];
            sumsq[c][i] += v[i] * v[i];
          }
        }
      });

  std::vector<double> total(W, 0.0), total_sq(W, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c)
    for (std::size_t i = 0; i < W; ++i) {
      total[i] += sum[c][i];
      total_sq[i] += sumsq[c][i];
    }

  SignatureMoments out;
  out.mean = TensorSeq(rates.alphabet(), order);
  out.stderr_of_mean = TensorSeq(rates.alphabet(), order);
  const double n = static_cast<double>(n_paths);
  for (std::size_t i = 0; i < W; ++i) {
    const double m = total[i] / n;
    out.mean.data()[i] = m;
    const double var = std::max(0.0, (total_sq[i] - n * m * m) / (n - 1.0));
    out.stderr_of_mean.data()[i] = std::sqrt(var / n);
  }
  out.n_paths = n_paths;
  out.horizon = horizon;
  return out;
}

// ---------------------------------------------------------------------------
// Ergodic decay of the coupled flat-past / burned-in gap
// ---------------------------------------------------------------------------

struct ErgodicDecayReport {
  std::vector<double> times;
  std::vector<double> mean_sq_gap;
  double fitted_rate = 0;      // decay rate of E || gap ||^2
  double rate_se = 0;
  double expected_rate = 0;    // 2 min lambda
  double excess_slope = 0;     // slope of log gap^2 + expected_rate * t over the fit window
  double excess_slope_se = 0;
  double fit_lo = 0, fit_hi = 0;
  std::size_t n_paths = 0;
};

/// Couples a burned-in (effectively stationary) signature with a flat-past
/// one on the same Brownian increments and tracks E || difference ||_2^2.
/// The log of that quantity is fitted linearly on [fit_lo, fit_hi]; the decay
/// rate should match 2 min lambda.
inline ErgodicDecayReport ergodic_decay_experiment(const SimConfig& cfg, const Rates& rates,
                                                   int order, std::size_t n_paths, int threads = 1,
                                                   double fit_lo = 2.5, double fit_hi = 6.0,
                                                   double record_spacing = 0.5) {
  cfg.validate();
  const int d = rates.alphabet() - 1;
  if (d < 1) throw std::invalid_argument("ergodic_decay_experiment: need time-augmented alphabet");
  const double T = cfg.t1 - cfg.t0;
  const std::size_t burn_steps = static_cast<std::size_t>(std::llround(cfg.burn_in / cfg.dt));
  const std::size_t run_steps = static_cast<std::size_t>(std::llround(T / cfg.dt));

  // t = 0 records the pure start gap || warm_0 - unit ||^2 from the shared
  // increments; later times watch it decay
  std::vector<double> record_times{0.0};
  for (double t = record_spacing; t <= T + 1e-9; t += record_spacing) record_times.push_back(t);
  std::vector<std::size_t> record_steps;
  for (double t : record_times)
    record_steps.push_back(static_cast<std::size_t>(std::llround(t / cfg.dt)));

  const std::size_t chunk = 32;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<std::vector<double>> slot(n_chunks);

  struct Worker {
    SigStream stream;
    std::vector<double> inc;
  };
  detail::chunked_mc(
      n_paths, chunk, threads,
      [&] { return Worker{SigStream(rates, order), std::vector<double>(rates.lambda().size())}; },
      [&](Worker& w, std::size_t c, std::size_t lo, std::size_t hi) {
        slot[c].assign(record_times.size(), 0.0);
        const double sd = std::sqrt(cfg.dt);
        for (std::size_t p = lo; p < hi; ++p) {
          GaussianStream g(cfg.seed, cfg.stream_id + p);
          SigState warm = w.stream.initial(cfg.start());
          for (std::size_t k = 0; k < burn_steps; ++k) {
            w.inc[0] = cfg.dt;
            for (int i = 0; i < d; ++i)
              w.inc[static_cast<std::size_t>(i) + 1] =
                  sd * g.normal(k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i));
            w.stream.step(warm, cfg.dt, w.inc);
          }
          SigState cold = w.stream.initial(cfg.t0);
          std::size_t rec = 0;
          if (record_steps[0] == 0) {
            double sq = 0;
            const double* a = warm.sig.data();
            const double* b = cold.sig.data();
            for (std::size_t i = 0; i < warm.sig.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
            slot[c][0] += sq;
            rec = 1;
          }
          for (std::size_t k = 0; k < run_steps && rec < record_steps.size(); ++k) {
            w.inc[0] = cfg.dt;
            for (int i = 0; i < d; ++i)
              w.inc[static_cast<std::size_t>(i) + 1] =
                  sd * g.normal((burn_steps + k) * static_cast<std::size_t>(d) +
                                static_cast<std::size_t>(i));
            w.stream.step(warm, cfg.dt, w.inc);
            w.stream.step(cold, cfg.dt, w.inc);
            if (k + 1 == record_steps[rec]) {
              double sq = 0;
              const double* a = warm.sig.data();
              const double* b = cold.sig.data();
              for (std::size_t i = 0; i < warm.sig.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
              slot[c][rec] += sq;
              ++rec;
            }
          }
        }
      });

  ErgodicDecayReport rep;
  rep.times = record_times;
  rep.mean_sq_gap.assign(record_times.size(), 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c)
    for (std::size_t i = 0; i < record_times.size(); ++i) rep.mean_sq_gap[i] += slot[c][i];
  for (double& v : rep.mean_sq_gap) v /= static_cast<double>(n_paths);

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < record_times.size(); ++i)
    if (record_times[i] >= fit_lo - 1e-9 && record_times[i] <= fit_hi + 1e-9) {
      xs.push_back(record_times[i]);
      ys.push_back(std::log(rep.mean_sq_gap[i]));
    }
  const auto fit = detail::fit_line(xs, ys);
  rep.fitted_rate = -fit.slope;
  rep.rate_se = fit.slope_se;
  rep.expected_rate = 2.0 * rates.min_rate();
  rep.excess_slope = fit.slope + rep.expected_rate;
  rep.excess_slope_se = fit.slope_se;
  rep.fit_lo = fit_lo;
  rep.fit_hi = fit_hi;
  rep.n_paths = n_paths;
  return rep;
}

// ---------------------------------------------------------------------------
// Stationarity via two-sample Kolmogorov-Smirnov at two times
// ---------------------------------------------------------------------------

struct StationarityWordResult {
  Word word;
  double statistic = 0;
  double p_value = 1;
  bool rejected = false;
};

struct StationarityReport {
  std::vector<StationarityWordResult> words;
  double level = 0.01;
  double corrected_level = 0;
  bool any_rejected = false;
};

/// Per-coefficient KS test between the signature samples at t_a and t_b
/// (levels 1 and 2), Bonferroni-corrected. Valid when both times are at least
/// 10 / min lambda past the start of the window; a deliberately cold t_a is
/// how nonstationarity is exhibited.
inline StationarityReport stationarity_check(const SimConfig& cfg, const Rates& rates, int order,
                                             std::size_t n_paths, double t_a, double t_b,
                                             double level = 0.01, int threads = 1) {
  cfg.validate();
  const int d = rates.alphabet() - 1;
  if (d < 1) throw std::invalid_argument("stationarity_check: need time-augmented alphabet");
  if (t_a > t_b) std::swap(t_a, t_b);
  if (t_a < cfg.start() || t_b > cfg.t1)
    throw std::invalid_argument("stationarity_check: sample times outside window");

  TensorLayout layout(rates.alphabet(), order);
  std::vector<Word> words;
  for (int n = 1; n <= std::min(order, 2); ++n)
    for (std::size_t i = 0; i < layout.level_size(n); ++i) words.push_back(layout.word_at(n, i));

  const std::size_t step_a =
      static_cast<std::size_t>(std::llround((t_a - cfg.start()) / cfg.dt));
  const std::size_t step_b =
      static_cast<std::size_t>(std::llround((t_b - cfg.start()) / cfg.dt));
  std::vector<std::size_t> flat;
  for (const Word& w : words) flat.push_back(layout.flat_index(w));

  std::vector<std::vector<double>> sample_a(words.size(), std::vector<double>(n_paths)),
      sample_b(words.size(), std::vector<double>(n_paths));

  struct Worker {
    SigStream stream;
    std::vector<double> inc;
  };
  detail::chunked_mc(
      n_paths, 32, threads,
      [&] { return Worker{SigStream(rates, order), std::vector<double>(rates.lambda().size())}; },
      [&](Worker& w, std::size_t, std::size_t lo, std::size_t hi) {
        const double sd = std::sqrt(cfg.dt);
        for (std::size_t p = lo; p < hi; ++p) {
          GaussianStream g(cfg.seed, cfg.stream_id + p);
          SigState state = w.stream.initial(cfg.start());
          for (std::size_t k = 0; k < step_b; ++k) {
            w.inc[0] = cfg.dt;
            for (int i = 0; i < d; ++i)
              w.inc[static_cast<std::size_t>(i) + 1] =
                  sd * g.normal(k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i));
            w.stream.step(state, cfg.dt, w.inc);
            if (k + 1 == step_a)
              for (std::size_t j = 0; j < words.size(); ++j)
                sample_a[j][p] = state.sig.data()[flat[j]];
          }
          if (step_a == 0)
            for (std::size_t j = 0; j < words.size(); ++j)
              sample_a[j][p] = (words[j].is_empty() ? 1.0 : 0.0);
          for (std::size_t j = 0; j < words.size(); ++j) sample_b[j][p] = state.sig.data()[flat[j]];
        }
      });

  StationarityReport rep;
  rep.level = level;
  rep.corrected_level = level / static_cast<double>(words.size());
  auto moments = [](const std::vector<double>& v) {
    double m = 0, s2 = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair<double, double>(m, std::sqrt(s2 / static_cast<double>(v.size())));
  };
  for (std::size_t j = 0; j < words.size(); ++j) {
    StationarityWordResult r;
    r.word = words[j];
    const auto [ma, sa] = moments(sample_a[j]);
    const auto [mb, sb] = moments(sample_b[j]);
    const double scale = std::max({std::abs(ma), std::abs(mb), 1.0});
    if (step_a == step_b) {
      r.statistic = 0;
      r.p_value = 1;
    } else if (sa < 1e-10 * scale && sb < 1e-10 * scale) {
      // Deterministic coordinate (pure clock words): a point mass, so KS is
      // vacuous. Compare the values against the burn-in design error
      // e^{-10} ~ 4.5e-5 instead.
      const bool same = std::abs(ma - mb) <= 4.5e-4 * scale;
      r.statistic = same ? 0.0 : 1.0;
      r.p_value = same ? 1.0 : 0.0;
    } else {
      const auto ks = detail::ks_two_sample(sample_a[j], sample_b[j]);
      r.statistic = ks.statistic;
      r.p_value = ks.p_value;
    }
    r.rejected = r.p_value < rep.corrected_level;
    rep.any_rejected = rep.any_rejected || r.rejected;
    rep.words.push_back(std::move(r));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// L2 bound of Lemma-style second moments (d = 1, time-augmented)
// ---------------------------------------------------------------------------

struct L2BoundReport {
  std::vector<double> times;
  std::vector<double> mean_sq_norm;  // E || sig_{0,t} ||_2^2
  double empirical_sup = 0;
  double bound = 0;
  double c_lambda = 0;
  TensorSeq second_moment_final;  // per-word E[(sig^v)^2] at t1
  std::size_t n_paths = 0;
};

/// Compares sup_t E || sig_{0,t} ||_2^2 with the explicit recursion bound
/// sum_n 2^n (2 C)^n / n!, C = max(1, 1/min(lambda)^2, 1/(2 min lambda)).
inline L2BoundReport l2_bound_check(const SimConfig& cfg, const Rates& rates, int order,
                                    std::size_t n_paths, int threads = 1,
                                    double record_spacing = 0.25) {
  cfg.validate();
  if (rates.alphabet() != 2)
    throw std::invalid_argument("l2_bound_check: restricted to d = 1 time-augmented");
  const double T = cfg.t1 - cfg.t0;
  const std::size_t run_steps = static_cast<std::size_t>(std::llround(T / cfg.dt));
  std::vector<std::size_t> record_steps;
  std::vector<double> record_times;
  for (double t = record_spacing; t <= T + 1e-9; t += record_spacing) {
    record_times.push_back(t);
    record_steps.push_back(static_cast<std::size_t>(std::llround(t / cfg.dt)));
  }

  TensorLayout layout(2, order);
  const std::size_t W = layout.total();
  const std::size_t chunk = 64;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<std::vector<double>> slot_norm(n_chunks), slot_final(n_chunks);

  struct Worker {
    SigStream stream;
    std::vector<double> inc;
  };
  detail::chunked_mc(
      n_paths, chunk, threads,
      [&] { return Worker{SigStream(rates, order), std::vector<double>(2)}; },
      [&](Worker& w, std::size_t c, std::size_t lo, std::size_t hi) {
        slot_norm[c].assign(record_times.size(), 0.0);
        slot_final[c].assign(W, 0.0);
        const double sd = std::sqrt(cfg.dt);
        for (std::size_t p = lo; p < hi; ++p) {
          GaussianStream g(cfg.seed, cfg.stream_id + p);
          SigState state = w.stream.initial(cfg.t0);
          std::size_t rec = 0;
          for (std::size_t k = 0; k < run_steps; ++k) {
            w.inc[0] = cfg.dt;
            w.inc[1] = sd * g.normal(k);
            w.stream.step(state, cfg.dt, w.inc);
            if (rec < record_steps.size() && k + 1 == record_steps[rec]) {
              double sq = 0;
              for (std::size_t i = 0; i < W; ++i)
                sq += state.sig.data()[i] * state.sig.data()[i];
              slot_norm[c][rec] += sq;
              ++rec;
            }
          }
          for (std::size_t i = 0; i < W; ++i)
            slot_final[c][i] += state.sig.data()[i] * state.sig.data()[i];
        }
      });

  L2BoundReport rep;
  rep.times = record_times;
  rep.mean_sq_norm.assign(record_times.size(), 0.0);
  rep.second_moment_final = TensorSeq(2, order);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    for (std::size_t i = 0; i < record_times.size(); ++i) rep.mean_sq_norm[i] += slot_norm[c][i];
    for (std::size_t i = 0; i < W; ++i) rep.second_moment_final.data()[i] += slot_final[c][i];
  }
  for (double& v : rep.mean_sq_norm) v /= static_cast<double>(n_paths);
  rep.second_moment_final *= 1.0 / static_cast<double>(n_paths);
  rep.empirical_sup = *std::max_element(rep.mean_sq_norm.begin(), rep.mean_sq_norm.end());

  const double lmin = rates.min_rate();
  rep.c_lambda = std::max({1.0, 1.0 / (lmin * lmin), 1.0 / (2.0 * lmin)});
  double bound = 0, term = 1;
  for (int n = 0; n <= order; ++n) {
    if (n > 0) term *= 2.0 * (2.0 * rep.c_lambda) / static_cast<double>(n);
    bound += term;
  }
  rep.bound = bound;
  rep.n_paths = n_paths;
  return rep;
}

// ---------------------------------------------------------------------------
// Appendix-style integral identity for <sig, i>
// ---------------------------------------------------------------------------

struct IdentityCheck {
  double lhs = 0;
  double rhs = 0;
  double residual = 0;
};

/// Trapezoid quadrature of int e^{-(k lambda^0 + lambda^i)(T-t)} <sig_t, i> dt
/// along a time-augmented piecewise-linear path against the closed-form
/// combination sum_m b_{k,m} <sig_T, i 0^m>,
/// b_{k,m} = (-lambda^0)^{m-1} (k-1)!/(k-m)!. The path is taken flat before
/// its first sample, which makes the identity exact up to quadrature error.
inline IdentityCheck appendix_c_identity_check(const Rates& rates, int k,
                                               const PiecewisePath& path, int order,
                                               int letter = 1) {
  if (k < 1) throw std::invalid_argument("appendix_c_identity_check: k must be >= 1");
  if (!path.time_augmented)
    throw std::invalid_argument("appendix_c_identity_check: path must be time-augmented");
  if (order < k + 1)
    throw std::invalid_argument("appendix_c_identity_check: order must cover the word i 0^k");
  path.validate();

  const double lam0 = rates.letter_rate(0);
  const double rate = k * lam0 + rates.letter_rate(letter);

  SigStream stream(rates, order);
  SigState state = stream.initial(path.times.front());
  const std::size_t flat_i = stream.layout().flat_index(Word{letter});

  double integral = 0;  // int e^{-rate (T_cur - t)} f(t) dt, rolled forward
  double prev_f = 0;
  std::vector<double> inc(static_cast<std::size_t>(path.effective_dim()));
  for (std::size_t s = 0; s + 1 < path.samples(); ++s) {
    const double dt = path.times[s + 1] - path.times[s];
    std::size_t c = 0;
    inc[c++] = dt;
    auto a = path.value(s), b = path.value(s + 1);
    for (int i = 0; i < path.dim; ++i) inc[c++] = b[i] - a[i];
    stream.step(state, dt, inc);
    const double f = state.sig.data()[flat_i];
    const double decay = std::exp(-rate * dt);
    integral = integral * decay + 0.5 * dt * (f + prev_f * decay);
    prev_f = f;
  }

  IdentityCheck out;
  out.lhs = integral;
  double b_km = 1.0;  // b_{k,1} = 1
  for (int m = 1; m <= k; ++m) {
    Word w{letter};
    for (int j = 0; j < m; ++j) w.append(0);
    out.rhs += b_km * state.sig.coeff(w);
    b_km *= -lam0 * static_cast<double>(k - m);  // b_{k,m+1} = -lambda^0 (k - m) b_{k,m}
  }
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo characteristic function of a fixed linear functional
// ---------------------------------------------------------------------------

struct McCharFunc {
  std::complex<double> phi;
  double se_re = 0, se_im = 0;
  std::size_t n_paths = 0;
};

/// E[e^{i <sig_{0,h}, ell>}] over flat-past time-augmented Brownian paths,
/// streamed on the prefix closure of ell's support. Multiple horizons are
/// evaluated on the same paths.
inline std::vector<McCharFunc> mc_charfunc(const SimConfig& cfg, const Rates& rates,
                                           const TensorSeq& ell,
                                           const std::vector<double>& horizons,
                                           std::size_t n_paths, int threads = 1) {
  if (horizons.empty()) return {};
  const int d = rates.alphabet() - 1;
  if (d < 1) throw std::invalid_argument("mc_charfunc: need time-augmented alphabet");

  std::vector<Word> support;
  for (int n = 0; n <= ell.order(); ++n) {
    auto lvl = ell.level(n);
    for (std::size_t i = 0; i < lvl.size(); ++i)
      if (lvl[i] != 0) support.push_back(ell.layout().word_at(n, i));
  }

  std::vector<std::size_t> horizon_steps;
  for (double h : horizons)
    horizon_steps.push_back(static_cast<std::size_t>(std::llround(h / cfg.dt)));
  const std::size_t n_steps = *std::max_element(horizon_steps.begin(), horizon_steps.end());

  const std::size_t chunk = 64;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
  // per chunk: for each horizon, sums of cos, sin, cos^2, sin^2
  std::vector<std::vector<double>> slot(n_chunks);

  struct Worker {
    ProjectedStream stream;
    std::vector<std::pair<std::uint32_t, double>> plan;
    std::vector<double> state, inc;
  };
  detail::chunked_mc(
      n_paths, chunk, threads,
      [&] {
        Worker w{ProjectedStream(rates, support), {}, {}, std::vector<double>(rates.lambda().size())};
        w.plan = w.stream.bracket_plan(ell);
        return w;
      },
      [&](Worker& w, std::size_t c, std::size_t lo, std::size_t hi) {
        slot[c].assign(horizons.size() * 4, 0.0);
        const double sd = std::sqrt(cfg.dt);
        for (std::size_t p = lo; p < hi; ++p) {
          GaussianStream g(cfg.seed, cfg.stream_id + p);
          w.state = w.stream.initial();
          std::size_t hidx = 0;
          for (std::size_t k = 0; k < n_steps && hidx < horizons.size(); ++k) {
            w.inc[0] = cfg.dt;
            for (int i = 0; i < d; ++i)
              w.inc[static_cast<std::size_t>(i) + 1] =
                  sd * g.normal(k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i));
            w.stream.step(w.state, cfg.dt, w.inc);
            while (hidx < horizons.size() && k + 1 == horizon_steps[hidx]) {
              const double z = ProjectedStream::pair_value(w.state, w.plan);
              const double cz = std::cos(z), sz = std::sin(z);
              double* s = slot[c].data() + hidx * 4;
              s[0] += cz;
              s[1] += sz;
              s[2] += cz * cz;
              s[3] += sz * sz;
              ++hidx;
            }
          }
        }
      });

  std::vector<McCharFunc> out(horizons.size());
  const double n = static_cast<double>(n_paths);
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    double sc = 0, ss = 0, scc = 0, sss = 0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      sc += slot[c][h * 4 + 0];
      ss += slot[c][h * 4 + 1];
      scc += slot[c][h * 4 + 2];
      sss += slot[c][h * 4 + 3];
    }
    const double mc = sc / n, ms = ss / n;
    out[h].phi = {mc, ms};
    out[h].se_re = std::sqrt(std::max(0.0, (scc - n * mc * mc) / (n - 1.0)) / n);
    out[h].se_im = std::sqrt(std::max(0.0, (sss - n * ms * ms) / (n - 1.0)) / n);
    out[h].n_paths = n_paths;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Empirical conditional mean over continuations of a frozen past
// ---------------------------------------------------------------------------

struct ContinuationMean {
  double mean = 0;
  double se = 0;
  std::size_t n_paths = 0;
};

/// Streams n fresh Brownian continuations of length h from the given state
/// and averages <sig_{t+h}, ell>; the sanity check against predict().
inline ContinuationMean continuation_mean(const Rates& rates, const SigState& state,
                                          const TensorSeq& ell, double h, double dt,
                                          std::size_t n_paths, std::uint64_t seed,
                                          int threads = 1) {
  const int d = rates.alphabet() - 1;
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(h / dt));
  const std::size_t chunk = 64;
  const std::size_t n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<std::array<double, 2>> slot(n_chunks);

  struct Worker {
    SigStream stream;
    std::vector<double> inc;
  };
  detail::chunked_mc(
      n_paths, chunk, threads,
      [&] { return Worker{SigStream(rates, state.sig.order()), std::vector<double>(rates.lambda().size())}; },
      [&](Worker& w, std::size_t c, std::size_t lo, std::size_t hi) {
        slot[c] = {0.0, 0.0};
        const double sd = std::sqrt(dt);
        for (std::size_t p = lo; p < hi; ++p) {
          GaussianStream g(seed, p);
          SigState s = state;
          for (std::size_t k = 0; k < n_steps; ++k) {
            w.inc[0] = dt;
            for (int i = 0; i < d; ++i)
              w.inc[static_cast<std::size_t>(i) + 1] =
                  sd * g.normal(k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i));
            w.stream.step(s, dt, w.inc);
          }
          const double z = bracket(ell, s.sig);
          slot[c][0] += z;
          slot[c][1] += z * z;
        }
      });

  double sum = 0, sumsq = 0;
  for (auto& s : slot) {
    sum += s[0];
    sumsq += s[1];
  }
  ContinuationMean out;
  const double n = static_cast<double>(n_paths);
  out.mean = sum / n;
  out.se = std::sqrt(std::max(0.0, (sumsq - n * out.mean * out.mean) / (n - 1.0)) / n);
  out.n_paths = n_paths;
  return out;
}

}  // namespace efm
