// efmsig: command-line surface for EFM-signature computations.
//
// Subcommands: sig, expected, simulate, lab, regress, predict, charfunc.
// Exit codes: 0 success, 1 I/O failure, 2 bad flag or domain value,
// 3 numerical blow-up.

#include <chrono>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "efm/efm.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
  std::string command;
  std::vector<std::string> argv;
  std::optional<std::string> out_dir;
  json inputs = json::object();
  json outputs = json::array();
  json extra = json::object();
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void note_input(const std::string& path) { inputs[path] = efm::file_digest(path); }

  fs::path out_path(const std::string& name) {
    fs::create_directories(*out_dir);
    outputs.push_back(name);
    return fs::path(*out_dir) / name;
  }

  void write_manifest() {
    if (!out_dir) return;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["version"] = efm::version;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["wall_time_s"] = wall;
    for (auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream f(fs::path(*out_dir) / "manifest.json");
    f << m.dump(2) << '\n';
  }
};

std::vector<double> parse_lambda(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw std::invalid_argument("--lambda: empty entry");
    out.push_back(efm::parse_real(tok));
  }
  if (out.empty()) throw std::invalid_argument("--lambda: no rates given");
  for (double l : out)
    if (!(l > 0)) throw std::invalid_argument("--lambda: rates must be positive");
  return out;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(efm::parse_real(tok));
  if (out.empty()) throw std::invalid_argument(std::string(flag) + ": empty list");
  return out;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("EFMSIG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  return f;
}

void emit(RunContext& ctx, const std::string& name, const std::string& content) {
  if (ctx.out_dir) {
    auto f = open_output(ctx.out_path(name));
    f << content;
  } else {
    std::cout << content;
  }
}

efm::PiecewisePath load_path(RunContext& ctx, const std::string& file, bool time_augment) {
  std::ifstream f(file);
  if (!f) throw std::runtime_error("cannot open '" + file + "'");
  ctx.note_input(file);
  return efm::read_path_csv(f, time_augment);
}

efm::TensorSeq load_functional(RunContext& ctx, const std::string& file, int alphabet, int order) {
  std::ifstream f(file);
  if (!f) throw std::runtime_error("cannot open '" + file + "'");
  ctx.note_input(file);
  return efm::read_coefficients_csv<double>(f, alphabet, order);
}

json sidecar(const std::vector<double>& lambda, int order, double t_final) {
  json j;
  j["lambda"] = lambda;
  j["order"] = order;
  j["t_final"] = t_final;
  return j;
}

// --- sig ---------------------------------------------------------------

int run_sig(RunContext& ctx, const std::string& input, const std::string& lambda_text, int order,
            bool time_augment, const std::string& from) {
  const efm::PiecewisePath path = load_path(ctx, input, time_augment);
  const std::vector<double> lambda = parse_lambda(lambda_text);
  if (static_cast<int>(lambda.size()) != path.effective_dim())
    throw std::invalid_argument("--lambda arity does not match the path dimension");
  const efm::Rates rates(lambda, order);
  const efm::PathStart start =
      from == "start" ? efm::PathStart::start : efm::PathStart::flat_past;
  const efm::SigState state = efm::signature_of_path(rates, path, order, start);

  std::ostringstream csv;
  efm::write_coefficients_csv(csv, state.sig);
  emit(ctx, "signature.csv", csv.str());
  if (ctx.out_dir) {
    auto f = open_output(ctx.out_path("signature.json"));
    f << sidecar(lambda, order, state.t).dump(2) << '\n';
  }
  return 0;
}

// --- expected ------------------------------------------------------------

int run_expected(RunContext& ctx, const std::string& lambda_text, int dim, int order,
                 double horizon, bool stationary) {
  const std::vector<double> lambda = parse_lambda(lambda_text);
  if (static_cast<int>(lambda.size()) != dim + 1)
    throw std::invalid_argument("--lambda arity must be dim + 1 (time rate first)");
  const efm::Rates rates(lambda, order);
  const efm::ExpectedSig e =
      stationary ? efm::expected_signature_stationary(rates, dim, order)
                 : efm::expected_signature_transient(rates, dim, order, horizon);
  std::ostringstream csv;
  efm::write_coefficients_csv(csv, e.value);
  emit(ctx, "expected.csv", csv.str());
  if (ctx.out_dir) {
    auto f = open_output(ctx.out_path("expected.json"));
    json j;
    j["lambda"] = lambda;
    j["order"] = order;
    j["horizon"] = stationary ? json("stationary") : json(horizon);
    f << j.dump(2) << '\n';
  }
  return 0;
}

// --- simulate ------------------------------------------------------------

int run_simulate(RunContext& ctx, const std::string& kind, const efm::SimConfig& cfg, double mu,
                 int p, bool from_stationary) {
  efm::PiecewisePath path;
  if (kind == "bm")
    path = efm::simulate_bm(cfg);
  else if (kind == "ou")
    path = efm::simulate_ou(cfg, mu, from_stationary);
  else
    path = efm::simulate_langevin(cfg, mu, p);
  std::ostringstream csv;
  efm::write_path_csv(csv, path);
  emit(ctx, "path.csv", csv.str());
  ctx.extra["seed"] = cfg.seed;
  return 0;
}

// --- lab -----------------------------------------------------------------

int run_lab(RunContext& ctx, const std::string& experiment, const efm::SimConfig& cfg,
            const std::string& lambda_text, int order, std::size_t n_paths, int threads,
            double horizon, double t_a, double t_b, int k_identity) {
  const std::vector<double> lambda = parse_lambda(lambda_text);
  const efm::Rates rates(lambda, std::max(order, k_identity + 1));
  json rep;
  rep["experiment"] = experiment;
  rep["lambda"] = lambda;
  rep["order"] = order;
  rep["seed"] = cfg.seed;
  rep["dt"] = cfg.dt;
  rep["paths"] = n_paths;

  if (experiment == "moments") {
    const efm::SignatureMoments m =
        efm::mc_signature_moments(cfg, rates, order, n_paths, horizon, threads);
    rep["horizon"] = horizon;
    json words = json::array();
    const efm::TensorLayout& lo = m.mean.layout();
    for (int n = 0; n <= order; ++n)
      for (std::size_t i = 0; i < lo.level_size(n); ++i) {
        json w;
        w["word"] = lo.word_at(n, i).str();
        w["mean"] = m.mean.level(n)[i];
        w["stderr"] = m.stderr_of_mean.level(n)[i];
        words.push_back(w);
      }
    rep["coefficients"] = words;
  } else if (experiment == "ergodic") {
    const efm::ErgodicDecayReport r =
        efm::ergodic_decay_experiment(cfg, rates, order, n_paths, threads);
    rep["times"] = r.times;
    rep["mean_sq_gap"] = r.mean_sq_gap;
    rep["fitted_rate"] = r.fitted_rate;
    rep["rate_se"] = r.rate_se;
    rep["expected_rate"] = r.expected_rate;
    rep["excess_slope"] = r.excess_slope;
  } else if (experiment == "stationarity") {
    const efm::StationarityReport r =
        efm::stationarity_check(cfg, rates, order, n_paths, t_a, t_b, 0.01, threads);
    rep["t_a"] = t_a;
    rep["t_b"] = t_b;
    rep["corrected_level"] = r.corrected_level;
    rep["any_rejected"] = r.any_rejected;
    json words = json::array();
    for (const auto& w : r.words) {
      json jw;
      jw["word"] = w.word.str();
      jw["ks_statistic"] = w.statistic;
      jw["p_value"] = w.p_value;
      jw["rejected"] = w.rejected;
      words.push_back(jw);
    }
    rep["words"] = words;
  } else if (experiment == "l2bound") {
    const efm::L2BoundReport r = efm::l2_bound_check(cfg, rates, order, n_paths, threads);
    rep["times"] = r.times;
    rep["mean_sq_norm"] = r.mean_sq_norm;
    rep["empirical_sup"] = r.empirical_sup;
    rep["bound"] = r.bound;
    rep["c_lambda"] = r.c_lambda;
    rep["within_bound"] = r.empirical_sup <= r.bound;
  } else if (experiment == "appendixc") {
    efm::PiecewisePath path = efm::simulate_bm(cfg);
    path.time_augmented = true;
    const efm::IdentityCheck chk =
        efm::appendix_c_identity_check(rates, k_identity, path, std::max(order, k_identity + 1));
    json jk;
    jk["k"] = k_identity;
    jk["lhs"] = chk.lhs;
    jk["rhs"] = chk.rhs;
    jk["residual"] = chk.residual;
    rep["identity"] = jk;
  } else {
    throw std::invalid_argument("unknown lab experiment '" + experiment + "'");
  }

  emit(ctx, "report.json", rep.dump(2) + "\n");
  return 0;
}

// --- regress ---------------------------------------------------------------

int run_regress(RunContext& ctx, const std::string& signal_file, const std::string& driver_file,
                const std::string& model_text, int order, const std::string& lambda_text,
                const std::string& alpha_text, const std::string& omega_text,
                const std::string& split_text, std::uint64_t seed, int threads) {
  const efm::PiecewisePath signal = load_path(ctx, signal_file, false);
  const efm::PiecewisePath driver = load_path(ctx, driver_file, false);
  if (signal.dim != 1 || driver.dim != 1)
    throw std::invalid_argument("regress: univariate signal and driver expected");
  if (signal.samples() != driver.samples())
    throw std::invalid_argument("regress: signal and driver sample counts differ");

  efm::RegressData data;
  data.times = driver.times;
  data.w = driver.values;
  data.y = signal.values;
  data.dt = driver.times[1] - driver.times[0];

  efm::FeatureModel model;
  if (model_text == "sig_bm")
    model = efm::FeatureModel::sig_bm;
  else if (model_text == "sig_ou")
    model = efm::FeatureModel::sig_ou;
  else if (model_text == "efm_sig")
    model = efm::FeatureModel::efm_sig;
  else
    throw std::invalid_argument("--model must be one of sig_bm, sig_ou, efm_sig");

  const std::vector<double> splits = parse_list(split_text, "--split");
  if (splits.size() != 3) throw std::invalid_argument("--split: expected train,select,end");
  const std::vector<double> alpha_grid = parse_list(alpha_text, "--alpha-grid");
  const std::vector<double> omega_grid = parse_list(omega_text, "--omega-grid");

  std::vector<std::vector<double>> lambda_candidates;
  if (model == efm::FeatureModel::sig_bm) {
    lambda_candidates = {{}};
  } else {
    const std::vector<double> grid = parse_lambda(lambda_text);
    if (model == efm::FeatureModel::sig_ou)
      for (double l : grid) lambda_candidates.push_back({l});
    else
      for (double l0 : grid)
        for (double l1 : grid) lambda_candidates.push_back({l0, l1});
  }

  const efm::ModelMetrics metrics =
      efm::fit_signature_model(model, data, order, lambda_candidates, alpha_grid, omega_grid,
                               splits[0], splits[1], seed, threads);

  std::ostringstream csv;
  efm::write_coefficients_csv(csv, metrics.ell);
  emit(ctx, "ell.csv", csv.str());

  json j;
  j["model"] = model_text;
  j["mse_train"] = metrics.mse_train;
  j["mse_select"] = metrics.mse_select;
  j["mse_test"] = metrics.mse_test;
  j["alpha"] = metrics.alpha;
  j["omega"] = metrics.omega;
  j["lambda"] = metrics.lambda;
  j["split"] = splits;
  if (ctx.out_dir) {
    auto f = open_output(ctx.out_path("metrics.json"));
    f << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

// --- predict ---------------------------------------------------------------

int run_predict(RunContext& ctx, const std::string& ell_file, const std::string& input,
                const std::string& lambda_text, int order, double horizon, bool time_augment) {
  const efm::PiecewisePath path = load_path(ctx, input, time_augment);
  const std::vector<double> lambda = parse_lambda(lambda_text);
  if (static_cast<int>(lambda.size()) != path.effective_dim())
    throw std::invalid_argument("--lambda arity does not match the path dimension");
  const efm::Rates rates(lambda, order);
  const efm::TensorSeq ell = load_functional(ctx, ell_file, rates.alphabet(), order);
  const efm::SigState state = efm::signature_of_path(rates, path, order);
  const efm::Prediction p = efm::predict(rates, ell, state, horizon);
  json j;
  j["t"] = state.t;
  j["horizon"] = horizon;
  j["mean"] = p.mean;
  j["variance"] = p.variance;
  j["variance_clipped"] = p.variance_clipped;
  emit(ctx, "prediction.json", j.dump(2) + "\n");
  return 0;
}

// --- charfunc ----------------------------------------------------------------

int run_charfunc(RunContext& ctx, const std::string& ell_file, const std::string& lambda_text,
                 int order, double T, double dt, const std::string& trajectory_file) {
  const std::vector<double> lambda = parse_lambda(lambda_text);
  const efm::Rates rates(lambda, order);
  const efm::TensorSeq ell = load_functional(ctx, ell_file, rates.alphabet(), order);
  const efm::CharFuncSolution sol = efm::solve_charfunc(rates, ell, T, dt, order);

  if (!trajectory_file.empty()) {
    auto f = ctx.out_dir ? open_output(ctx.out_path(trajectory_file))
                         : open_output(fs::path(trajectory_file));
    f << "t,phi_re,phi_im,psi0_re,psi0_im\n";
    for (std::size_t i = 0; i < sol.times.size(); ++i)
      f << efm::format_value(sol.times[i]) << ',' << efm::format_value(sol.phi_traj[i].real())
        << ',' << efm::format_value(sol.phi_traj[i].imag()) << ','
        << efm::format_value(sol.psi0[i].real()) << ',' << efm::format_value(sol.psi0[i].imag())
        << '\n';
  }

  json j;
  j["T"] = T;
  j["dt"] = dt;
  j["order"] = order;
  j["phi_re"] = sol.phi.real();
  j["phi_im"] = sol.phi.imag();
  j["stationary"] = sol.stationary;
  if (sol.stationary) j["stationary_time"] = sol.stationary_time;
  emit(ctx, "charfunc.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EFM-signature toolkit"};
  app.require_subcommand(1);

  RunContext ctx;
  for (int i = 0; i < argc; ++i) ctx.argv.push_back(argv[i]);

  std::string out_dir;

  // sig
  auto* sig = app.add_subcommand("sig", "EFM-signature of a piecewise-linear path");
  std::string sig_input, sig_lambda, sig_from = "flat-past";
  int sig_order = 3;
  bool sig_augment = false;
  sig->add_option("--input", sig_input, "path CSV (t,x1,...,xd)")->required();
  sig->add_option("--lambda", sig_lambda, "comma-separated rates; time rate first when augmented")
      ->required();
  sig->add_option("--order", sig_order, "truncation order")->check(CLI::Range(0, 20));
  sig->add_flag("--time-augment", sig_augment, "prepend the clock as letter 0");
  sig->add_option("--from", sig_from, "start | flat-past")
      ->check(CLI::IsMember({"start", "flat-past"}));
  sig->add_option("--out", out_dir, "output directory");

  // expected
  auto* expected = app.add_subcommand("expected", "expected EFM-signature of Brownian motion");
  std::string exp_lambda;
  int exp_dim = 1, exp_order = 4;
  double exp_horizon = 1.0;
  bool exp_stationary = false;
  expected->add_option("--lambda", exp_lambda, "rates, time rate first")->required();
  expected->add_option("--dim", exp_dim, "spatial dimension")->check(CLI::Range(1, 8));
  expected->add_option("--order", exp_order, "truncation order")->check(CLI::Range(0, 20));
  auto* hopt = expected->add_option("--horizon", exp_horizon, "finite horizon");
  auto* sopt = expected->add_flag("--stationary", exp_stationary, "stationary expected signature");
  hopt->excludes(sopt);
  expected->add_option("--out", out_dir, "output directory");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "simulate a driver path");
  std::string sim_kind;
  efm::SimConfig sim_cfg;
  double sim_mu = 1.0;
  int sim_p = 1;
  bool sim_stationary = false;
  simulate->add_option("kind", sim_kind, "bm | ou | langevin")
      ->required()
      ->check(CLI::IsMember({"bm", "ou", "langevin"}));
  simulate->add_option("--seed", sim_cfg.seed, "RNG seed");
  simulate->add_option("--dt", sim_cfg.dt, "time step")->check(CLI::PositiveNumber);
  simulate->add_option("--t0", sim_cfg.t0, "window start");
  simulate->add_option("--t1", sim_cfg.t1, "window end");
  simulate->add_option("--burn-in", sim_cfg.burn_in, "flat-past burn-in length");
  simulate->add_option("--dim", sim_cfg.d, "spatial dimension (bm only)")->check(CLI::Range(1, 8));
  simulate->add_option("--mu", sim_mu, "mean-reversion / drift strength");
  simulate->add_option("--p", sim_p, "odd drift power (langevin)");
  simulate->add_flag("--from-stationary", sim_stationary, "stationary initial condition (ou)");
  simulate->add_option("--out", out_dir, "output directory");

  // lab
  auto* lab = app.add_subcommand("lab", "Monte Carlo experiments");
  std::string lab_kind, lab_lambda;
  efm::SimConfig lab_cfg;
  lab_cfg.t1 = 5.0;
  int lab_order = 3, lab_threads = 0, lab_k = 1;
  std::size_t lab_paths = 1000;
  double lab_horizon = 5.0, lab_ta = 0.0, lab_tb = 0.0;
  lab->add_option("kind", lab_kind, "moments | ergodic | stationarity | l2bound | appendixc")
      ->required()
      ->check(CLI::IsMember({"moments", "ergodic", "stationarity", "l2bound", "appendixc"}));
  lab->add_option("--lambda", lab_lambda, "rates, time rate first")->required();
  lab->add_option("--order", lab_order, "truncation order")->check(CLI::Range(0, 12));
  lab->add_option("--seed", lab_cfg.seed, "RNG seed");
  lab->add_option("--dt", lab_cfg.dt, "time step")->check(CLI::PositiveNumber);
  lab->add_option("--t1", lab_cfg.t1, "window end");
  lab->add_option("--burn-in", lab_cfg.burn_in, "burn-in length");
  lab->add_option("--paths", lab_paths, "number of Monte Carlo paths");
  lab->add_option("--threads", lab_threads, "worker threads (or EFMSIG_THREADS)");
  lab->add_option("--horizon", lab_horizon, "horizon (moments)");
  lab->add_option("--ta", lab_ta, "first sample time (stationarity)");
  lab->add_option("--tb", lab_tb, "second sample time (stationarity)");
  lab->add_option("--k", lab_k, "identity index k >= 1 (appendixc)")->check(CLI::Range(1, 6));
  lab->add_option("--out", out_dir, "output directory");

  // regress
  auto* regress = app.add_subcommand("regress", "signature regression on a signal/driver pair");
  std::string rg_signal, rg_driver, rg_model = "efm_sig", rg_lambda = "1,3,10";
  std::string rg_alpha = "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1", rg_omega = "0,0.5,1",
              rg_split = "1,2,4";
  int rg_order = 6, rg_threads = 0;
  std::uint64_t rg_seed = 1;
  regress->add_option("--signal", rg_signal, "target CSV (t,x1)")->required();
  regress->add_option("--driver", rg_driver, "driver CSV (t,x1)")->required();
  regress->add_option("--model", rg_model, "sig_bm | sig_ou | efm_sig")
      ->check(CLI::IsMember({"sig_bm", "sig_ou", "efm_sig"}));
  regress->add_option("--order", rg_order, "truncation order")->check(CLI::Range(1, 8));
  regress->add_option("--lambda", rg_lambda, "rate grid (per component)");
  regress->add_option("--alpha-grid", rg_alpha, "elastic-net alpha grid");
  regress->add_option("--omega-grid", rg_omega, "elastic-net omega grid");
  regress->add_option("--split", rg_split, "train,select,end times");
  regress->add_option("--seed", rg_seed, "seed for auxiliary draws");
  regress->add_option("--threads", rg_threads, "worker threads (or EFMSIG_THREADS)");
  regress->add_option("--out", out_dir, "output directory");

  // predict
  auto* predict = app.add_subcommand("predict", "conditional mean/variance of <sig, ell>");
  std::string pr_ell, pr_input, pr_lambda;
  int pr_order = 4;
  double pr_horizon = 1.0;
  bool pr_augment = false;
  predict->add_option("--ell", pr_ell, "functional CSV (word,value)")->required();
  predict->add_option("--input", pr_input, "path CSV")->required();
  predict->add_option("--lambda", pr_lambda, "rates")->required();
  predict->add_option("--order", pr_order, "truncation order")->check(CLI::Range(0, 12));
  predict->add_option("--horizon", pr_horizon, "prediction horizon")->check(CLI::NonNegativeNumber);
  predict->add_flag("--time-augment", pr_augment, "prepend the clock as letter 0");
  predict->add_option("--out", out_dir, "output directory");

  // charfunc
  auto* charfunc = app.add_subcommand("charfunc", "characteristic function via the Riccati ODE");
  std::string cf_ell, cf_lambda, cf_traj;
  int cf_order = 6;
  double cf_T = 8.0, cf_dt = 1e-3;
  charfunc->add_option("--ell", cf_ell, "functional CSV (word,value)")->required();
  charfunc->add_option("--lambda", cf_lambda, "rates, time rate first")->required();
  charfunc->add_option("--order", cf_order, "truncation order")->check(CLI::Range(0, 12));
  charfunc->add_option("--T", cf_T, "horizon")->check(CLI::NonNegativeNumber);
  charfunc->add_option("--dt", cf_dt, "scheme step")->check(CLI::PositiveNumber);
  charfunc->add_option("--trajectory", cf_traj, "write the phi trajectory CSV here");
  charfunc->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  int rc = 0;
  try {
    if (!out_dir.empty()) ctx.out_dir = out_dir;
    if (app.got_subcommand(sig)) {
      ctx.command = "sig";
      rc = run_sig(ctx, sig_input, sig_lambda, sig_order, sig_augment, sig_from);
    } else if (app.got_subcommand(expected)) {
      ctx.command = "expected";
      if (!exp_stationary && hopt->count() == 0)
        throw std::invalid_argument("expected: give --horizon or --stationary");
      rc = run_expected(ctx, exp_lambda, exp_dim, exp_order, exp_horizon, exp_stationary);
    } else if (app.got_subcommand(simulate)) {
      ctx.command = "simulate " + sim_kind;
      rc = run_simulate(ctx, sim_kind, sim_cfg, sim_mu, sim_p, sim_stationary);
    } else if (app.got_subcommand(lab)) {
      ctx.command = "lab " + lab_kind;
      ctx.extra["seed"] = lab_cfg.seed;
      rc = run_lab(ctx, lab_kind, lab_cfg, lab_lambda, lab_order, lab_paths,
                   resolve_threads(lab_threads), lab_horizon, lab_ta, lab_tb, lab_k);
    } else if (app.got_subcommand(regress)) {
      ctx.command = "regress";
      rc = run_regress(ctx, rg_signal, rg_driver, rg_model, rg_order, rg_lambda, rg_alpha,
                       rg_omega, rg_split, rg_seed, resolve_threads(rg_threads));
    } else if (app.got_subcommand(predict)) {
      ctx.command = "predict";
      rc = run_predict(ctx, pr_ell, pr_input, pr_lambda, pr_order, pr_horizon, pr_augment);
    } else if (app.got_subcommand(charfunc)) {
      ctx.command = "charfunc";
      rc = run_charfunc(ctx, cf_ell, cf_lambda, cf_order, cf_T, cf_dt, cf_traj);
    }
    ctx.write_manifest();
  } catch (const efm::numerical_error& e) {
    std::cerr << "efmsig: numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "efmsig: invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "efmsig: invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "efmsig: invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "efmsig: i/o error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
