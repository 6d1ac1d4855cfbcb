// Command-line front end: simulate, fit, predict, evaluate, baseline,
// benchmark, preprocess. Every error exits nonzero with a single
// "E_CODE: message" line on stderr; fit exits 2 when the iteration budget
// ran out (the best-effort model is still written).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdegp/baselines.hpp"
#include "sdegp/errors.hpp"
#include "sdegp/evaluation.hpp"
#include "sdegp/fit.hpp"
#include "sdegp/io.hpp"
#include "sdegp/predict.hpp"
#include "sdegp/simulator.hpp"

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string> kModelIds = {"M1", "M2", "M3", "M4", "M5", "M6"};

sdegp::PosteriorCurve curve_from_point_estimates(const Eigen::VectorXd& grid,
                                                 const Eigen::VectorXd& f_hat,
                                                 const Eigen::VectorXd& g_hat) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  sdegp::PosteriorCurve c;
  c.grid = grid;
  c.f_mean = f_hat;
  c.f_var = Eigen::VectorXd::Constant(grid.size(), nan);
  c.s_mean = g_hat.array().log();
  c.s_var = c.f_var;
  c.g_median = g_hat;
  c.g_lower = g_hat;
  c.g_upper = g_hat;
  c.g_mean = g_hat;
  c.ci_level = 0.0;
  return c;
}

struct SimulateArgs {
  std::string model;
  long long n = 10001;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  double x0 = 0.0;
  bool x0_set = false;
  long long burn_in = 0;
  std::string out;
};

void run_simulate(const SimulateArgs& a) {
  const sdegp::ModelSpec model = sdegp::builtin_model(a.model);
  sdegp::SimConfig cfg;
  cfg.n_samples = a.n;
  cfg.dt = a.dt;
  cfg.x0 = a.x0_set ? a.x0 : sdegp::builtin_default_x0(a.model);
  cfg.seed = a.seed;
  cfg.burn_in = a.burn_in;
  sdegp::SimStats stats;
  const sdegp::Dataset data = sdegp::simulate(model, cfg, &stats);
  sdegp::write_series_csv(a.out, data);
  std::cout << "model = " << a.model << "\n"
            << "samples = " << data.samples.size() << "\n"
            << "clipped = " << stats.clipped << "\n"
            << "out = " << a.out << "\n";
}

struct FitArgs {
  std::string in;
  std::optional<double> dt;
  std::string config;
  std::string out;
  std::optional<long long> m, restarts, max_em, threads;
  std::optional<std::uint64_t> seed;
};

int run_fit(const FitArgs& a) {
  sdegp::FitConfig cfg;
  if (!a.config.empty()) cfg = sdegp::parse_fit_config(a.config);
  if (a.m) cfg.m = static_cast<int>(*a.m);
  if (a.restarts) cfg.restarts = static_cast<int>(*a.restarts);
  if (a.max_em) cfg.max_em_iterations = static_cast<int>(*a.max_em);
  if (a.threads) cfg.threads = static_cast<int>(*a.threads);
  if (a.seed) cfg.seed = *a.seed;

  const sdegp::Dataset data = sdegp::load_series(a.in, a.dt);
  const sdegp::FitResult result = sdegp::fit(data, cfg);
  sdegp::save_model(a.out, result, data.dt, data.increments.size());
  std::cout << "L = " << fmt_g(result.lower_bound_value) << "\n"
            << "L_prime = " << fmt_g(result.modified_lower_bound_value) << "\n"
            << "iterations = " << result.em_iterations << "\n"
            << "converged = " << (result.converged ? "true" : "false") << "\n"
            << "out = " << a.out << "\n";
  return result.converged ? 0 : 2;
}

struct PredictArgs {
  std::string model;
  std::optional<double> grid_min, grid_max;
  long long grid_n = 200;
  double ci = 0.95;
  std::string out;
};

void run_predict(const PredictArgs& a) {
  const sdegp::ModelDocument doc = sdegp::load_model(a.model);
  const double lo = a.grid_min ? *a.grid_min : doc.data_min;
  const double hi = a.grid_max ? *a.grid_max : doc.data_max;
  if (!(lo < hi))
    throw sdegp::UsageError("predict: grid-min must be below grid-max");
  const Eigen::VectorXd grid = sdegp::linspace(lo, hi, a.grid_n);
  const sdegp::PosteriorCurve curve = sdegp::predict_curve(doc.state, grid, a.ci);
  sdegp::write_curves_csv(a.out, curve);
  std::cout << "grid = [" << fmt_g(lo) << ", " << fmt_g(hi) << "] x "
            << a.grid_n << "\n"
            << "out = " << a.out << "\n";
}

struct EvaluateArgs {
  std::string truth;
  std::string curves;
  std::string series;
  std::optional<double> dt;
  std::string out;
};

void run_evaluate(const EvaluateArgs& a) {
  const sdegp::ModelSpec model = sdegp::builtin_model(a.truth);
  const sdegp::PosteriorCurve curve = sdegp::read_curves_csv(a.curves);
  const sdegp::Dataset data = sdegp::load_series(a.series, a.dt);
  const sdegp::KdeResult kde = sdegp::kde_density(data.samples, curve.grid);
  const double drift_err =
      sdegp::integrated_error(model.drift, curve.grid, curve.f_mean, kde.density);
  const double diff_err = sdegp::integrated_error(model.diffusion, curve.grid,
                                                  curve.g_median, kde.density);
  std::ofstream out(a.out);
  if (!out) throw sdegp::IngestionError("cannot write error file: " + a.out);
  out << "coefficient,error\n"
      << "drift," << fmt_g(drift_err) << "\n"
      << "diffusion," << fmt_g(diff_err) << "\n";
  std::cout << "drift_error = " << fmt_g(drift_err) << "\n"
            << "diffusion_error = " << fmt_g(diff_err) << "\n"
            << "out = " << a.out << "\n";
}

struct BaselineArgs {
  std::string in;
  std::optional<double> dt;
  std::string method;
  long long bins = 50;
  double bandwidth = 0.0;
  long long grid_n = 512;
  std::string out;
};

void run_baseline(const BaselineArgs& a) {
  const sdegp::Dataset data = sdegp::load_series(a.in, a.dt);
  sdegp::PosteriorCurve curve;
  if (a.method == "binning") {
    const sdegp::BinnedEstimate est =
        sdegp::binning_estimator(data, static_cast<int>(a.bins));
    curve = curve_from_point_estimates(est.centers, est.f_hat, est.g_hat);
  } else {
    const Eigen::VectorXd grid = sdegp::linspace(data.min(), data.max(), a.grid_n);
    const sdegp::CurveEstimate est = sdegp::nw_estimator(data, a.bandwidth, grid);
    curve = curve_from_point_estimates(est.grid, est.f_hat, est.g_hat);
  }
  sdegp::write_curves_csv(a.out, curve);
  std::cout << "method = " << a.method << "\n"
            << "out = " << a.out << "\n";
}

struct BenchmarkArgs {
  std::vector<std::string> models = {"M1"};
  std::vector<std::string> estimators = {"sgp", "binning", "nw"};
  long long replicates = 10;
  std::uint64_t seed = 0;
  long long n = 10001;
  double dt = 1e-3;
  long long burn_in = 0;
  std::string config;
  long long bins = 50;
  double bandwidth = 0.0;
  long long grid_n = 512;
  long long threads = 0;
  std::string out;
};

void run_benchmark(const BenchmarkArgs& a) {
  sdegp::BenchmarkConfig cfg;
  cfg.models = a.models;
  cfg.estimators = a.estimators;
  cfg.replicates = static_cast<int>(a.replicates);
  cfg.seed = a.seed;
  cfg.n_samples = a.n;
  cfg.dt = a.dt;
  cfg.burn_in = a.burn_in;
  if (!a.config.empty()) cfg.fit = sdegp::parse_fit_config(a.config);
  cfg.binning_bins = static_cast<int>(a.bins);
  cfg.nw_bandwidth = a.bandwidth;
  cfg.grid_points = static_cast<int>(a.grid_n);
  cfg.threads = static_cast<int>(a.threads);

  const sdegp::ErrorTable table = sdegp::benchmark(cfg);
  sdegp::write_error_table_csv(a.out, table);
  for (const std::string& model : cfg.models)
    for (const std::string& estimator : cfg.estimators)
      for (const char* coeff : {"drift", "diffusion"})
        std::cout << model << " " << estimator << " " << coeff
                  << ": mean_error = "
                  << fmt_g(table.mean_error(model, estimator, coeff)) << " ("
                  << table.success_count(model, estimator, coeff) << "/"
                  << a.replicates << " ok)\n";
  std::cout << "out = " << a.out << "\n";
}

struct PreprocessArgs {
  std::string in;
  bool log_returns = false;
  std::string out;
};

void run_preprocess(const PreprocessArgs& a) {
  const Eigen::VectorXd prices = sdegp::load_column(a.in);
  const Eigen::VectorXd returns = sdegp::log_returns(prices);
  sdegp::write_column_csv(a.out, returns);
  std::cout << "returns = " << returns.size() << "\n"
            << "out = " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric drift/diffusion estimation for scalar SDEs"};
  app.require_subcommand(1);
  int exit_code = 0;

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "Sample a built-in SDE");
  c_sim->add_option("--model", sim.model, "Built-in model id")
      ->required()
      ->check(CLI::IsMember(kModelIds));
  c_sim->add_option("--n", sim.n, "Series length (samples)")
      ->check(CLI::PositiveNumber);
  c_sim->add_option("--dt", sim.dt, "Sampling interval")->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  CLI::Option* x0_opt = c_sim->add_option("--x0", sim.x0, "Initial state");
  c_sim->add_option("--burn-in", sim.burn_in, "Unrecorded leading steps")
      ->check(CLI::NonNegativeNumber);
  c_sim->add_option("--out", sim.out, "Output series CSV")->required();
  c_sim->callback([&] {
    sim.x0_set = x0_opt->count() > 0;
    run_simulate(sim);
  });

  FitArgs fita;
  CLI::App* c_fit = app.add_subcommand("fit", "Fit drift and diffusion");
  c_fit->add_option("--in", fita.in, "Input series CSV")->required();
  c_fit->add_option("--dt", fita.dt, "Spacing for single-column series");
  c_fit->add_option("--config", fita.config, "key = value fit configuration");
  c_fit->add_option("--out", fita.out, "Output model file")->required();
  c_fit->add_option("--m", fita.m, "Pseudo-input count override");
  c_fit->add_option("--restarts", fita.restarts, "Restart count override");
  c_fit->add_option("--max-em-iterations", fita.max_em, "EM budget override");
  c_fit->add_option("--threads", fita.threads, "Worker threads override");
  c_fit->add_option("--seed", fita.seed, "Seed override");
  c_fit->callback([&] { exit_code = run_fit(fita); });

  PredictArgs pred;
  CLI::App* c_pred = app.add_subcommand("predict", "Evaluate posterior curves");
  c_pred->add_option("--model", pred.model, "Fitted model file")->required();
  c_pred->add_option("--grid-min", pred.grid_min, "Grid lower end");
  c_pred->add_option("--grid-max", pred.grid_max, "Grid upper end");
  c_pred->add_option("--grid-n", pred.grid_n, "Grid size")
      ->check(CLI::Range(2LL, 1000000LL));
  c_pred->add_option("--ci", pred.ci, "Central interval level for g")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));
  c_pred->add_option("--out", pred.out, "Output curves CSV")->required();
  c_pred->callback([&] { run_predict(pred); });

  EvaluateArgs eva;
  CLI::App* c_eval = app.add_subcommand(
      "evaluate", "Score curves against a built-in model's truth");
  c_eval->add_option("--truth", eva.truth, "Built-in model id")
      ->required()
      ->check(CLI::IsMember(kModelIds));
  c_eval->add_option("--curves", eva.curves, "Curves CSV to score")->required();
  c_eval->add_option("--series", eva.series, "Series for the density weight")
      ->required();
  c_eval->add_option("--dt", eva.dt, "Spacing for single-column series");
  c_eval->add_option("--out", eva.out, "Output errors CSV")->required();
  c_eval->callback([&] { run_evaluate(eva); });

  BaselineArgs base;
  CLI::App* c_base = app.add_subcommand("baseline", "Binning or kernel baseline");
  c_base->add_option("--in", base.in, "Input series CSV")->required();
  c_base->add_option("--dt", base.dt, "Spacing for single-column series");
  c_base->add_option("--method", base.method, "binning or nw")
      ->required()
      ->check(CLI::IsMember({"binning", "nw"}));
  c_base->add_option("--bins", base.bins, "Bin count (binning)")
      ->check(CLI::PositiveNumber);
  c_base->add_option("--bandwidth", base.bandwidth,
                     "Kernel bandwidth (nw); <= 0 selects Silverman's rule");
  c_base->add_option("--grid-n", base.grid_n, "Grid size (nw)")
      ->check(CLI::Range(2LL, 1000000LL));
  c_base->add_option("--out", base.out, "Output curves CSV")->required();
  c_base->callback([&] { run_baseline(base); });

  BenchmarkArgs bench;
  CLI::App* c_bench = app.add_subcommand(
      "benchmark", "Replicated simulate/fit/score comparison");
  c_bench->add_option("--models", bench.models, "Comma-separated model ids")
      ->delimiter(',')
      ->check(CLI::IsMember(kModelIds));
  c_bench
      ->add_option("--estimators", bench.estimators,
                   "Comma-separated estimators (sgp, binning, nw, truth)")
      ->delimiter(',');
  c_bench->add_option("--replicates", bench.replicates, "Replicates per model")
      ->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", bench.seed, "Base seed");
  c_bench->add_option("--n", bench.n, "Series length per replicate")
      ->check(CLI::PositiveNumber);
  c_bench->add_option("--dt", bench.dt, "Sampling interval")
      ->check(CLI::PositiveNumber);
  c_bench->add_option("--burn-in", bench.burn_in, "Unrecorded leading steps")
      ->check(CLI::NonNegativeNumber);
  c_bench->add_option("--config", bench.config, "Fit configuration file");
  c_bench->add_option("--bins", bench.bins, "Binning baseline bin count")
      ->check(CLI::PositiveNumber);
  c_bench->add_option("--bandwidth", bench.bandwidth, "NW baseline bandwidth");
  c_bench->add_option("--grid-n", bench.grid_n, "Evaluation grid size")
      ->check(CLI::Range(2LL, 1000000LL));
  c_bench->add_option("--threads", bench.threads, "Worker threads");
  c_bench->add_option("--out", bench.out, "Output error table CSV")->required();
  c_bench->callback([&] { run_benchmark(bench); });

  PreprocessArgs prep;
  CLI::App* c_prep = app.add_subcommand("preprocess", "Price series utilities");
  c_prep->add_option("--in", prep.in, "Input price CSV")->required();
  c_prep->add_flag("--log-returns", prep.log_returns,
                   "Emit log(p[i+1]/p[i]) as the series")
      ->required();
  c_prep->add_option("--out", prep.out, "Output series CSV")->required();
  c_prep->callback([&] { run_preprocess(prep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "E_USAGE: " << e.what() << "\n";
    return 1;
  } catch (const sdegp::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
