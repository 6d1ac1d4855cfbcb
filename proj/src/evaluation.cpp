#include "sdegp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdegp/baselines.hpp"
#include "sdegp/errors.hpp"
#include "sdegp/parallel.hpp"
#include "sdegp/predict.hpp"
#include "sdegp/simulator.hpp"

namespace sdegp {

double silverman_bandwidth(const Eigen::VectorXd& samples) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw ConfigError("silverman_bandwidth: need at least 2 samples");

  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() /
                              static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw ConfigError("silverman_bandwidth: constant sample");

  Eigen::VectorXd sorted = samples;
  std::sort(sorted.data(), sorted.data() + n);
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeResult kde_density(const Eigen::VectorXd& samples,
                      const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw UsageError("kde_density: empty grid");
  KdeResult res;
  res.bandwidth = silverman_bandwidth(samples);
  res.density.resize(grid.size());
  const double h = res.bandwidth;
  const double norm =
      1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * M_PI));
  const Eigen::ArrayXd xs = samples.array();
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    res.density[j] = norm * (-0.5 * ((xs - grid[j]) / h).square()).exp().sum();
  return res;
}

double integrated_error(const std::function<double(double)>& truth,
                        const Eigen::VectorXd& grid,
                        const Eigen::VectorXd& estimate,
                        const Eigen::VectorXd& density) {
  if (!truth) throw UsageError("integrated_error: missing truth function");
  if (grid.size() != estimate.size() || grid.size() != density.size())
    throw UsageError("integrated_error: grid/estimate/density size mismatch");
  if (grid.size() < 2) throw UsageError("integrated_error: need at least 2 grid points");

  const double threshold = 1e-10 * density.maxCoeff();
  Eigen::VectorXd integrand = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!(density[i] > threshold)) continue;
    if (std::isnan(estimate[i])) continue;  // undefined estimate: no support
    integrand[i] = std::abs(truth(grid[i]) - estimate[i]) * density[i];
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
    total += 0.5 * (integrand[i] + integrand[i + 1]) * (grid[i + 1] - grid[i]);
  return total;
}

double ErrorTable::mean_error(const std::string& model,
                              const std::string& estimator,
                              const std::string& coefficient) const {
  double sum = 0.0;
  int count = 0;
  for (const ErrorRecord& r : records) {
    if (r.model != model || r.estimator != estimator ||
        r.coefficient != coefficient || r.failed)
      continue;
    sum += r.error;
    ++count;
  }
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

int ErrorTable::success_count(const std::string& model,
                              const std::string& estimator,
                              const std::string& coefficient) const {
  int count = 0;
  for (const ErrorRecord& r : records)
    if (r.model == model && r.estimator == estimator &&
        r.coefficient == coefficient && !r.failed)
      ++count;
  return count;
}

namespace {

void validate_benchmark_config(const BenchmarkConfig& cfg) {
  if (cfg.models.empty()) throw ConfigError("benchmark: no models given");
  if (cfg.estimators.empty()) throw ConfigError("benchmark: no estimators given");
  if (cfg.replicates < 1) throw ConfigError("benchmark: replicates must be at least 1");
  if (cfg.grid_points < 2) throw ConfigError("benchmark: grid_points must be at least 2");
  for (const std::string& e : cfg.estimators)
    if (e != "sgp" && e != "binning" && e != "nw" && e != "truth")
      throw ConfigError("benchmark: unknown estimator '" + e + "'");
  for (const std::string& m : cfg.models) builtin_model(m);  // throws on bad id
}

struct ReplicateResult {
  // one record per (estimator, coefficient), in cfg.estimators order
  std::vector<ErrorRecord> records;
  bool has_fit = false;
  FitResult fit_result;
};

ReplicateResult run_replicate(const BenchmarkConfig& cfg,
                              const std::string& model_id, int model_index,
                              int replicate) {
  ReplicateResult out;
  const ModelSpec model = builtin_model(model_id);
  const std::uint64_t task = static_cast<std::uint64_t>(model_index) * 1000000ull +
                             static_cast<std::uint64_t>(replicate);
  const Rng seeder(cfg.seed);

  const auto record_failure = [&](const std::string& estimator,
                                  const std::string& message) {
    for (const char* coeff : {"drift", "diffusion"})
      out.records.push_back({model_id, estimator, coeff, replicate,
                             std::numeric_limits<double>::quiet_NaN(), true,
                             message});
  };

  Dataset data;
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  try {
    SimConfig sim;
    sim.n_samples = cfg.n_samples;
    sim.dt = cfg.dt;
    sim.x0 = builtin_default_x0(model_id);
    sim.seed = seeder.derive_seed(2 * task);
    sim.burn_in = cfg.burn_in;
    data = simulate(model, sim);

    const double h = silverman_bandwidth(data.samples);
    grid = linspace(data.min() - 3.0 * h, data.max() + 3.0 * h, cfg.grid_points);
    density = kde_density(data.samples, grid).density;
  } catch (const Error& e) {
    for (const std::string& estimator : cfg.estimators)
      record_failure(estimator, std::string("simulation: ") + e.what());
    return out;
  }

  for (const std::string& estimator : cfg.estimators) {
    Eigen::VectorXd f_hat, g_hat;
    try {
      if (estimator == "sgp") {
        FitConfig fc = cfg.fit;
        fc.seed = seeder.derive_seed(2 * task + 1);
        out.fit_result = fit(data, fc);
        out.has_fit = true;
        const PosteriorCurve curve = predict_curve(out.fit_result.state, grid);
        f_hat = curve.f_mean;
        g_hat = curve.g_median;
      } else if (estimator == "binning") {
        const BinnedEstimate bins = binning_estimator(data, cfg.binning_bins);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        f_hat.setConstant(grid.size(), nan);
        g_hat.setConstant(grid.size(), nan);
        for (Eigen::Index j = 0; j < grid.size(); ++j) {
          if (grid[j] < bins.edges[0] || grid[j] > bins.edges[bins.edges.size() - 1])
            continue;
          auto b = static_cast<Eigen::Index>(
              (grid[j] - bins.edges[0]) /
              (bins.edges[1] - bins.edges[0]));
          if (b >= bins.f_hat.size()) b = bins.f_hat.size() - 1;
          if (b < 0) b = 0;
          f_hat[j] = bins.f_hat[b];
          g_hat[j] = bins.g_hat[b];
        }
      } else if (estimator == "nw") {
        const CurveEstimate nw = nw_estimator(data, cfg.nw_bandwidth, grid);
        f_hat = nw.f_hat;
        g_hat = nw.g_hat;
      } else {  // truth: oracle consistency check
        f_hat.resize(grid.size());
        g_hat.resize(grid.size());
        for (Eigen::Index j = 0; j < grid.size(); ++j) {
          f_hat[j] = model.drift(grid[j]);
          g_hat[j] = model.diffusion(grid[j]);
        }
      }
      const double err_f = integrated_error(model.drift, grid, f_hat, density);
      const double err_g = integrated_error(model.diffusion, grid, g_hat, density);
      out.records.push_back({model_id, estimator, "drift", replicate, err_f,
                             false, ""});
      out.records.push_back({model_id, estimator, "diffusion", replicate, err_g,
                             false, ""});
    } catch (const Error& e) {
      record_failure(estimator, e.what());
    }
  }
  return out;
}

}  // namespace

ErrorTable benchmark(const BenchmarkConfig& cfg, const FitObserver& on_fit) {
  validate_benchmark_config(cfg);

  struct Task {
    std::string model;
    int model_index;
    int replicate;
  };
  std::vector<Task> tasks;
  for (int mi = 0; mi < static_cast<int>(cfg.models.size()); ++mi)
    for (int rep = 0; rep < cfg.replicates; ++rep)
      tasks.push_back({cfg.models[mi], mi, rep});

  std::vector<ReplicateResult> results(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), resolve_threads(cfg.threads),
               [&](int t) {
                 results[t] = run_replicate(cfg, tasks[t].model,
                                            tasks[t].model_index,
                                            tasks[t].replicate);
               });

  ErrorTable table;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (results[t].has_fit && on_fit)
      on_fit(tasks[t].model, tasks[t].replicate, results[t].fit_result);
    for (ErrorRecord& r : results[t].records)
      table.records.push_back(std::move(r));
  }
  return table;
}

}  // namespace sdegp
