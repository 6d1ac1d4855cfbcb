#include "sdegp/baselines.hpp"

#include <cmath>
#include <limits>

#include "sdegp/errors.hpp"
#include "sdegp/evaluation.hpp"

namespace sdegp {

BinnedEstimate binning_estimator(const Dataset& data, int n_bins) {
  const Eigen::Index n = data.n();
  if (n_bins < 1) throw ConfigError("binning: n_bins must be at least 1");
  if (n_bins > n)
    throw ConfigError("binning: n_bins = " + std::to_string(n_bins) +
                      " exceeds the " + std::to_string(n) + " base points");

  const Eigen::VectorXd x = data.samples.head(n);
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (!(hi > lo)) throw ConfigError("binning: constant series");
  const double width = (hi - lo) / n_bins;

  BinnedEstimate est;
  est.edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b) est.edges[b] = lo + width * b;
  est.edges[n_bins] = hi;
  est.centers.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) est.centers[b] = lo + width * (b + 0.5);

  Eigen::VectorXd sum_dx = Eigen::VectorXd::Zero(n_bins);
  Eigen::VectorXd sum_dx2 = Eigen::VectorXd::Zero(n_bins);
  est.counts = Eigen::VectorXi::Zero(n_bins);
  for (Eigen::Index i = 0; i < n; ++i) {
    // last edge inclusive
    auto b = static_cast<Eigen::Index>((x[i] - lo) / width);
    if (b >= n_bins) b = n_bins - 1;
    if (b < 0) b = 0;
    sum_dx[b] += data.increments[i];
    sum_dx2[b] += data.increments[i] * data.increments[i];
    est.counts[b] += 1;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  est.f_hat.setConstant(n_bins, nan);
  est.g_hat.setConstant(n_bins, nan);
  for (int b = 0; b < n_bins; ++b) {
    if (est.counts[b] == 0) continue;
    est.f_hat[b] = sum_dx[b] / est.counts[b] / data.dt;
    est.g_hat[b] = sum_dx2[b] / est.counts[b] / data.dt;
  }
  return est;
}

CurveEstimate nw_estimator(const Dataset& data, double bandwidth,
                           const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw UsageError("nw_estimator: empty grid");
  const Eigen::Index n = data.n();
  const Eigen::ArrayXd x = data.samples.head(n).array();
  const Eigen::ArrayXd dx = data.increments.array();
  const Eigen::ArrayXd dx2 = dx.square();

  CurveEstimate est;
  est.grid = grid;
  est.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(data.samples.head(n));
  if (!(est.bandwidth > 0.0) || !std::isfinite(est.bandwidth))
    throw ConfigError("nw_estimator: bandwidth must be positive");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  est.f_hat.resize(grid.size());
  est.g_hat.resize(grid.size());
  const double inv_2h2 = 1.0 / (2.0 * est.bandwidth * est.bandwidth);
  // Vectorized exp saturates at a denormal instead of flushing to zero, so
  // detect "no data anywhere near" from the exponents themselves.
  constexpr double kLogTiny = -708.0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const Eigen::ArrayXd arg = -(x - grid[j]).square() * inv_2h2;
    const double peak = arg.maxCoeff();
    if (peak < kLogTiny) {  // every kernel weight underflows in double
      est.f_hat[j] = nan;
      est.g_hat[j] = nan;
      continue;
    }
    // Normalizing by the peak keeps the weight ratios exact far from data.
    const Eigen::ArrayXd w = (arg - peak).exp();
    const double total = w.sum();
    est.f_hat[j] = (w * dx).sum() / total / data.dt;
    est.g_hat[j] = (w * dx2).sum() / total / data.dt;
  }
  return est;
}

}  // namespace sdegp
