#include "sdegp/predict.hpp"

#include <cmath>

#include "sdegp/errors.hpp"

namespace sdegp {

namespace {

void check_grid(const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw UsageError("predict: empty grid");
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    if (!std::isfinite(grid[i]))
      throw UsageError("predict: grid contains a non-finite value");
}

// Shared sparse-GP predictive moments: mean_out = K*m K_mm^-1 mu (+shift),
// var_out = A - diag(K*m K_mm^-1 Km*) + diag(W' Cov W), W = K_mm^-1 Km*.
void predictive_moments(const KernelSpec& kernel, const PsdFactor& factor,
                        const Eigen::VectorXd& pseudo_inputs,
                        const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                        double shift, const Eigen::VectorXd& grid,
                        Eigen::VectorXd& mean, Eigen::VectorXd& var) {
  if (factor.empty())
    throw UsageError("predict: inducing covariance factors not built");
  if (mu.size() != pseudo_inputs.size() || cov.rows() != pseudo_inputs.size())
    throw UsageError("predict: variational moments have wrong size");

  const Eigen::MatrixXd k_star = cov_matrix(kernel, grid, pseudo_inputs, false);
  const Eigen::MatrixXd w = factor.solve(k_star.transpose());  // m x n
  mean = (w.transpose() * mu).array() + shift;
  const Eigen::VectorXd explained =
      (k_star.cwiseProduct(w.transpose())).rowwise().sum();
  const Eigen::VectorXd posterior =
      (w.cwiseProduct(cov * w)).colwise().sum().transpose();
  var = (Eigen::ArrayXd::Constant(grid.size(), kernel.amplitude) -
         explained.array() + posterior.array())
            .max(0.0)
            .matrix();
}

}  // namespace

void predict_drift(const SgpState& state, const Eigen::VectorXd& grid,
                   Eigen::VectorXd& mean, Eigen::VectorXd& var) {
  check_grid(grid);
  predictive_moments(state.kernel_f, state.K_mm, state.pseudo_inputs,
                     state.mu_f, state.F, 0.0, grid, mean, var);
}

void predict_log_diffusion(const SgpState& state, const Eigen::VectorXd& grid,
                           Eigen::VectorXd& mean, Eigen::VectorXd& var) {
  check_grid(grid);
  const Eigen::VectorXd centered = state.mu_s.array() - state.v;
  predictive_moments(state.kernel_s, state.J_mm, state.pseudo_inputs, centered,
                     state.S, state.v, grid, mean, var);
}

PosteriorCurve predict_curve(const SgpState& state, const Eigen::VectorXd& grid,
                             double ci_level) {
  if (!(ci_level > 0.0) || !(ci_level < 1.0))
    throw ConfigError("predict: ci_level must lie in (0, 1)");
  PosteriorCurve curve;
  curve.grid = grid;
  curve.ci_level = ci_level;
  predict_drift(state, grid, curve.f_mean, curve.f_var);
  predict_log_diffusion(state, grid, curve.s_mean, curve.s_var);

  const double z = normal_quantile(0.5 * (1.0 + ci_level));
  const Eigen::ArrayXd sd = curve.s_var.array().sqrt();
  curve.g_median = curve.s_mean.array().exp();
  curve.g_lower = (curve.s_mean.array() - z * sd).exp();
  curve.g_upper = (curve.s_mean.array() + z * sd).exp();
  curve.g_mean = (curve.s_mean.array() + 0.5 * curve.s_var.array()).exp();
  return curve;
}

Eigen::VectorXd linspace(double lo, double hi, Eigen::Index n) {
  if (n < 2) throw UsageError("linspace: need at least 2 points");
  if (!(hi > lo)) throw UsageError("linspace: hi must exceed lo");
  Eigen::VectorXd g(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  g[n - 1] = hi;
  return g;
}

}  // namespace sdegp
