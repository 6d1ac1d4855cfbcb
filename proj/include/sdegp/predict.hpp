#pragma once

#include <Eigen/Core>

#include "sdegp/sgp.hpp"

namespace sdegp {

/// Posterior curves on a grid. Drift is Gaussian: (f_mean, f_var). The
/// log-diffusion s is Gaussian (s_mean, s_var), so g = exp(s) is lognormal;
/// g_median = exp(s_mean), g_mean = exp(s_mean + s_var/2), and
/// (g_lower, g_upper) is the central ci_level interval obtained by mapping the
/// Gaussian quantiles through exp.
struct PosteriorCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd f_mean, f_var;
  Eigen::VectorXd s_mean, s_var;
  Eigen::VectorXd g_median, g_lower, g_upper, g_mean;
  double ci_level = 0.95;
};

/// Sparse GP predictive moments of the drift:
///   mean = K*m K_mm^-1 mu_f,
///   var  = k** - K*m K_mm^-1 Km* + (K_mm^-1 Km*)' F (K_mm^-1 Km*),
/// with k** = A (no jitter), clamped at 0.
void predict_drift(const SgpState& state, const Eigen::VectorXd& grid,
                   Eigen::VectorXd& mean, Eigen::VectorXd& var);

/// Same for s = log g, with the prior mean v folded in:
///   mean = v + J*m J_mm^-1 (mu_s - v), var analogous with S.
void predict_log_diffusion(const SgpState& state, const Eigen::VectorXd& grid,
                           Eigen::VectorXd& mean, Eigen::VectorXd& var);

PosteriorCurve predict_curve(const SgpState& state, const Eigen::VectorXd& grid,
                             double ci_level = 0.95);

/// n equally spaced points on [lo, hi].
Eigen::VectorXd linspace(double lo, double hi, Eigen::Index n);

}  // namespace sdegp
