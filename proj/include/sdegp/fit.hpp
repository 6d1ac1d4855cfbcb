#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sdegp/dataset.hpp"
#include "sdegp/rng.hpp"
#include "sdegp/sgp.hpp"

namespace sdegp {

struct FitConfig {
  int m = 10;        // pseudo-inputs; <= 0 selects heuristic_m from the data
  int restarts = 3;
  int max_em_iterations = 200;
  int m_step_inner_iterations = 5;  // 0 disables hyperparameter optimization
  double em_tolerance = 1e-6;       // relative change of L between iterations
  std::uint64_t seed = 0;
  int threads = 0;  // 0: SDEGP_THREADS env var, else 1

  KernelFamily kernel_f = KernelFamily::SquaredExpPlusConst;
  KernelFamily kernel_s = KernelFamily::SquaredExpPlusConst;
  double amplitude_f = 25.0;  // prior variance A_f of the drift
  double amplitude_g = 25.0;  // prior variance A_g of the diffusion itself

  // Length-scale boxes; non-positive values select the default rule
  // [0.05, 2] * data range.
  double length_scale_min_f = 0.0;
  double length_scale_max_f = 0.0;
  double length_scale_min_s = 0.0;
  double length_scale_max_s = 0.0;
  double rq_alpha_min = kDefaultRqAlphaMin;
  double rq_alpha_max = kDefaultRqAlphaMax;

  // Diagonal jitter; negative selects 1e-6 * amplitude.
  double jitter_f = -1.0;
  double jitter_s = -1.0;

  // Pseudo-input init noise as a fraction of the data range; negative selects
  // 0.25 / (m - 1).
  double pseudo_input_noise = -1.0;

  // Heuristic length-scale used only when m <= 0.
  double heuristic_length_scale = 0.5;
};

struct FitDiagnostics {
  long exp_overflows = 0;            // clamped exp() args in committed states
  int diffusion_nonconverged = 0;    // Laplace mode searches that hit the cap
  int rejected_m_steps = 0;          // reverted hyperparameter steps
  int failed_restarts = 0;
  std::vector<std::string> restart_errors;
};

struct FitResult {
  SgpState state;
  double lower_bound_value = 0.0;
  double modified_lower_bound_value = 0.0;
  std::vector<double> elbo_trace;  // one entry per EM iteration, non-decreasing
  bool converged = false;
  int em_iterations = 0;
  int best_restart = -1;
  FitDiagnostics diagnostics;
  FitConfig config;  // echo of the configuration actually used
  std::string dataset_fingerprint;
  double data_min = 0.0;
  double data_max = 0.0;
};

/// Percentile placement of m pseudo-inputs over the samples (linear
/// interpolation quantiles at k/(m-1)), plus uniform noise of amplitude
/// noise_frac * range, re-sorted, clipped to the sample range, and perturbed
/// to be strictly increasing. m = 1 places the median. Throws ConfigError if
/// m exceeds the number of distinct sample values.
Eigen::VectorXd init_pseudo_inputs(const Eigen::VectorXd& x, int m,
                                   double noise_frac, Rng& rng);

/// Prior for s = log g matching a lognormal with mean Var[dx]/dt (the
/// empirical diffusion scale) and variance A_g:
///   A_s = log(1 + A_g / (Var[dx]/dt)^2),  v = log(Var[dx]/dt) - A_s / 2.
struct DiffusionPrior {
  double v = 0.0;
  double amplitude = 0.0;  // A_s, prior variance of s
};
DiffusionPrior init_diffusion_prior(const Dataset& data, double amplitude_g);

/// floor(sample range / length_scale), floored at 2.
int heuristic_m(const Eigen::VectorXd& x, double length_scale);

/// Variational EM with random restarts. Per restart: percentile pseudo-input
/// init with jitter, random kernel hyperparameters within bounds, prior
/// moment-matched from the increments; then E steps (closed-form drift
/// update, Laplace diffusion update) alternate with capped quasi-Newton
/// hyperparameter steps until L stalls. The restart with the best L' wins.
/// Throws FitError when every restart fails.
FitResult fit(const Dataset& data, const FitConfig& config);

}  // namespace sdegp
