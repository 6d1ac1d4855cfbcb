#pragma once

#include <Eigen/Core>

#include "sdegp/dataset.hpp"
#include "sdegp/kernels.hpp"
#include "sdegp/numerics.hpp"

namespace sdegp {

/// Variational state of the sparse GP approximation. The drift f and the
/// log-diffusion s share one set of pseudo-inputs; each process has its own
/// kernel, an inducing-point Gaussian (mu_f, F) resp. (mu_s, S), and s has a
/// scalar prior mean v. The projection caches (A, B, P_diag, Q_diag and the
/// inducing covariance factors) are valid after build_projections().
struct SgpState {
  Eigen::VectorXd pseudo_inputs;  // sorted ascending, inside the sample range
  KernelSpec kernel_f;
  KernelSpec kernel_s;
  double v = 0.0;

  Eigen::VectorXd mu_f;
  Eigen::MatrixXd F;
  Eigen::VectorXd mu_s;
  Eigen::MatrixXd S;

  Eigen::MatrixXd A;       // K_Nm K_mm^-1, N x m
  Eigen::MatrixXd B;       // J_Nm J_mm^-1, N x m
  Eigen::VectorXd P_diag;  // diag(K_NN - K_Nm K_mm^-1 K_mN), clamped at 0
  Eigen::VectorXd Q_diag;  // same for the s kernel
  PsdFactor K_mm;
  PsdFactor J_mm;

  Eigen::Index m() const { return pseudo_inputs.size(); }
};

/// E-step sufficient statistics: zeta[i] = E[1/g(x_i)] under the variational
/// posterior, psi[i] = E[(dx_i - f(x_i) dt)^2].
struct EStepStats {
  Eigen::VectorXd zeta;
  Eigen::VectorXd psi;
};

/// Counts exp() arguments clamped at +700. A nonzero count in a committed
/// state means the restart's numbers are not trustworthy.
struct OverflowCounter {
  long clamped = 0;
};

/// Rebuilds A, B, P_diag, Q_diag and the K_mm/J_mm factors from the current
/// kernels and pseudo-inputs. Factorization retries once with 10x jitter on
/// the diagonal, then throws InferenceError naming the kernel.
void build_projections(const Dataset& data, SgpState& state);

/// Rebuilds only the inducing covariance factors (enough for predictions on a
/// state loaded from disk, which carries no dataset).
void rebuild_inducing_factors(SgpState& state);

/// zeta_i = exp(-[v + B(mu_s - v)]_i + (Q_ii + B_i' S B_i) / 2). Without a
/// counter an argument above +700 throws InferenceError; with one it is
/// clamped and counted. Arguments are floored at -700 so zeta stays positive.
Eigen::VectorXd compute_zeta(const SgpState& state,
                             OverflowCounter* overflow = nullptr);

/// psi_i = (dx_i - dt [A mu_f]_i)^2 + dt^2 (P_ii + [A F A']_ii)  >= 0.
Eigen::VectorXd compute_psi(const Dataset& data, const SgpState& state);

EStepStats refresh_stats(const Dataset& data, const SgpState& state,
                         OverflowCounter* overflow = nullptr);

/// Closed-form variational update of (mu_f, F) given zeta > 0:
///   F = (K_mm^-1 + dt A' diag(zeta) A)^-1,  mu_f = F A' (zeta .* dx).
void update_drift(const Dataset& data, SgpState& state,
                  const Eigen::VectorXd& zeta);

/// Negative unnormalized log-posterior of the inducing log-diffusion values,
///   (1/2dt) sum_i psi_i exp(-[v + B r]_i + Q_ii/2)
///     + r' J_mm^-1 r / 2 + sum_i [B r]_i / 2     with r = s_m - v.
/// Strictly convex in s_m. Fills *grad when non-null.
double diffusion_objective(const Dataset& data, const SgpState& state,
                           const Eigen::VectorXd& psi,
                           const Eigen::VectorXd& s_m,
                           Eigen::VectorXd* grad = nullptr,
                           OverflowCounter* overflow = nullptr);

/// Hessian of diffusion_objective at s_m (positive definite).
Eigen::MatrixXd diffusion_hessian(const Dataset& data, const SgpState& state,
                                  const Eigen::VectorXd& psi,
                                  const Eigen::VectorXd& s_m,
                                  OverflowCounter* overflow = nullptr);

struct DiffusionUpdate {
  int iterations = 0;
  bool converged = true;
};

/// Laplace update of (mu_s, S): mu_s is the mode of the diffusion objective
/// (warm-started at the current mu_s), S the inverse Hessian at the mode.
/// A minimizer that exhausts max_iterations keeps the best iterate and
/// reports converged = false.
DiffusionUpdate update_diffusion(const Dataset& data, SgpState& state,
                                 const Eigen::VectorXd& psi,
                                 int max_iterations = 200,
                                 OverflowCounter* overflow = nullptr);

/// Evidence lower bound for the current state and consistent E-step
/// statistics (constant terms in N kept, so values are comparable across
/// hyperparameters but not across datasets of different length).
double lower_bound(const Dataset& data, const SgpState& state,
                   const Eigen::VectorXd& zeta, const Eigen::VectorXd& psi);

/// L' = L + sum_{k=2}^{m} log k, the model-size correction used to compare
/// fits with different numbers of pseudo-inputs.
double modified_lower_bound(double lower_bound_value, Eigen::Index m);

}  // namespace sdegp
