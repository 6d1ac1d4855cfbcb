#include "sdegp/sgp.hpp"

#include <cmath>
#include <string>

#include "sdegp/errors.hpp"

namespace sdegp {

namespace {

constexpr double kExpClamp = 700.0;

PsdFactor factor_with_retry(Eigen::MatrixXd k, double jitter, const char* which) {
  try {
    return factor_psd(k);
  } catch (const DecompositionError&) {
    k.diagonal().array() += 10.0 * jitter;
    try {
      return factor_psd(k);
    } catch (const DecompositionError& e) {
      throw InferenceError(std::string(which) +
                           " covariance not positive definite after jitter retry (pivot " +
                           std::to_string(e.pivot()) + ")");
    }
  }
}

// Clamps exp arguments into [-700, 700]. Upper clamps are the dangerous ones:
// without a counter they throw, with one they are recorded. Lower clamps keep
// the result positive (an underflowing weight is harmless).
Eigen::ArrayXd clamped_exp(Eigen::ArrayXd arg, OverflowCounter* overflow,
                           const char* where) {
  const auto over = (arg > kExpClamp).count();
  if (over > 0) {
    if (overflow == nullptr)
      throw InferenceError(std::string(where) +
                           ": exp argument overflow; consider a larger prior mean v "
                           "or rescaling the series");
    overflow->clamped += over;
  }
  return arg.min(kExpClamp).max(-kExpClamp).exp();
}

void check_state_for_projection(const Dataset& data, const SgpState& state) {
  const Eigen::Index m = state.pseudo_inputs.size();
  if (m < 1) throw ConfigError("at least one pseudo-input is required");
  for (Eigen::Index i = 0; i + 1 < m; ++i)
    if (!(state.pseudo_inputs[i] <= state.pseudo_inputs[i + 1]))
      throw UsageError("pseudo-inputs must be sorted ascending");
  if (state.pseudo_inputs[0] < data.min() ||
      state.pseudo_inputs[m - 1] > data.max())
    throw UsageError("pseudo-inputs must lie inside the sample range");
}

}  // namespace

void rebuild_inducing_factors(SgpState& state) {
  const Eigen::VectorXd& xm = state.pseudo_inputs;
  if (xm.size() < 1) throw ConfigError("at least one pseudo-input is required");
  state.K_mm = factor_with_retry(cov_matrix(state.kernel_f, xm, xm, true),
                                 state.kernel_f.jitter, "drift kernel");
  state.J_mm = factor_with_retry(cov_matrix(state.kernel_s, xm, xm, true),
                                 state.kernel_s.jitter, "diffusion kernel");
}

void build_projections(const Dataset& data, SgpState& state) {
  check_state_for_projection(data, state);
  rebuild_inducing_factors(state);

  const Eigen::Index n = data.n();
  const Eigen::VectorXd x = data.samples.head(n);
  const Eigen::VectorXd& xm = state.pseudo_inputs;

  const Eigen::MatrixXd k_nm = cov_matrix(state.kernel_f, x, xm, false);
  state.A = state.K_mm.solve(k_nm.transpose()).transpose();
  state.P_diag =
      (Eigen::ArrayXd::Constant(n, state.kernel_f.amplitude + state.kernel_f.jitter) -
       (state.A.cwiseProduct(k_nm)).rowwise().sum().array())
          .max(0.0)
          .matrix();

  const Eigen::MatrixXd j_nm = cov_matrix(state.kernel_s, x, xm, false);
  state.B = state.J_mm.solve(j_nm.transpose()).transpose();
  state.Q_diag =
      (Eigen::ArrayXd::Constant(n, state.kernel_s.amplitude + state.kernel_s.jitter) -
       (state.B.cwiseProduct(j_nm)).rowwise().sum().array())
          .max(0.0)
          .matrix();
}

Eigen::VectorXd compute_zeta(const SgpState& state, OverflowCounter* overflow) {
  if (state.B.rows() == 0) throw UsageError("compute_zeta: projections not built");
  if (state.mu_s.size() != state.m() || state.S.rows() != state.m())
    throw UsageError("compute_zeta: variational moments have wrong size");

  const Eigen::VectorXd r = state.mu_s.array() - state.v;
  const Eigen::VectorXd b_mu = state.B * r;
  const Eigen::VectorXd bsb =
      ((state.B * state.S).cwiseProduct(state.B)).rowwise().sum();
  Eigen::ArrayXd arg =
      -state.v - b_mu.array() + 0.5 * (state.Q_diag.array() + bsb.array());
  return clamped_exp(std::move(arg), overflow, "compute_zeta").matrix();
}

Eigen::VectorXd compute_psi(const Dataset& data, const SgpState& state) {
  if (state.A.rows() != data.n())
    throw UsageError("compute_psi: projections not built for this dataset");
  if (state.mu_f.size() != state.m() || state.F.rows() != state.m())
    throw UsageError("compute_psi: variational moments have wrong size");

  const Eigen::VectorXd a_mu = state.A * state.mu_f;
  const Eigen::VectorXd afa =
      ((state.A * state.F).cwiseProduct(state.A)).rowwise().sum();
  const Eigen::ArrayXd resid = data.increments.array() - data.dt * a_mu.array();
  return (resid.square() +
          data.dt * data.dt * (state.P_diag.array() + afa.array()))
      .matrix();
}

EStepStats refresh_stats(const Dataset& data, const SgpState& state,
                         OverflowCounter* overflow) {
  return {compute_zeta(state, overflow), compute_psi(data, state)};
}

void update_drift(const Dataset& data, SgpState& state,
                  const Eigen::VectorXd& zeta) {
  if (zeta.size() != data.n())
    throw UsageError("update_drift: zeta size mismatch");
  if (!(zeta.array() > 0.0).all())
    throw UsageError("update_drift: zeta must be strictly positive");

  const Eigen::Index m = state.m();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd precision =
      state.K_mm.solve(identity) +
      data.dt * (state.A.transpose() * zeta.asDiagonal() * state.A);
  precision = 0.5 * (precision + precision.transpose());

  PsdFactor factor;
  try {
    factor = factor_psd(precision);
  } catch (const DecompositionError& e) {
    throw InferenceError("drift precision matrix not positive definite (pivot " +
                         std::to_string(e.pivot()) + ")");
  }
  state.F = factor.solve(identity);
  state.F = 0.5 * (state.F + state.F.transpose()).eval();
  state.mu_f = factor.solve(state.A.transpose() * zeta.cwiseProduct(data.increments));
}

double diffusion_objective(const Dataset& data, const SgpState& state,
                           const Eigen::VectorXd& psi,
                           const Eigen::VectorXd& s_m, Eigen::VectorXd* grad,
                           OverflowCounter* overflow) {
  if (psi.size() != data.n()) throw UsageError("diffusion_objective: psi size mismatch");
  if (!(psi.array() >= 0.0).all())
    throw UsageError("diffusion_objective: psi must be nonnegative");
  if (s_m.size() != state.m())
    throw UsageError("diffusion_objective: s_m size mismatch");

  const Eigen::VectorXd r = s_m.array() - state.v;
  const Eigen::VectorXd br = state.B * r;
  const Eigen::ArrayXd e = clamped_exp(
      -state.v - br.array() + 0.5 * state.Q_diag.array(), overflow,
      "diffusion_objective");
  const Eigen::VectorXd weighted = (psi.array() * e).matrix();
  const Eigen::VectorXd jinv_r = state.J_mm.solve(r);

  const double value = weighted.sum() / (2.0 * data.dt) + 0.5 * r.dot(jinv_r) +
                       0.5 * br.sum();
  if (grad) {
    *grad = -(state.B.transpose() * weighted) / (2.0 * data.dt) + jinv_r +
            0.5 * state.B.colwise().sum().transpose();
  }
  return value;
}

Eigen::MatrixXd diffusion_hessian(const Dataset& data, const SgpState& state,
                                  const Eigen::VectorXd& psi,
                                  const Eigen::VectorXd& s_m,
                                  OverflowCounter* overflow) {
  const Eigen::VectorXd r = s_m.array() - state.v;
  const Eigen::VectorXd br = state.B * r;
  const Eigen::ArrayXd e = clamped_exp(
      -state.v - br.array() + 0.5 * state.Q_diag.array(), overflow,
      "diffusion_hessian");
  const Eigen::VectorXd w = (psi.array() * e / (2.0 * data.dt)).matrix();
  const Eigen::Index m = state.m();
  Eigen::MatrixXd h = state.B.transpose() * w.asDiagonal() * state.B +
                      state.J_mm.solve(Eigen::MatrixXd::Identity(m, m));
  return 0.5 * (h + h.transpose()).eval();
}

DiffusionUpdate update_diffusion(const Dataset& data, SgpState& state,
                                 const Eigen::VectorXd& psi, int max_iterations,
                                 OverflowCounter* overflow) {
  // Trial points visited by the mode search are not committed state; clamping
  // there is a routine safeguard while the line search backs off. Only the
  // evaluations at the accepted mode count toward the caller's diagnostics.
  OverflowCounter search_scratch;
  BoundedProblem problem;
  problem.objective = [&](const Eigen::VectorXd& s, Eigen::VectorXd* g) {
    return diffusion_objective(data, state, psi, s, g, &search_scratch);
  };
  problem.max_iterations = max_iterations;
  problem.gradient_tolerance = 1e-8;

  Eigen::VectorXd start = state.mu_s.size() == state.m()
                              ? state.mu_s
                              : Eigen::VectorXd::Constant(state.m(), state.v);
  MinimizeResult res = minimize_bounded(problem, start);
  state.mu_s = res.argmin;
  diffusion_objective(data, state, psi, state.mu_s, nullptr, overflow);

  const Eigen::MatrixXd hess =
      diffusion_hessian(data, state, psi, state.mu_s, overflow);
  PsdFactor factor;
  try {
    factor = factor_psd(hess);
  } catch (const DecompositionError& e) {
    throw InferenceError(
        "Laplace curvature for the diffusion not positive definite (pivot " +
        std::to_string(e.pivot()) + ")");
  }
  state.S = factor.solve(Eigen::MatrixXd::Identity(state.m(), state.m()));
  state.S = 0.5 * (state.S + state.S.transpose()).eval();
  return {res.iterations, res.converged};
}

double lower_bound(const Dataset& data, const SgpState& state,
                   const Eigen::VectorXd& zeta, const Eigen::VectorXd& psi) {
  const Eigen::Index m = state.m();
  const double n = static_cast<double>(data.n());
  if (zeta.size() != data.n() || psi.size() != data.n())
    throw UsageError("lower_bound: statistics size mismatch");

  const Eigen::VectorXd r = state.mu_s.array() - state.v;

  double logdet_f = 0.0, logdet_s = 0.0;
  try {
    logdet_f = factor_psd(state.F).logdet();
    logdet_s = factor_psd(state.S).logdet();
  } catch (const DecompositionError& e) {
    throw InferenceError(
        "variational covariance lost positive definiteness (pivot " +
        std::to_string(e.pivot()) + ")");
  }

  const double terms[] = {
      // expected log-likelihood
      -psi.dot(zeta) / (2.0 * data.dt),
      -0.5 * (n * state.v + (state.B * r).sum()),
      -0.5 * n * std::log(2.0 * M_PI * data.dt),
      // cross-entropy of the inducing Gaussians under their priors
      -0.5 * state.K_mm.logdet() - 0.5 * m * std::log(2.0 * M_PI),
      -0.5 * (state.K_mm.solve(state.F).trace() +
              state.mu_f.dot(state.K_mm.solve(state.mu_f))),
      -0.5 * state.J_mm.logdet() - 0.5 * m * std::log(2.0 * M_PI),
      -0.5 * (state.J_mm.solve(state.S).trace() + r.dot(state.J_mm.solve(r))),
      // entropies
      0.5 * logdet_f + 0.5 * m * std::log(2.0 * M_PI * std::exp(1.0)),
      0.5 * logdet_s + 0.5 * m * std::log(2.0 * M_PI * std::exp(1.0)),
  };

  double total = 0.0;
  for (std::size_t k = 0; k < sizeof(terms) / sizeof(terms[0]); ++k) {
    if (!std::isfinite(terms[k]))
      throw InferenceError("lower bound term " + std::to_string(k) +
                           " is not finite");
    total += terms[k];
  }
  return total;
}

double modified_lower_bound(double lower_bound_value, Eigen::Index m) {
  if (m < 1) throw UsageError("modified_lower_bound: m must be at least 1");
  double log_factorial = 0.0;
  for (Eigen::Index k = 2; k <= m; ++k)
    log_factorial += std::log(static_cast<double>(k));
  return lower_bound_value + log_factorial;
}

}  // namespace sdegp
