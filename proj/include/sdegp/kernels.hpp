#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>

namespace sdegp {

/// Stationary covariance families for the drift and log-diffusion processes.
/// Every family has total amplitude k(xi, xi) = A, so the far-field prior
/// variance is the same no matter how the mass is split between components.
enum class KernelFamily {
  // theta = (theta0, theta1): theta0 exp(-theta1 r2 / 2) + (A - theta0).
  // Length-scale l relates to theta1 by l^2 = 1/theta1.
  SquaredExpPlusConst,
  // theta = (theta_a, theta1, theta2): two squared-exponential components with
  // amplitudes theta_a and A - theta_a.
  SumOfTwoSquaredExp,
  // theta = (alpha, l): A (1 + r2 / (2 alpha l^2))^(-alpha), a scale mixture
  // of squared exponentials with mixing strength alpha.
  RationalQuadratic,
};

struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExpPlusConst;
  Eigen::VectorXd theta;
  double amplitude = 1.0;  // A = k(xi, xi), before jitter
  double jitter = 0.0;     // added to self-covariance diagonals only
};

/// Box bounds for the theta vector of one kernel.
struct HyperBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

inline constexpr double kDefaultRqAlphaMin = 0.1;
inline constexpr double kDefaultRqAlphaMax = 20.0;

std::size_t theta_size(KernelFamily family);
std::string family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);

/// Default diagonal jitter: 1e-6 * A.
double default_jitter(double amplitude);

/// Throws ConfigError on malformed hyperparameters (wrong theta size,
/// amplitude weights outside [0, A], non-positive precisions/length-scales,
/// non-positive amplitude, negative jitter).
void validate_kernel(const KernelSpec& spec);

KernelSpec make_kernel(KernelFamily family, Eigen::VectorXd theta,
                       double amplitude, double jitter);

/// Scalar covariance k(xi, xj); never includes jitter. k(xi, xi) = A exactly.
double eval_kernel(const KernelSpec& spec, double xi, double xj);

/// Dense covariance matrix between xs and ys. With self_cov = true (requires
/// xs and ys of equal length, meant for xs == ys) the diagonal is set to
/// exactly A + jitter.
Eigen::MatrixXd cov_matrix(const KernelSpec& spec, const Eigen::VectorXd& xs,
                           const Eigen::VectorXd& ys, bool self_cov);

/// Bounds from an explicit length-scale interval. For the SE families the
/// precision bounds are (1/l_max^2, 1/l_min^2); amplitude weights live in
/// [0, A]; the RQ alpha box is passed through.
HyperBounds bounds_from_length_scales(const KernelSpec& spec, double l_min,
                                      double l_max,
                                      double rq_alpha_min = kDefaultRqAlphaMin,
                                      double rq_alpha_max = kDefaultRqAlphaMax);

/// Default rule: length-scales in [0.05, 2] times the data range.
HyperBounds default_bounds(const KernelSpec& spec, double data_range);

}  // namespace sdegp
