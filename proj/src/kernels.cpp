#include "sdegp/kernels.hpp"

#include <cmath>

#include "sdegp/errors.hpp"

namespace sdegp {

std::size_t theta_size(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExpPlusConst:
      return 2;
    case KernelFamily::SumOfTwoSquaredExp:
      return 3;
    case KernelFamily::RationalQuadratic:
      return 2;
  }
  throw UsageError("unknown kernel family");
}

std::string family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExpPlusConst:
      return "se_const";
    case KernelFamily::SumOfTwoSquaredExp:
      return "two_se";
    case KernelFamily::RationalQuadratic:
      return "rational_quadratic";
  }
  throw UsageError("unknown kernel family");
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "se_const") return KernelFamily::SquaredExpPlusConst;
  if (name == "two_se") return KernelFamily::SumOfTwoSquaredExp;
  if (name == "rational_quadratic") return KernelFamily::RationalQuadratic;
  throw UsageError("unknown kernel family name: " + name);
}

double default_jitter(double amplitude) { return 1e-6 * amplitude; }

void validate_kernel(const KernelSpec& spec) {
  if (!(spec.amplitude > 0.0) || !std::isfinite(spec.amplitude))
    throw ConfigError("kernel amplitude must be positive and finite");
  if (!(spec.jitter >= 0.0) || !std::isfinite(spec.jitter))
    throw ConfigError("kernel jitter must be nonnegative and finite");
  if (static_cast<std::size_t>(spec.theta.size()) != theta_size(spec.family))
    throw ConfigError("kernel theta has wrong size for family " +
                      family_name(spec.family));
  for (Eigen::Index i = 0; i < spec.theta.size(); ++i)
    if (!std::isfinite(spec.theta[i]))
      throw ConfigError("kernel theta contains a non-finite value");

  switch (spec.family) {
    case KernelFamily::SquaredExpPlusConst:
      if (spec.theta[0] < 0.0 || spec.theta[0] > spec.amplitude)
        throw ConfigError("se_const: theta0 must lie in [0, amplitude]");
      if (!(spec.theta[1] > 0.0))
        throw ConfigError("se_const: precision theta1 must be positive");
      break;
    case KernelFamily::SumOfTwoSquaredExp:
      if (spec.theta[0] < 0.0 || spec.theta[0] > spec.amplitude)
        throw ConfigError("two_se: component amplitude must lie in [0, amplitude]");
      if (!(spec.theta[1] > 0.0) || !(spec.theta[2] > 0.0))
        throw ConfigError("two_se: precisions must be positive");
      break;
    case KernelFamily::RationalQuadratic:
      if (!(spec.theta[0] > 0.0))
        throw ConfigError("rational_quadratic: alpha must be positive");
      if (!(spec.theta[1] > 0.0))
        throw ConfigError("rational_quadratic: length-scale must be positive");
      break;
  }
}

KernelSpec make_kernel(KernelFamily family, Eigen::VectorXd theta,
                       double amplitude, double jitter) {
  KernelSpec spec{family, std::move(theta), amplitude, jitter};
  validate_kernel(spec);
  return spec;
}

namespace {

// Family formula on a squared distance. r2 == 0 returns A exactly: every
// family sums its components to the total amplitude at zero distance.
double kernel_of_r2(const KernelSpec& spec, double r2) {
  if (r2 == 0.0) return spec.amplitude;
  const Eigen::VectorXd& th = spec.theta;
  switch (spec.family) {
    case KernelFamily::SquaredExpPlusConst:
      return th[0] * std::exp(-0.5 * th[1] * r2) + (spec.amplitude - th[0]);
    case KernelFamily::SumOfTwoSquaredExp:
      return th[0] * std::exp(-0.5 * th[1] * r2) +
             (spec.amplitude - th[0]) * std::exp(-0.5 * th[2] * r2);
    case KernelFamily::RationalQuadratic: {
      const double alpha = th[0];
      const double l2 = th[1] * th[1];
      return spec.amplitude * std::pow(1.0 + r2 / (2.0 * alpha * l2), -alpha);
    }
  }
  throw UsageError("unknown kernel family");
}

// Vectorized column fill; must agree with kernel_of_r2 elementwise (the exp
// packet math may differ from std::exp in the last ulp, nothing more).
void fill_column(const KernelSpec& spec, const Eigen::ArrayXd& r2,
                 Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::VectorXd& th = spec.theta;
  const double a = spec.amplitude;
  switch (spec.family) {
    case KernelFamily::SquaredExpPlusConst:
      out = (r2 == 0.0).select(a, th[0] * (-0.5 * th[1] * r2).exp() + (a - th[0]));
      return;
    case KernelFamily::SumOfTwoSquaredExp:
      out = (r2 == 0.0).select(a, th[0] * (-0.5 * th[1] * r2).exp() +
                                      (a - th[0]) * (-0.5 * th[2] * r2).exp());
      return;
    case KernelFamily::RationalQuadratic: {
      const double alpha = th[0];
      const double l2 = th[1] * th[1];
      out = (r2 == 0.0).select(a, a * (1.0 + r2 / (2.0 * alpha * l2)).pow(-alpha));
      return;
    }
  }
  throw UsageError("unknown kernel family");
}

}  // namespace

double eval_kernel(const KernelSpec& spec, double xi, double xj) {
  validate_kernel(spec);
  const double d = xi - xj;
  return kernel_of_r2(spec, d * d);
}

Eigen::MatrixXd cov_matrix(const KernelSpec& spec, const Eigen::VectorXd& xs,
                           const Eigen::VectorXd& ys, bool self_cov) {
  validate_kernel(spec);
  if (xs.size() == 0 || ys.size() == 0)
    throw UsageError("cov_matrix: empty input vectors");
  if (self_cov && xs.size() != ys.size())
    throw UsageError("cov_matrix: self_cov requires square output");

  Eigen::MatrixXd k(xs.size(), ys.size());
  for (Eigen::Index j = 0; j < ys.size(); ++j) {
    const Eigen::ArrayXd r2 = (xs.array() - ys[j]).square();
    fill_column(spec, r2, k.col(j));
  }
  if (self_cov)
    k.diagonal().setConstant(spec.amplitude + spec.jitter);
  return k;
}

HyperBounds bounds_from_length_scales(const KernelSpec& spec, double l_min,
                                      double l_max, double rq_alpha_min,
                                      double rq_alpha_max) {
  if (!(l_min > 0.0) || !(l_max >= l_min))
    throw ConfigError("length-scale bounds must satisfy 0 < l_min <= l_max");
  const double t_lo = 1.0 / (l_max * l_max);
  const double t_hi = 1.0 / (l_min * l_min);

  HyperBounds b;
  switch (spec.family) {
    case KernelFamily::SquaredExpPlusConst:
      b.lower = Eigen::Vector2d(0.0, t_lo);
      b.upper = Eigen::Vector2d(spec.amplitude, t_hi);
      return b;
    case KernelFamily::SumOfTwoSquaredExp:
      b.lower = Eigen::Vector3d(0.0, t_lo, t_lo);
      b.upper = Eigen::Vector3d(spec.amplitude, t_hi, t_hi);
      return b;
    case KernelFamily::RationalQuadratic:
      if (!(rq_alpha_min > 0.0) || !(rq_alpha_max >= rq_alpha_min))
        throw ConfigError("rational_quadratic: alpha bounds must satisfy 0 < min <= max");
      b.lower = Eigen::Vector2d(rq_alpha_min, l_min);
      b.upper = Eigen::Vector2d(rq_alpha_max, l_max);
      return b;
  }
  throw UsageError("unknown kernel family");
}

HyperBounds default_bounds(const KernelSpec& spec, double data_range) {
  if (!(data_range > 0.0) || !std::isfinite(data_range))
    throw ConfigError("default_bounds: data range must be positive and finite");
  return bounds_from_length_scales(spec, 0.05 * data_range, 2.0 * data_range);
}

}  // namespace sdegp
