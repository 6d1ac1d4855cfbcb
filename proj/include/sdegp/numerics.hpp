#pragma once

#include <Eigen/Core>
#include <functional>

namespace sdegp {

/// Cholesky factor of a symmetric positive-definite matrix. All downstream
/// solves and log-determinants go through the factor; an explicit inverse is
/// only ever formed by solving against the identity where a full matrix is
/// genuinely required.
class PsdFactor {
public:
  PsdFactor() = default;

  Eigen::Index dim() const { return l_.rows(); }
  bool empty() const { return l_.rows() == 0; }
  const Eigen::MatrixXd& lower() const { return l_; }

  template <typename Derived>
  typename Derived::PlainObject solve(const Eigen::MatrixBase<Derived>& rhs) const {
    typename Derived::PlainObject out = rhs;
    l_.triangularView<Eigen::Lower>().solveInPlace(out);
    l_.triangularView<Eigen::Lower>().transpose().solveInPlace(out);
    return out;
  }

  double logdet() const;

  friend PsdFactor factor_psd(const Eigen::MatrixXd& m);

private:
  Eigen::MatrixXd l_;
};

/// Cholesky of a symmetric matrix (symmetry required within 1e-9 relative).
/// Throws DecompositionError carrying the first non-positive pivot index.
PsdFactor factor_psd(const Eigen::MatrixXd& m);

struct BoundedProblem {
  /// Returns the value at x; fills *grad when grad is non-null. The minimizer
  /// only requests gradients at accepted iterates, so expensive gradients
  /// (finite differences) are not paid for during the line search.
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> objective;
  /// Per-coordinate box; +-inf marks an absent bound. Empty vectors mean
  /// unbounded in every coordinate.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int max_iterations = 100;
  /// Converged when the projected-gradient infinity norm is at most
  /// gradient_tolerance * max(1, |f|).
  double gradient_tolerance = 1e-5;
  int memory = 10;  // number of curvature pairs kept
};

struct MinimizeResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected limited-memory quasi-Newton minimization over a box. Iterates are
/// always feasible; accepted steps never increase the objective, so
/// result.value <= objective(start) up to round-off. Throws NumericalError if
/// the objective is non-finite at the (clipped) start or if no finite step can
/// be found during a line search.
MinimizeResult minimize_bounded(const BoundedProblem& problem,
                                const Eigen::VectorXd& start);

/// Central-difference gradient with per-coordinate step
/// h_i = step * max(1, |x_i|). Throws NumericalError on non-finite values.
Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step);

/// Standard normal CDF and its inverse (Newton-polished to full double
/// precision, so normal_cdf(normal_quantile(p)) == p to machine accuracy).
double normal_cdf(double x);
double normal_quantile(double p);

/// Linear-interpolation empirical quantile (order statistic at (n-1)p) of an
/// ascending-sorted vector.
double sorted_quantile(const Eigen::VectorXd& sorted, double p);

}  // namespace sdegp
