#include "sdegp/numerics.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "sdegp/errors.hpp"

namespace sdegp {

double PsdFactor::logdet() const {
  return 2.0 * l_.diagonal().array().log().sum();
}

PsdFactor factor_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw UsageError("factor_psd: matrix must be square");
  const Eigen::Index n = m.rows();
  if (n == 0) throw UsageError("factor_psd: empty matrix");

  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-9 * scale))
    throw UsageError("factor_psd: matrix not symmetric");

  PsdFactor f;
  Eigen::MatrixXd& l = f.l_;
  l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d))
      throw DecompositionError(
          "matrix not positive definite (pivot " + std::to_string(j) + ")",
          static_cast<int>(j));
    l(j, j) = std::sqrt(d);
    const Eigen::Index rest = n - j - 1;
    if (rest > 0)
      l.col(j).tail(rest) =
          (m.col(j).tail(rest) -
           l.bottomLeftCorner(rest, j) * l.row(j).head(j).transpose()) /
          l(j, j);
  }
  return f;
}

namespace {

constexpr double kArmijoC1 = 1e-4;

Eigen::VectorXd clip_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Zeroes gradient components that point out of the box at an active bound.
Eigen::VectorXd project_gradient(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& g,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= lo[i] && g[i] > 0.0) pg[i] = 0.0;
    if (x[i] >= hi[i] && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

struct CurvaturePair {
  Eigen::VectorXd s, y;
  double rho = 0.0;
};

// Standard two-loop recursion; H0 scaled by the latest curvature pair.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g,
                                const std::deque<CurvaturePair>& pairs) {
  if (pairs.empty()) return -g;
  Eigen::VectorXd q = g;
  std::vector<double> alpha(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * pairs[k].s.dot(q);
    q -= alpha[k] * pairs[k].y;
  }
  const CurvaturePair& last = pairs.back();
  const double gamma = last.s.dot(last.y) / last.y.squaredNorm();
  q *= gamma;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * pairs[k].y.dot(q);
    q += (alpha[k] - beta) * pairs[k].s;
  }
  return -q;
}

}  // namespace

MinimizeResult minimize_bounded(const BoundedProblem& problem,
                                const Eigen::VectorXd& start) {
  if (!problem.objective) throw UsageError("minimize_bounded: no objective");
  const Eigen::Index n = start.size();
  if (n == 0) throw UsageError("minimize_bounded: empty start point");

  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lo = problem.lower.size() ? problem.lower
                                            : Eigen::VectorXd::Constant(n, -inf);
  Eigen::VectorXd hi = problem.upper.size() ? problem.upper
                                            : Eigen::VectorXd::Constant(n, inf);
  if (lo.size() != n || hi.size() != n)
    throw UsageError("minimize_bounded: bound size mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(lo[i] <= hi[i]))
      throw UsageError("minimize_bounded: lower bound exceeds upper bound");

  MinimizeResult res;
  Eigen::VectorXd x = clip_to_box(start, lo, hi);
  Eigen::VectorXd g(n);
  double f = problem.objective(x, &g);
  if (!std::isfinite(f))
    throw NumericalError("minimize_bounded: objective not finite at start");

  std::deque<CurvaturePair> pairs;
  int it = 0;
  bool converged = false;

  while (it < problem.max_iterations) {
    const Eigen::VectorXd pg = project_gradient(x, g, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() <=
        problem.gradient_tolerance * std::max(1.0, std::abs(f))) {
      converged = true;
      break;
    }

    Eigen::VectorXd d = lbfgs_direction(g, pairs);
    // Components pushing against an active bound cannot move; drop them so a
    // corner iterate cannot freeze the line search.
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] <= lo[i] && d[i] < 0.0) d[i] = 0.0;
      if (x[i] >= hi[i] && d[i] > 0.0) d[i] = 0.0;
    }
    // Unusable quasi-Newton direction: not a descent direction, or too small
    // to move the iterate even at a full step (projection leftovers).
    if (!(d.dot(g) < 0.0) ||
        (clip_to_box(x + d, lo, hi) - x).lpNorm<Eigen::Infinity>() == 0.0)
      d = -pg;

    // Armijo backtracking along the projected path. min(0, .) in the
    // sufficient-decrease bound keeps acceptance monotone even when clipping
    // turns the step uphill.
    double alpha = 1.0;
    bool accepted = false;
    bool saw_finite = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = clip_to_box(x + alpha * d, lo, hi);
      if ((x_new - x).lpNorm<Eigen::Infinity>() == 0.0) {
        alpha *= 0.5;
        continue;
      }
      f_new = problem.objective(x_new, nullptr);
      if (std::isfinite(f_new)) {
        saw_finite = true;
        if (f_new <= f + kArmijoC1 * std::min(0.0, g.dot(x_new - x))) {
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    ++it;
    if (!accepted) {
      if (!saw_finite)
        throw NumericalError(
            "minimize_bounded: no finite step found during line search");
      break;  // stalled: no sufficient decrease at any feasible step
    }

    Eigen::VectorXd g_new(n);
    problem.objective(x_new, &g_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      pairs.push_back({s, y, 1.0 / sy});
      while (static_cast<int>(pairs.size()) > std::max(1, problem.memory))
        pairs.pop_front();
    }
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
  }

  res.argmin = std::move(x);
  res.value = f;
  res.iterations = it;
  res.converged = converged;
  return res;
}

Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw UsageError("finite_diff_gradient: step must be positive");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("finite_diff_gradient: non-finite evaluation");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

namespace {

// Acklam's rational approximation, ~1e-9 accurate; used as a Newton seed.
double normal_quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) return -normal_quantile_approx(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw UsageError("normal_quantile: p must lie in (0, 1)");
  double x = normal_quantile_approx(p);
  for (int k = 0; k < 3; ++k) {
    const double err = normal_cdf(x) - p;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf == 0.0) break;
    x -= err / pdf;
  }
  return x;
}

double sorted_quantile(const Eigen::VectorXd& sorted, double p) {
  const Eigen::Index n = sorted.size();
  if (n == 0) throw UsageError("sorted_quantile: empty vector");
  if (!(p >= 0.0) || !(p <= 1.0))
    throw UsageError("sorted_quantile: p must lie in [0, 1]");
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  if (h >= static_cast<double>(n - 1)) return sorted[n - 1];
  const auto i = static_cast<Eigen::Index>(std::floor(h));
  const double w = h - static_cast<double>(i);
  return sorted[i] + w * (sorted[i + 1] - sorted[i]);
}

}  // namespace sdegp
