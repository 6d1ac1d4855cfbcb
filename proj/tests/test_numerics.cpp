#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sdegp/errors.hpp"
#include "sdegp/numerics.hpp"
#include "sdegp/rng.hpp"

using namespace sdegp;

namespace {

Eigen::MatrixXd random_psd(Eigen::Index n, Rng& rng, double ridge = 0.5) {
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  return g * g.transpose() + ridge * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("factor_psd handles the hand cases") {
  CHECK(factor_psd(Eigen::MatrixXd::Identity(3, 3)).logdet() ==
        doctest::Approx(0.0).epsilon(1e-14));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  CHECK(factor_psd(d).logdet() == doctest::Approx(std::log(36.0)).epsilon(1e-14));

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(factor_psd(indefinite), DecompositionError);
  try {
    factor_psd(indefinite);
  } catch (const DecompositionError& e) {
    CHECK(e.pivot() == 1);  // first pivot is fine, second is 1 - 4 < 0
  }

  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(factor_psd(asym), UsageError);
  CHECK_THROWS_AS(factor_psd(Eigen::MatrixXd::Identity(2, 3)), UsageError);
}

TEST_CASE("solves and reconstruction round-trip") {
  Rng rng(11);
  SUBCASE("diagonal solve") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    Eigen::VectorXd rhs(2);
    rhs << 4.0, 9.0;
    const Eigen::VectorXd sol = factor_psd(d).solve(rhs);
    CHECK(sol[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sol[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("identity factor returns the right-hand side") {
    const PsdFactor f = factor_psd(Eigen::MatrixXd::Identity(4, 4));
    const Eigen::VectorXd r = rng.normal_vector(4);
    CHECK((f.solve(r) - r).norm() == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("random PD round-trips") {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 28);
      const Eigen::MatrixXd m = random_psd(n, rng);
      const PsdFactor f = factor_psd(m);
      const Eigen::VectorXd r = rng.normal_vector(n);
      CHECK((m * f.solve(r) - r).norm() <= 1e-8 * r.norm());
      // Reconstruction of the factor itself.
      const Eigen::MatrixXd rec = f.lower() * f.lower().transpose();
      CHECK((rec - m).norm() <= 1e-10 * m.norm());
    }
  }
  SUBCASE("matrix right-hand sides work too") {
    const Eigen::MatrixXd m = random_psd(5, rng);
    const Eigen::MatrixXd inv =
        factor_psd(m).solve(Eigen::MatrixXd::Identity(5, 5));
    CHECK((m * inv - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-9);
  }
}

TEST_CASE("logdet matches an eigenvalue oracle") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd m = random_psd(4, rng);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const double oracle = es.eigenvalues().array().log().sum();
    CHECK(factor_psd(m).logdet() == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("minimize_bounded solves the scalar hand cases") {
  auto quadratic_at = [](double center) {
    return [center](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      if (grad) {
        grad->resize(1);
        (*grad)[0] = 2.0 * (x[0] - center);
      }
      return (x[0] - center) * (x[0] - center);
    };
  };
  BoundedProblem p;
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 2.0);

  p.objective = quadratic_at(1.0);
  MinimizeResult r = minimize_bounded(p, Eigen::VectorXd::Zero(1));
  CHECK(r.converged);
  CHECK(r.argmin[0] == doctest::Approx(1.0).epsilon(1e-6));

  p.objective = quadratic_at(3.0);
  r = minimize_bounded(p, Eigen::VectorXd::Ones(1));
  CHECK(r.argmin[0] == doctest::Approx(2.0).epsilon(1e-9));  // active bound

  // Infeasible start gets clipped into the box first.
  r = minimize_bounded(p, Eigen::VectorXd::Constant(1, 17.0));
  CHECK(r.argmin[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("unbounded quadratic matches the linear-system solution") {
  Rng rng(17);
  const Eigen::Index n = 5;
  const Eigen::MatrixXd q = random_psd(n, rng, 1.0);
  const Eigen::VectorXd b = rng.normal_vector(n);
  const Eigen::VectorXd oracle = q.ldlt().solve(b);

  BoundedProblem p;
  p.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) *grad = q * x - b;
    return 0.5 * x.dot(q * x) - b.dot(x);
  };
  p.gradient_tolerance = 1e-10;
  p.max_iterations = 200;
  const MinimizeResult r = minimize_bounded(p, Eigen::VectorXd::Zero(n));
  CHECK(r.converged);
  CHECK((r.argmin - oracle).norm() <= 1e-6 * (1.0 + oracle.norm()));
}

TEST_CASE("random boxed quadratics: feasible, monotone, first-order optimal") {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 7);
    const Eigen::MatrixXd q = random_psd(n, rng, 0.3);
    const Eigen::VectorXd b = rng.normal_vector(n);
    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = rng.uniform(-2.0, 2.0);
      const double c = rng.uniform(-2.0, 2.0);
      lo[i] = std::min(a, c);
      hi[i] = std::max(a, c) + 0.1;
    }

    std::vector<double> trace;
    BoundedProblem p;
    p.lower = lo;
    p.upper = hi;
    p.gradient_tolerance = 1e-8;
    p.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(x[i] >= lo[i] - 1e-12);  // every evaluation point is feasible
        CHECK(x[i] <= hi[i] + 1e-12);
      }
      if (grad) *grad = q * x - b;
      const double value = 0.5 * x.dot(q * x) - b.dot(x);
      if (!grad) return value;  // line-search probe
      trace.push_back(value);
      return value;
    };
    const MinimizeResult r = minimize_bounded(p, (lo + hi) / 2.0);

    for (std::size_t k = 1; k < trace.size(); ++k)
      CHECK(trace[k] <= trace[k - 1] + 1e-10 * (1.0 + std::abs(trace[k - 1])));

    if (r.converged) {
      // Projected gradient small: no descent direction inside the box.
      const Eigen::VectorXd g = q * r.argmin - b;
      for (Eigen::Index i = 0; i < n; ++i) {
        double pg = g[i];
        if (r.argmin[i] <= lo[i] + 1e-12 && pg > 0.0) pg = 0.0;
        if (r.argmin[i] >= hi[i] - 1e-12 && pg < 0.0) pg = 0.0;
        CHECK(std::abs(pg) <= 1e-6 * std::max(1.0, std::abs(r.value)) + 1e-8);
      }
    } else {
      // Without convergence the run either spent the full budget or stalled
      // in the line search at numerical resolution.
      CHECK(r.iterations <= p.max_iterations);
      CHECK(r.iterations >= 1);
    }
  }
}

TEST_CASE("non-finite objective at the start is an error") {
  BoundedProblem p;
  p.objective = [](const Eigen::VectorXd&, Eigen::VectorXd* grad) {
    if (grad) grad->setZero(1);
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(minimize_bounded(p, Eigen::VectorXd::Zero(1)), NumericalError);
}

TEST_CASE("iteration cap is honored") {
  BoundedProblem p;
  p.max_iterations = 3;
  p.gradient_tolerance = 1e-16;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) *grad = 2.0 * x;
    return x.squaredNorm();
  };
  const MinimizeResult r =
      minimize_bounded(p, Eigen::VectorXd::Constant(6, 100.0));
  CHECK(r.iterations <= 3);
}

TEST_CASE("finite_diff_gradient approximates simple gradients") {
  auto sum_sq = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const Eigen::VectorXd g = finite_diff_gradient(sum_sq, x, 1e-6);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-6));

  auto linear = [](const Eigen::VectorXd& v) { return 3.0 * v[0] - 0.5 * v[1]; };
  const Eigen::VectorXd gl = finite_diff_gradient(linear, x, 1e-5);
  CHECK(gl[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(gl[1] == doctest::Approx(-0.5).epsilon(1e-9));

  auto expf = [](const Eigen::VectorXd& v) { return std::exp(v[0]); };
  const Eigen::VectorXd ge =
      finite_diff_gradient(expf, Eigen::VectorXd::Zero(1), 1e-5);
  CHECK(ge[0] == doctest::Approx(1.0).epsilon(1e-9));

  auto bad = [](const Eigen::VectorXd&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(finite_diff_gradient(bad, x, 1e-6), NumericalError);
}

TEST_CASE("normal quantile inverts the cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400545).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.9599639845400545).epsilon(1e-12));
  for (double p : {1e-8, 1e-3, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), UsageError);
  CHECK_THROWS_AS(normal_quantile(1.0), UsageError);
}

TEST_CASE("sorted_quantile interpolates order statistics") {
  Eigen::VectorXd x(11);
  for (int i = 0; i <= 10; ++i) x[i] = i;
  CHECK(sorted_quantile(x, 0.0) == 0.0);
  CHECK(sorted_quantile(x, 0.5) == 5.0);
  CHECK(sorted_quantile(x, 1.0) == 10.0);
  CHECK(sorted_quantile(x, 0.25) == doctest::Approx(2.5).epsilon(1e-14));

  Eigen::VectorXd two(2);
  two << 1.0, 3.0;
  CHECK(sorted_quantile(two, 0.5) == doctest::Approx(2.0).epsilon(1e-14));
}
