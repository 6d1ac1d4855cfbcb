#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sdegp/errors.hpp"
#include "sdegp/kernels.hpp"
#include "sdegp/numerics.hpp"
#include "sdegp/rng.hpp"

using namespace sdegp;

namespace {

Eigen::VectorXd theta2(double a, double b) {
  Eigen::VectorXd t(2);
  t << a, b;
  return t;
}

KernelSpec se_const(double theta0, double theta1, double amplitude,
                    double jitter = 0.0) {
  return make_kernel(KernelFamily::SquaredExpPlusConst, theta2(theta0, theta1),
                     amplitude, jitter);
}

// Random spec of the given family with hyperparameters inside the default box.
KernelSpec random_spec(KernelFamily family, double amplitude, Rng& rng) {
  const double l = rng.uniform(0.1, 3.0);
  Eigen::VectorXd theta;
  switch (family) {
    case KernelFamily::SquaredExpPlusConst:
      theta = theta2(rng.uniform(0.0, amplitude), 1.0 / (l * l));
      break;
    case KernelFamily::SumOfTwoSquaredExp: {
      const double l2 = rng.uniform(0.1, 3.0);
      theta.resize(3);
      theta << rng.uniform(0.0, amplitude), 1.0 / (l * l), 1.0 / (l2 * l2);
      break;
    }
    case KernelFamily::RationalQuadratic:
      theta = theta2(rng.uniform(0.2, 10.0), l);
      break;
  }
  return make_kernel(family, theta, amplitude, default_jitter(amplitude));
}

}  // namespace

TEST_CASE("self-covariance equals the amplitude for every family") {
  CHECK(eval_kernel(se_const(1.0, 2.0, 1.0), 0.7, 0.7) == 1.0);
  CHECK(eval_kernel(se_const(0.3, 5.0, 2.5), -1.2, -1.2) == 2.5);

  Eigen::VectorXd t3(3);
  t3 << 0.4, 1.0, 9.0;
  const KernelSpec two =
      make_kernel(KernelFamily::SumOfTwoSquaredExp, t3, 1.5, 0.0);
  CHECK(eval_kernel(two, 2.0, 2.0) == 1.5);

  const KernelSpec rq =
      make_kernel(KernelFamily::RationalQuadratic, theta2(1.7, 0.8), 3.0, 0.0);
  CHECK(eval_kernel(rq, -4.0, -4.0) == 3.0);
}

TEST_CASE("squared-exponential value at unit distance") {
  const KernelSpec k = se_const(1.0, 2.0, 1.0);
  CHECK(eval_kernel(k, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(eval_kernel(k, 0.0, 1.0) == doctest::Approx(0.367879441).epsilon(1e-8));
}

TEST_CASE("constant part survives at large separation") {
  const KernelSpec k = se_const(0.6, 2.0, 1.0);
  CHECK(eval_kernel(k, 0.0, 1e8) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("invalid hyperparameters are rejected") {
  CHECK_THROWS_AS(se_const(1.5, 2.0, 1.0), ConfigError);   // theta0 > A
  CHECK_THROWS_AS(se_const(-0.1, 2.0, 1.0), ConfigError);  // theta0 < 0
  CHECK_THROWS_AS(se_const(0.5, 0.0, 1.0), ConfigError);   // theta1 <= 0
  CHECK_THROWS_AS(se_const(0.5, 2.0, -1.0), ConfigError);  // amplitude <= 0
  CHECK_THROWS_AS(se_const(0.5, 2.0, 1.0, -1e-9), ConfigError);
  CHECK_THROWS_AS(
      make_kernel(KernelFamily::RationalQuadratic, theta2(-1.0, 0.5), 1.0, 0.0),
      ConfigError);
  CHECK_THROWS_AS(make_kernel(KernelFamily::SquaredExpPlusConst,
                              Eigen::VectorXd::Ones(3), 1.0, 0.0),
                  ConfigError);  // wrong theta length
}

TEST_CASE("cov_matrix applies jitter exactly once on the diagonal") {
  Eigen::VectorXd x(1);
  x << 0.0;
  const KernelSpec k = se_const(1.0, 2.0, 1.0, 1e-6);
  const Eigen::MatrixXd m = cov_matrix(k, x, x, true);
  CHECK(m(0, 0) == 1.000001);

  // Without self_cov the jitter must not appear.
  CHECK(cov_matrix(k, x, x, false)(0, 0) == 1.0);
}

TEST_CASE("cov_matrix matches elementwise kernel evaluation") {
  Eigen::VectorXd xs(2), ys(1);
  xs << 0.0, 1.0;
  ys << 0.0;
  const KernelSpec k = se_const(1.0, 2.0, 1.0);
  const Eigen::MatrixXd m = cov_matrix(k, xs, ys, false);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 1);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  Rng rng(101);
  for (const KernelFamily family :
       {KernelFamily::SquaredExpPlusConst, KernelFamily::SumOfTwoSquaredExp,
        KernelFamily::RationalQuadratic}) {
    const KernelSpec spec = random_spec(family, 2.0, rng);
    Eigen::VectorXd a(7), b(5);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(-3.0, 3.0);
    for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = rng.uniform(-3.0, 3.0);
    const Eigen::MatrixXd full = cov_matrix(spec, a, b, false);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      for (Eigen::Index j = 0; j < b.size(); ++j)
        CHECK(full(i, j) ==
              doctest::Approx(eval_kernel(spec, a[i], b[j])).epsilon(1e-13));
  }
}

TEST_CASE("self covariance is symmetric and positive definite") {
  Rng rng(7);
  for (const KernelFamily family :
       {KernelFamily::SquaredExpPlusConst, KernelFamily::SumOfTwoSquaredExp,
        KernelFamily::RationalQuadratic}) {
    for (int trial = 0; trial < 100; ++trial) {
      const double amplitude = rng.uniform(0.5, 10.0);
      const KernelSpec spec = random_spec(family, amplitude, rng);
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 18);
      Eigen::VectorXd x(n);
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(-5.0, 5.0);
      const Eigen::MatrixXd k = cov_matrix(spec, x, x, true);
      CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * amplitude);
      CHECK_NOTHROW(factor_psd(k));
      // Diagonal is exactly A + jitter.
      for (Eigen::Index i = 0; i < n; ++i)
        CHECK(k(i, i) == amplitude + spec.jitter);
    }
  }
}

TEST_CASE("squared-exponential covariance decays with distance") {
  const KernelSpec k = se_const(0.7, 1.3, 1.0);
  double prev = eval_kernel(k, 0.0, 0.0);
  for (double r = 0.1; r < 10.0; r += 0.1) {
    const double cur = eval_kernel(k, 0.0, r);
    CHECK(cur <= prev + 1e-15);
    CHECK(cur >= 1.0 - 0.7 - 1e-15);  // bounded below by A - theta0
    prev = cur;
  }
}

TEST_CASE("rational quadratic matches its closed form") {
  const double alpha = 1.7, l = 0.8, amplitude = 3.0;
  const KernelSpec k = make_kernel(KernelFamily::RationalQuadratic,
                                   theta2(alpha, l), amplitude, 0.0);
  for (double r : {0.3, 1.0, 2.5}) {
    const double expected =
        amplitude * std::pow(1.0 + r * r / (2.0 * alpha * l * l), -alpha);
    CHECK(eval_kernel(k, 0.0, r) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("length-scale bounds convert to theta1 bounds") {
  const KernelSpec k = se_const(0.5, 1.0, 1.0);
  SUBCASE("explicit bounds") {
    const HyperBounds b = bounds_from_length_scales(k, 0.25, 2.0);
    CHECK(b.lower[0] == 0.0);
    CHECK(b.upper[0] == 1.0);  // theta0 in [0, A]
    CHECK(b.lower[1] == doctest::Approx(0.25).epsilon(1e-14));   // 1 / 2^2
    CHECK(b.upper[1] == doctest::Approx(16.0).epsilon(1e-14));   // 1 / 0.25^2
  }
  SUBCASE("default rule: [0.05, 2] times the data range") {
    const HyperBounds b = default_bounds(k, 1.0);
    CHECK(b.lower[1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(b.upper[1] == doctest::Approx(400.0).epsilon(1e-14));
    CHECK_THROWS_AS(default_bounds(k, 0.0), ConfigError);
  }
  SUBCASE("rational quadratic boxes alpha too") {
    const KernelSpec rq = make_kernel(KernelFamily::RationalQuadratic,
                                      theta2(1.0, 0.5), 1.0, 0.0);
    const HyperBounds b = bounds_from_length_scales(rq, 0.25, 2.0, 0.1, 20.0);
    CHECK(b.lower[0] == 0.1);
    CHECK(b.upper[0] == 20.0);
    CHECK(b.lower[1] == 0.25);
    CHECK(b.upper[1] == 2.0);
  }
}

TEST_CASE("family names round-trip") {
  for (const KernelFamily family :
       {KernelFamily::SquaredExpPlusConst, KernelFamily::SumOfTwoSquaredExp,
        KernelFamily::RationalQuadratic})
    CHECK(family_from_name(family_name(family)) == family);
  CHECK_THROWS_AS(family_from_name("matern"), UsageError);
  CHECK(theta_size(KernelFamily::SquaredExpPlusConst) == 2);
  CHECK(theta_size(KernelFamily::SumOfTwoSquaredExp) == 3);
  CHECK(theta_size(KernelFamily::RationalQuadratic) == 2);
}

TEST_CASE("default jitter scales with the amplitude") {
  CHECK(default_jitter(1.0) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(default_jitter(25.0) == doctest::Approx(25e-6).epsilon(1e-12));
}
