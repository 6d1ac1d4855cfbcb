#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdegp/errors.hpp"
#include "sdegp/evaluation.hpp"
#include "sdegp/predict.hpp"

using namespace sdegp;

TEST_CASE("Silverman bandwidth on a sample with unit standard deviation") {
  // 50 points at -c and 50 at +c with c chosen so the unbiased sd is exactly
  // 1; the IQR term (2c / 1.34) then exceeds the sd, so h = 0.9 n^(-1/5).
  const double c = std::sqrt(99.0 / 100.0);
  Eigen::VectorXd x(100);
  x.head(50).setConstant(-c);
  x.tail(50).setConstant(c);
  const double h = silverman_bandwidth(x);
  CHECK(h == doctest::Approx(0.9 * std::pow(100.0, -0.2)).epsilon(1e-12));
}

TEST_CASE("Silverman bandwidth picks the smaller spread measure") {
  // Heavy tails inflate the sd; the IQR side should win.  With linearly
  // interpolated quantiles at p(n-1), Q1 = x[2] + 0.25 (x[3] - x[2]) and
  // Q3 = x[6] + 0.75 (x[7] - x[6]).
  Eigen::VectorXd x(10);
  x << -100.0, -1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0, 100.0;
  const double iqr = 0.6875 - (-0.6875);
  const double expected = 0.9 * (iqr / 1.34) * std::pow(10.0, -0.2);
  CHECK(silverman_bandwidth(x) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(silverman_bandwidth(Eigen::VectorXd::Ones(50)), ConfigError);
  CHECK_THROWS_AS(silverman_bandwidth(Eigen::VectorXd::Ones(1)), ConfigError);
}

TEST_CASE("kernel density estimate integrates to one") {
  Eigen::VectorXd x(200);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = std::sin(0.7 * static_cast<double>(i)) +
           0.3 * std::cos(1.3 * static_cast<double>(i));
  const Eigen::VectorXd grid = linspace(x.minCoeff() - 2.0, x.maxCoeff() + 2.0, 600);
  const KdeResult kde = kde_density(x, grid);
  CHECK(kde.bandwidth > 0.0);
  CHECK((kde.density.array() >= 0.0).all());

  double integral = 0.0;
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
    integral +=
        0.5 * (kde.density[i] + kde.density[i + 1]) * (grid[i + 1] - grid[i]);
  CHECK(integral == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("symmetric samples give a symmetric density") {
  Eigen::VectorXd x(8);
  x << -2.0, -1.5, -0.5, -0.1, 0.1, 0.5, 1.5, 2.0;
  const Eigen::VectorXd grid = linspace(-3.0, 3.0, 301);
  const KdeResult kde = kde_density(x, grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Eigen::Index j = grid.size() - 1 - i;
    CHECK(kde.density[i] == doctest::Approx(kde.density[j]).epsilon(1e-10));
  }
}

TEST_CASE("integrated error vanishes for a perfect estimate") {
  const Eigen::VectorXd grid = linspace(-1.0, 1.0, 64);
  Eigen::VectorXd est(64), density(64);
  for (Eigen::Index i = 0; i < 64; ++i) {
    est[i] = grid[i] * grid[i];
    density[i] = 0.5;  // uniform on [-1, 1]
  }
  auto truth = [](double x) { return x * x; };
  CHECK(integrated_error(truth, grid, est, density) == 0.0);
}

TEST_CASE("constant offset integrates to the offset") {
  const Eigen::VectorXd grid = linspace(0.0, 2.0, 101);
  Eigen::VectorXd est(101), density(101);
  for (Eigen::Index i = 0; i < 101; ++i) {
    est[i] = std::sin(grid[i]) + 0.37;
    density[i] = 0.5;  // integrates to 1 over [0, 2]
  }
  auto truth = [](double x) { return std::sin(x); };
  CHECK(integrated_error(truth, grid, est, density) ==
        doctest::Approx(0.37).epsilon(1e-10));
}

TEST_CASE("hand-computed trapezoid on five points") {
  Eigen::VectorXd grid(5), est(5), density(5);
  grid << 0.0, 1.0, 2.0, 3.0, 4.0;
  est << 1.0, 2.0, 0.0, 0.0, 3.0;     // |diff| = 1, 2, 0, 0, 3
  density << 0.5, 0.25, 0.25, 0.5, 0.25;
  auto truth = [](double) { return 0.0; };
  // Panels: (0.5*1 + 0.25*2)/2 + (0.25*2 + 0.25*0)/2 + 0 + (0.5*0 + 0.25*3)/2
  const double expected = 0.5 + 0.25 + 0.0 + 0.375;
  CHECK(integrated_error(truth, grid, est, density) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("NaN estimate points contribute nothing") {
  Eigen::VectorXd grid(3), est(3), density(3);
  grid << 0.0, 1.0, 2.0;
  est << 1.0, std::numeric_limits<double>::quiet_NaN(), 1.0;
  density << 1.0, 1.0, 1.0;
  auto truth = [](double) { return 0.0; };
  // The NaN point's integrand is dropped; its neighbours still contribute
  // their halves of the adjoining panels.
  CHECK(integrated_error(truth, grid, est, density) ==
        doctest::Approx(1.0).epsilon(1e-12));

  est[1] = 1.0;
  CHECK(integrated_error(truth, grid, est, density) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("negligible-density regions are excluded") {
  Eigen::VectorXd grid(4), est(4), density(4);
  grid << 0.0, 1.0, 2.0, 3.0;
  est << 5e20, 1.0, 1.0, 7e20;
  density << 1e-30, 1.0, 1.0, 1e-30;  // ends carry no mass
  auto truth = [](double) { return 0.0; };
  // The huge end-point estimates sit below the density threshold, so they are
  // zeroed; the interior contributes 0.5 + 1.0 + 0.5.
  CHECK(integrated_error(truth, grid, est, density) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("grid size mismatches are rejected") {
  const Eigen::VectorXd grid = linspace(0.0, 1.0, 4);
  auto truth = [](double) { return 0.0; };
  CHECK_THROWS_AS(integrated_error(truth, grid, Eigen::VectorXd::Zero(3),
                                   Eigen::VectorXd::Ones(4)),
                  UsageError);
  CHECK_THROWS_AS(integrated_error(truth, grid, Eigen::VectorXd::Zero(4),
                                   Eigen::VectorXd::Ones(5)),
                  UsageError);
}

TEST_CASE("truth estimator scores zero errors") {
  BenchmarkConfig cfg;
  cfg.models = {"M1"};
  cfg.estimators = {"truth"};
  cfg.replicates = 1;
  cfg.seed = 5;
  cfg.n_samples = 501;
  cfg.dt = 0.01;
  const ErrorTable table = benchmark(cfg);
  REQUIRE(table.records.size() == 2);
  for (const ErrorRecord& r : table.records) {
    CHECK_FALSE(r.failed);
    CHECK(r.error == 0.0);
  }
  CHECK(table.mean_error("M1", "truth", "drift") == 0.0);
  CHECK(table.success_count("M1", "truth", "diffusion") == 1);
}

TEST_CASE("benchmark is deterministic and ordered") {
  BenchmarkConfig cfg;
  cfg.models = {"M1", "M3"};
  cfg.estimators = {"binning", "nw"};
  cfg.replicates = 2;
  cfg.seed = 99;
  cfg.n_samples = 1001;
  cfg.dt = 0.001;
  const ErrorTable a = benchmark(cfg);
  const ErrorTable b = benchmark(cfg);
  REQUIRE(a.records.size() == b.records.size());
  REQUIRE(a.records.size() == 2 * 2 * 2 * 2);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].model == b.records[i].model);
    CHECK(a.records[i].estimator == b.records[i].estimator);
    CHECK(a.records[i].coefficient == b.records[i].coefficient);
    CHECK(a.records[i].replicate == b.records[i].replicate);
    // bit-identical, not merely close
    CHECK(a.records[i].error == b.records[i].error);
  }
  // Records follow (model, replicate, estimator, coefficient) order.
  CHECK(a.records[0].model == "M1");
  CHECK(a.records[0].replicate == 0);
  CHECK(a.records.back().model == "M3");
  CHECK(a.records.back().replicate == 1);
}

TEST_CASE("failing replicates are recorded, not dropped") {
  BenchmarkConfig cfg;
  cfg.models = {"M1"};
  cfg.estimators = {"sgp", "binning"};
  cfg.replicates = 2;
  cfg.seed = 3;
  cfg.n_samples = 301;
  cfg.dt = 0.01;
  cfg.fit.m = 100000;  // more pseudo-inputs than distinct samples: fit fails
  cfg.fit.restarts = 1;
  const ErrorTable table = benchmark(cfg);
  int sgp_failures = 0;
  for (const ErrorRecord& r : table.records) {
    if (r.estimator == "sgp") {
      CHECK(r.failed);
      CHECK(std::isnan(r.error));
      CHECK_FALSE(r.message.empty());
      ++sgp_failures;
    } else {
      CHECK_FALSE(r.failed);
    }
  }
  CHECK(sgp_failures == 4);
  CHECK(std::isnan(table.mean_error("M1", "sgp", "drift")));
  CHECK(table.success_count("M1", "sgp", "drift") == 0);
  CHECK(table.success_count("M1", "binning", "drift") == 2);
}

TEST_CASE("unknown estimators and models are rejected up front") {
  BenchmarkConfig cfg;
  cfg.models = {"M1"};
  cfg.estimators = {"magic"};
  cfg.replicates = 1;
  CHECK_THROWS_AS(benchmark(cfg), ConfigError);
  cfg.estimators = {"binning"};
  cfg.models = {"M9"};
  CHECK_THROWS_AS(benchmark(cfg), UsageError);
  cfg.models = {"M1"};
  cfg.replicates = 0;
  CHECK_THROWS_AS(benchmark(cfg), ConfigError);
}
