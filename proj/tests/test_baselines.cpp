#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdegp/baselines.hpp"
#include "sdegp/errors.hpp"
#include "sdegp/predict.hpp"
#include "sdegp/simulator.hpp"

using namespace sdegp;

namespace {

Dataset ramp_dataset() {
  Eigen::VectorXd x(4);
  x << 0.0, 1.0, 2.0, 3.0;
  return Dataset::from_samples(x, 1.0);
}

}  // namespace

TEST_CASE("single-bin histogram averages all increments") {
  const BinnedEstimate est = binning_estimator(ramp_dataset(), 1);
  REQUIRE(est.f_hat.size() == 1);
  CHECK(est.f_hat[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(est.g_hat[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(est.counts[0] == 3);
  CHECK(est.edges.size() == 2);
  CHECK(est.centers[0] == doctest::Approx(1.0).epsilon(1e-14));  // (0 + 2) / 2
}

TEST_CASE("constant increments give f_hat = c / dt in every occupied bin") {
  Eigen::VectorXd x(6);
  x << 0.0, 0.5, 1.0, 1.5, 2.0, 2.5;
  const Dataset data = Dataset::from_samples(x, 0.25);
  const BinnedEstimate est = binning_estimator(data, 3);
  for (Eigen::Index b = 0; b < 3; ++b) {
    if (est.counts[b] == 0) continue;
    CHECK(est.f_hat[b] == doctest::Approx(0.5 / 0.25).epsilon(1e-14));
    CHECK(est.g_hat[b] == doctest::Approx(0.25 / 0.25).epsilon(1e-14));
  }
}

TEST_CASE("empty bins are flagged with NaN and zero counts") {
  Eigen::VectorXd x(8);
  // Two clusters at the ends, nothing in the middle of the range.
  x << 0.0, 0.1, 0.05, 0.12, 10.0, 10.1, 10.05, 10.2;
  const Dataset data = Dataset::from_samples(x, 1.0);
  const BinnedEstimate est = binning_estimator(data, 6);
  bool saw_empty = false;
  for (Eigen::Index b = 0; b < 6; ++b) {
    if (est.counts[b] == 0) {
      saw_empty = true;
      CHECK(std::isnan(est.f_hat[b]));
      CHECK(std::isnan(est.g_hat[b]));
    } else {
      CHECK(std::isfinite(est.f_hat[b]));
      CHECK(est.g_hat[b] >= 0.0);
    }
  }
  CHECK(saw_empty);
}

TEST_CASE("bin count validation") {
  CHECK_THROWS_AS(binning_estimator(ramp_dataset(), 0), ConfigError);
  // More bins than increment base points.
  CHECK_THROWS_AS(binning_estimator(ramp_dataset(), 4), ConfigError);
}

TEST_CASE("Brownian diffusion lands near truth in well-filled bins") {
  ModelSpec brown;
  brown.drift = [](double) { return 0.0; };
  brown.diffusion = [](double) { return 1.0; };
  SimConfig cfg;
  cfg.n_samples = 100001;
  cfg.dt = 0.01;
  cfg.seed = 31;
  const Dataset data = simulate(brown, cfg);
  const BinnedEstimate est = binning_estimator(data, 20);
  // Central bins hold the bulk of the samples; check the five around the
  // middle of the range.
  Eigen::Index checked = 0;
  for (Eigen::Index b = 8; b <= 12; ++b) {
    if (est.counts[b] < 1000) continue;
    CHECK(est.g_hat[b] >= 0.9);
    CHECK(est.g_hat[b] <= 1.1);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("kernel regression reproduces constant increments everywhere") {
  Eigen::VectorXd x(6);
  x << 0.0, 0.5, 1.0, 1.5, 2.0, 2.5;
  const Dataset data = Dataset::from_samples(x, 0.25);
  const Eigen::VectorXd grid = linspace(0.0, 2.5, 11);
  const CurveEstimate est = nw_estimator(data, 0.3, grid);
  REQUIRE(est.grid.size() == 11);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(est.f_hat[i] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(est.g_hat[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("infinite-bandwidth kernel regression equals the single bin") {
  ModelSpec brown;
  brown.drift = [](double x) { return -x; };
  brown.diffusion = [](double) { return 0.5; };
  SimConfig cfg;
  cfg.n_samples = 2001;
  cfg.dt = 0.01;
  cfg.seed = 17;
  const Dataset data = simulate(brown, cfg);

  const BinnedEstimate bin = binning_estimator(data, 1);
  const Eigen::VectorXd grid = linspace(data.min(), data.max(), 7);
  const CurveEstimate nw = nw_estimator(data, 1e9, grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(nw.f_hat[i] == doctest::Approx(bin.f_hat[0]).epsilon(1e-10));
    CHECK(nw.g_hat[i] == doctest::Approx(bin.g_hat[0]).epsilon(1e-10));
  }
}

TEST_CASE("automatic bandwidth is positive and recorded") {
  ModelSpec brown;
  brown.drift = [](double) { return 0.0; };
  brown.diffusion = [](double) { return 1.0; };
  SimConfig cfg;
  cfg.n_samples = 3001;
  cfg.dt = 0.01;
  cfg.seed = 41;
  const Dataset data = simulate(brown, cfg);
  const Eigen::VectorXd grid = linspace(data.min(), data.max(), 5);
  const CurveEstimate est = nw_estimator(data, 0.0, grid);
  CHECK(est.bandwidth > 0.0);
  for (Eigen::Index i = 0; i < grid.size(); ++i) CHECK(est.g_hat[i] >= 0.0);
}

TEST_CASE("grid points beyond all data are flagged undefined") {
  Eigen::VectorXd x(4);
  x << 0.0, 0.1, 0.2, 0.3;
  const Dataset data = Dataset::from_samples(x, 1.0);
  Eigen::VectorXd grid(2);
  grid << 0.15, 1e8;
  const CurveEstimate est = nw_estimator(data, 0.05, grid);
  CHECK(std::isfinite(est.f_hat[0]));
  CHECK(std::isnan(est.f_hat[1]));
  CHECK(std::isnan(est.g_hat[1]));
}

TEST_CASE("nw estimator validates inputs") {
  Eigen::VectorXd grid = linspace(0.0, 1.0, 3);
  // Non-positive bandwidth selects the Silverman rule instead of failing.
  CHECK(nw_estimator(ramp_dataset(), -1.0, grid).bandwidth > 0.0);
  CHECK_THROWS_AS(nw_estimator(ramp_dataset(), 0.5, Eigen::VectorXd()),
                  UsageError);
}
