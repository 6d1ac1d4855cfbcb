#pragma once

#include <Eigen/Core>

#include "sdegp/dataset.hpp"

namespace sdegp {

/// Histogram regression of drift and squared-increment diffusion. Bins cover
/// [min, max] of the N increment base points; the last edge is inclusive.
/// Empty bins leave NaN in f_hat/g_hat.
struct BinnedEstimate {
  Eigen::VectorXd edges;  // n_bins + 1
  Eigen::VectorXd centers;
  Eigen::VectorXd f_hat;  // mean(dx | bin) / dt
  Eigen::VectorXd g_hat;  // mean(dx^2 | bin) / dt
  Eigen::VectorXi counts;
};

BinnedEstimate binning_estimator(const Dataset& data, int n_bins);

/// Kernel-weighted (Nadaraya-Watson) regression on a grid with Gaussian
/// weights w_i = exp(-(x - x_i)^2 / 2h^2). bandwidth <= 0 selects the
/// Silverman rule on the base points. Grid points whose weights all underflow
/// get NaN.
struct CurveEstimate {
  Eigen::VectorXd grid;
  Eigen::VectorXd f_hat;
  Eigen::VectorXd g_hat;
  double bandwidth = 0.0;
};

CurveEstimate nw_estimator(const Dataset& data, double bandwidth,
                           const Eigen::VectorXd& grid);

}  // namespace sdegp
