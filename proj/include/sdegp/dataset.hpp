#pragma once

#include <Eigen/Core>
#include <string>

namespace sdegp {

/// Uniformly sampled scalar time series with cached increments. samples has
/// length N + 1, increments[i] = samples[i+1] - samples[i] for i = 0..N-1.
struct Dataset {
  Eigen::VectorXd samples;
  double dt = 0.0;
  Eigen::VectorXd increments;

  /// Validates (N >= 2, dt > 0, all values finite) and caches increments.
  static Dataset from_samples(Eigen::VectorXd samples, double dt);

  Eigen::Index n() const { return increments.size(); }
  double min() const { return samples.minCoeff(); }
  double max() const { return samples.maxCoeff(); }
  double range() const { return max() - min(); }

  /// FNV-1a over dt and the raw sample bytes; identifies the series a model
  /// was fitted to.
  std::string fingerprint() const;
};

}  // namespace sdegp
