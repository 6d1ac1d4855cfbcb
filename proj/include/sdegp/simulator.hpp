#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "sdegp/dataset.hpp"

namespace sdegp {

/// Scalar SDE dx = drift(x) dt + sqrt(diffusion(x)) dW. diffusion returns
/// g(x) >= 0 (the variance rate, not its square root). Optional domain walls
/// clamp the Euler-Maruyama iterate (counted, not silently ignored).
struct ModelSpec {
  std::string name;
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;
  std::optional<double> lower_wall;
  std::optional<double> upper_wall;
};

struct SimConfig {
  Eigen::Index n_samples = 0;  // series length N + 1
  double dt = 0.0;
  double x0 = 0.0;
  std::uint64_t seed = 0;
  Eigen::Index burn_in = 0;  // steps discarded before sample 0 is recorded
};

struct SimStats {
  long clipped = 0;  // iterates pulled back to a domain wall
};

/// One Euler-Maruyama step x + f(x) dt + sqrt(g(x)) dW, clamped to the walls.
/// Throws SimulationError on non-finite drift or diffusion.
double em_step(const ModelSpec& model, double x, double dt, double dw,
               long* clipped = nullptr);

/// Simulates n_samples states at spacing dt after burn_in unrecorded steps.
/// Fully determined by cfg.seed.
Dataset simulate(const ModelSpec& model, const SimConfig& cfg,
                 SimStats* stats = nullptr);

/// Benchmark models "M1".."M6" (Ornstein-Uhlenbeck, double well, cubic drift
/// with quadratic noise, Wright-Fisher-like on (0,1), CIR-like on (0,inf),
/// oscillating drift with constant noise). Throws UsageError on unknown ids.
ModelSpec builtin_model(const std::string& id);

/// Default initial state: a fixed point of the drift.
double builtin_default_x0(const std::string& id);

}  // namespace sdegp
