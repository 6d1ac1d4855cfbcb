#include "sdegp/simulator.hpp"

#include <cmath>

#include "sdegp/errors.hpp"
#include "sdegp/rng.hpp"

namespace sdegp {

double em_step(const ModelSpec& model, double x, double dt, double dw,
               long* clipped) {
  const double f = model.drift(x);
  const double g = model.diffusion(x);
  if (!std::isfinite(f))
    throw SimulationError("non-finite drift at x = " + std::to_string(x));
  if (!std::isfinite(g) || g < 0.0)
    throw SimulationError("invalid diffusion at x = " + std::to_string(x));

  double next = x + f * dt + std::sqrt(g) * dw;
  if (model.lower_wall && next < *model.lower_wall) {
    next = *model.lower_wall;
    if (clipped) ++*clipped;
  }
  if (model.upper_wall && next > *model.upper_wall) {
    next = *model.upper_wall;
    if (clipped) ++*clipped;
  }
  return next;
}

Dataset simulate(const ModelSpec& model, const SimConfig& cfg, SimStats* stats) {
  if (cfg.n_samples < 2)
    throw ConfigError("simulate: n_samples must be at least 2");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw ConfigError("simulate: dt must be positive and finite");
  if (cfg.burn_in < 0) throw ConfigError("simulate: burn_in must be nonnegative");
  if (!std::isfinite(cfg.x0)) throw ConfigError("simulate: x0 must be finite");
  if (!model.drift || !model.diffusion)
    throw UsageError("simulate: model is missing drift or diffusion");

  Rng rng(cfg.seed);
  const double sqrt_dt = std::sqrt(cfg.dt);
  long clipped = 0;
  long step_index = 0;
  const auto advance = [&](double x) {
    try {
      const double next = em_step(model, x, cfg.dt, sqrt_dt * rng.normal(), &clipped);
      ++step_index;
      return next;
    } catch (const SimulationError& e) {
      throw SimulationError(std::string(e.what()) + " (step " +
                            std::to_string(step_index) + ")");
    }
  };

  double x = cfg.x0;
  for (Eigen::Index k = 0; k < cfg.burn_in; ++k) x = advance(x);

  Eigen::VectorXd samples(cfg.n_samples);
  samples[0] = x;
  for (Eigen::Index i = 1; i < cfg.n_samples; ++i) {
    x = advance(x);
    samples[i] = x;
  }
  if (stats) stats->clipped = clipped;
  return Dataset::from_samples(std::move(samples), cfg.dt);
}

ModelSpec builtin_model(const std::string& id) {
  const double delta = 1e-6;
  if (id == "M1")  // Ornstein-Uhlenbeck around 3, constant variance rate 2
    return {"M1", [](double x) { return -(x - 3.0); },
            [](double) { return 2.0; }, std::nullopt, std::nullopt};
  if (id == "M2")  // double well
    return {"M2", [](double x) { return -(x * x * x - x); },
            [](double) { return 1.0; }, std::nullopt, std::nullopt};
  if (id == "M3")  // cubic drift, quadratic noise amplitude
    return {"M3", [](double x) { return -x * x * x; },
            [](double x) {
              const double s = 0.2 + x * x;
              return s * s;
            },
            std::nullopt, std::nullopt};
  if (id == "M4")  // Wright-Fisher-like on (0, 1)
    return {"M4", [](double x) { return -0.7 * (x - 0.5); },
            [](double x) { return 0.7 * x * (1.0 - x); }, delta, 1.0 - delta};
  if (id == "M5")  // CIR-like on (0, inf)
    return {"M5", [](double x) { return -(x - 0.225); },
            [](double x) { return 0.25 * x; }, delta, std::nullopt};
  if (id == "M6")  // oscillating drift, constant noise
    return {"M6",
            [](double x) { return -x + std::sin(3.5 * x) * std::exp(-x * x); },
            [](double) { return 0.431 * 0.431; }, std::nullopt, std::nullopt};
  throw UsageError("unknown model id: " + id + " (expected M1..M6)");
}

double builtin_default_x0(const std::string& id) {
  if (id == "M1") return 3.0;
  if (id == "M2") return 1.0;  // stable well; the origin is unstable
  if (id == "M3") return 0.0;
  if (id == "M4") return 0.5;
  if (id == "M5") return 0.225;
  if (id == "M6") return 0.0;
  throw UsageError("unknown model id: " + id + " (expected M1..M6)");
}

}  // namespace sdegp
