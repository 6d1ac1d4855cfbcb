#include "sdegp/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>

#include "sdegp/errors.hpp"

namespace sdegp {

Dataset Dataset::from_samples(Eigen::VectorXd samples, double dt) {
  if (samples.size() < 3)
    throw ConfigError("dataset needs at least 3 samples (2 increments), got " +
                      std::to_string(samples.size()));
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ConfigError("dataset dt must be positive and finite");
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      throw ConfigError("dataset sample " + std::to_string(i) + " is not finite");

  Dataset d;
  d.dt = dt;
  d.increments = samples.tail(samples.size() - 1) - samples.head(samples.size() - 1);
  d.samples = std::move(samples);
  return d;
}

std::string Dataset::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(&dt, sizeof dt);
  mix(samples.data(), sizeof(double) * static_cast<std::size_t>(samples.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sdegp
