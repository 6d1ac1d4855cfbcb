#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace sdegp {

/// Deterministic, splittable pseudo-random generator: xoshiro256++ seeded
/// through splitmix64. All draws (uniform, normal via Box-Muller) are produced
/// from explicit integer arithmetic so results are bit-identical across
/// platforms and standard-library versions. Streams derived with split() from
/// the same base seed are independent and reproducible.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : base_seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  /// Seed for a child stream; split(k) == Rng(derive_seed(k)).
  std::uint64_t derive_seed(std::uint64_t stream) const {
    std::uint64_t sm = base_seed_ ^ (0x9e3779b97f4a7c15ull + stream * 0xbf58476d1ce4e5b9ull);
    std::uint64_t a = splitmix64(sm);
    std::uint64_t b = splitmix64(sm);
    return a ^ (b << 1);
  }

  Rng split(std::uint64_t stream) const { return Rng(derive_seed(stream)); }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t base_seed_ = 0;
  std::uint64_t s_[4] = {0, 0, 0, 0};
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sdegp
