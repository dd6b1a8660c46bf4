#pragma once

// Deterministic, platform-independent randomness. Everything downstream
// (instance sampling, PGD restarts, benchmark seeding) goes through this so
// that a recorded seed replays to bit-identical results on any machine.
// std::mt19937 + std::normal_distribution would be stdlib, but
// normal_distribution's output is implementation-defined, which breaks the
// replay contract; splitmix64 + Box-Muller is pinned down exactly.

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace mixattack {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Stable derivation of per-task seeds from a base seed and an index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  std::uint64_t a = detail::splitmix64(s);
  std::uint64_t b = detail::splitmix64(s);
  return a ^ (b << 1);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the second draw.
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // (0, 1] to keep log finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  // Uniform over the L2 ball of the given radius (d dims): direction from a
  // normalized Gaussian, radius from the d-th root of a uniform.
  Eigen::VectorXd uniform_in_l2_ball(int d, double radius) {
    Eigen::VectorXd g = gaussian_vector(d);
    double n = g.norm();
    if (n < 1e-300) return Eigen::VectorXd::Zero(d);
    double r = radius * std::pow(uniform(), 1.0 / d);
    return g * (r / n);
  }

  Eigen::VectorXd uniform_in_linf_ball(int d, double radius) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = uniform(-radius, radius);
    return v;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace mixattack
