#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lsf/types.hpp"

namespace lsf {

/// mt19937_64 with distribution code that does not depend on the standard
/// library implementation, so seeds reproduce across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u == 0.0) u = uniform();
    const double v = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u));
    spare_ = rad * std::sin(kTwoPi * v);
    has_spare_ = true;
    return rad * std::cos(kTwoPi * v);
  }

  Vec normal_vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  /// Uniformly distributed unit vector.
  Vec unit_vector(Eigen::Index n) {
    Vec v = normal_vector(n);
    return v / v.norm();
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lsf
