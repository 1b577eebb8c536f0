#pragma once

// Seeded generators and brute-force oracles shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <random>

#include "facelaser/geometry.hpp"

namespace testutil {

using facelaser::Mat3;
using facelaser::Vec3;

/// Portable uniform and Gaussian draws from a fixed-seed 64-bit Mersenne twister.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * facelaser::kPi * u2);
  }

  Vec3 unit_vector() {
    Vec3 v(gaussian(), gaussian(), gaussian());
    while (v.norm() < 1e-9) v = Vec3(gaussian(), gaussian(), gaussian());
    return v.normalized();
  }

  Vec3 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  /// Uniform rotation from a uniform unit quaternion.
  Mat3 rotation() {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double w = a * std::sin(2.0 * facelaser::kPi * u2);
    const double x = a * std::cos(2.0 * facelaser::kPi * u2);
    const double y = b * std::sin(2.0 * facelaser::kPi * u3);
    const double z = b * std::cos(2.0 * facelaser::kPi * u3);
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
         2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
         2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
    return r;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Rotation by `angle` about unit `axis` built from the outer-product form
/// cos I + sin [a]x + (1 - cos) a a^T.
inline Mat3 rotation_about(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  Mat3 k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return std::cos(angle) * Mat3::Identity() + std::sin(angle) * k + (1 - std::cos(angle)) * a * a.transpose();
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testutil
