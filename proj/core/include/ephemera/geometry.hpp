#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace ephemera {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Squared Euclidean distance, evaluated in a fixed order so every
/// radius test in the library agrees bit-for-bit.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Maps an angle to [-pi/2, pi/2). Box headings are only defined modulo pi.
inline double normalize_yaw(double yaw) {
  constexpr double kPi = std::numbers::pi;
  double y = std::fmod(yaw + kPi / 2.0, kPi);
  if (y < 0.0) y += kPi;
  y -= kPi / 2.0;
  // fmod can land exactly on the excluded upper bound after the shift.
  if (y >= kPi / 2.0) y -= kPi;
  return y;
}

/// Smallest absolute difference between two yaws modulo pi.
inline double yaw_distance(double a, double b) {
  return std::abs(normalize_yaw(a - b));
}

}  // namespace ephemera
