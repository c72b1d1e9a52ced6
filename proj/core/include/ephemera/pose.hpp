#pragma once

#include <span>
#include <vector>

#include "ephemera/geometry.hpp"

namespace ephemera {

/// Rigid world-from-sensor transform. Always a proper rotation.
class Pose {
 public:
  /// Tolerance on |R^T R - I| and |det R - 1| accepted by from_matrix.
  static constexpr double kOrthonormalTolerance = 1e-6;

  Pose() = default;

  /// Throws ValidationError if `rotation` is not orthonormal with det +1.
  static Pose from_matrix(const Mat3& rotation, const Vec3& translation);

  /// Like from_matrix but projects rotations whose drift from orthonormality
  /// is at most `max_drift` back onto SO(3) first.
  static Pose from_matrix_reorthonormalized(const Mat3& rotation,
                                            const Vec3& translation,
                                            double max_drift);

  /// Rotation about +z by `yaw` radians followed by `translation`.
  static Pose from_yaw(double yaw, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  /// (*this) after `inner`: x -> this(inner(x)).
  Pose compose(const Pose& inner) const;
  Pose inverse() const;

  /// Heading of the sensor x-axis projected onto the world xy-plane.
  double yaw() const;

 private:
  Pose(const Mat3& r, const Vec3& t) : rotation_(r), translation_(t) {}

  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// Largest absolute entry of R^T R - I.
double orthonormality_drift(const Mat3& rotation);

}  // namespace ephemera
