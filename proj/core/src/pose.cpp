#include "ephemera/pose.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ephemera/errors.hpp"

namespace ephemera {

double orthonormality_drift(const Mat3& rotation) {
  return (rotation.transpose() * rotation - Mat3::Identity())
      .cwiseAbs()
      .maxCoeff();
}

Pose Pose::from_matrix(const Mat3& rotation, const Vec3& translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ValidationError("pose has non-finite entries");
  }
  const double det = rotation.determinant();
  if (det < 0.0) {
    throw ValidationError("pose rotation is a reflection (det < 0)");
  }
  const double drift = orthonormality_drift(rotation);
  if (drift > kOrthonormalTolerance || std::abs(det - 1.0) > kOrthonormalTolerance) {
    std::ostringstream msg;
    msg << "pose rotation is not orthonormal (drift " << drift << ", det " << det
        << ")";
    throw ValidationError(msg.str());
  }
  return Pose(rotation, translation);
}

Pose Pose::from_matrix_reorthonormalized(const Mat3& rotation,
                                         const Vec3& translation,
                                         double max_drift) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ValidationError("pose has non-finite entries");
  }
  if (rotation.determinant() <= 0.0) {
    throw ValidationError("pose rotation is a reflection (det <= 0)");
  }
  const double drift = orthonormality_drift(rotation);
  if (drift > max_drift) {
    std::ostringstream msg;
    msg << "pose rotation drift " << drift << " exceeds " << max_drift;
    throw ValidationError(msg.str());
  }
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 projected = svd.matrixU() * svd.matrixV().transpose();
  return from_matrix(projected, translation);
}

Pose Pose::from_yaw(double yaw, const Vec3& translation) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return Pose(r, translation);
}

Pose Pose::compose(const Pose& inner) const {
  return Pose(rotation_ * inner.rotation_,
              rotation_ * inner.translation_ + translation_);
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return Pose(rt, -(rt * translation_));
}

double Pose::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

}  // namespace ephemera
