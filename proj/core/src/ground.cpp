#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ephemera/seed_labels.hpp"

namespace ephemera {

GroundPlane fallback_ground(const GroundParams& params) {
  GroundPlane g;
  g.normal = Vec3::UnitZ();
  g.offset = params.sensor_height;
  g.fallback = true;
  return g;
}

namespace {

std::size_t count_inliers(std::span<const Vec3> points, const Vec3& normal,
                          double offset, double threshold) {
  std::size_t n = 0;
  for (const Vec3& p : points) {
    if (std::abs(normal.dot(p) + offset) < threshold) ++n;
  }
  return n;
}

}  // namespace

GroundPlane estimate_ground(std::span<const Vec3> points, const GroundParams& params) {
  const std::size_t n = points.size();
  if (n < params.min_points || n < 3) return fallback_ground(params);

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::size_t best_count = 0;
  Vec3 best_normal = Vec3::UnitZ();
  double best_offset = 0.0;
  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const std::size_t c = pick(rng);
    if (a == b || b == c || a == c) continue;
    Vec3 normal = (points[b] - points[a]).cross(points[c] - points[a]);
    const double norm = normal.norm();
    if (norm < 1e-9) continue;
    normal /= norm;
    if (normal.z() < 0.0) normal = -normal;
    if (normal.z() < params.min_normal_z) continue;
    const double offset = -normal.dot(points[a]);
    const std::size_t count =
        count_inliers(points, normal, offset, params.inlier_threshold);
    if (count > best_count) {
      best_count = count;
      best_normal = normal;
      best_offset = offset;
    }
  }

  const double fraction = static_cast<double>(best_count) / static_cast<double>(n);
  if (fraction < params.min_inlier_fraction) {
    GroundPlane g = fallback_ground(params);
    g.inlier_fraction = fraction;
    return g;
  }

  // Least-squares refinement on the consensus set.
  Vec3 centroid = Vec3::Zero();
  std::size_t m = 0;
  for (const Vec3& p : points) {
    if (std::abs(best_normal.dot(p) + best_offset) < params.inlier_threshold) {
      centroid += p;
      ++m;
    }
  }
  centroid /= static_cast<double>(m);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    if (std::abs(best_normal.dot(p) + best_offset) < params.inlier_threshold) {
      const Vec3 d = p - centroid;
      cov += d * d.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  Vec3 refined = solver.eigenvectors().col(0).normalized();
  if (refined.z() < 0.0) refined = -refined;

  GroundPlane g;
  if (refined.z() >= params.min_normal_z) {
    g.normal = refined;
    g.offset = -refined.dot(centroid);
  } else {
    g.normal = best_normal;
    g.offset = best_offset;
  }
  g.inlier_fraction =
      static_cast<double>(count_inliers(points, g.normal, g.offset, params.inlier_threshold)) /
      static_cast<double>(n);
  return g;
}

}  // namespace ephemera
