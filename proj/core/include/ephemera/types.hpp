#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ephemera/geometry.hpp"
#include "ephemera/pose.hpp"

namespace ephemera {

/// One LiDAR return in the sensor frame.
struct Point {
  Vec3 xyz = Vec3::Zero();
  double intensity = 0.0;  // reflectance in [0, 1]
};

struct Scan {
  std::string scan_id;
  std::string traversal_id;
  std::vector<Point> points;
  Pose pose;  // world-from-sensor
};

/// One driving session; scans are in acquisition order.
struct Traversal {
  std::string traversal_id;
  std::vector<Scan> scans;
};

/// Upright 3D box. Heading is defined modulo pi, stored in [-pi/2, pi/2).
struct Box {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double l = 0.0, w = 0.0, h = 0.0;
  double yaw = 0.0;
  std::optional<double> score;

  double volume() const { return l * w * h; }
  double z_min() const { return cz - h / 2.0; }
  double z_max() const { return cz + h / 2.0; }
  /// Distance of the center from the sensor origin in the xy-plane.
  double bev_range() const;

  /// Throws ValidationError on non-finite fields, non-positive dimensions or
  /// a score outside [0, 1]. Also rejects an unnormalized yaw.
  void validate() const;

  /// Copy with yaw mapped into [-pi/2, pi/2).
  Box normalized() const;

  bool operator==(const Box&) const = default;
};

enum class LabelKind { kSeed, kPseudo, kDetection, kGroundTruth };

std::string_view to_string(LabelKind kind);
/// Throws FormatError on unknown names.
LabelKind label_kind_from_string(std::string_view name);

/// All boxes of one frame, expressed in that frame's sensor coordinates.
struct LabelSet {
  std::string frame_id;
  LabelKind kind = LabelKind::kSeed;
  std::vector<Box> boxes;

  bool operator==(const LabelSet&) const = default;
};

/// Sensor-frame positions of a scan's points.
std::vector<Vec3> positions(const Scan& scan);

/// Points of `scan` transformed by its pose into the world frame.
std::vector<Vec3> to_world(const Scan& scan);

/// Throws ValidationError on duplicated scan ids within a traversal.
void validate_traversal(const Traversal& traversal);

}  // namespace ephemera
