#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ephemera/types.hpp"

namespace ephemera::sim {

/// Upright cuboid resting on the ground (or lifted by `elevation`).
struct Cuboid {
  double x = 0.0, y = 0.0;  // footprint center
  double yaw = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double elevation = 0.0;   // bottom height above the ground
};

/// Non-mobile structure. `presence` empty means present in every traversal.
struct StaticObject {
  std::string kind;  // "building", "pole", "clutter", ...
  Cuboid shape;
  std::vector<bool> presence;

  bool present_in(std::size_t traversal) const {
    return presence.empty() || (traversal < presence.size() && presence[traversal]);
  }
};

/// Mobile object with an explicit placement per traversal (nullopt = absent).
struct MobileObject {
  std::string id;
  std::string kind;  // "car", "van", "cyclist", ...
  double l = 4.5, w = 1.9, h = 1.6;
  std::vector<std::optional<Cuboid>> placement;  // dims copied from l, w, h
};

struct Route {
  std::vector<Vec2> waypoints;
  double scan_spacing = 5.0;  // meters between consecutive scans
};

struct SensorSpec {
  int beams = 64;
  double fov_down_deg = -24.9;
  double fov_up_deg = 2.0;
  double azimuth_resolution_deg = 0.5;
  double max_range = 80.0;
  double min_range = 1.0;
  double noise_sigma = 0.02;
  double dropout = 0.0;
  double height = 1.7;  // above ground
};

/// Ground plane through the world origin, tilted by `tilt_deg` about the
/// axis at `tilt_axis_yaw` (radians, in the xy-plane).
struct GroundSpec {
  double tilt_deg = 0.0;
  double tilt_axis_yaw = 0.0;

  Vec3 normal() const;
  double height_at(double x, double y) const;
};

struct WorldSpec {
  std::string name;
  GroundSpec ground;
  std::vector<StaticObject> statics;
  std::vector<MobileObject> mobiles;
  std::vector<Route> routes;  // one per traversal
  SensorSpec sensor;
  std::uint64_t seed = 0;
};

struct SimOutput {
  std::vector<Traversal> traversals;
  /// One ground-truth set per scan, in traversal order, sensor frame.
  std::vector<LabelSet> ground_truth;
  /// JSON document binding scan ids to traversals, poses and truth.
  std::string manifest;
};

/// Result of casting a single ray.
struct RayHit {
  double range = 0.0;
  /// -1 ground, 0..S-1 static index, S..S+M-1 mobile index.
  int object = -1;
};

/// Nearest intersection of a world-frame ray with the ground and the
/// cuboids present in `traversal`; empty beyond `max_range`.
std::optional<RayHit> cast_ray(const WorldSpec& spec, std::size_t traversal,
                               const Vec3& origin, const Vec3& direction,
                               double max_range);

/// World cuboid of a mobile object in a traversal as an upright box.
Box cuboid_box(const Cuboid& c, const GroundSpec& ground);

/// Ego poses of a route: positions every `scan_spacing` meters along the
/// polyline at sensor height, heading along the current segment.
std::vector<Pose> route_poses(const Route& route, const GroundSpec& ground,
                              double sensor_height);

/// Unit ray directions of one sweep in the sensor frame, beam-major.
std::vector<Vec3> beam_directions(const SensorSpec& sensor);

/// Throws ContractError for specs without routes or with inconsistent
/// per-traversal vectors.
SimOutput simulate(const WorldSpec& spec, unsigned threads = 1);

/// Presets: "separation", "parked", "dense". Throws ContractError otherwise.
WorldSpec make_benchmark(const std::string& preset, std::uint64_t seed);

}  // namespace ephemera::sim
