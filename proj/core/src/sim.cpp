#include "ephemera/sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "ephemera/errors.hpp"
#include "ephemera/parallel.hpp"

namespace ephemera::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream: the draws of a ray depend only on its coordinates.
struct RayRng {
  std::uint64_t state;
  RayRng(std::uint64_t seed, std::uint64_t traversal, std::uint64_t scan,
         std::uint64_t ray)
      : state(splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ traversal) ^ scan) ^
                         ray)) {}
  double uniform() {
    state = splitmix64(state);
    return (static_cast<double>(state >> 11) + 0.5) * 0x1.0p-53;
  }
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

// Entry distance of a ray into an upright cuboid, or a negative value.
double intersect_cuboid(const Box& box, const Vec3& origin, const Vec3& dir) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 rel = origin - Vec3(box.cx, box.cy, box.cz);
  const Vec3 o(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z());
  const Vec3 d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const double half[3] = {box.l / 2.0, box.w / 2.0, box.h / 2.0};
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d(a) == 0.0) {
      if (std::abs(o(a)) > half[a]) return -1.0;
      continue;
    }
    double t0 = (-half[a] - o(a)) / d(a);
    double t1 = (half[a] - o(a)) / d(a);
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return -1.0;
  }
  return t_near > 1e-9 ? t_near : -1.0;
}

void validate_spec(const WorldSpec& spec) {
  if (spec.routes.empty()) throw ContractError("world spec has no routes");
  const std::size_t t = spec.routes.size();
  for (const MobileObject& m : spec.mobiles) {
    if (m.placement.size() != t) {
      throw ContractError("mobile object '" + m.id +
                          "' placement count differs from the traversal count");
    }
    if (!(m.l > 0 && m.w > 0 && m.h > 0)) {
      throw ContractError("mobile object '" + m.id + "' has non-positive size");
    }
  }
  for (const Route& r : spec.routes) {
    if (r.waypoints.size() < 2 || !(r.scan_spacing > 0.0)) {
      throw ContractError("routes need two waypoints and positive scan spacing");
    }
  }
  if (spec.sensor.beams < 1 || !(spec.sensor.azimuth_resolution_deg > 0.0) ||
      !(spec.sensor.max_range > spec.sensor.min_range)) {
    throw ContractError("invalid sensor specification");
  }
}

std::string format_id(const char* prefix, std::size_t i, int width) {
  std::ostringstream out;
  out << prefix;
  out.width(width);
  out.fill('0');
  out << i;
  return out.str();
}

}  // namespace

Vec3 GroundSpec::normal() const {
  const Vec3 axis(std::cos(tilt_axis_yaw), std::sin(tilt_axis_yaw), 0.0);
  return Eigen::AngleAxisd(tilt_deg * kDeg, axis) * Vec3::UnitZ();
}

double GroundSpec::height_at(double x, double y) const {
  const Vec3 n = normal();
  return -(n.x() * x + n.y() * y) / n.z();
}

Box cuboid_box(const Cuboid& c, const GroundSpec& ground) {
  Box b;
  b.cx = c.x;
  b.cy = c.y;
  b.cz = ground.height_at(c.x, c.y) + c.elevation + c.h / 2.0;
  b.l = c.l;
  b.w = c.w;
  b.h = c.h;
  b.yaw = normalize_yaw(c.yaw);
  return b;
}

namespace {

struct SceneBox {
  Box box;
  int id;
};

struct Scene {
  Vec3 normal;
  std::vector<SceneBox> boxes;
};

Scene scene_for(const WorldSpec& spec, std::size_t traversal) {
  Scene scene;
  scene.normal = spec.ground.normal();
  for (std::size_t i = 0; i < spec.statics.size(); ++i) {
    if (!spec.statics[i].present_in(traversal)) continue;
    scene.boxes.push_back({cuboid_box(spec.statics[i].shape, spec.ground), static_cast<int>(i)});
  }
  const int offset = static_cast<int>(spec.statics.size());
  for (std::size_t i = 0; i < spec.mobiles.size(); ++i) {
    const auto& place = spec.mobiles[i].placement[traversal];
    if (!place) continue;
    scene.boxes.push_back({cuboid_box(*place, spec.ground), offset + static_cast<int>(i)});
  }
  return scene;
}

// Drops boxes that cannot be reached from `origin` within `max_range`.
Scene cull(const Scene& scene, const Vec3& origin, double max_range) {
  Scene out;
  out.normal = scene.normal;
  for (const SceneBox& sb : scene.boxes) {
    const Box& b = sb.box;
    const double reach = max_range + 0.5 * std::sqrt(b.l * b.l + b.w * b.w + b.h * b.h);
    if ((Vec3(b.cx, b.cy, b.cz) - origin).norm() <= reach) out.boxes.push_back(sb);
  }
  return out;
}

std::optional<RayHit> cast(const Scene& scene, const Vec3& origin, const Vec3& direction,
                           double max_range) {
  std::optional<RayHit> best;
  const double denom = scene.normal.dot(direction);
  if (denom < 0.0) {
    const double t = -scene.normal.dot(origin) / denom;
    if (t > 0.0 && t <= max_range) best = RayHit{t, -1};
  }
  for (const SceneBox& sb : scene.boxes) {
    const double t = intersect_cuboid(sb.box, origin, direction);
    if (t > 0.0 && t <= max_range && (!best || t < best->range)) best = RayHit{t, sb.id};
  }
  return best;
}

}  // namespace

std::optional<RayHit> cast_ray(const WorldSpec& spec, std::size_t traversal,
                               const Vec3& origin, const Vec3& direction,
                               double max_range) {
  return cast(scene_for(spec, traversal), origin, direction, max_range);
}

std::vector<Pose> route_poses(const Route& route, const GroundSpec& ground,
                              double sensor_height) {
  std::vector<Pose> poses;
  double carried = 0.0;  // distance already travelled past the last scan
  bool first = true;
  for (std::size_t i = 0; i + 1 < route.waypoints.size(); ++i) {
    const Vec2 a = route.waypoints[i];
    const Vec2 b = route.waypoints[i + 1];
    const double len = (b - a).norm();
    if (len == 0.0) continue;
    const Vec2 dir = (b - a) / len;
    const double yaw = std::atan2(dir.y(), dir.x());
    double s = first ? 0.0 : route.scan_spacing - carried;
    first = false;
    for (; s <= len + 1e-9; s += route.scan_spacing) {
      const Vec2 p = a + s * dir;
      poses.push_back(Pose::from_yaw(
          yaw, Vec3(p.x(), p.y(), ground.height_at(p.x(), p.y()) + sensor_height)));
    }
    carried = len - (s - route.scan_spacing);
  }
  return poses;
}

std::vector<Vec3> beam_directions(const SensorSpec& sensor) {
  const int columns =
      static_cast<int>(std::lround(360.0 / sensor.azimuth_resolution_deg));
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(columns) * static_cast<std::size_t>(sensor.beams));
  for (int b = 0; b < sensor.beams; ++b) {
    const double el =
        sensor.beams == 1
            ? sensor.fov_down_deg * kDeg
            : (sensor.fov_down_deg +
               (sensor.fov_up_deg - sensor.fov_down_deg) * b / (sensor.beams - 1)) *
                  kDeg;
    for (int k = 0; k < columns; ++k) {
      const double az = k * sensor.azimuth_resolution_deg * kDeg;
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                        std::sin(el));
    }
  }
  return dirs;
}

SimOutput simulate(const WorldSpec& spec, unsigned threads) {
  validate_spec(spec);
  const std::vector<Vec3> rays = beam_directions(spec.sensor);
  const int mobile_offset = static_cast<int>(spec.statics.size());

  SimOutput out;
  nlohmann::json manifest = {{"format", "ephemera-sim-1"},
                             {"name", spec.name},
                             {"seed", spec.seed},
                             {"traversals", nlohmann::json::array()}};

  for (std::size_t t = 0; t < spec.routes.size(); ++t) {
    Traversal trav;
    trav.traversal_id = format_id("t", t, 1);
    nlohmann::json jt = {{"id", trav.traversal_id}, {"scans", nlohmann::json::array()}};
    const auto poses = route_poses(spec.routes[t], spec.ground, spec.sensor.height);
    const Scene scene = scene_for(spec, t);

    for (std::size_t s = 0; s < poses.size(); ++s) {
      const Pose& pose = poses[s];
      const Scene local = cull(scene, pose.translation(), spec.sensor.max_range);
      std::vector<std::optional<RayHit>> hits(rays.size());
      std::vector<double> ranges(rays.size(), 0.0);
      std::vector<bool> dropped(rays.size(), false);
      parallel_for(rays.size(), threads, 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
          const Vec3 dir = pose.rotation() * rays[r];
          hits[r] = cast(local, pose.translation(), dir, spec.sensor.max_range);
          if (!hits[r] || hits[r]->range < spec.sensor.min_range) {
            hits[r].reset();
            continue;
          }
          RayRng rng(spec.seed, t, s, r);
          const double noise = spec.sensor.noise_sigma > 0.0
                                   ? spec.sensor.noise_sigma * rng.normal()
                                   : 0.0;
          if (spec.sensor.dropout > 0.0 && rng.uniform() < spec.sensor.dropout) {
            dropped[r] = true;
          }
          ranges[r] = hits[r]->range + noise;
        }
      });

      Scan scan;
      scan.traversal_id = trav.traversal_id;
      scan.scan_id = trav.traversal_id + "_" + format_id("", s, 4);
      scan.pose = pose;
      std::vector<std::size_t> mobile_hits(spec.mobiles.size(), 0);
      for (std::size_t r = 0; r < rays.size(); ++r) {
        if (!hits[r] || dropped[r] || ranges[r] <= 0.0) continue;
        const int obj = hits[r]->object;
        Point p;
        p.xyz = rays[r] * ranges[r];
        p.intensity = obj < 0 ? 0.15 : (obj < mobile_offset ? 0.45 : 0.75);
        scan.points.push_back(p);
        if (obj >= mobile_offset) ++mobile_hits[static_cast<std::size_t>(obj - mobile_offset)];
      }

      LabelSet truth{scan.scan_id, LabelKind::kGroundTruth, {}};
      const Pose inv = pose.inverse();
      const double ego_yaw = pose.yaw();
      for (std::size_t m = 0; m < spec.mobiles.size(); ++m) {
        if (mobile_hits[m] == 0) continue;
        const Box world = cuboid_box(*spec.mobiles[m].placement[t], spec.ground);
        const Vec3 c = inv.apply(Vec3(world.cx, world.cy, world.cz));
        Box b = world;
        b.cx = c.x();
        b.cy = c.y();
        b.cz = c.z();
        b.yaw = normalize_yaw(world.yaw - ego_yaw);
        truth.boxes.push_back(b);
      }

      nlohmann::json pose_json = nlohmann::json::array();
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 4; ++col) {
          pose_json.push_back(col < 3 ? pose.rotation()(row, col) : pose.translation()(row));
        }
      }
      jt["scans"].push_back({{"scan_id", scan.scan_id},
                             {"points", scan.points.size()},
                             {"pose", pose_json},
                             {"ground_truth_boxes", truth.boxes.size()}});
      out.ground_truth.push_back(std::move(truth));
      trav.scans.push_back(std::move(scan));
    }
    manifest["traversals"].push_back(std::move(jt));
    out.traversals.push_back(std::move(trav));
  }
  out.manifest = manifest.dump(2);
  return out;
}

}  // namespace ephemera::sim
