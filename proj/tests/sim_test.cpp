#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ephemera/errors.hpp"
#include "ephemera/self_train.hpp"
#include "ephemera/sim.hpp"

namespace ephemera::sim {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

WorldSpec empty_world(std::size_t traversals = 1) {
  WorldSpec spec;
  spec.name = "test";
  spec.sensor.noise_sigma = 0.0;
  for (std::size_t t = 0; t < traversals; ++t) {
    Route r;
    r.waypoints = {Vec2(0, 0), Vec2(1, 0)};
    r.scan_spacing = 5.0;
    spec.routes.push_back(r);
  }
  return spec;
}

MobileObject car_at(double x, double y, std::size_t traversals) {
  MobileObject m;
  m.id = "car";
  m.kind = "car";
  m.l = 4.5;
  m.w = 1.9;
  m.h = 1.6;
  Cuboid c{x, y, 0.0, m.l, m.w, m.h, 0.0};
  m.placement.assign(traversals, c);
  return m;
}

TEST(CastRay, StraightDownHitsGround) {
  WorldSpec spec = empty_world();
  auto hit = cast_ray(spec, 0, Vec3(0, 0, 1.7), Vec3(0, 0, -1), 80.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->range, 1.7, 1e-12);
  EXPECT_EQ(hit->object, -1);
}

TEST(CastRay, FaceTenMetersAway) {
  WorldSpec spec = empty_world();
  spec.statics.push_back({"wall", Cuboid{12.0, 0.0, 0.0, 4.0, 6.0, 5.0, 0.0}, {}});
  auto hit = cast_ray(spec, 0, Vec3(0, 0, 1.7), Vec3(1, 0, 0), 80.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->range, 10.0, 1e-12);
  EXPECT_EQ(hit->object, 0);
}

TEST(CastRay, NothingWithinRange) {
  WorldSpec spec = empty_world();
  EXPECT_FALSE(cast_ray(spec, 0, Vec3(0, 0, 1.7), Vec3(0, 0, 1), 80.0).has_value());
  EXPECT_FALSE(cast_ray(spec, 0, Vec3(0, 0, 100), Vec3(0, 0, -1), 80.0).has_value());
}

TEST(CastRay, AbsentMobileIsTransparent) {
  WorldSpec spec = empty_world(2);
  MobileObject m = car_at(10, 0, 2);
  m.placement[1].reset();
  spec.mobiles.push_back(m);
  EXPECT_EQ(cast_ray(spec, 0, Vec3(0, 0, 0.8), Vec3(1, 0, 0), 80.0)->object, 0);
  EXPECT_FALSE(cast_ray(spec, 1, Vec3(0, 0, 0.8), Vec3(1, 0, 0), 80.0).has_value());
}

// Reference slab intersector for an axis-aligned box.
std::optional<double> slab(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t0 = 0.0, t1 = 1e300;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < lo[k] || o[k] > hi[k]) return std::nullopt;
      continue;
    }
    double a = (lo[k] - o[k]) / d[k], b = (hi[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return std::nullopt;
  return t0;
}

TEST(Simulate, CarHitCountMatchesRayByRayReference) {
  WorldSpec spec = empty_world();
  spec.mobiles.push_back(car_at(15.0 + 2.25, 0.0, 1));
  SimOutput out = simulate(spec);
  ASSERT_EQ(out.traversals[0].scans.size(), 1u);
  const Scan& scan = out.traversals[0].scans[0];
  const std::size_t simulated = std::count_if(scan.points.begin(), scan.points.end(),
                                              [](const Point& p) { return p.intensity > 0.7; });

  // Independent beam pattern: 64 beams evenly over [-24.9, 2] degrees,
  // 720 azimuth columns.
  const Vec3 origin(0, 0, 1.7);
  const Vec3 lo(15.0, -0.95, 0.0), hi(19.5, 0.95, 1.6);
  std::size_t expected = 0;
  for (int b = 0; b < 64; ++b) {
    const double el = (-24.9 + 26.9 * b / 63.0) * kDeg;
    for (int k = 0; k < 720; ++k) {
      const double az = k * 0.5 * kDeg;
      const Vec3 d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      auto t = slab(origin, d, lo, hi);
      if (!t || *t > 80.0 || *t < 1.0) continue;
      const bool ground_first = d.z() < 0 && origin.z() / -d.z() < *t;
      if (!ground_first) ++expected;
    }
  }
  EXPECT_GT(expected, 100u);
  EXPECT_LE(std::max(simulated, expected) - std::min(simulated, expected), 2u);
  ASSERT_EQ(out.ground_truth[0].boxes.size(), 1u);
}

double distance_to_box_surface(const Box& b, const Vec3& p) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Vec3 d = p - Vec3(b.cx, b.cy, b.cz);
  const Vec3 local(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
  const Vec3 half(b.l / 2, b.w / 2, b.h / 2);
  const Vec3 q = local.cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return std::abs(outside + inside);
}

TEST(Simulate, NoiselessPointsLieOnSurfaces) {
  WorldSpec spec = empty_world();
  spec.statics.push_back({"building", Cuboid{10, 15, 0.2, 20, 8, 12, 0}, {}});
  spec.statics.push_back({"pole", Cuboid{5, -4, 0, 0.3, 0.3, 6, 0}, {}});
  spec.mobiles.push_back(car_at(8, -2, 1));
  spec.mobiles[0].placement[0]->yaw = 0.5;
  spec.routes[0].waypoints = {Vec2(0, 0), Vec2(3, 1)};
  SimOutput out = simulate(spec);
  std::vector<Box> boxes;
  for (const auto& s : spec.statics) boxes.push_back(cuboid_box(s.shape, spec.ground));
  boxes.push_back(cuboid_box(*spec.mobiles[0].placement[0], spec.ground));
  for (const Scan& scan : out.traversals[0].scans) {
    for (const Vec3& w : to_world(scan)) {
      double best = std::abs(w.z());
      for (const Box& b : boxes) best = std::min(best, distance_to_box_surface(b, w));
      ASSERT_LT(best, 1e-9) << w.transpose();
    }
  }
}

TEST(Simulate, TiltedGroundPointsOnPlane) {
  WorldSpec spec = empty_world();
  spec.ground.tilt_deg = 3.0;
  spec.ground.tilt_axis_yaw = 0.4;
  SimOutput out = simulate(spec);
  const Vec3 n = spec.ground.normal();
  for (const Vec3& w : to_world(out.traversals[0].scans[0])) {
    ASSERT_LT(std::abs(w.z() - spec.ground.height_at(w.x(), w.y())) * n.z(), 1e-9);
  }
}

TEST(Simulate, TruthBoxesContainReturns) {
  WorldSpec spec = make_benchmark("separation", 7);
  spec.routes.resize(2);
  for (auto& m : spec.mobiles) m.placement.resize(2);
  for (auto& s : spec.statics) {
    if (!s.presence.empty()) s.presence.resize(2);
  }
  SimOutput out = simulate(spec);
  std::size_t checked = 0;
  for (std::size_t t = 0; t < out.traversals.size(); ++t) {
    for (const Scan& scan : out.traversals[t].scans) {
      const auto it = std::find_if(out.ground_truth.begin(), out.ground_truth.end(),
                                   [&](const LabelSet& l) { return l.frame_id == scan.scan_id; });
      ASSERT_NE(it, out.ground_truth.end());
      for (Box b : it->boxes) {
        b.l += 0.1;
        b.w += 0.1;
        b.h += 0.1;
        const bool any = std::any_of(scan.points.begin(), scan.points.end(),
                                     [&](const Point& p) { return box_contains(b, p.xyz); });
        EXPECT_TRUE(any);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Simulate, DeterministicAcrossRunsAndThreads) {
  WorldSpec spec = make_benchmark("dense", 3);
  spec.routes.resize(2);
  for (auto& r : spec.routes) r.waypoints.back().x() = r.waypoints.front().x() + 6.0;
  for (auto& m : spec.mobiles) m.placement.resize(2);
  for (auto& s : spec.statics) {
    if (!s.presence.empty()) s.presence.resize(2);
  }
  SimOutput a = simulate(spec, 1);
  SimOutput b = simulate(spec, 3);
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  ASSERT_EQ(a.traversals.size(), b.traversals.size());
  for (std::size_t t = 0; t < a.traversals.size(); ++t) {
    for (std::size_t s = 0; s < a.traversals[t].scans.size(); ++s) {
      const auto& pa = a.traversals[t].scans[s].points;
      const auto& pb = b.traversals[t].scans[s].points;
      ASSERT_EQ(pa.size(), pb.size());
      for (std::size_t i = 0; i < pa.size(); ++i) ASSERT_EQ(pa[i].xyz, pb[i].xyz);
    }
  }
}

TEST(Simulate, RangeNoiseIsApplied) {
  WorldSpec spec = empty_world();
  spec.sensor.noise_sigma = 0.02;
  SimOutput out = simulate(spec);
  double worst = 0;
  for (const Vec3& w : to_world(out.traversals[0].scans[0])) worst = std::max(worst, std::abs(w.z()));
  EXPECT_GT(worst, 1e-4);
}

TEST(Simulate, NoRoutesRejected) {
  WorldSpec spec;
  EXPECT_THROW(simulate(spec), ContractError);
}

TEST(RoutePoses, SpacingAndHeading) {
  Route r;
  r.waypoints = {Vec2(0, 0), Vec2(0, 10)};
  r.scan_spacing = 2.5;
  auto poses = route_poses(r, GroundSpec{}, 1.7);
  ASSERT_EQ(poses.size(), 5u);
  EXPECT_NEAR(poses[1].translation().y(), 2.5, 1e-12);
  EXPECT_NEAR(poses[1].translation().z(), 1.7, 1e-12);
  EXPECT_NEAR(poses[0].yaw(), std::numbers::pi / 2, 1e-12);
}

TEST(Presets, SeparationHasSingleTraversalMobiles) {
  WorldSpec a = make_benchmark("separation", 7);
  WorldSpec b = make_benchmark("separation", 7);
  EXPECT_EQ(a.routes.size(), 4u);
  ASSERT_FALSE(a.mobiles.empty());
  for (const MobileObject& m : a.mobiles) {
    EXPECT_EQ(std::count_if(m.placement.begin(), m.placement.end(),
                            [](const auto& p) { return p.has_value(); }),
              1);
  }
  ASSERT_EQ(a.mobiles.size(), b.mobiles.size());
  for (std::size_t i = 0; i < a.mobiles.size(); ++i) EXPECT_EQ(a.mobiles[i].id, b.mobiles[i].id);
}

TEST(Presets, ParkedHasPersistentVehicles) {
  WorldSpec p = make_benchmark("parked", 7);
  EXPECT_TRUE(std::any_of(p.mobiles.begin(), p.mobiles.end(), [](const MobileObject& m) {
    return std::all_of(m.placement.begin(), m.placement.end(),
                       [](const auto& x) { return x.has_value(); });
  }));
}

TEST(Presets, DenseHasClutter) {
  WorldSpec d = make_benchmark("dense", 7);
  EXPECT_TRUE(std::any_of(d.statics.begin(), d.statics.end(),
                          [](const StaticObject& s) { return s.kind == "clutter"; }));
}

TEST(Presets, UnknownNameRejected) {
  EXPECT_THROW(make_benchmark("highway", 1), ContractError);
}

}  // namespace
}  // namespace ephemera::sim
