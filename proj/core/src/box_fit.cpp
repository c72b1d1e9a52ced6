#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "ephemera/errors.hpp"
#include "ephemera/seed_labels.hpp"

namespace ephemera {

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct Rect {
  Vec2 center = Vec2::Zero();
  Vec2 axis = Vec2::UnitX();  // direction of the first side
  double len_axis = 0.0;
  double len_perp = 0.0;
};

Rect extent_along(std::span<const Vec2> pts, const Vec2& axis) {
  const Vec2 perp(-axis.y(), axis.x());
  double lo_a = std::numeric_limits<double>::infinity(), hi_a = -lo_a;
  double lo_p = lo_a, hi_p = -lo_a;
  for (const Vec2& p : pts) {
    const double a = p.dot(axis);
    const double b = p.dot(perp);
    lo_a = std::min(lo_a, a);
    hi_a = std::max(hi_a, a);
    lo_p = std::min(lo_p, b);
    hi_p = std::max(hi_p, b);
  }
  Rect r;
  r.axis = axis;
  r.len_axis = hi_a - lo_a;
  r.len_perp = hi_p - lo_p;
  r.center = 0.5 * (lo_a + hi_a) * axis + 0.5 * (lo_p + hi_p) * perp;
  return r;
}

}  // namespace

FittedBox fit_box(std::span<const Vec3> points, const GroundPlane& ground) {
  if (points.size() < 3) throw ContractError("fit_box needs at least 3 points");
  const Vec3& n = ground.normal;
  Vec3 u = Vec3::UnitX() - Vec3::UnitX().dot(n) * n;
  if (u.norm() < 1e-6) u = Vec3::UnitY() - Vec3::UnitY().dot(n) * n;
  u.normalize();
  const Vec3 v = n.cross(u);

  std::vector<Vec2> flat;
  flat.reserve(points.size());
  double h_min = std::numeric_limits<double>::infinity();
  double h_max = -h_min;
  for (const Vec3& p : points) {
    flat.emplace_back(p.dot(u), p.dot(v));
    const double h = ground.height(p);
    h_min = std::min(h_min, h);
    h_max = std::max(h_max, h);
  }

  const std::vector<Vec2> hull = convex_hull(flat);
  FittedBox out;
  Rect best;
  if (hull.size() < 3) {
    out.degenerate = true;
    Vec2 axis = Vec2::UnitX();
    if (hull.size() == 2 && (hull[1] - hull[0]).norm() > 0.0) {
      axis = (hull[1] - hull[0]).normalized();
    }
    best = extent_along(hull, axis);
  } else {
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2 edge = hull[(i + 1) % hull.size()] - hull[i];
      const Rect r = extent_along(hull, edge.normalized());
      const double area = r.len_axis * r.len_perp;
      if (area < best_area) {
        best_area = area;
        best = r;
      }
    }
  }

  Vec2 long_axis = best.axis;
  double l = best.len_axis;
  double w = best.len_perp;
  if (w > l) {
    long_axis = Vec2(-best.axis.y(), best.axis.x());
    std::swap(l, w);
  }
  double h = h_max - h_min;
  if (w < kMinBoxExtent || l < kMinBoxExtent || h < kMinBoxExtent) out.degenerate = true;
  l = std::max(l, kMinBoxExtent);
  w = std::max(w, kMinBoxExtent);
  h = std::max(h, kMinBoxExtent);

  const double mid_height = 0.5 * (h_min + h_max);
  const Vec3 center =
      best.center.x() * u + best.center.y() * v + (mid_height - ground.offset) * n;
  out.box.cx = center.x();
  out.box.cy = center.y();
  out.box.cz = center.z();
  out.box.l = l;
  out.box.w = w;
  out.box.h = h;
  out.box.yaw = normalize_yaw(std::atan2(long_axis.y(), long_axis.x()));
  out.height_min = h_min;
  out.height_max = h_max;
  return out;
}

}  // namespace ephemera
