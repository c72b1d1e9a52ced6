#include <algorithm>
#include <cmath>

#include "ephemera/eval.hpp"

namespace ephemera {

namespace {

double polygon_area(std::span<const Vec2> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    twice += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * twice;
}

double side(const Vec2& e0, const Vec2& e1, const Vec2& p) {
  return (e1.x() - e0.x()) * (p.y() - e0.y()) - (e1.y() - e0.y()) * (p.x() - e0.x());
}

}  // namespace

std::vector<Vec2> bev_corners(const Box& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = box.l / 2.0;
  const double hw = box.w / 2.0;
  const Vec2 local[4] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
  std::vector<Vec2> out;
  out.reserve(4);
  for (const Vec2& p : local) {
    out.emplace_back(box.cx + c * p.x() - s * p.y(), box.cy + s * p.x() + c * p.y());
  }
  return out;
}

double convex_intersection_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  // Sutherland-Hodgman: clip `a` against every edge of `b`.
  std::vector<Vec2> poly(a.begin(), a.end());
  std::vector<Vec2> next;
  for (std::size_t i = 0; i < b.size() && !poly.empty(); ++i) {
    const Vec2& e0 = b[i];
    const Vec2& e1 = b[(i + 1) % b.size()];
    next.clear();
    for (std::size_t j = 0; j < poly.size(); ++j) {
      const Vec2& p = poly[j];
      const Vec2& q = poly[(j + 1) % poly.size()];
      const double sp = side(e0, e1, p);
      const double sq = side(e0, e1, q);
      if (sp >= 0.0) next.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        next.push_back(p + t * (q - p));
      }
    }
    poly.swap(next);
  }
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, polygon_area(poly));
}

double iou_bev(const Box& a, const Box& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const double inter = convex_intersection_area(ca, cb);
  const double uni = a.l * a.w + b.l * b.w - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box& a, const Box& b) {
  const double overlap_z =
      std::max(0.0, std::min(a.z_max(), b.z_max()) - std::max(a.z_min(), b.z_min()));
  if (overlap_z == 0.0) return 0.0;
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const double inter = convex_intersection_area(ca, cb) * overlap_z;
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou(const Box& a, const Box& b, IouMode mode) {
  return mode == IouMode::kBev ? iou_bev(a, b) : iou_3d(a, b);
}

}  // namespace ephemera
