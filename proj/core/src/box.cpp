#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "ephemera/errors.hpp"
#include "ephemera/types.hpp"

namespace ephemera {

double Box::bev_range() const { return std::hypot(cx, cy); }

void Box::validate() const {
  for (double v : {cx, cy, cz, l, w, h, yaw}) {
    if (!std::isfinite(v)) throw ValidationError("box has a non-finite field");
  }
  if (!(l > 0.0) || !(w > 0.0) || !(h > 0.0)) {
    std::ostringstream msg;
    msg << "box dimensions must be positive (l=" << l << ", w=" << w
        << ", h=" << h << ")";
    throw ValidationError(msg.str());
  }
  if (yaw < -std::numbers::pi / 2.0 || yaw >= std::numbers::pi / 2.0) {
    throw ValidationError("box yaw outside [-pi/2, pi/2)");
  }
  if (score && !(*score >= 0.0 && *score <= 1.0)) {
    throw ValidationError("box score outside [0, 1]");
  }
}

Box Box::normalized() const {
  Box out = *this;
  out.yaw = normalize_yaw(yaw);
  return out;
}

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::kSeed:
      return "seed";
    case LabelKind::kPseudo:
      return "pseudo";
    case LabelKind::kDetection:
      return "detection";
    case LabelKind::kGroundTruth:
      return "ground_truth";
  }
  return "seed";
}

LabelKind label_kind_from_string(std::string_view name) {
  if (name == "seed") return LabelKind::kSeed;
  if (name == "pseudo") return LabelKind::kPseudo;
  if (name == "detection") return LabelKind::kDetection;
  if (name == "ground_truth") return LabelKind::kGroundTruth;
  throw FormatError("unknown label kind '" + std::string(name) + "'");
}

std::vector<Vec3> positions(const Scan& scan) {
  std::vector<Vec3> out;
  out.reserve(scan.points.size());
  for (const Point& p : scan.points) out.push_back(p.xyz);
  return out;
}

std::vector<Vec3> to_world(const Scan& scan) {
  std::vector<Vec3> out;
  out.reserve(scan.points.size());
  for (const Point& p : scan.points) out.push_back(scan.pose.apply(p.xyz));
  return out;
}

void validate_traversal(const Traversal& traversal) {
  std::unordered_set<std::string> seen;
  for (const Scan& scan : traversal.scans) {
    if (!seen.insert(scan.scan_id).second) {
      throw ValidationError("duplicate scan id '" + scan.scan_id +
                            "' in traversal '" + traversal.traversal_id + "'");
    }
  }
}

}  // namespace ephemera
