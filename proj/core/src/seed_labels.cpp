#include "ephemera/errors.hpp"
#include "ephemera/seed_labels.hpp"

namespace ephemera {

bool passes_common_sense(const SeedCandidate& candidate, const FilterConfig& cfg) {
  const double volume = candidate.fit.box.volume();
  return candidate.point_count >= cfg.min_points && volume >= cfg.volume_min &&
         volume <= cfg.volume_max && candidate.fit.height_max > cfg.height_max_min &&
         candidate.fit.height_min < cfg.height_min_max;
}

LabelSet common_sense_filter(std::string frame_id,
                             std::span<const SeedCandidate> candidates,
                             const FilterConfig& cfg) {
  LabelSet out;
  out.frame_id = std::move(frame_id);
  out.kind = LabelKind::kSeed;
  for (const SeedCandidate& c : candidates) {
    if (passes_common_sense(c, cfg)) out.boxes.push_back(c.fit.box);
  }
  return out;
}

LabelSet generate_seed_labels(const Scan& scan, const PPField& field,
                              const SeedParams& params, unsigned threads) {
  if (field.tau.size() != scan.points.size()) {
    throw ContractError("PP field of '" + field.scan_id + "' has " +
                        std::to_string(field.tau.size()) + " scores but scan '" +
                        scan.scan_id + "' has " + std::to_string(scan.points.size()) +
                        " points");
  }
  params.filter.validate();
  const std::vector<Vec3> pts = positions(scan);
  const PPGraph graph = build_graph(pts, field.tau, params.graph, threads);
  const std::vector<Cluster> clusters =
      filter_clusters(dbscan(graph, params.dbscan), field.tau, params.filter);
  const GroundPlane ground = estimate_ground(pts, params.ground);

  std::vector<SeedCandidate> candidates;
  std::vector<Vec3> members;
  for (const Cluster& c : clusters) {
    if (c.indices.size() < 3) continue;
    members.clear();
    for (std::uint32_t i : c.indices) members.push_back(pts[i]);
    candidates.push_back({fit_box(members, ground), c.indices.size()});
  }
  return common_sense_filter(scan.scan_id, candidates, params.filter);
}

}  // namespace ephemera
