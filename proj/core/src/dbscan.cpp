#include <algorithm>
#include <cmath>

#include "ephemera/errors.hpp"
#include "ephemera/seed_labels.hpp"

namespace ephemera {

namespace {

constexpr std::int64_t kUnvisited = -2;
constexpr std::int64_t kNoise = -1;

}  // namespace

std::vector<Cluster> dbscan(
    std::size_t n, std::size_t min_samples,
    const std::function<void(std::size_t, std::vector<std::uint32_t>&)>& neighbors) {
  std::vector<std::int64_t> label(n, kUnvisited);
  std::vector<Cluster> clusters;
  std::vector<std::uint32_t> nb;
  std::vector<std::uint32_t> queue;

  for (std::size_t seed = 0; seed < n; ++seed) {
    if (label[seed] != kUnvisited) continue;
    nb.clear();
    neighbors(seed, nb);
    if (nb.size() + 1 < min_samples) {
      label[seed] = kNoise;
      continue;
    }
    const auto id = static_cast<std::int64_t>(clusters.size());
    clusters.emplace_back();
    label[seed] = id;
    clusters.back().indices.push_back(static_cast<std::uint32_t>(seed));
    queue.assign(nb.begin(), nb.end());
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::uint32_t q = queue[head];
      if (label[q] == kNoise) {
        label[q] = id;  // border point
        clusters.back().indices.push_back(q);
        continue;
      }
      if (label[q] != kUnvisited) continue;
      label[q] = id;
      clusters.back().indices.push_back(q);
      nb.clear();
      neighbors(q, nb);
      if (nb.size() + 1 >= min_samples) queue.insert(queue.end(), nb.begin(), nb.end());
    }
  }

  for (Cluster& c : clusters) std::sort(c.indices.begin(), c.indices.end());
  return clusters;
}

std::vector<Cluster> dbscan(const PPGraph& graph, const DbscanParams& params) {
  if (!(params.eps >= 0.0)) throw ContractError("dbscan eps must be non-negative");
  return dbscan(graph.size(), params.min_samples,
                [&](std::size_t i, std::vector<std::uint32_t>& out) {
                  for (const PPGraph::Edge& e : graph.neighbors(i)) {
                    if (static_cast<double>(e.weight) <= params.eps) out.push_back(e.to);
                  }
                });
}

void FilterConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 100.0)) throw ContractError("alpha must lie in [0, 100]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("gamma must lie in [0, 1]");
  if (!(volume_min >= 0.0 && volume_min <= volume_max)) {
    throw ContractError("volume range must be ordered and non-negative");
  }
  if (!std::isfinite(height_max_min) || !std::isfinite(height_min_max)) {
    throw ContractError("height thresholds must be finite");
  }
}

double nearest_rank_percentile(std::span<const float> values, double alpha) {
  if (values.empty()) throw ContractError("percentile of an empty set");
  std::vector<float> sorted(values.begin(), values.end());
  const double rank = std::ceil(alpha / 100.0 * static_cast<double>(sorted.size()));
  const std::size_t idx =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1,
                              sorted.size()) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx),
                   sorted.end());
  return sorted[idx];
}

std::vector<Cluster> filter_clusters(std::span<const Cluster> clusters,
                                     std::span<const float> tau,
                                     const FilterConfig& cfg) {
  std::vector<Cluster> kept;
  std::vector<float> values;
  for (const Cluster& c : clusters) {
    if (c.indices.empty()) continue;
    values.clear();
    for (std::uint32_t i : c.indices) values.push_back(tau[i]);
    if (nearest_rank_percentile(values, cfg.alpha) <= cfg.gamma) kept.push_back(c);
  }
  return kept;
}

}  // namespace ephemera
