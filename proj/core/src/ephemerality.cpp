#include "ephemera/ephemerality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ephemera/errors.hpp"
#include "ephemera/parallel.hpp"

namespace ephemera {

void AggregationWindow::validate() const {
  if (!(h_end > h_start) || !(h_start >= -h_end)) {
    throw ContractError("aggregation window requires h_end > h_start >= -h_end");
  }
  if (!(spacing > 0.0)) {
    throw ContractError("aggregation window spacing must be positive");
  }
}

std::vector<std::size_t> select_scans(const Traversal& traversal,
                                      const Pose& query,
                                      const AggregationWindow& window) {
  window.validate();
  const Vec3& c = query.translation();
  const Vec3 heading = query.rotation().col(0);
  const double lo = window.forward_only ? window.h_start : std::max(0.0, window.h_start);

  std::vector<std::size_t> picks;
  Vec3 last = Vec3::Zero();
  for (std::size_t i = 0; i < traversal.scans.size(); ++i) {
    const Vec3& ego = traversal.scans[i].pose.translation();
    const double d = window.forward_only ? (ego - c).dot(heading) : (ego - c).norm();
    if (d < lo || d > window.h_end) continue;
    if (!picks.empty() && (ego - last).norm() < window.spacing) continue;
    picks.push_back(i);
    last = ego;
  }
  return picks;
}

DenseCloud build_dense_cloud(std::string traversal_id,
                             std::span<const Scan* const> selected,
                             double radius) {
  if (selected.empty()) {
    throw DataError("traversal '" + traversal_id +
                    "' has no scans near the query location");
  }
  DenseCloud cloud;
  cloud.traversal_id = std::move(traversal_id);
  std::size_t total = 0;
  for (const Scan* scan : selected) total += scan->points.size();
  cloud.points.reserve(total);
  for (const Scan* scan : selected) {
    for (const Point& p : scan->points) cloud.points.push_back(scan->pose.apply(p.xyz));
  }
  cloud.grid = VoxelGrid(cloud.points, radius);
  return cloud;
}

double persistence_score(std::span<const std::size_t> counts, EntropyBase base) {
  if (counts.size() < 2) {
    throw ContractError("persistence score needs at least two traversals");
  }
  double total = 0.0;
  for (std::size_t n : counts) total += static_cast<double>(n);
  if (total == 0.0) return 0.0;

  auto log_fn = [base](double x) {
    return base == EntropyBase::kNatural ? std::log(x) : std::log2(x);
  };
  double entropy = 0.0;
  for (std::size_t n : counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    entropy -= p * log_fn(p);
  }
  const double tau = entropy / log_fn(static_cast<double>(counts.size()));
  return std::clamp(tau, 0.0, 1.0);
}

namespace {

PPField score_against(const Scan& query, std::span<const DenseCloud* const> clouds,
                      double radius, unsigned threads) {
  if (clouds.size() < 2) {
    std::ostringstream msg;
    msg << "pp_score needs at least 2 traversals, got " << clouds.size();
    throw ContractError(msg.str());
  }
  PPField field;
  field.scan_id = query.scan_id;
  field.traversal_count = clouds.size();
  field.tau.resize(query.points.size());

  parallel_for(query.points.size(), threads, 2048,
               [&](std::size_t begin, std::size_t end) {
                 std::vector<std::size_t> counts(clouds.size());
                 for (std::size_t i = begin; i < end; ++i) {
                   const Vec3 q = query.pose.apply(query.points[i].xyz);
                   for (std::size_t t = 0; t < clouds.size(); ++t) {
                     counts[t] = clouds[t]->grid.count_within(q, radius);
                   }
                   field.tau[i] = static_cast<float>(persistence_score(counts));
                 }
               });
  return field;
}

}  // namespace

PPField pp_score(const Scan& query, std::span<const DenseCloud> clouds,
                 double radius, unsigned threads) {
  std::vector<const DenseCloud*> ptrs;
  ptrs.reserve(clouds.size());
  for (const DenseCloud& c : clouds) ptrs.push_back(&c);
  return score_against(query, ptrs, radius, threads);
}

PPScorer::PPScorer(std::span<const Traversal> traversals, PPOptions options)
    : traversals_(traversals), options_(std::move(options)) {
  options_.window.validate();
  if (!(options_.radius > 0.0)) throw ContractError("PP radius must be positive");
}

PPScorer::~PPScorer() = default;

std::size_t PPScorer::coverage(const Scan& query) const {
  std::size_t n = 0;
  for (const Traversal& t : traversals_) {
    if (!options_.include_own_traversal && t.traversal_id == query.traversal_id) continue;
    if (!select_scans(t, query.pose, options_.window).empty()) ++n;
  }
  return n;
}

std::shared_ptr<const DenseCloud> PPScorer::cloud_for(
    const Traversal& traversal, const std::vector<std::size_t>& picks) {
  std::string key = traversal.traversal_id + ":";
  for (std::size_t i : picks) key += std::to_string(i) + ",";
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  std::vector<const Scan*> selected;
  selected.reserve(picks.size());
  for (std::size_t i : picks) selected.push_back(&traversal.scans[i]);
  auto cloud = std::make_shared<const DenseCloud>(
      build_dense_cloud(traversal.traversal_id, selected, options_.radius));

  if (options_.cache_capacity > 0) {
    if (cache_order_.size() >= options_.cache_capacity) {
      cache_.erase(cache_order_.front());
      cache_order_.erase(cache_order_.begin());
    }
    cache_.emplace(key, cloud);
    cache_order_.push_back(std::move(key));
  }
  return cloud;
}

std::optional<PPField> PPScorer::score(const Scan& query) {
  std::vector<std::shared_ptr<const DenseCloud>> clouds;
  for (const Traversal& t : traversals_) {
    if (!options_.include_own_traversal && t.traversal_id == query.traversal_id) continue;
    const auto picks = select_scans(t, query.pose, options_.window);
    if (picks.empty()) continue;
    clouds.push_back(cloud_for(t, picks));
  }
  if (clouds.size() < 2) return std::nullopt;
  std::vector<const DenseCloud*> ptrs;
  for (const auto& c : clouds) ptrs.push_back(c.get());
  return score_against(query, ptrs, options_.radius, options_.threads);
}

}  // namespace ephemera
