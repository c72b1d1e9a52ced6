#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ephemera/ephemerality.hpp"
#include "ephemera/types.hpp"

namespace ephemera {

// ---------------------------------------------------------------------------
// PP-weighted mutual k-NN graph

struct GraphParams {
  std::size_t k = 70;
  double max_distance = 2.0;  // r'
};

/// Undirected graph over scan points. An edge (p, q) exists iff each point is
/// among the other's k nearest neighbours closer than max_distance; its
/// weight is |tau(p) - tau(q)|.
class PPGraph {
 public:
  struct Edge {
    std::uint32_t to = 0;
    float weight = 0.0f;
    bool operator==(const Edge&) const = default;
  };

  PPGraph() = default;
  explicit PPGraph(std::vector<std::vector<Edge>> adjacency)
      : adjacency_(std::move(adjacency)) {}

  std::size_t size() const { return adjacency_.size(); }
  /// Sorted by neighbour index.
  std::span<const Edge> neighbors(std::size_t node) const { return adjacency_[node]; }
  std::size_t edge_count() const;

 private:
  std::vector<std::vector<Edge>> adjacency_;
};

/// Throws ContractError if tau.size() != points.size().
PPGraph build_graph(std::span<const Vec3> points, std::span<const float> tau,
                    const GraphParams& params = {}, unsigned threads = 1);

// ---------------------------------------------------------------------------
// DBSCAN

struct DbscanParams {
  double eps = 0.1;
  std::size_t min_samples = 10;
};

struct Cluster {
  std::vector<std::uint32_t> indices;  // ascending
};

/// DBSCAN driven by an arbitrary neighbourhood function. `neighbors(i, out)`
/// must fill `out` with the eps-neighbours of i, excluding i itself; the
/// relation must be symmetric. Seeds are visited in index order and border
/// points go to the first cluster that reaches them, so a cluster can end up
/// smaller than min_samples.
std::vector<Cluster> dbscan(
    std::size_t n, std::size_t min_samples,
    const std::function<void(std::size_t, std::vector<std::uint32_t>&)>& neighbors);

/// Graph DBSCAN: the eps-neighbourhood of a node is its graph neighbours
/// joined by an edge of weight <= eps, plus the node itself.
std::vector<Cluster> dbscan(const PPGraph& graph, const DbscanParams& params = {});

// ---------------------------------------------------------------------------
// Cluster and box filters

struct FilterConfig {
  double alpha = 20.0;  // percentile
  double gamma = 0.7;   // PP threshold
  std::size_t min_points = 10;
  double volume_min = 0.5;
  double volume_max = 120.0;
  double height_max_min = 0.5;  // highest point must be above this
  double height_min_max = 1.0;  // lowest point must be below this

  /// Throws ContractError on out-of-range or unordered parameters.
  void validate() const;
};

/// Nearest-rank percentile: the ceil(alpha/100 * n)-th smallest value
/// (1-based, at least the first). Throws ContractError on empty input.
double nearest_rank_percentile(std::span<const float> values, double alpha);

/// Keeps clusters whose alpha-percentile PP score is at most gamma.
std::vector<Cluster> filter_clusters(std::span<const Cluster> clusters,
                                     std::span<const float> tau,
                                     const FilterConfig& cfg);

// ---------------------------------------------------------------------------
// Ground plane

/// Plane normal . x + offset = 0 with an upward unit normal.
struct GroundPlane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  double inlier_fraction = 0.0;
  /// Set when RANSAC could not find a plane and the sensor-height prior was
  /// used instead.
  bool fallback = false;

  double height(const Vec3& p) const { return normal.dot(p) + offset; }
};

struct GroundParams {
  double inlier_threshold = 0.15;
  int iterations = 200;
  double min_inlier_fraction = 0.2;
  double min_normal_z = 0.7;
  double sensor_height = 1.7;
  std::size_t min_points = 50;
  std::uint64_t seed = 0x5eedULL;
};

GroundPlane fallback_ground(const GroundParams& params);

/// RANSAC fit restricted to near-horizontal planes, refined by least squares
/// on the inliers. Deterministic for a given `params.seed`.
GroundPlane estimate_ground(std::span<const Vec3> points,
                            const GroundParams& params = {});

// ---------------------------------------------------------------------------
// Box fitting

struct FittedBox {
  Box box;
  double height_min = 0.0;  // signed height above ground of the lowest point
  double height_max = 0.0;
  bool degenerate = false;  // collinear or flat input; dimensions clamped
};

inline constexpr double kMinBoxExtent = 0.05;

/// Minimum-area BEV rectangle (rotating calipers over the convex hull of the
/// points projected on the ground) extruded between the lowest and highest
/// point. `l` is the side along `yaw`, the longer one. Throws ContractError
/// for fewer than 3 points.
FittedBox fit_box(std::span<const Vec3> points, const GroundPlane& ground);

/// A fitted box together with the size of its source cluster.
struct SeedCandidate {
  FittedBox fit;
  std::size_t point_count = 0;
};

bool passes_common_sense(const SeedCandidate& candidate, const FilterConfig& cfg);

LabelSet common_sense_filter(std::string frame_id,
                             std::span<const SeedCandidate> candidates,
                             const FilterConfig& cfg);

// ---------------------------------------------------------------------------
// Full per-scan pipeline

struct SeedParams {
  GraphParams graph;
  DbscanParams dbscan;
  FilterConfig filter;
  GroundParams ground;
};

/// Seed boxes for one scan, in its sensor frame.
LabelSet generate_seed_labels(const Scan& scan, const PPField& field,
                              const SeedParams& params = {}, unsigned threads = 1);

}  // namespace ephemera
