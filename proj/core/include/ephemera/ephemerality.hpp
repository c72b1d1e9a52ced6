#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ephemera/types.hpp"
#include "ephemera/voxel_grid.hpp"

namespace ephemera {

/// Along-route range [h_start, h_end] around a query location from which
/// scans are aggregated, keeping one scan per `spacing` meters.
///
/// By default the range is measured as Euclidean distance between ego
/// positions, so scans behind the query location count as well. With
/// `forward_only` the signed distance along the query sensor's heading is
/// used instead, which makes h_start < 0 meaningful.
struct AggregationWindow {
  double h_start = 0.0;
  double h_end = 70.0;
  double spacing = 2.0;
  bool forward_only = false;

  /// Throws ContractError unless h_end > h_start >= -h_end and spacing > 0.
  void validate() const;
};

/// Indices into `traversal.scans` whose ego position falls inside `window`
/// around `query`, greedily thinned in traversal order so consecutive picks
/// are at least `window.spacing` apart.
std::vector<std::size_t> select_scans(const Traversal& traversal,
                                      const Pose& query,
                                      const AggregationWindow& window);

/// Aggregated world-frame points of one traversal near a location.
struct DenseCloud {
  std::string traversal_id;
  std::vector<Vec3> points;
  VoxelGrid grid;  // indexes `points` with cell size equal to the radius
};

/// Concatenates the selected scans in the world frame; duplicates are kept.
/// Throws DataError when `selected` is empty.
DenseCloud build_dense_cloud(std::string traversal_id,
                             std::span<const Scan* const> selected,
                             double radius);

/// Per-point persistence scores of one scan.
struct PPField {
  std::string scan_id;
  std::vector<float> tau;
  std::size_t traversal_count = 0;
};

enum class EntropyBase { kNatural, kBinary };

/// Normalized entropy of the count distribution: 0 when every count is zero,
/// otherwise H(N / sum N) / log(T), clamped to [0, 1]. The result does not
/// depend on `base`; the option exists so that can be checked.
/// Throws ContractError when fewer than two counts are given.
double persistence_score(std::span<const std::size_t> counts,
                         EntropyBase base = EntropyBase::kNatural);

/// Scores every point of `query` against one dense cloud per traversal.
/// Throws ContractError when clouds.size() < 2.
PPField pp_score(const Scan& query, std::span<const DenseCloud> clouds,
                 double radius = 0.3, unsigned threads = 1);

struct PPOptions {
  AggregationWindow window;
  double radius = 0.3;
  /// Whether the query scan's own traversal contributes a cloud.
  bool include_own_traversal = true;
  unsigned threads = 1;
  /// Dense clouds kept alive between queries with identical selections.
  std::size_t cache_capacity = 16;
};

/// Scores scans against a fixed set of traversals, reusing dense clouds
/// across queries whose aggregation windows select the same scans.
class PPScorer {
 public:
  PPScorer(std::span<const Traversal> traversals, PPOptions options);
  ~PPScorer();
  PPScorer(const PPScorer&) = delete;
  PPScorer& operator=(const PPScorer&) = delete;

  /// Empty when fewer than two traversals cover the query location.
  std::optional<PPField> score(const Scan& query);

  /// Number of traversals whose window around `query` is non-empty.
  std::size_t coverage(const Scan& query) const;

 private:
  std::shared_ptr<const DenseCloud> cloud_for(const Traversal& traversal,
                                              const std::vector<std::size_t>& picks);

  std::span<const Traversal> traversals_;
  PPOptions options_;
  std::map<std::string, std::shared_ptr<const DenseCloud>> cache_;
  std::vector<std::string> cache_order_;
};

/// PPF sidecar: magic "PPF1", point count as u32 little-endian, then one
/// float32 little-endian score per point.
std::vector<unsigned char> encode_ppf(std::span<const float> tau);
std::vector<float> decode_ppf(std::span<const unsigned char> bytes,
                              const std::string& source);
void write_ppf(const std::filesystem::path& path, const PPField& field);
PPField read_ppf(const std::filesystem::path& path, std::string scan_id);

}  // namespace ephemera
