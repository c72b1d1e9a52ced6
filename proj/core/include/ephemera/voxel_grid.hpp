#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ephemera/geometry.hpp"

namespace ephemera {

/// Integer cell coordinate: floor(coord / cell_size) per axis.
struct CellKey {
  std::int32_t x = 0, y = 0, z = 0;
  bool operator==(const CellKey&) const = default;
};

/// Uniform voxel hash over a fixed point set.
///
/// Points are copied in cell-major order so a cell's points are contiguous.
/// Every query reports indices into the original input array. The grid is
/// immutable after construction and safe for concurrent queries.
class VoxelGrid {
 public:
  VoxelGrid() = default;

  /// Throws ContractError unless `cell_size` > 0 and all points are finite.
  VoxelGrid(std::span<const Vec3> points, double cell_size);

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return points_.size(); }
  std::size_t cell_count() const { return cells_.size(); }
  bool empty() const { return points_.empty(); }

  CellKey cell_of(const Vec3& p) const;

  /// Original indices of the points stored in `key` (empty if unoccupied).
  std::vector<std::uint32_t> cell_members(const CellKey& key) const;
  std::vector<CellKey> occupied_cells() const;

  /// Number of points p with |p - q| < r. Requires cell_size <= r; a coarser
  /// grid is rejected with ContractError.
  std::size_t count_within(const Vec3& q, double r) const;

  /// Original indices of every point with |p - q| < r, ascending.
  std::vector<std::uint32_t> indices_within(const Vec3& q, double r) const;

  /// Up to k nearest points with |p - q| < r_max, ordered by distance with
  /// ties broken by lower original index.
  std::vector<std::uint32_t> knn_within(const Vec3& q, std::size_t k,
                                        double r_max) const;

 private:
  struct Range {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
  };

  static std::uint64_t pack(const CellKey& key);
  const Range* find(const CellKey& key) const;

  template <typename Fn>
  void visit_candidates(const Vec3& q, double r, Fn&& fn) const;

  double cell_size_ = 1.0;
  std::vector<Vec3> points_;             // cell-major order
  std::vector<std::uint32_t> original_;  // original index of points_[i]
  std::unordered_map<std::uint64_t, Range> cells_;
};

}  // namespace ephemera
