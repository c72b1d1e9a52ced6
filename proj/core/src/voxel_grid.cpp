#include "ephemera/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <sstream>

#include "ephemera/errors.hpp"

namespace ephemera {

namespace {

constexpr std::int64_t kKeyBits = 21;
constexpr std::int64_t kKeyLimit = (std::int64_t{1} << (kKeyBits - 1)) - 1;
constexpr std::uint64_t kKeyMask = (std::uint64_t{1} << kKeyBits) - 1;

std::int64_t cell_coord(double v, double cell_size) {
  return static_cast<std::int64_t>(std::floor(v / cell_size));
}

bool in_key_range(std::int64_t c) { return c >= -kKeyLimit && c <= kKeyLimit; }

}  // namespace

std::uint64_t VoxelGrid::pack(const CellKey& key) {
  auto enc = [](std::int32_t c) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(c) + kKeyLimit) &
           kKeyMask;
  };
  return (enc(key.x) << (2 * kKeyBits)) | (enc(key.y) << kKeyBits) | enc(key.z);
}

VoxelGrid::VoxelGrid(std::span<const Vec3> points, double cell_size)
    : cell_size_(cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw ContractError("voxel grid cell size must be positive");
  }
  if (points.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError("voxel grid supports at most 2^32-1 points");
  }
  const std::size_t n = points.size();
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = points[i];
    if (!p.allFinite()) {
      std::ostringstream msg;
      msg << "voxel grid point " << i << " is not finite";
      throw ContractError(msg.str());
    }
    const CellKey key = cell_of(p);
    keys[i] = pack(key);
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
  });

  points_.reserve(n);
  original_.reserve(n);
  cells_.reserve(n / 4 + 1);
  for (std::size_t i = 0; i < n;) {
    const std::uint64_t key = keys[order[i]];
    Range range{static_cast<std::uint32_t>(i), 0};
    for (; i < n && keys[order[i]] == key; ++i) {
      points_.push_back(points[order[i]]);
      original_.push_back(order[i]);
    }
    range.end = static_cast<std::uint32_t>(i);
    cells_.emplace(key, range);
  }
}

CellKey VoxelGrid::cell_of(const Vec3& p) const {
  const std::int64_t x = cell_coord(p.x(), cell_size_);
  const std::int64_t y = cell_coord(p.y(), cell_size_);
  const std::int64_t z = cell_coord(p.z(), cell_size_);
  if (!in_key_range(x) || !in_key_range(y) || !in_key_range(z)) {
    throw ContractError("point lies outside the representable voxel range");
  }
  return {static_cast<std::int32_t>(x), static_cast<std::int32_t>(y),
          static_cast<std::int32_t>(z)};
}

const VoxelGrid::Range* VoxelGrid::find(const CellKey& key) const {
  auto it = cells_.find(pack(key));
  return it == cells_.end() ? nullptr : &it->second;
}

std::vector<std::uint32_t> VoxelGrid::cell_members(const CellKey& key) const {
  std::vector<std::uint32_t> out;
  if (const Range* range = find(key)) {
    out.assign(original_.begin() + range->begin, original_.begin() + range->end);
  }
  return out;
}

std::vector<CellKey> VoxelGrid::occupied_cells() const {
  std::vector<CellKey> out;
  out.reserve(cells_.size());
  for (const auto& [packed, range] : cells_) out.push_back(cell_of(points_[range.begin]));
  std::sort(out.begin(), out.end(), [](const CellKey& a, const CellKey& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  });
  return out;
}

template <typename Fn>
void VoxelGrid::visit_candidates(const Vec3& q, double r, Fn&& fn) const {
  if (points_.empty()) return;
  std::int64_t lo[3];
  std::int64_t hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(cell_coord(q(a) - r, cell_size_), -kKeyLimit);
    hi[a] = std::min(cell_coord(q(a) + r, cell_size_), kKeyLimit);
    if (lo[a] > hi[a]) return;
  }
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
        const Range* range = find({static_cast<std::int32_t>(x),
                                   static_cast<std::int32_t>(y),
                                   static_cast<std::int32_t>(z)});
        if (range == nullptr) continue;
        for (std::uint32_t i = range->begin; i < range->end; ++i) fn(i);
      }
    }
  }
}

std::size_t VoxelGrid::count_within(const Vec3& q, double r) const {
  if (!(r > 0.0)) throw ContractError("count_within radius must be positive");
  if (cell_size_ > r) {
    std::ostringstream msg;
    msg << "count_within radius " << r << " is smaller than cell size "
        << cell_size_;
    throw ContractError(msg.str());
  }
  const double r2 = r * r;
  std::size_t count = 0;
  visit_candidates(q, r, [&](std::uint32_t i) {
    if (squared_distance(points_[i], q) < r2) ++count;
  });
  return count;
}

std::vector<std::uint32_t> VoxelGrid::indices_within(const Vec3& q, double r) const {
  if (!(r > 0.0)) throw ContractError("indices_within radius must be positive");
  const double r2 = r * r;
  std::vector<std::uint32_t> out;
  visit_candidates(q, r, [&](std::uint32_t i) {
    if (squared_distance(points_[i], q) < r2) out.push_back(original_[i]);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> VoxelGrid::knn_within(const Vec3& q, std::size_t k,
                                                 double r_max) const {
  if (k == 0) throw ContractError("knn_within requires k >= 1");
  if (!(r_max > 0.0)) throw ContractError("knn_within radius must be positive");
  const double r2 = r_max * r_max;
  std::vector<std::pair<double, std::uint32_t>> candidates;
  visit_candidates(q, r_max, [&](std::uint32_t i) {
    const double d2 = squared_distance(points_[i], q);
    if (d2 < r2) candidates.emplace_back(d2, original_[i]);
  });
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end());
  std::vector<std::uint32_t> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = candidates[i].second;
  return out;
}

}  // namespace ephemera
