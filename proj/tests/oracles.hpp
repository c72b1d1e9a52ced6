#pragma once

// Independent brute-force references shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "ephemera/eval.hpp"
#include "ephemera/types.hpp"

namespace ephemera::oracle {

inline std::vector<std::uint32_t> within(const std::vector<Vec3>& pts, const Vec3& q, double r) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    const Vec3 d = pts[i] - q;
    if (d.squaredNorm() < r * r) out.push_back(i);
  }
  return out;
}

/// Sorted by distance, ties by index.
inline std::vector<std::uint32_t> knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k,
                                      double r_max) {
  std::vector<std::uint32_t> idx = within(pts, q, r_max);
  std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    return (pts[a] - q).squaredNorm() < (pts[b] - q).squaredNorm();
  });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

using Weights = std::vector<std::vector<float>>;  // < 0 means no edge

/// Textbook DBSCAN over a dense weight matrix.
inline std::vector<std::vector<std::uint32_t>> dbscan(const Weights& w, double eps,
                                                      std::size_t min_samples) {
  const std::size_t n = w.size();
  auto region = [&](std::size_t p) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t q = 0; q < n; ++q) {
      if (q == p || (w[p][q] >= 0.0f && w[p][q] <= eps)) out.push_back(q);
    }
    return out;
  };
  constexpr int kUnvisited = -2, kNoise = -1;
  std::vector<int> label(n, kUnvisited);
  int next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (label[p] != kUnvisited) continue;
    auto nb = region(p);
    if (nb.size() < min_samples) {
      label[p] = kNoise;
      continue;
    }
    const int c = next++;
    label[p] = c;
    std::vector<std::uint32_t> queue(nb.begin(), nb.end());
    for (std::size_t k = 0; k < queue.size(); ++k) {
      const std::uint32_t q = queue[k];
      if (label[q] == kNoise) label[q] = c;
      if (label[q] != kUnvisited) continue;
      label[q] = c;
      auto nq = region(q);
      if (nq.size() >= min_samples) queue.insert(queue.end(), nq.begin(), nq.end());
    }
  }
  std::vector<std::vector<std::uint32_t>> clusters(next);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (label[i] >= 0) clusters[label[i]].push_back(i);
  }
  std::sort(clusters.begin(), clusters.end());
  return clusters;
}

/// x-interval of a BEV rectangle on the horizontal line at height y.
inline std::optional<std::pair<double, double>> row_span(const Box& b, double y) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  // Local coordinates along the row: u = c*dx + s*dy, v = -s*dx + c*dy.
  const double dy = y - b.cy;
  double lo = -1e300, hi = 1e300;
  auto clip = [&](double slope, double offset, double half) {
    // |slope * dx + offset| < half
    if (std::abs(slope) < 1e-15) return std::abs(offset) < half;
    double a = (-half - offset) / slope, z = (half - offset) / slope;
    if (a > z) std::swap(a, z);
    lo = std::max(lo, a);
    hi = std::min(hi, z);
    return true;
  };
  if (!clip(c, s * dy, b.l / 2.0) || !clip(-s, c * dy, b.w / 2.0) || !(lo < hi)) {
    return std::nullopt;
  }
  return std::pair{b.cx + lo, b.cx + hi};
}

/// BEV areas by scanline rasterization: `rows` horizontal lines across the
/// joint extent, exact interval lengths along each line.
struct RasterAreas {
  double a = 0.0, b = 0.0, inter = 0.0;
};

inline RasterAreas raster_bev(const Box& a, const Box& b, int rows = 2000) {
  const double ra = 0.5 * std::hypot(a.l, a.w), rb = 0.5 * std::hypot(b.l, b.w);
  const double y0 = std::min(a.cy - ra, b.cy - rb), y1 = std::max(a.cy + ra, b.cy + rb);
  const double dy = (y1 - y0) / rows;
  RasterAreas out;
  for (int i = 0; i < rows; ++i) {
    const double y = y0 + (i + 0.5) * dy;
    const auto sa = row_span(a, y), sb = row_span(b, y);
    if (sa) out.a += (sa->second - sa->first) * dy;
    if (sb) out.b += (sb->second - sb->first) * dy;
    if (sa && sb) {
      out.inter += std::max(0.0, std::min(sa->second, sb->second) - std::max(sa->first, sb->first)) * dy;
    }
  }
  return out;
}

inline double raster_iou_bev(const Box& a, const Box& b, int rows = 2000) {
  const RasterAreas r = raster_bev(a, b, rows);
  return r.inter / (r.a + r.b - r.inter);
}

/// 3D IoU by slicing both boxes into `layers` horizontal slabs, each
/// rasterized in BEV.
inline double raster_iou_3d(const Box& a, const Box& b, int layers = 100000, int rows = 2000) {
  const double z0 = std::min(a.z_min(), b.z_min()), z1 = std::max(a.z_max(), b.z_max());
  const double dz = (z1 - z0) / layers;
  const RasterAreas bev = raster_bev(a, b, rows);
  double va = 0, vb = 0, vi = 0;
  for (int k = 0; k < layers; ++k) {
    const double z = z0 + (k + 0.5) * dz;
    const bool in_a = z >= a.z_min() && z <= a.z_max();
    const bool in_b = z >= b.z_min() && z <= b.z_max();
    if (in_a) va += bev.a * dz;
    if (in_b) vb += bev.b * dz;
    if (in_a && in_b) vi += bev.inter * dz;
  }
  return vi / (va + vb - vi);
}

/// Greedy matching re-derived from a full IoU matrix: repeatedly pick the
/// highest-scoring unprocessed detection by linear scan.
inline std::vector<std::optional<std::size_t>> greedy_assignment(const std::vector<Box>& dets,
                                                                 const std::vector<Box>& gts,
                                                                 double threshold,
                                                                 IouMode mode) {
  std::vector<std::vector<double>> m(dets.size(), std::vector<double>(gts.size()));
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) m[i][j] = iou(dets[i], gts[j], mode);
  }
  std::vector<std::optional<std::size_t>> out(dets.size());
  std::vector<bool> done(dets.size(), false), taken(gts.size(), false);
  for (std::size_t round = 0; round < dets.size(); ++round) {
    std::size_t pick = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (done[i]) continue;
      if (pick == dets.size() || dets[i].score.value_or(0) > dets[pick].score.value_or(0)) pick = i;
    }
    done[pick] = true;
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (taken[j] || m[pick][j] < threshold) continue;
      if (!best || m[pick][j] > m[pick][*best]) best = j;
    }
    if (best) taken[*best] = true;
    out[pick] = best;
  }
  return out;
}

}  // namespace ephemera::oracle
