#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ephemera/types.hpp"

namespace ephemera {

enum class IouMode { kBev, k3d };

std::string_view to_string(IouMode mode);
/// Accepts "bev" and "3d". Throws FormatError otherwise.
IouMode iou_mode_from_string(std::string_view name);

/// Half-open range [lo, hi) of BEV distance from the sensor origin.
struct DepthBucket {
  double lo = 0.0;
  double hi = 80.0;

  bool contains(double range) const { return range >= lo && range < hi; }
  std::string name() const;  // e.g. "0-30"
};

struct EvalConfig {
  double iou_threshold = 0.25;
  IouMode mode = IouMode::kBev;
  std::vector<DepthBucket> buckets = {{0, 30}, {30, 50}, {50, 80}, {0, 80}};

  /// Throws ContractError on an empty or malformed bucket list or a
  /// threshold outside (0, 1].
  void validate() const;
};

/// Corners of the BEV footprint, counter-clockwise.
std::vector<Vec2> bev_corners(const Box& box);

/// Area of the intersection of two convex counter-clockwise polygons.
double convex_intersection_area(std::span<const Vec2> a, std::span<const Vec2> b);

double iou_bev(const Box& a, const Box& b);
double iou_3d(const Box& a, const Box& b);
double iou(const Box& a, const Box& b, IouMode mode);

struct MatchResult {
  std::vector<std::optional<std::size_t>> det_to_gt;  // per detection
  std::vector<double> det_iou;                        // IoU with its match, else 0
  std::vector<bool> gt_covered;
};

/// Detections in descending score order (ties by index) each take the
/// highest-IoU unmatched ground truth with IoU >= threshold.
MatchResult match_greedy(std::span<const Box> dets, std::span<const Box> gts,
                         double threshold, IouMode mode);

/// Score-free one-to-one matching: candidate pairs with IoU >= threshold are
/// accepted in descending IoU order (ties by label index, then GT index).
MatchResult match_by_iou(std::span<const Box> labels, std::span<const Box> gts,
                         double threshold, IouMode mode);

struct ScoredDetection {
  double score = 0.0;
  bool true_positive = false;
};

struct PrCurve {
  std::vector<double> score;
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t num_gt = 0;
};

/// Pooled precision/recall after each detection in descending score order.
PrCurve pr_curve(std::vector<ScoredDetection> detections, std::size_t num_gt);

inline constexpr int kRecallPositions = 40;

/// Mean over recall positions r = 1/40 .. 40/40 of the best precision
/// reached at recall >= r. Empty when there is no ground truth.
std::optional<double> average_precision(const PrCurve& curve);

struct BucketMetrics {
  std::optional<double> ap;
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t num_labels = 0;
  std::size_t num_gt = 0;
  std::size_t true_positives_label = 0;  // labels in bucket that matched
  std::size_t covered_gt = 0;            // GTs in bucket that were matched
};

struct EvalReport {
  EvalConfig config;
  std::vector<std::pair<std::string, BucketMetrics>> buckets;
  /// PR curve per bucket name, only for scored inputs.
  std::map<std::string, PrCurve> curves;

  const BucketMetrics& bucket(const std::string& name) const;
};

/// Precision/recall of unscored labels per depth bucket. Labels are bucketed
/// by their own center range (precision), ground truth by theirs (recall).
/// Boxes outside every bucket are dropped before matching.
/// Throws DataError when the two sides do not cover the same frame ids.
EvalReport label_quality(std::span<const LabelSet> labels,
                         std::span<const LabelSet> gts, const EvalConfig& cfg);

/// Recall-only view of label_quality, keyed by bucket name.
std::map<std::string, std::optional<double>> max_recall(
    std::span<const LabelSet> labels, std::span<const LabelSet> gts,
    const EvalConfig& cfg);

/// label_quality plus KITTI-style AP per bucket, computed when every label
/// carries a score. For AP each bucket is evaluated on its own: labels and
/// ground truth outside the bucket are removed before greedy matching.
EvalReport evaluate(std::span<const LabelSet> labels, std::span<const LabelSet> gts,
                    const EvalConfig& cfg);

}  // namespace ephemera
