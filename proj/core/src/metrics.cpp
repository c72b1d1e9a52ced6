#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "ephemera/errors.hpp"
#include "ephemera/eval.hpp"

namespace ephemera {

std::string_view to_string(IouMode mode) { return mode == IouMode::kBev ? "bev" : "3d"; }

IouMode iou_mode_from_string(std::string_view name) {
  if (name == "bev" || name == "BEV") return IouMode::kBev;
  if (name == "3d" || name == "3D") return IouMode::k3d;
  throw FormatError("unknown IoU mode '" + std::string(name) + "'");
}

std::string DepthBucket::name() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g-%g", lo, hi);
  return buf;
}

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ContractError("IoU threshold must lie in (0, 1]");
  }
  if (buckets.empty()) throw ContractError("at least one depth bucket is required");
  for (const DepthBucket& b : buckets) {
    if (!(b.lo >= 0.0 && b.hi > b.lo)) {
      throw ContractError("depth bucket " + b.name() + " is not an ordered range");
    }
  }
}

const BucketMetrics& EvalReport::bucket(const std::string& name) const {
  for (const auto& [n, m] : buckets) {
    if (n == name) return m;
  }
  throw ContractError("no depth bucket named '" + name + "'");
}

MatchResult match_greedy(std::span<const Box> dets, std::span<const Box> gts,
                         double threshold, IouMode mode) {
  MatchResult result;
  result.det_to_gt.assign(dets.size(), std::nullopt);
  result.det_iou.assign(dets.size(), 0.0);
  result.gt_covered.assign(gts.size(), false);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score.value_or(0.0) > dets[b].score.value_or(0.0);
  });

  for (std::size_t d : order) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (result.gt_covered[g]) continue;
      const double v = iou(dets[d], gts[g], mode);
      if (v >= threshold && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best) {
      result.det_to_gt[d] = best;
      result.det_iou[d] = best_iou;
      result.gt_covered[*best] = true;
    }
  }
  return result;
}

MatchResult match_by_iou(std::span<const Box> labels, std::span<const Box> gts,
                         double threshold, IouMode mode) {
  MatchResult result;
  result.det_to_gt.assign(labels.size(), std::nullopt);
  result.det_iou.assign(labels.size(), 0.0);
  result.gt_covered.assign(gts.size(), false);

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(labels[i], gts[g], mode);
      if (v >= threshold) pairs.emplace_back(-v, i, g);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  for (const auto& [neg_iou, i, g] : pairs) {
    if (result.det_to_gt[i] || result.gt_covered[g]) continue;
    result.det_to_gt[i] = g;
    result.det_iou[i] = -neg_iou;
    result.gt_covered[g] = true;
  }
  return result;
}

PrCurve pr_curve(std::vector<ScoredDetection> detections, std::size_t num_gt) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const ScoredDetection& a, const ScoredDetection& b) {
                     return a.score > b.score;
                   });
  PrCurve curve;
  curve.num_gt = num_gt;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].true_positive) ++tp;
    curve.score.push_back(detections[i].score);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    curve.recall.push_back(num_gt == 0 ? 0.0
                                       : static_cast<double>(tp) /
                                             static_cast<double>(num_gt));
  }
  return curve;
}

std::optional<double> average_precision(const PrCurve& curve) {
  if (curve.num_gt == 0) return std::nullopt;
  double sum = 0.0;
  for (int k = 1; k <= kRecallPositions; ++k) {
    const double r = static_cast<double>(k) / kRecallPositions;
    double best = 0.0;
    for (std::size_t i = 0; i < curve.recall.size(); ++i) {
      if (curve.recall[i] >= r) best = std::max(best, curve.precision[i]);
    }
    sum += best;
  }
  return sum / kRecallPositions;
}

namespace {

struct FramePair {
  const LabelSet* labels;
  const LabelSet* gts;
};

std::vector<FramePair> align_frames(std::span<const LabelSet> labels,
                                    std::span<const LabelSet> gts) {
  std::unordered_map<std::string, const LabelSet*> gt_by_id;
  for (const LabelSet& g : gts) {
    if (!gt_by_id.emplace(g.frame_id, &g).second) {
      throw DataError("duplicate ground-truth frame '" + g.frame_id + "'");
    }
  }
  std::set<std::string> unmatched;
  std::set<std::string> seen;
  std::vector<FramePair> out;
  for (const LabelSet& l : labels) {
    if (!seen.insert(l.frame_id).second) {
      throw DataError("duplicate label frame '" + l.frame_id + "'");
    }
    auto it = gt_by_id.find(l.frame_id);
    if (it == gt_by_id.end()) {
      unmatched.insert(l.frame_id);
      continue;
    }
    out.push_back({&l, it->second});
  }
  for (const LabelSet& g : gts) {
    if (!seen.contains(g.frame_id)) unmatched.insert(g.frame_id);
  }
  if (!unmatched.empty()) {
    std::string msg = "label and ground-truth frames differ; unmatched frames:";
    for (const std::string& id : unmatched) msg += " " + id;
    throw DataError(msg);
  }
  return out;
}

bool in_any_bucket(const Box& b, const EvalConfig& cfg) {
  const double range = b.bev_range();
  return std::any_of(cfg.buckets.begin(), cfg.buckets.end(),
                     [&](const DepthBucket& d) { return d.contains(range); });
}

std::vector<Box> keep_if(const std::vector<Box>& boxes, auto pred) {
  std::vector<Box> out;
  for (const Box& b : boxes) {
    if (pred(b)) out.push_back(b);
  }
  return out;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalReport label_quality(std::span<const LabelSet> labels,
                         std::span<const LabelSet> gts, const EvalConfig& cfg) {
  cfg.validate();
  const auto frames = align_frames(labels, gts);
  EvalReport report;
  report.config = cfg;
  std::vector<BucketMetrics> acc(cfg.buckets.size());

  for (const FramePair& f : frames) {
    auto in_range = [&](const Box& b) { return in_any_bucket(b, cfg); };
    const auto lb = keep_if(f.labels->boxes, in_range);
    const auto gb = keep_if(f.gts->boxes, in_range);
    const MatchResult m = match_by_iou(lb, gb, cfg.iou_threshold, cfg.mode);
    for (std::size_t k = 0; k < cfg.buckets.size(); ++k) {
      const DepthBucket& bucket = cfg.buckets[k];
      for (std::size_t i = 0; i < lb.size(); ++i) {
        if (!bucket.contains(lb[i].bev_range())) continue;
        ++acc[k].num_labels;
        if (m.det_to_gt[i]) ++acc[k].true_positives_label;
      }
      for (std::size_t g = 0; g < gb.size(); ++g) {
        if (!bucket.contains(gb[g].bev_range())) continue;
        ++acc[k].num_gt;
        if (m.gt_covered[g]) ++acc[k].covered_gt;
      }
    }
  }
  for (std::size_t k = 0; k < cfg.buckets.size(); ++k) {
    acc[k].precision = ratio(acc[k].true_positives_label, acc[k].num_labels);
    acc[k].recall = ratio(acc[k].covered_gt, acc[k].num_gt);
    report.buckets.emplace_back(cfg.buckets[k].name(), acc[k]);
  }
  return report;
}

std::map<std::string, std::optional<double>> max_recall(
    std::span<const LabelSet> labels, std::span<const LabelSet> gts,
    const EvalConfig& cfg) {
  std::map<std::string, std::optional<double>> out;
  for (const auto& [name, m] : label_quality(labels, gts, cfg).buckets) {
    out[name] = m.recall;
  }
  return out;
}

EvalReport evaluate(std::span<const LabelSet> labels, std::span<const LabelSet> gts,
                    const EvalConfig& cfg) {
  EvalReport report = label_quality(labels, gts, cfg);
  const bool scored = std::all_of(labels.begin(), labels.end(), [](const LabelSet& s) {
    return std::all_of(s.boxes.begin(), s.boxes.end(),
                       [](const Box& b) { return b.score.has_value(); });
  });
  if (!scored) return report;

  const auto frames = align_frames(labels, gts);
  for (std::size_t k = 0; k < cfg.buckets.size(); ++k) {
    const DepthBucket& bucket = cfg.buckets[k];
    auto in_bucket = [&](const Box& b) { return bucket.contains(b.bev_range()); };
    std::vector<ScoredDetection> pooled;
    std::size_t num_gt = 0;
    for (const FramePair& f : frames) {
      const auto dets = keep_if(f.labels->boxes, in_bucket);
      const auto gb = keep_if(f.gts->boxes, in_bucket);
      num_gt += gb.size();
      const MatchResult m = match_greedy(dets, gb, cfg.iou_threshold, cfg.mode);
      for (std::size_t i = 0; i < dets.size(); ++i) {
        pooled.push_back({*dets[i].score, m.det_to_gt[i].has_value()});
      }
    }
    PrCurve curve = pr_curve(std::move(pooled), num_gt);
    report.buckets[k].second.ap = average_precision(curve);
    report.curves[bucket.name()] = std::move(curve);
  }
  return report;
}

}  // namespace ephemera
