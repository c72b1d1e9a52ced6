#include "ephemera/self_train.hpp"

#include <cmath>
#include <exception>
#include <unordered_map>

#include "ephemera/errors.hpp"
#include "ephemera/parallel.hpp"

namespace ephemera {

bool box_contains(const Box& box, const Vec3& p) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = p.x() - box.cx;
  const double dy = p.y() - box.cy;
  const double along = c * dx + s * dy;
  const double across = -s * dx + c * dy;
  return std::abs(along) < box.l / 2.0 && std::abs(across) < box.w / 2.0 &&
         p.z() >= box.z_min() && p.z() <= box.z_max();
}

std::vector<LabelSet> filter_by_pp(std::span<const LabelSet> labels,
                                   std::span<const Scan> frames, const PPLookup& pp,
                                   const FilterConfig& cfg, unsigned threads) {
  if (labels.size() != frames.size()) {
    throw ContractError("filter_by_pp: labels and frames differ in length");
  }
  std::vector<LabelSet> out(labels.begin(), labels.end());
  parallel_for(labels.size(), threads, 1, [&](std::size_t begin, std::size_t end) {
    std::vector<float> inside;
    for (std::size_t f = begin; f < end; ++f) {
      const Scan& frame = frames[f];
      if (labels[f].frame_id != frame.scan_id) {
        throw ContractError("filter_by_pp: label frame '" + labels[f].frame_id +
                            "' does not match scan '" + frame.scan_id + "'");
      }
      const PPField* field = pp ? pp(frame.scan_id) : nullptr;
      if (field == nullptr) continue;
      if (field->tau.size() != frame.points.size()) {
        throw ContractError("filter_by_pp: PP field size mismatch for '" +
                            frame.scan_id + "'");
      }
      std::vector<Box> kept;
      for (const Box& box : labels[f].boxes) {
        inside.clear();
        for (std::size_t i = 0; i < frame.points.size(); ++i) {
          if (box_contains(box, frame.points[i].xyz)) inside.push_back(field->tau[i]);
        }
        if (inside.empty()) continue;
        if (nearest_rank_percentile(inside, cfg.alpha) > cfg.gamma) continue;
        kept.push_back(box);
      }
      out[f].boxes = std::move(kept);
    }
  });
  return out;
}

SelfTrainError::SelfTrainError(int round, const std::string& what)
    : Error("self-training round " + std::to_string(round) + ": " + what),
      round_(round) {}

SelfTrainState self_train_loop(std::span<const Scan> pool,
                               std::span<const LabelSet> seed, const Detector& detector,
                               const SelfTrainConfig& cfg, const PPLookup& pp,
                               std::optional<std::span<const LabelSet>> ground_truth,
                               const RoundCallback& on_round) {
  if (cfg.rounds < 0) throw ContractError("self-training rounds must be >= 0");
  if (seed.empty()) throw ContractError("self-training needs a non-empty seed label set");
  cfg.filter.validate();

  std::unordered_map<std::string, const LabelSet*> seed_by_frame;
  for (const LabelSet& s : seed) seed_by_frame.emplace(s.frame_id, &s);

  auto quality = [&](const std::vector<LabelSet>& labels) -> std::optional<EvalReport> {
    if (!ground_truth) return std::nullopt;
    return label_quality(labels, *ground_truth, cfg.eval);
  };

  SelfTrainState state;
  RoundRecord r0;
  r0.round = 0;
  r0.labels.reserve(pool.size());
  for (const Scan& frame : pool) {
    auto it = seed_by_frame.find(frame.scan_id);
    if (it != seed_by_frame.end()) {
      r0.labels.push_back(*it->second);
    } else {
      r0.labels.push_back({frame.scan_id, LabelKind::kSeed, {}});
    }
  }
  r0.quality = quality(r0.labels);

  std::shared_ptr<const DetectorModel> model;
  try {
    model = detector.train(pool, r0.labels, cfg.seed);
  } catch (const std::exception& e) {
    std::throw_with_nested(SelfTrainError(0, e.what()));
  }
  state.rounds.push_back(std::move(r0));
  if (on_round) on_round(state.rounds.back());

  for (int j = 1; j <= cfg.rounds; ++j) {
    RoundRecord rec;
    rec.round = j;
    rec.unfiltered.resize(pool.size());
    try {
      parallel_for(pool.size(), cfg.threads, 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t f = begin; f < end; ++f) {
          rec.unfiltered[f] = detector.infer(*model, pool[f]);
          rec.unfiltered[f].frame_id = pool[f].scan_id;
          rec.unfiltered[f].kind = LabelKind::kDetection;
        }
      });
    } catch (const std::exception& e) {
      std::throw_with_nested(SelfTrainError(j, e.what()));
    }
    rec.labels = cfg.pp_filter
                     ? filter_by_pp(rec.unfiltered, pool, pp, cfg.filter, cfg.threads)
                     : rec.unfiltered;
    for (LabelSet& s : rec.labels) s.kind = LabelKind::kPseudo;
    rec.quality = quality(rec.labels);
    rec.unfiltered_quality = quality(rec.unfiltered);

    try {
      model = detector.train(pool, rec.labels, cfg.seed + static_cast<std::uint64_t>(j));
    } catch (const std::exception& e) {
      std::throw_with_nested(SelfTrainError(j, e.what()));
    }
    state.round = j;
    state.rounds.push_back(std::move(rec));
    if (on_round) on_round(state.rounds.back());
  }
  return state;
}

}  // namespace ephemera
