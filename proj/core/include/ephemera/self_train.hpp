#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ephemera/detector.hpp"
#include "ephemera/errors.hpp"
#include "ephemera/ephemerality.hpp"
#include "ephemera/eval.hpp"
#include "ephemera/seed_labels.hpp"

namespace ephemera {

/// Strict interior in BEV, closed interval vertically.
bool box_contains(const Box& box, const Vec3& p);

/// Returns the PP field of a frame, or nullptr when the frame has no
/// multi-traversal coverage.
using PPLookup = std::function<const PPField*(const std::string& frame_id)>;

/// Drops boxes whose alpha-percentile PP score over the points they contain
/// exceeds gamma, and boxes containing no points. Frames without a PP field
/// pass through untouched. `frames[i]` must carry `labels[i]`'s frame id.
std::vector<LabelSet> filter_by_pp(std::span<const LabelSet> labels,
                                   std::span<const Scan> frames, const PPLookup& pp,
                                   const FilterConfig& cfg, unsigned threads = 1);

struct SelfTrainConfig {
  int rounds = 10;
  bool pp_filter = true;
  FilterConfig filter;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  EvalConfig eval;
};

struct RoundRecord {
  int round = 0;
  /// B_j: the labels this round's detector was trained on.
  std::vector<LabelSet> labels;
  /// Raw detections of D_{j-1} before PP filtering (empty for round 0).
  std::vector<LabelSet> unfiltered;
  std::optional<EvalReport> quality;             // of `labels`
  std::optional<EvalReport> unfiltered_quality;  // of `unfiltered`
};

struct SelfTrainState {
  int round = 0;
  std::vector<RoundRecord> rounds;

  const std::vector<LabelSet>& current() const { return rounds.back().labels; }
};

/// Error raised when a round's training or inference fails. Thrown with
/// std::throw_with_nested, so the original exception stays reachable.
class SelfTrainError : public Error {
 public:
  SelfTrainError(int round, const std::string& what);
  int round() const { return round_; }

 private:
  int round_;
};

/// Observer invoked after each round completes.
using RoundCallback = std::function<void(const RoundRecord&)>;

/// Runs the iterative self-training loop: D_0 is trained on the seed labels,
/// then each round infers on the pool, filters by PP score and retrains from
/// scratch. Seed labels missing for a pool frame count as an empty set.
/// When `ground_truth` is given each round records label precision/recall.
SelfTrainState self_train_loop(std::span<const Scan> pool,
                               std::span<const LabelSet> seed, const Detector& detector,
                               const SelfTrainConfig& cfg, const PPLookup& pp,
                               std::optional<std::span<const LabelSet>> ground_truth = {},
                               const RoundCallback& on_round = {});

}  // namespace ephemera
