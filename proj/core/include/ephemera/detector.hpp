#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "ephemera/seed_labels.hpp"
#include "ephemera/types.hpp"

namespace ephemera {

/// Opaque trained state produced by a Detector.
class DetectorModel {
 public:
  virtual ~DetectorModel() = default;
};

/// Pluggable detector used by the self-training loop. Each call to train
/// starts from scratch; no previous model is passed in.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string name() const = 0;

  /// `labels[i]` annotates `frames[i]`. Must be deterministic for a seed.
  virtual std::shared_ptr<const DetectorModel> train(std::span<const Scan> frames,
                                                     std::span<const LabelSet> labels,
                                                     std::uint64_t seed) const = 0;

  /// Scored detections (kind = detection, score in [0, 1]) for one frame.
  virtual LabelSet infer(const DetectorModel& model, const Scan& frame) const = 0;
};

struct GeometricDetectorParams {
  GroundParams ground;
  /// Points lower than this above the ground are dropped before clustering.
  double ground_clearance = 0.25;
  double cluster_eps = 1.0;
  std::size_t cluster_min_samples = 10;
  double score_threshold = 0.5;
  /// Logistic offset: score = sigmoid(offset - mahalanobis^2 / 2).
  double logistic_offset = 3.0;
  double variance_floor = 1e-4;
};

/// Gaussian priors over log box dimensions and box-bottom height.
struct GeometricModel final : DetectorModel {
  std::array<double, 3> log_dim_mean{};  // log l, log w, log h
  std::array<double, 3> log_dim_var{};
  double bottom_mean = 0.0;  // bottom height above ground
  double bottom_var = 0.0;
  double score_threshold = 0.5;
  double logistic_offset = 3.0;
  std::size_t training_boxes = 0;

  double mahalanobis_sq(const Box& box, double bottom_height) const;
  double score(const Box& box, double bottom_height) const;
};

/// Non-neural stand-in detector: Euclidean DBSCAN over non-ground points,
/// minimum-area box fit, and a score from a size/placement prior learned
/// from the training labels.
class GeometricDetector final : public Detector {
 public:
  explicit GeometricDetector(GeometricDetectorParams params = {});

  std::string name() const override { return "baseline"; }
  std::shared_ptr<const DetectorModel> train(std::span<const Scan> frames,
                                             std::span<const LabelSet> labels,
                                             std::uint64_t seed) const override;
  LabelSet infer(const DetectorModel& model, const Scan& frame) const override;

  const GeometricDetectorParams& params() const { return params_; }

 private:
  GeometricDetectorParams params_;
};

/// Fits the priors. Throws DataError when the labels contain no boxes.
GeometricModel baseline_train(std::span<const Scan> frames,
                              std::span<const LabelSet> labels,
                              const GeometricDetectorParams& params = {});

LabelSet baseline_infer(const GeometricModel& model, const Scan& frame,
                        const GeometricDetectorParams& params = {});

}  // namespace ephemera
