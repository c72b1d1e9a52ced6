#include <algorithm>
#include <cmath>
#include <numeric>

#include "ephemera/detector.hpp"
#include "ephemera/errors.hpp"
#include "ephemera/voxel_grid.hpp"

namespace ephemera {

namespace {

std::array<double, 3> log_dims(const Box& b) {
  return {std::log(b.l), std::log(b.w), std::log(b.h)};
}

// Ground removal hides everything below the clearance band at inference, so
// both sides see the bottom clamped to it.
double bottom_feature(double bottom, const GeometricDetectorParams& params) {
  return std::max(bottom, params.ground_clearance);
}

double bottom_height(const Box& b, const GroundPlane& ground) {
  return ground.height(Vec3(b.cx, b.cy, b.z_min()));
}

}  // namespace

double GeometricModel::mahalanobis_sq(const Box& box, double bottom) const {
  const auto d = log_dims(box);
  double m = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double z = d[i] - log_dim_mean[i];
    m += z * z / log_dim_var[i];
  }
  const double zb = bottom - bottom_mean;
  return m + zb * zb / bottom_var;
}

double GeometricModel::score(const Box& box, double bottom) const {
  const double logit = logistic_offset - 0.5 * mahalanobis_sq(box, bottom);
  return 1.0 / (1.0 + std::exp(-logit));
}

GeometricModel baseline_train(std::span<const Scan> frames,
                              std::span<const LabelSet> labels,
                              const GeometricDetectorParams& params) {
  if (frames.size() != labels.size()) {
    throw ContractError("baseline_train: frames and labels differ in length");
  }
  std::vector<std::array<double, 4>> samples;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (labels[i].boxes.empty()) continue;
    if (labels[i].frame_id != frames[i].scan_id) {
      throw ContractError("baseline_train: label frame '" + labels[i].frame_id +
                          "' does not match scan '" + frames[i].scan_id + "'");
    }
    const GroundPlane ground = estimate_ground(positions(frames[i]), params.ground);
    for (const Box& b : labels[i].boxes) {
      const auto d = log_dims(b);
      samples.push_back({d[0], d[1], d[2], bottom_feature(bottom_height(b, ground), params)});
    }
  }
  if (samples.empty()) throw DataError("cannot train a detector on zero boxes");

  std::array<double, 4> mean{};
  for (const auto& s : samples) {
    for (int k = 0; k < 4; ++k) mean[k] += s[k];
  }
  for (double& m : mean) m /= static_cast<double>(samples.size());
  std::array<double, 4> var{};
  for (const auto& s : samples) {
    for (int k = 0; k < 4; ++k) var[k] += (s[k] - mean[k]) * (s[k] - mean[k]);
  }
  for (double& v : var) {
    v = std::max(v / static_cast<double>(samples.size()), params.variance_floor);
  }

  GeometricModel model;
  for (int k = 0; k < 3; ++k) {
    model.log_dim_mean[k] = mean[k];
    model.log_dim_var[k] = var[k];
  }
  model.bottom_mean = mean[3];
  model.bottom_var = var[3];
  model.score_threshold = params.score_threshold;
  model.logistic_offset = params.logistic_offset;
  model.training_boxes = samples.size();
  return model;
}

LabelSet baseline_infer(const GeometricModel& model, const Scan& frame,
                        const GeometricDetectorParams& params) {
  LabelSet out;
  out.frame_id = frame.scan_id;
  out.kind = LabelKind::kDetection;
  if (frame.points.empty()) return out;

  const std::vector<Vec3> all = positions(frame);
  const GroundPlane ground = estimate_ground(all, params.ground);
  std::vector<Vec3> above;
  for (const Vec3& p : all) {
    if (ground.height(p) >= params.ground_clearance) above.push_back(p);
  }
  if (above.empty()) return out;

  const VoxelGrid grid(above, params.cluster_eps);
  const auto clusters = dbscan(above.size(), params.cluster_min_samples,
                               [&](std::size_t i, std::vector<std::uint32_t>& nb) {
                                 for (std::uint32_t j :
                                      grid.indices_within(above[i], params.cluster_eps)) {
                                   if (j != i) nb.push_back(j);
                                 }
                               });

  std::vector<Vec3> members;
  for (const Cluster& c : clusters) {
    if (c.indices.size() < 3) continue;
    members.clear();
    for (std::uint32_t i : c.indices) members.push_back(above[i]);
    FittedBox fit = fit_box(members, ground);
    const double s = model.score(fit.box, bottom_feature(fit.height_min, params));
    if (s < model.score_threshold) continue;
    // Ground removal clips the bottom of every object; re-extend boxes that
    // reach down into the removed band.
    if (fit.height_min < 2.0 * params.ground_clearance) {
      const double top = fit.height_max;
      const Vec3 up = ground.normal;
      const double shift = 0.5 * fit.height_min;
      fit.box.cx -= shift * up.x();
      fit.box.cy -= shift * up.y();
      fit.box.cz -= shift * up.z();
      fit.box.h = top;
      fit.height_min = 0.0;
      if (fit.box.h < kMinBoxExtent) fit.box.h = kMinBoxExtent;
    }
    fit.box.score = s;
    out.boxes.push_back(fit.box);
  }
  return out;
}

GeometricDetector::GeometricDetector(GeometricDetectorParams params)
    : params_(std::move(params)) {}

std::shared_ptr<const DetectorModel> GeometricDetector::train(
    std::span<const Scan> frames, std::span<const LabelSet> labels,
    std::uint64_t /*seed*/) const {
  return std::make_shared<const GeometricModel>(baseline_train(frames, labels, params_));
}

LabelSet GeometricDetector::infer(const DetectorModel& model, const Scan& frame) const {
  const auto* geometric = dynamic_cast<const GeometricModel*>(&model);
  if (geometric == nullptr) {
    throw ContractError("GeometricDetector::infer received a foreign model");
  }
  return baseline_infer(*geometric, frame, params_);
}

}  // namespace ephemera
