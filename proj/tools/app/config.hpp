#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ephemera/detector.hpp"
#include "ephemera/ephemerality.hpp"
#include "ephemera/errors.hpp"
#include "ephemera/eval.hpp"
#include "ephemera/seed_labels.hpp"
#include "ephemera/self_train.hpp"

namespace ephemera::app {

/// Invalid configuration; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Every tunable of the pipeline in one place. Defaults are the published
/// hyperparameters.
struct PipelineConfig {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  PPOptions pp;
  SeedParams seed_labels;
  GeometricDetectorParams detector;
  std::string detector_name = "baseline";
  int rounds = 10;
  bool pp_filter = true;
  EvalConfig eval;

  /// Throws ConfigError when any module rejects its parameters.
  void validate() const;
};

/// Overlays `doc` on the defaults. Unknown keys and type mismatches raise
/// ConfigError naming the dotted key path.
PipelineConfig parse_config(const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const PipelineConfig& cfg);

}  // namespace ephemera::app
