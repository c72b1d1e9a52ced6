#include "app/config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace ephemera::app {

namespace {

using nlohmann::json;

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
        throw ConfigError("");
      }
    } else {
      if (!v.is_number()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type or range");
  }
}

using Setter = std::function<void(const json&, const std::string&)>;

void apply(const json& obj, const std::string& prefix,
           const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) {
    throw ConfigError("config key '" + (prefix.empty() ? std::string("<root>") : prefix) +
                      "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + path + "'");
    it->second(value, path);
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v, const std::string& key) { field = as<T>(v, key); };
}

}  // namespace

void PipelineConfig::validate() const {
  auto guard = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ContractError& e) {
      throw ConfigError(std::string("config section '") + section + "': " + e.what());
    }
  };
  guard("ppscore", [&] {
    pp.window.validate();
    if (!(pp.radius > 0.0)) throw ContractError("radius must be positive");
  });
  guard("seed_labels", [&] {
    seed_labels.filter.validate();
    if (seed_labels.graph.k == 0) throw ContractError("k must be >= 1");
    if (!(seed_labels.graph.max_distance > 0.0)) throw ContractError("rprime must be positive");
    if (!(seed_labels.dbscan.eps >= 0.0)) throw ContractError("eps must be non-negative");
    if (seed_labels.dbscan.min_samples == 0) throw ContractError("min_samples must be >= 1");
  });
  guard("ground", [&] {
    const GroundParams& g = seed_labels.ground;
    if (!(g.inlier_threshold > 0.0) || g.iterations < 1 ||
        !(g.min_inlier_fraction >= 0.0 && g.min_inlier_fraction <= 1.0)) {
      throw ContractError("invalid RANSAC parameters");
    }
  });
  guard("selftrain", [&] {
    if (rounds < 0) throw ContractError("rounds must be >= 0");
    if (detector_name != "baseline") {
      throw ContractError("unknown detector '" + detector_name + "'");
    }
    if (!(detector.score_threshold >= 0.0 && detector.score_threshold <= 1.0)) {
      throw ContractError("score_threshold must lie in [0, 1]");
    }
    if (!(detector.cluster_eps > 0.0)) throw ContractError("cluster_eps must be positive");
  });
  guard("eval", [&] { eval.validate(); });
}

PipelineConfig parse_config(const json& doc) {
  PipelineConfig cfg;
  auto& pp = cfg.pp;
  auto& sl = cfg.seed_labels;
  auto& det = cfg.detector;

  std::map<std::string, Setter> ppscore = {
      {"radius", set(pp.radius)},
      {"h_start", set(pp.window.h_start)},
      {"h_end", set(pp.window.h_end)},
      {"spacing", set(pp.window.spacing)},
      {"forward_only", set(pp.window.forward_only)},
      {"include_own_traversal", set(pp.include_own_traversal)},
  };
  std::map<std::string, Setter> seed_labels = {
      {"k", set(sl.graph.k)},
      {"rprime", set(sl.graph.max_distance)},
      {"eps", set(sl.dbscan.eps)},
      {"min_samples", set(sl.dbscan.min_samples)},
      {"alpha", set(sl.filter.alpha)},
      {"gamma", set(sl.filter.gamma)},
      {"min_points", set(sl.filter.min_points)},
      {"volume_min", set(sl.filter.volume_min)},
      {"volume_max", set(sl.filter.volume_max)},
      {"height_max_min", set(sl.filter.height_max_min)},
      {"height_min_max", set(sl.filter.height_min_max)},
  };
  std::map<std::string, Setter> ground = {
      {"inlier_threshold", set(sl.ground.inlier_threshold)},
      {"iterations", set(sl.ground.iterations)},
      {"min_inlier_fraction", set(sl.ground.min_inlier_fraction)},
      {"min_normal_z", set(sl.ground.min_normal_z)},
      {"sensor_height", set(sl.ground.sensor_height)},
      {"min_points", set(sl.ground.min_points)},
      {"seed", set(sl.ground.seed)},
  };
  std::map<std::string, Setter> selftrain = {
      {"rounds", set(cfg.rounds)},
      {"pp_filter", set(cfg.pp_filter)},
      {"detector", set(cfg.detector_name)},
      {"score_threshold", set(det.score_threshold)},
      {"cluster_eps", set(det.cluster_eps)},
      {"cluster_min_samples", set(det.cluster_min_samples)},
      {"ground_clearance", set(det.ground_clearance)},
      {"logistic_offset", set(det.logistic_offset)},
  };
  std::map<std::string, Setter> eval = {
      {"iou", set(cfg.eval.iou_threshold)},
      {"mode",
       [&](const json& v, const std::string& key) {
         try {
           cfg.eval.mode = iou_mode_from_string(as<std::string>(v, key));
         } catch (const FormatError&) {
           throw ConfigError("config key '" + key + "' must be \"bev\" or \"3d\"");
         }
       }},
      {"buckets",
       [&](const json& v, const std::string& key) {
         if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
         cfg.eval.buckets.clear();
         for (const json& b : v) {
           if (!b.is_array() || b.size() != 2) {
             throw ConfigError("config key '" + key + "' entries must be [lo, hi] pairs");
           }
           cfg.eval.buckets.push_back({as<double>(b[0], key), as<double>(b[1], key)});
         }
       }},
  };

  std::map<std::string, Setter> root = {
      {"threads", set(cfg.threads)},
      {"seed", set(cfg.seed)},
      {"ppscore", [&](const json& v, const std::string& k) { apply(v, k, ppscore); }},
      {"seed_labels", [&](const json& v, const std::string& k) { apply(v, k, seed_labels); }},
      {"ground", [&](const json& v, const std::string& k) { apply(v, k, ground); }},
      {"selftrain", [&](const json& v, const std::string& k) { apply(v, k, selftrain); }},
      {"eval", [&](const json& v, const std::string& k) { apply(v, k, eval); }},
  };
  apply(doc, "", root);
  det.ground = sl.ground;
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const PipelineConfig& cfg) {
  json buckets = json::array();
  for (const DepthBucket& b : cfg.eval.buckets) buckets.push_back({b.lo, b.hi});
  const auto& sl = cfg.seed_labels;
  return {
      {"threads", cfg.threads},
      {"seed", cfg.seed},
      {"ppscore",
       {{"radius", cfg.pp.radius},
        {"h_start", cfg.pp.window.h_start},
        {"h_end", cfg.pp.window.h_end},
        {"spacing", cfg.pp.window.spacing},
        {"forward_only", cfg.pp.window.forward_only},
        {"include_own_traversal", cfg.pp.include_own_traversal}}},
      {"seed_labels",
       {{"k", sl.graph.k},
        {"rprime", sl.graph.max_distance},
        {"eps", sl.dbscan.eps},
        {"min_samples", sl.dbscan.min_samples},
        {"alpha", sl.filter.alpha},
        {"gamma", sl.filter.gamma},
        {"min_points", sl.filter.min_points},
        {"volume_min", sl.filter.volume_min},
        {"volume_max", sl.filter.volume_max},
        {"height_max_min", sl.filter.height_max_min},
        {"height_min_max", sl.filter.height_min_max}}},
      {"ground",
       {{"inlier_threshold", sl.ground.inlier_threshold},
        {"iterations", sl.ground.iterations},
        {"min_inlier_fraction", sl.ground.min_inlier_fraction},
        {"min_normal_z", sl.ground.min_normal_z},
        {"sensor_height", sl.ground.sensor_height},
        {"min_points", sl.ground.min_points},
        {"seed", sl.ground.seed}}},
      {"selftrain",
       {{"rounds", cfg.rounds},
        {"pp_filter", cfg.pp_filter},
        {"detector", cfg.detector_name},
        {"score_threshold", cfg.detector.score_threshold},
        {"cluster_eps", cfg.detector.cluster_eps},
        {"cluster_min_samples", cfg.detector.cluster_min_samples},
        {"ground_clearance", cfg.detector.ground_clearance},
        {"logistic_offset", cfg.detector.logistic_offset}}},
      {"eval",
       {{"iou", cfg.eval.iou_threshold},
        {"mode", std::string(to_string(cfg.eval.mode))},
        {"buckets", buckets}}},
  };
}

}  // namespace ephemera::app
