#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ephemera/ephemerality.hpp"
#include "ephemera/sim.hpp"
#include "ephemera/types.hpp"

namespace ephemera {

/// On-disk layout of a data directory:
///
///   manifest.json         traversal membership and scan order
///   poses.txt             world-from-sensor pose per scan
///   scans/<scan_id>.bin   binary points
///   ground_truth.jsonl    optional, one LabelSet per scan
///   pp/<scan_id>.ppf      PP sidecars written by `ppscore`
///   pp/index.json         traversal count used for each sidecar
struct Dataset {
  std::filesystem::path root;
  std::vector<Traversal> traversals;
  std::optional<std::vector<LabelSet>> ground_truth;

  /// All scans, traversal-major, in acquisition order.
  std::vector<Scan> frames() const;
};

namespace layout {
std::filesystem::path manifest(const std::filesystem::path& root);
std::filesystem::path poses(const std::filesystem::path& root);
std::filesystem::path scan(const std::filesystem::path& root, const std::string& scan_id);
std::filesystem::path ground_truth(const std::filesystem::path& root);
std::filesystem::path ppf(const std::filesystem::path& root, const std::string& scan_id);
std::filesystem::path pp_index(const std::filesystem::path& root);
}  // namespace layout

/// Writes scans, poses, ground truth and manifest of a simulation.
void save_dataset(const std::filesystem::path& root, const sim::SimOutput& sim);

/// Throws FormatError / ValidationError on missing or inconsistent files.
Dataset load_dataset(const std::filesystem::path& root);

/// Writes the sidecars and the traversal-count index.
void save_pp_fields(const std::filesystem::path& root,
                    const std::vector<PPField>& fields);

/// Loads the sidecars listed in pp/index.json (every sidecar present when
/// there is no index), keyed by scan id. Sizes are checked against the scans.
std::map<std::string, PPField> load_pp_fields(const Dataset& data);

}  // namespace ephemera
