#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "app/config.hpp"

namespace ephemera::app {

/// Parses the command line, runs one subcommand and maps failures to exit
/// codes: 1 configuration, 2 input data, 3 internal.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// The subcommands proper. They throw; run() does the mapping.

void cmd_sim(const std::string& preset, std::uint64_t seed,
             const std::filesystem::path& out_dir, unsigned threads);

/// Returns the number of scans that received a sidecar.
std::size_t cmd_ppscore(const std::filesystem::path& data_dir, const PipelineConfig& cfg);

/// Returns the number of seed boxes written.
std::size_t cmd_seed(const std::filesystem::path& data_dir,
                     const std::filesystem::path& out_path, const PipelineConfig& cfg);

struct SelftrainPaths {
  std::filesystem::path data;
  std::filesystem::path seed_labels;
  std::filesystem::path out_dir;
  /// Ground truth for per-round label quality; skipped when empty.
  std::optional<std::filesystem::path> ground_truth;
};

void cmd_selftrain(const SelftrainPaths& paths, const PipelineConfig& cfg);

nlohmann::json cmd_eval(const std::filesystem::path& labels_path,
                        const std::filesystem::path& gt_path,
                        const std::filesystem::path& out_path,
                        const std::filesystem::path& pr_csv_path,
                        const PipelineConfig& cfg);

/// Writes pp_histogram.csv (needs ground truth and sidecars) and, when
/// `selftrain_dir` is given, rounds.csv.
void cmd_plotdata(const std::filesystem::path& data_dir,
                  const std::optional<std::filesystem::path>& selftrain_dir,
                  const std::filesystem::path& out_dir, std::size_t bins);

nlohmann::json report_to_json(const EvalReport& report);
std::string pr_curves_csv(const EvalReport& report);

}  // namespace ephemera::app
