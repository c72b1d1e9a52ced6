#include "app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ephemera/dataset.hpp"
#include "ephemera/io.hpp"
#include "ephemera/parallel.hpp"
#include "ephemera/sim.hpp"

namespace ephemera::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string labels_as_text(std::span<const LabelSet> labels) {
  std::ostringstream out;
  format_labels(out, labels);
  return out.str();
}

PPLookup lookup_in(const std::map<std::string, PPField>& fields) {
  return [&fields](const std::string& id) -> const PPField* {
    auto it = fields.find(id);
    return it == fields.end() ? nullptr : &it->second;
  };
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json buckets = json::object();
  for (const auto& [name, m] : report.buckets) {
    json b = json::object();
    if (m.ap) b["ap"] = *m.ap;
    if (m.precision) b["precision"] = *m.precision;
    b["recall"] = optional_number(m.recall);
    b["num_labels"] = m.num_labels;
    b["num_gt"] = m.num_gt;
    buckets[name] = std::move(b);
  }
  return {{"mode", std::string(to_string(report.config.mode))},
          {"iou", report.config.iou_threshold},
          {"buckets", std::move(buckets)}};
}

std::string pr_curves_csv(const EvalReport& report) {
  std::string csv = "bucket,rank,score,precision,recall\n";
  for (const auto& [name, _] : report.buckets) {
    auto it = report.curves.find(name);
    if (it == report.curves.end()) continue;
    const PrCurve& c = it->second;
    for (std::size_t i = 0; i < c.score.size(); ++i) {
      csv += name + "," + std::to_string(i + 1) + "," + format_double(c.score[i]) + "," +
             format_double(c.precision[i]) + "," + format_double(c.recall[i]) + "\n";
    }
  }
  return csv;
}

void cmd_sim(const std::string& preset, std::uint64_t seed, const fs::path& out_dir,
             unsigned threads) {
  sim::WorldSpec spec;
  try {
    spec = sim::make_benchmark(preset, seed);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("--preset: ") + e.what());
  }
  save_dataset(out_dir, sim::simulate(spec, resolve_threads(threads)));
}

std::size_t cmd_ppscore(const fs::path& data_dir, const PipelineConfig& cfg) {
  const Dataset data = load_dataset(data_dir);
  PPOptions opts = cfg.pp;
  opts.threads = resolve_threads(cfg.threads);
  PPScorer scorer(data.traversals, opts);

  std::vector<PPField> fields;
  for (const Traversal& t : data.traversals) {
    for (const Scan& s : t.scans) {
      if (auto f = scorer.score(s)) fields.push_back(std::move(*f));
    }
  }
  save_pp_fields(data_dir, fields);
  return fields.size();
}

std::size_t cmd_seed(const fs::path& data_dir, const fs::path& out_path,
                     const PipelineConfig& cfg) {
  const Dataset data = load_dataset(data_dir);
  const auto fields = load_pp_fields(data);
  if (fields.empty()) {
    throw DataError("no PP sidecars under " + data_dir.string() + "; run ppscore first");
  }
  const unsigned threads = resolve_threads(cfg.threads);

  std::vector<LabelSet> seeds;
  std::size_t boxes = 0;
  for (const Scan& s : data.frames()) {
    auto it = fields.find(s.scan_id);
    if (it == fields.end()) {
      seeds.push_back({s.scan_id, LabelKind::kSeed, {}});
      continue;
    }
    seeds.push_back(generate_seed_labels(s, it->second, cfg.seed_labels, threads));
    boxes += seeds.back().boxes.size();
  }
  write_labels(out_path, seeds);
  return boxes;
}

void cmd_selftrain(const SelftrainPaths& paths, const PipelineConfig& cfg) {
  const Dataset data = load_dataset(paths.data);
  const auto fields = load_pp_fields(data);
  const std::vector<LabelSet> seed = read_labels(paths.seed_labels);
  if (seed.empty()) {
    throw DataError("seed label file '" + paths.seed_labels.string() + "' lists no frames");
  }
  std::optional<std::vector<LabelSet>> gt;
  if (paths.ground_truth) gt = read_labels(*paths.ground_truth);

  const std::vector<Scan> pool = data.frames();
  GeometricDetector detector(cfg.detector);

  SelfTrainConfig st;
  st.rounds = cfg.rounds;
  st.pp_filter = cfg.pp_filter;
  st.filter = cfg.seed_labels.filter;
  st.seed = cfg.seed;
  st.threads = resolve_threads(cfg.threads);
  st.eval = cfg.eval;

  fs::create_directories(paths.out_dir);
  write_file_atomic(paths.out_dir / "config.json", to_json(cfg).dump(2) + "\n");

  auto on_round = [&](const RoundRecord& r) {
    const fs::path dir = paths.out_dir / ("round_" + std::to_string(r.round));
    fs::create_directories(dir);
    write_file_atomic(dir / "labels.jsonl", labels_as_text(r.labels));
    if (r.round > 0) write_file_atomic(dir / "unfiltered.jsonl", labels_as_text(r.unfiltered));

    auto count = [](const std::vector<LabelSet>& sets) {
      std::size_t n = 0;
      for (const LabelSet& s : sets) n += s.boxes.size();
      return n;
    };
    json m = {{"round", r.round},
              {"detector", detector.name()},
              {"pp_filter", cfg.pp_filter},
              {"num_boxes", count(r.labels)}};
    if (r.round > 0) m["num_unfiltered_boxes"] = count(r.unfiltered);
    if (r.quality) m["label_quality"] = report_to_json(*r.quality);
    if (r.unfiltered_quality) m["unfiltered_label_quality"] = report_to_json(*r.unfiltered_quality);
    write_file_atomic(dir / "metrics.json", m.dump(2) + "\n");
  };

  std::optional<std::span<const LabelSet>> gt_span;
  if (gt) gt_span = std::span<const LabelSet>(*gt);
  self_train_loop(pool, seed, detector, st, lookup_in(fields), gt_span, on_round);
}

json cmd_eval(const fs::path& labels_path, const fs::path& gt_path, const fs::path& out_path,
              const fs::path& pr_csv_path, const PipelineConfig& cfg) {
  const auto labels = read_labels(labels_path);
  const auto gts = read_labels(gt_path);
  const EvalReport report = evaluate(labels, gts, cfg.eval);
  json doc = report_to_json(report);
  write_file_atomic(out_path, doc.dump(2) + "\n");
  write_file_atomic(pr_csv_path, pr_curves_csv(report));
  return doc;
}

void cmd_plotdata(const fs::path& data_dir, const std::optional<fs::path>& selftrain_dir,
                  const fs::path& out_dir, std::size_t bins) {
  if (bins == 0) throw ConfigError("--bins must be >= 1");
  const Dataset data = load_dataset(data_dir);
  if (!data.ground_truth) {
    throw DataError("plotdata needs " + layout::ground_truth(data_dir).string());
  }
  const auto fields = load_pp_fields(data);
  std::map<std::string, const LabelSet*> gt_by_frame;
  for (const LabelSet& s : *data.ground_truth) gt_by_frame[s.frame_id] = &s;

  std::vector<std::size_t> inside(bins, 0), outside(bins, 0);
  for (const Scan& s : data.frames()) {
    auto f = fields.find(s.scan_id);
    auto g = gt_by_frame.find(s.scan_id);
    if (f == fields.end() || g == gt_by_frame.end()) continue;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const double tau = f->second.tau[i];
      const std::size_t bin =
          std::min(bins - 1, static_cast<std::size_t>(std::floor(tau * static_cast<double>(bins))));
      const bool in = std::any_of(g->second->boxes.begin(), g->second->boxes.end(),
                                  [&](const Box& b) { return box_contains(b, s.points[i].xyz); });
      ++(in ? inside : outside)[bin];
    }
  }
  fs::create_directories(out_dir);
  std::string hist = "bin_lo,bin_hi,inside,outside\n";
  for (std::size_t b = 0; b < bins; ++b) {
    hist += format_double(static_cast<double>(b) / static_cast<double>(bins)) + "," +
            format_double(static_cast<double>(b + 1) / static_cast<double>(bins)) + "," +
            std::to_string(inside[b]) + "," + std::to_string(outside[b]) + "\n";
  }
  write_file_atomic(out_dir / "pp_histogram.csv", hist);

  if (!selftrain_dir) return;
  std::string rounds = "round,variant,bucket,precision,recall,num_labels,num_gt\n";
  for (int j = 0;; ++j) {
    const fs::path metrics = *selftrain_dir / ("round_" + std::to_string(j)) / "metrics.json";
    if (!fs::exists(metrics)) {
      if (j == 0) throw DataError("no round_0/metrics.json under " + selftrain_dir->string());
      break;
    }
    std::ifstream in(metrics);
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(metrics.string() + ": " + e.what());
    }
    for (const char* variant : {"label_quality", "unfiltered_label_quality"}) {
      if (!m.contains(variant)) continue;
      for (const auto& [bucket, b] : m[variant]["buckets"].items()) {
        auto num = [&](const char* key) {
          return b.contains(key) && b[key].is_number() ? format_double(b[key].get<double>())
                                                       : std::string();
        };
        rounds += std::to_string(j) + "," +
                  (std::string(variant) == "label_quality" ? "labels" : "unfiltered") + "," +
                  bucket + "," + num("precision") + "," + num("recall") + "," +
                  std::to_string(b.value("num_labels", 0)) + "," +
                  std::to_string(b.value("num_gt", 0)) + "\n";
      }
    }
  }
  write_file_atomic(out_dir / "rounds.csv", rounds);
}

// ---------------------------------------------------------------------------

namespace {

struct Common {
  std::string config_path;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON pipeline configuration");
  cmd->add_option("--threads", c.threads, "Worker threads (default: all cores)");
}

template <typename T>
void override_with(T& field, const std::optional<T>& flag) {
  if (flag) field = *flag;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-traversal LiDAR persistence scoring and seed labelling"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;

  auto* sim_cmd = app.add_subcommand("sim", "Generate a synthetic multi-traversal dataset");
  std::string preset;
  fs::path sim_out;
  sim_cmd->add_option("--preset", preset, "separation | parked | dense")->required();
  sim_cmd->add_option("--out", sim_out, "Output data directory")->required();
  sim_cmd->add_option("--seed", common.seed, "World seed");
  add_common(sim_cmd, common);

  auto* pp_cmd = app.add_subcommand("ppscore", "Write per-point persistence sidecars");
  fs::path data_dir;
  std::optional<double> radius, h_start, h_end, spacing;
  bool forward_only = false;
  pp_cmd->add_option("--data", data_dir, "Data directory")->required();
  pp_cmd->add_option("--radius", radius, "Neighbourhood radius r");
  pp_cmd->add_option("--h-start", h_start, "Window start (m)");
  pp_cmd->add_option("--h-end", h_end, "Window end (m)");
  pp_cmd->add_option("--spacing", spacing, "Minimum spacing between aggregated scans (m)");
  pp_cmd->add_flag("--forward-only", forward_only, "Measure the window along the heading");
  add_common(pp_cmd, common);

  auto* seed_cmd = app.add_subcommand("seed", "Discover seed boxes from persistence scores");
  fs::path seed_out;
  std::optional<double> alpha, gamma, rprime, eps;
  std::optional<std::size_t> k, min_samples;
  seed_cmd->add_option("--data", data_dir, "Data directory")->required();
  seed_cmd->add_option("--out", seed_out, "Output labels (default: <data>/seed.jsonl)");
  seed_cmd->add_option("--alpha", alpha, "Percentile of cluster PP scores");
  seed_cmd->add_option("--gamma", gamma, "PP threshold");
  seed_cmd->add_option("--k", k, "Neighbours in the kNN graph");
  seed_cmd->add_option("--rprime", rprime, "kNN graph distance cap (m)");
  seed_cmd->add_option("--eps", eps, "DBSCAN edge-weight threshold");
  seed_cmd->add_option("--min-samples", min_samples, "DBSCAN core size");
  add_common(seed_cmd, common);

  auto* st_cmd = app.add_subcommand("selftrain", "Iterative self-training from seed labels");
  fs::path st_seed, st_out, st_gt;
  std::optional<int> rounds;
  bool no_pp_filter = false, no_gt = false;
  std::optional<std::string> detector_name;
  st_cmd->add_option("--data", data_dir, "Data directory")->required();
  st_cmd->add_option("--seed-labels", st_seed, "Seed labels (default: <data>/seed.jsonl)");
  st_cmd->add_option("--out", st_out, "Output directory (default: <data>/selftrain)");
  st_cmd->add_option("--gt", st_gt, "Ground truth (default: <data>/ground_truth.jsonl if present)");
  st_cmd->add_flag("--no-gt", no_gt, "Skip per-round label quality");
  st_cmd->add_option("--rounds", rounds, "Self-training rounds");
  st_cmd->add_flag("--no-pp-filter", no_pp_filter, "Keep raw detections between rounds");
  st_cmd->add_option("--detector", detector_name, "Detector (baseline)");
  st_cmd->add_option("--seed", common.seed, "Training seed");
  add_common(st_cmd, common);

  auto* eval_cmd = app.add_subcommand("eval", "Compare a label file against ground truth");
  fs::path ev_labels, ev_gt, ev_out, ev_csv;
  std::optional<double> iou_threshold;
  std::optional<std::string> mode;
  eval_cmd->add_option("labels", ev_labels, "Labels or detections (JSON lines)")->required();
  eval_cmd->add_option("ground_truth", ev_gt, "Ground truth (JSON lines)")->required();
  eval_cmd->add_option("--out", ev_out, "Metrics JSON (default: <labels>.metrics.json)");
  eval_cmd->add_option("--pr-csv", ev_csv, "PR curve CSV (default: <out>.pr.csv)");
  eval_cmd->add_option("--iou", iou_threshold, "IoU threshold");
  eval_cmd->add_option("--mode", mode, "bev | 3d");
  add_common(eval_cmd, common);

  auto* plot_cmd = app.add_subcommand("plotdata", "Export CSV data for plots");
  fs::path plot_out, plot_st;
  std::size_t bins = 20;
  plot_cmd->add_option("--data", data_dir, "Data directory")->required();
  plot_cmd->add_option("--selftrain", plot_st, "Self-training output directory");
  plot_cmd->add_option("--out", plot_out, "Output directory")->required();
  plot_cmd->add_option("--bins", bins, "Histogram bins over [0, 1]");
  add_common(plot_cmd, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    PipelineConfig cfg;
    if (!common.config_path.empty()) cfg = load_config(common.config_path);
    override_with(cfg.threads, common.threads);
    override_with(cfg.seed, common.seed);
    override_with(cfg.pp.radius, radius);
    override_with(cfg.pp.window.h_start, h_start);
    override_with(cfg.pp.window.h_end, h_end);
    override_with(cfg.pp.window.spacing, spacing);
    if (forward_only) cfg.pp.window.forward_only = true;
    override_with(cfg.seed_labels.filter.alpha, alpha);
    override_with(cfg.seed_labels.filter.gamma, gamma);
    override_with(cfg.seed_labels.graph.k, k);
    override_with(cfg.seed_labels.graph.max_distance, rprime);
    override_with(cfg.seed_labels.dbscan.eps, eps);
    override_with(cfg.seed_labels.dbscan.min_samples, min_samples);
    override_with(cfg.rounds, rounds);
    if (no_pp_filter) cfg.pp_filter = false;
    override_with(cfg.detector_name, detector_name);
    override_with(cfg.eval.iou_threshold, iou_threshold);
    if (mode) {
      try {
        cfg.eval.mode = iou_mode_from_string(*mode);
      } catch (const FormatError&) {
        throw ConfigError("--mode must be \"bev\" or \"3d\"");
      }
    }
    cfg.detector.ground = cfg.seed_labels.ground;
    cfg.validate();

    if (sim_cmd->parsed()) {
      cmd_sim(preset, cfg.seed, sim_out, cfg.threads);
      out << "wrote " << sim_out.string() << "\n";
    } else if (pp_cmd->parsed()) {
      const std::size_t n = cmd_ppscore(data_dir, cfg);
      out << "scored " << n << " scans\n";
    } else if (seed_cmd->parsed()) {
      if (seed_out.empty()) seed_out = data_dir / "seed.jsonl";
      const std::size_t n = cmd_seed(data_dir, seed_out, cfg);
      out << "wrote " << n << " seed boxes to " << seed_out.string() << "\n";
    } else if (st_cmd->parsed()) {
      SelftrainPaths p{data_dir, st_seed.empty() ? data_dir / "seed.jsonl" : st_seed,
                       st_out.empty() ? data_dir / "selftrain" : st_out, std::nullopt};
      if (!st_gt.empty()) {
        p.ground_truth = st_gt;
      } else if (!no_gt && fs::exists(layout::ground_truth(data_dir))) {
        p.ground_truth = layout::ground_truth(data_dir);
      }
      cmd_selftrain(p, cfg);
      out << "wrote " << cfg.rounds + 1 << " rounds to " << p.out_dir.string() << "\n";
    } else if (eval_cmd->parsed()) {
      if (ev_out.empty()) ev_out = ev_labels.string() + ".metrics.json";
      if (ev_csv.empty()) ev_csv = ev_out.string() + ".pr.csv";
      out << cmd_eval(ev_labels, ev_gt, ev_out, ev_csv, cfg).dump(2) << "\n";
    } else if (plot_cmd->parsed()) {
      cmd_plotdata(data_dir, plot_st.empty() ? std::nullopt : std::optional<fs::path>(plot_st),
                   plot_out, bins);
      out << "wrote " << plot_out.string() << "\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const SelfTrainError& e) {
    int code = 3;
    try {
      std::rethrow_if_nested(e);
    } catch (const FormatError&) {
      code = 2;
    } catch (const ValidationError&) {
      code = 2;
    } catch (const DataError&) {
      code = 2;
    } catch (...) {
    }
    err << (code == 2 ? "data error: " : "internal error: ") << e.what() << "\n";
    return code;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ephemera::app
