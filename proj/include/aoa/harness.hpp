#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aoa/array_signal.hpp"
#include "aoa/estimator.hpp"
#include "aoa/fov.hpp"
#include "aoa/network.hpp"

namespace aoa {

/// Everything one simulation needs: sources and signals, framework topology,
/// classifier settings, dataset sizing, threshold candidates and benchmark
/// grids. Serializes to a flat, human-editable JSON document.
struct ExperimentConfig {
  std::string name = "custom";
  std::string scenario = "fixed";  // "fixed" | "variable"
  int fixed_source_count = 2;
  int max_source_count = 4;  // variable scenario draws Q ~ U{1..max}
  double snr_db = 10.0;

  double fov_min_deg = -60.0;
  double fov_max_deg = 60.0;
  int segment_count = 60;  // M
  int labelset_size = 3;   // k
  int layer_count = 3;     // L

  int sensor_count = 8;
  double spacing_wavelengths = 0.5;

  std::vector<int> hidden_sizes = {64, 36};
  TrainConfig train;

  int snapshot_count = 100;  // T per instance
  int train_instances = 20000;
  double classifier_fraction = 0.8;
  double validation_fraction = 0.1;
  double threshold_fraction = 0.1;
  int test_instances = 5000;

  double threshold_start = 0.01;
  double threshold_step = 0.01;
  double threshold_stop = 1.0;
  bool threshold_include_zero = false;

  double music_high_res_deg = 0.1;
  double curve_max_deg = 5.0;
  double curve_step_deg = 0.1;

  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  bool dump_spectra = false;

  ArrayGeometry geometry() const {
    return ArrayGeometry{sensor_count, spacing_wavelengths};
  }
  FovGrid grid() const {
    return FovGrid{fov_min_deg, fov_max_deg, segment_count};
  }
  std::vector<double> threshold_candidates() const;
  std::vector<double> curve_points() const;

  int classifier_train_count() const;
  int validation_count() const;
  int threshold_count() const;

  void validate() const;
};

/// Bundled configurations: desk-I / desk-II are reduced-size runs that finish
/// on a desktop; paper-I / paper-II use the full published dataset sizes.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& json_text);
std::uint64_t config_hash(const ExperimentConfig& config);

/// Artifact layout inside a run directory (keyed by the config hash).
struct RunPaths {
  std::string root;

  std::string config() const { return root + "/config.json"; }
  std::string manifest() const { return root + "/manifest.json"; }
  std::string dataset(const std::string& role) const {
    return root + "/data/" + role + ".aoad";
  }
  std::string framework() const { return root + "/framework.json"; }
  std::string models_dir() const { return root + "/models"; }
  std::string training_report() const {
    return root + "/models/training_report.json";
  }
  std::string threshold() const { return root + "/threshold.json"; }
  std::string results_dir() const { return root + "/results"; }
  std::string outcomes(const std::string& method) const {
    return root + "/results/outcomes_" + method + ".jsonl";
  }
  std::string report(const std::string& method) const {
    return root + "/results/report_" + method + ".json";
  }
  std::string curves() const { return root + "/results/curves.csv"; }
  std::string success_by_q() const { return root + "/results/success_by_q.csv"; }

  static RunPaths under(const std::string& out_root,
                        const ExperimentConfig& config);
};

/// Default output root: $AOA_OUT_ROOT if set, else ./runs.
std::string default_out_root();

/// Evaluated method keys, in report order.
const std::vector<std::string>& method_names();

// The five pipeline stages of a simulation run. Each records its artifacts in
// manifest.json and refuses to run before its prerequisites have completed.
void generate_stage(const ExperimentConfig& config, const RunPaths& paths);
void framework_stage(const ExperimentConfig& config, const RunPaths& paths);
void train_stage(const ExperimentConfig& config, const RunPaths& paths);
void threshold_stage(const ExperimentConfig& config, const RunPaths& paths);
void evaluate_stage(const ExperimentConfig& config, const RunPaths& paths);

/// All five stages in order; returns the run directory layout.
RunPaths run_all(const ExperimentConfig& config, const std::string& out_root);

/// Human-readable summary of a completed run directory.
std::string format_report(const RunPaths& paths);

}  // namespace aoa
