// Simulation driver: dataset generation, ensemble training, threshold
// optimization and benchmark evaluation, staged or end to end.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "aoa/dataset_io.hpp"
#include "aoa/harness.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::string out_root;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path,
                  "JSON config file (fields mirror the simulation parameters)");
  cmd->add_option("--preset", options.preset_name,
                  "named preset: desk-I, desk-II, paper-I, paper-II");
  cmd->add_option("--out", options.out_root,
                  "output root (default $AOA_OUT_ROOT or ./runs)");
  cmd->add_option_function<std::uint64_t>(
         "--seed",
         [&options](const std::uint64_t& value) {
           options.seed = value;
           options.seed_set = true;
         },
         "master seed override");
  cmd->add_option("--workers", options.workers,
                  "worker threads (0 = all cores)");
}

aoa::ExperimentConfig resolve_config(const CommonOptions& options) {
  aoa::ExperimentConfig config;
  if (!options.preset_name.empty()) config = aoa::preset(options.preset_name);
  if (!options.config_path.empty()) {
    std::ifstream in(options.config_path);
    if (!in)
      throw CLI::ValidationError("--config",
                                 "cannot open " + options.config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    aoa::ExperimentConfig from_file = aoa::config_from_json(buffer.str());
    if (!options.preset_name.empty())
      std::cerr << "note: --config overrides the preset\n";
    config = from_file;
  }
  if (options.seed_set) config.seed = options.seed;
  if (options.workers >= 0) config.workers = options.workers;
  config.validate();
  return config;
}

std::string resolve_out_root(const CommonOptions& options) {
  return options.out_root.empty() ? aoa::default_out_root() : options.out_root;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint source-number and angle-of-arrival estimation testbed"};
  app.require_subcommand(1);

  CommonOptions options;
  bool export_csv = false;
  std::string report_run_dir;

  CLI::App* generate = app.add_subcommand(
      "generate", "synthesize the train/validation/threshold/test datasets");
  add_common(generate, options);
  generate->add_flag("--export-csv", export_csv,
                     "also export per-dataset feature CSVs for inspection");

  CLI::App* framework = app.add_subcommand(
      "framework", "build the layered k-labelset framework (framework.json)");
  add_common(framework, options);

  CLI::App* train = app.add_subcommand(
      "train", "train one classifier per labelset and save the ensemble");
  add_common(train, options);

  CLI::App* threshold = app.add_subcommand(
      "threshold", "optimize the peak-detection threshold on held-out data");
  add_common(threshold, options);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "run the test set through the ensemble and the baselines");
  add_common(evaluate, options);

  CLI::App* report = app.add_subcommand(
      "report", "print a summary of a completed run directory");
  report->add_option("--run", report_run_dir, "run directory to summarize");
  add_common(report, options);

  CLI::App* run_all =
      app.add_subcommand("run-all", "all stages in order, end to end");
  add_common(run_all, options);

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed() && !report_run_dir.empty()) {
      aoa::RunPaths paths;
      paths.root = report_run_dir;
      std::cout << aoa::format_report(paths);
      return 0;
    }

    const aoa::ExperimentConfig config = resolve_config(options);
    const aoa::RunPaths paths =
        aoa::RunPaths::under(resolve_out_root(options), config);

    if (generate->parsed()) {
      aoa::generate_stage(config, paths);
      if (export_csv) {
        for (const char* role : {"train", "validation", "threshold", "test"})
          aoa::export_features_csv(paths.dataset(role),
                                   paths.dataset(role) + ".features.csv",
                                   config.grid());
      }
      std::cout << "datasets written under " << paths.root << "/data\n";
    } else if (framework->parsed()) {
      aoa::framework_stage(config, paths);
      std::cout << paths.framework() << "\n";
    } else if (train->parsed()) {
      aoa::train_stage(config, paths);
      std::cout << "ensemble saved under " << paths.models_dir() << "\n";
    } else if (threshold->parsed()) {
      aoa::threshold_stage(config, paths);
      std::cout << paths.threshold() << "\n";
    } else if (evaluate->parsed()) {
      aoa::evaluate_stage(config, paths);
      std::cout << "results under " << paths.results_dir() << "\n";
    } else if (report->parsed()) {
      std::cout << aoa::format_report(paths);
    } else if (run_all->parsed()) {
      const aoa::RunPaths finished = aoa::run_all(config, resolve_out_root(options));
      std::cout << aoa::format_report(finished);
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
