#include "aoa/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "aoa/baselines.hpp"
#include "aoa/dataset_io.hpp"
#include "aoa/metrics.hpp"
#include "aoa/model_io.hpp"
#include "aoa/parallel.hpp"
#include "aoa/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aoa {

namespace {

constexpr int kGenerateChunk = 512;

std::string format_angle(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f", value);
  return buffer;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buffer;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("harness: cannot write " + path);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("harness: write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("harness: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// ---------------------------------------------------------------------------
// Manifest bookkeeping

json manifest_load_or_create(const RunPaths& paths,
                             const ExperimentConfig& config) {
  fs::create_directories(paths.root);
  const std::string config_text = config_to_json(config);
  if (!fs::exists(paths.config())) write_text_file(paths.config(), config_text);

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));

  if (fs::exists(paths.manifest())) {
    json manifest = json::parse(read_text_file(paths.manifest()));
    if (manifest.at("config_hash").get<std::string>() != hash_hex)
      throw std::runtime_error(
          "harness: run directory belongs to a different configuration: " +
          paths.root);
    return manifest;
  }
  json manifest;
  manifest["config_hash"] = hash_hex;
  manifest["datasets"] = json::object();
  manifest["stages"] = json::object();
  return manifest;
}

void manifest_save(const RunPaths& paths, const json& manifest) {
  write_text_file(paths.manifest(), manifest.dump(2) + "\n");
}

void manifest_record(json& manifest, const std::string& stage,
                     const std::vector<std::string>& artifacts) {
  for (const std::string& artifact : artifacts)
    if (!fs::exists(artifact))
      throw std::runtime_error("harness: stage " + stage +
                               " did not produce " + artifact);
  manifest["stages"][stage] = {{"completed_at", timestamp_now()},
                               {"artifacts", artifacts}};
}

void manifest_require(const json& manifest,
                      const std::vector<std::string>& stages) {
  for (const std::string& stage : stages)
    if (!manifest.at("stages").contains(stage))
      throw std::runtime_error("harness: stage '" + stage +
                               "' has not completed in this run directory");
}

/// The dataset path a stage is allowed to read, looked up by role so a stage
/// cannot quietly consume another split.
std::string dataset_for_role(const json& manifest, const std::string& role) {
  if (!manifest.at("datasets").contains(role))
    throw std::runtime_error("harness: no dataset recorded for role " + role);
  return manifest.at("datasets").at(role).get<std::string>();
}

// ---------------------------------------------------------------------------
// Shared featurization

struct FeaturizedDataset {
  Eigen::MatrixXd features;  // instances x N^2, raw (not standardized)
  std::vector<int> q_true;
  std::vector<std::vector<double>> aoas;
  std::vector<std::vector<int>> active;
};

FeaturizedDataset featurize(const std::string& path, const FovGrid& grid,
                            int workers) {
  DatasetReader reader(path);
  const int count = static_cast<int>(reader.instance_count());
  const int feature_count = reader.sensor_count() * reader.sensor_count();

  FeaturizedDataset data;
  data.features.resize(count, feature_count);
  data.q_true.resize(count);
  data.aoas.resize(count);
  data.active.resize(count);

  std::vector<DatasetInstance> chunk;
  chunk.reserve(kGenerateChunk);
  int done = 0;
  DatasetInstance instance;
  while (done < count) {
    chunk.clear();
    while (static_cast<int>(chunk.size()) < kGenerateChunk &&
           reader.next(instance))
      chunk.push_back(instance);
    const int chunk_size = static_cast<int>(chunk.size());
    parallel_for(chunk_size, workers, [&](int i) {
      const int row = done + i;
      const DatasetInstance& item = chunk[i];
      const CovarianceEstimate covariance =
          sample_covariance({item.snapshots, SourceScene{}});
      data.features.row(row) = feature_vector(covariance.matrix).transpose();
      data.q_true[row] = static_cast<int>(item.aoas_deg.size());
      data.aoas[row] = item.aoas_deg;
      data.active[row] = active_labels(grid, item.aoas_deg);
    });
    done += chunk_size;
  }
  return data;
}

/// Batched forward pass of every classifier over a standardized feature
/// matrix; outputs[j] holds classifier j's probabilities, one row per
/// instance.
std::vector<Eigen::MatrixXd> ensemble_outputs(const Ensemble& ensemble,
                                              const Eigen::MatrixXd& features,
                                              int workers) {
  const int classifier_count = ensemble.framework.classifier_count();
  std::vector<Eigen::MatrixXd> outputs(classifier_count);
  parallel_for(classifier_count, workers, [&](int j) {
    outputs[j] = forward_batch(ensemble.networks[j], features);
  });
  return outputs;
}

std::vector<Eigen::VectorXd> predictions_for_instance(
    const std::vector<Eigen::MatrixXd>& outputs, int instance) {
  std::vector<Eigen::VectorXd> predictions;
  predictions.reserve(outputs.size());
  for (const Eigen::MatrixXd& output : outputs)
    predictions.push_back(output.row(instance).transpose());
  return predictions;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<double> ExperimentConfig::threshold_candidates() const {
  std::vector<double> candidates;
  if (threshold_include_zero) candidates.push_back(0.0);
  const int first = static_cast<int>(std::lround(threshold_start /
                                                 threshold_step));
  for (int i = first;; ++i) {
    const double level = i * threshold_step;
    if (level > threshold_stop + 1e-9) break;
    candidates.push_back(level);
  }
  return candidates;
}

std::vector<double> ExperimentConfig::curve_points() const {
  std::vector<double> points;
  for (int i = 1;; ++i) {
    const double value = i * curve_step_deg;
    if (value > curve_max_deg + 1e-9) break;
    points.push_back(value);
  }
  return points;
}

int ExperimentConfig::classifier_train_count() const {
  return static_cast<int>(std::llround(classifier_fraction * train_instances));
}

int ExperimentConfig::validation_count() const {
  return static_cast<int>(std::llround(validation_fraction * train_instances));
}

int ExperimentConfig::threshold_count() const {
  return train_instances - classifier_train_count() - validation_count();
}

void ExperimentConfig::validate() const {
  if (scenario != "fixed" && scenario != "variable")
    throw std::domain_error("config: scenario must be 'fixed' or 'variable'");
  if (scenario == "fixed" && fixed_source_count < 0)
    throw std::domain_error("config: fixed_source_count must be >= 0");
  if (scenario == "variable" && max_source_count < 1)
    throw std::domain_error("config: max_source_count must be >= 1");
  if (!(fov_max_deg > fov_min_deg))
    throw std::domain_error("config: FOV span must be positive");
  if (segment_count < 2 || labelset_size < 1 ||
      labelset_size >= segment_count || layer_count < 1)
    throw std::domain_error("config: bad framework topology");
  if (sensor_count < 2 || !(spacing_wavelengths > 0.0))
    throw std::domain_error("config: bad array geometry");
  if (hidden_sizes.empty())
    throw std::domain_error("config: need at least one hidden layer");
  if (snapshot_count < 1 || train_instances < 10 || test_instances < 1)
    throw std::domain_error("config: bad dataset sizing");
  const double fraction_sum =
      classifier_fraction + validation_fraction + threshold_fraction;
  if (std::abs(fraction_sum - 1.0) > 1e-9)
    throw std::domain_error("config: split fractions must sum to 1");
  if (classifier_train_count() < 2 || validation_count() < 1 ||
      threshold_count() < 1)
    throw std::domain_error("config: splits leave an empty part");
  if (threshold_candidates().empty())
    throw std::domain_error("config: empty threshold candidate list");
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  if (name == "desk-I") {
    // Reduced scenario-I sizing: trains in tens of minutes on a desktop.
    config.scenario = "fixed";
    config.train_instances = 20000;
    config.test_instances = 5000;
    config.layer_count = 3;
    config.hidden_sizes = {64, 36};
  } else if (name == "desk-II") {
    config.scenario = "variable";
    config.train_instances = 40000;
    config.test_instances = 5000;
    config.layer_count = 3;
    config.hidden_sizes = {100, 100, 100, 100, 50};
  } else if (name == "paper-I") {
    config.scenario = "fixed";
    config.train_instances = 80000;
    config.test_instances = 50000;
    config.layer_count = 5;
    config.hidden_sizes = {64, 36};
  } else if (name == "paper-II") {
    config.scenario = "variable";
    config.train_instances = 320000;
    config.test_instances = 50000;
    config.layer_count = 5;
    config.hidden_sizes = {100, 100, 100, 100, 50};
  } else {
    throw std::domain_error("unknown preset: " + name);
  }
  return config;
}

std::vector<std::string> preset_names() {
  return {"desk-I", "desk-II", "paper-I", "paper-II"};
}

std::string config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["name"] = config.name;
  doc["scenario"] = config.scenario;
  doc["fixed_source_count"] = config.fixed_source_count;
  doc["max_source_count"] = config.max_source_count;
  doc["snr_db"] = config.snr_db;
  doc["fov_min_deg"] = config.fov_min_deg;
  doc["fov_max_deg"] = config.fov_max_deg;
  doc["segment_count"] = config.segment_count;
  doc["labelset_size"] = config.labelset_size;
  doc["layer_count"] = config.layer_count;
  doc["sensor_count"] = config.sensor_count;
  doc["spacing_wavelengths"] = config.spacing_wavelengths;
  doc["hidden_sizes"] = config.hidden_sizes;
  doc["adam_alpha"] = config.train.alpha;
  doc["adam_beta1"] = config.train.beta1;
  doc["adam_beta2"] = config.train.beta2;
  doc["adam_epsilon"] = config.train.epsilon;
  doc["batch_size"] = config.train.batch_size;
  doc["patience_epochs"] = config.train.patience_epochs;
  doc["max_epochs"] = config.train.max_epochs;
  doc["snapshot_count"] = config.snapshot_count;
  doc["train_instances"] = config.train_instances;
  doc["classifier_fraction"] = config.classifier_fraction;
  doc["validation_fraction"] = config.validation_fraction;
  doc["threshold_fraction"] = config.threshold_fraction;
  doc["test_instances"] = config.test_instances;
  doc["threshold_start"] = config.threshold_start;
  doc["threshold_step"] = config.threshold_step;
  doc["threshold_stop"] = config.threshold_stop;
  doc["threshold_include_zero"] = config.threshold_include_zero;
  doc["music_high_res_deg"] = config.music_high_res_deg;
  doc["curve_max_deg"] = config.curve_max_deg;
  doc["curve_step_deg"] = config.curve_step_deg;
  doc["seed"] = config.seed;
  doc["workers"] = config.workers;
  doc["dump_spectra"] = config.dump_spectra;
  return doc.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& json_text) {
  const json doc = json::parse(json_text);
  ExperimentConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "name") config.name = value.get<std::string>();
    else if (key == "scenario") config.scenario = value.get<std::string>();
    else if (key == "fixed_source_count") config.fixed_source_count = value.get<int>();
    else if (key == "max_source_count") config.max_source_count = value.get<int>();
    else if (key == "snr_db") config.snr_db = value.get<double>();
    else if (key == "fov_min_deg") config.fov_min_deg = value.get<double>();
    else if (key == "fov_max_deg") config.fov_max_deg = value.get<double>();
    else if (key == "segment_count") config.segment_count = value.get<int>();
    else if (key == "labelset_size") config.labelset_size = value.get<int>();
    else if (key == "layer_count") config.layer_count = value.get<int>();
    else if (key == "sensor_count") config.sensor_count = value.get<int>();
    else if (key == "spacing_wavelengths") config.spacing_wavelengths = value.get<double>();
    else if (key == "hidden_sizes") config.hidden_sizes = value.get<std::vector<int>>();
    else if (key == "adam_alpha") config.train.alpha = value.get<double>();
    else if (key == "adam_beta1") config.train.beta1 = value.get<double>();
    else if (key == "adam_beta2") config.train.beta2 = value.get<double>();
    else if (key == "adam_epsilon") config.train.epsilon = value.get<double>();
    else if (key == "batch_size") config.train.batch_size = value.get<int>();
    else if (key == "patience_epochs") config.train.patience_epochs = value.get<int>();
    else if (key == "max_epochs") config.train.max_epochs = value.get<int>();
    else if (key == "snapshot_count") config.snapshot_count = value.get<int>();
    else if (key == "train_instances") config.train_instances = value.get<int>();
    else if (key == "classifier_fraction") config.classifier_fraction = value.get<double>();
    else if (key == "validation_fraction") config.validation_fraction = value.get<double>();
    else if (key == "threshold_fraction") config.threshold_fraction = value.get<double>();
    else if (key == "test_instances") config.test_instances = value.get<int>();
    else if (key == "threshold_start") config.threshold_start = value.get<double>();
    else if (key == "threshold_step") config.threshold_step = value.get<double>();
    else if (key == "threshold_stop") config.threshold_stop = value.get<double>();
    else if (key == "threshold_include_zero") config.threshold_include_zero = value.get<bool>();
    else if (key == "music_high_res_deg") config.music_high_res_deg = value.get<double>();
    else if (key == "curve_max_deg") config.curve_max_deg = value.get<double>();
    else if (key == "curve_step_deg") config.curve_step_deg = value.get<double>();
    else if (key == "seed") config.seed = value.get<std::uint64_t>();
    else if (key == "workers") config.workers = value.get<int>();
    else if (key == "dump_spectra") config.dump_spectra = value.get<bool>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return config;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  // The run identity must not depend on execution details.
  ExperimentConfig canonical = config;
  canonical.workers = 0;
  canonical.name = "";
  return fnv1a(config_to_json(canonical));
}

RunPaths RunPaths::under(const std::string& out_root,
                         const ExperimentConfig& config) {
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  RunPaths paths;
  paths.root = (fs::path(out_root) / ("run-" + std::string(hash_hex))).string();
  return paths;
}

std::string default_out_root() {
  if (const char* env = std::getenv("AOA_OUT_ROOT"); env && *env)
    return env;
  return "runs";
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "mlf", "music_mdl_low", "music_mdl_high", "music_aic_low",
      "music_aic_high"};
  return names;
}

// ---------------------------------------------------------------------------
// Stages

void generate_stage(const ExperimentConfig& config, const RunPaths& paths) {
  config.validate();
  json manifest = manifest_load_or_create(paths, config);
  fs::create_directories(fs::path(paths.root) / "data");

  struct Split {
    const char* role;
    std::uint64_t stream_id;
    int count;
  };
  const Split splits[] = {
      {"train", 0, config.classifier_train_count()},
      {"validation", 1, config.validation_count()},
      {"threshold", 2, config.threshold_count()},
      {"test", 3, config.test_instances},
  };

  const ArrayGeometry geometry = config.geometry();
  std::vector<std::string> artifacts;
  for (const Split& split : splits) {
    const std::string path = paths.dataset(split.role);
    DatasetWriter writer(path, config.sensor_count, config.snapshot_count,
                         static_cast<std::uint64_t>(split.count));

    std::vector<DatasetInstance> chunk;
    for (int start = 0; start < split.count; start += kGenerateChunk) {
      const int chunk_size = std::min(kGenerateChunk, split.count - start);
      chunk.assign(chunk_size, DatasetInstance{});
      parallel_for(chunk_size, config.workers, [&](int i) {
        Rng rng = Rng::stream(config.seed,
                              {stream_tag::kDataset, split.stream_id,
                               static_cast<std::uint64_t>(start + i)});
        int source_count = config.fixed_source_count;
        if (config.scenario == "variable")
          source_count = 1 + static_cast<int>(rng.below(
                                 static_cast<std::uint64_t>(
                                     config.max_source_count)));
        std::vector<double> aoas(source_count);
        for (double& aoa : aoas)
          aoa = rng.uniform(config.fov_min_deg, config.fov_max_deg);
        const SourceScene scene = SourceScene::from_snr(aoas, config.snr_db);
        chunk[i].aoas_deg = scene.aoas_deg;
        chunk[i].snapshots =
            synthesize_snapshots(geometry, scene, config.snapshot_count, rng)
                .snapshots;
      });
      for (const DatasetInstance& item : chunk)
        writer.append(item.aoas_deg, item.snapshots);
    }
    writer.close();
    manifest["datasets"][split.role] = path;
    artifacts.push_back(path);
  }

  manifest_record(manifest, "generate", artifacts);
  manifest_save(paths, manifest);
}

void framework_stage(const ExperimentConfig& config, const RunPaths& paths) {
  config.validate();
  json manifest = manifest_load_or_create(paths, config);

  const Framework framework = generate_framework(
      config.grid(), config.labelset_size, config.layer_count, config.seed);
  write_text_file(paths.framework(), framework_to_json(framework) + "\n");

  manifest_record(manifest, "framework", {paths.framework()});
  manifest_save(paths, manifest);
}

void train_stage(const ExperimentConfig& config, const RunPaths& paths) {
  config.validate();
  json manifest = manifest_load_or_create(paths, config);
  manifest_require(manifest, {"generate", "framework"});

  const Framework framework =
      framework_from_json(read_text_file(paths.framework()));
  const FovGrid grid = config.grid();

  FeaturizedDataset train_data =
      featurize(dataset_for_role(manifest, "train"), grid, config.workers);
  FeaturizedDataset val_data = featurize(
      dataset_for_role(manifest, "validation"), grid, config.workers);

  const FeatureStats stats = fit_feature_stats(train_data.features);
  const Eigen::MatrixXd train_features =
      standardize_rows(train_data.features, stats);
  const Eigen::MatrixXd val_features =
      standardize_rows(val_data.features, stats);

  const int classifier_count = framework.classifier_count();
  std::vector<Network> networks(classifier_count);
  std::vector<TrainReport> reports(classifier_count);

  parallel_for(classifier_count, config.workers, [&](int j) {
    const KLabelset& labelset = framework.labelset(j);
    const SubsetIndex& subsets = framework.subsets(j);

    std::vector<int> train_targets(train_data.active.size());
    for (std::size_t i = 0; i < train_data.active.size(); ++i)
      train_targets[i] = target_class(labelset, train_data.active[i], subsets);
    std::vector<int> val_targets(val_data.active.size());
    for (std::size_t i = 0; i < val_data.active.size(); ++i)
      val_targets[i] = target_class(labelset, val_data.active[i], subsets);

    NetworkSpec spec;
    spec.input_size = config.sensor_count * config.sensor_count;
    spec.hidden_sizes = config.hidden_sizes;
    spec.output_size = subsets.subset_count();

    TrainConfig train_config = config.train;
    train_config.seed =
        Rng::stream(config.seed,
                    {stream_tag::kTraining, static_cast<std::uint64_t>(j)})
            .next_u64();
    Network net = init_network(
        spec, Rng::stream(config.seed, {stream_tag::kNetworkInit,
                                        static_cast<std::uint64_t>(j)})
                  .next_u64());

    auto [trained, report] = train(std::move(net), train_features,
                                   train_targets, val_features, val_targets,
                                   train_config);
    networks[j] = std::move(trained);
    reports[j] = std::move(report);
  });

  Ensemble ensemble{framework, std::move(networks), stats};
  save_ensemble(paths.models_dir(), ensemble);

  json report_doc = json::array();
  for (int j = 0; j < classifier_count; ++j) {
    const TrainReport& report = reports[j];
    const double best_val =
        *std::min_element(report.validation_loss.begin(),
                          report.validation_loss.end());
    report_doc.push_back({{"classifier", j},
                          {"epochs_run", report.epochs_run},
                          {"best_epoch", report.best_epoch},
                          {"stop_reason", report.stop_reason},
                          {"best_validation_loss", best_val},
                          {"final_train_loss", report.train_loss.back()}});
  }
  write_text_file(paths.training_report(), report_doc.dump(2) + "\n");

  manifest_record(manifest, "train",
                  {paths.models_dir(), paths.training_report(),
                   model_path(paths.models_dir(), classifier_count - 1)});
  manifest_save(paths, manifest);
}

void threshold_stage(const ExperimentConfig& config, const RunPaths& paths) {
  config.validate();
  json manifest = manifest_load_or_create(paths, config);
  manifest_require(manifest, {"generate", "train"});

  const Ensemble ensemble = load_ensemble(paths.models_dir());
  const FovGrid grid = ensemble.framework.grid;

  const std::string dataset_path = dataset_for_role(manifest, "threshold");
  if (dataset_path == dataset_for_role(manifest, "test"))
    throw std::runtime_error("harness: threshold stage would read the test split");

  FeaturizedDataset data = featurize(dataset_path, grid, config.workers);
  // Standardization deliberately reuses the classifier-training stats; this
  // stage emulates deployment, where only training statistics exist.
  const Eigen::MatrixXd features = standardize_rows(data.features,
                                                    ensemble.stats);
  const std::vector<Eigen::MatrixXd> outputs =
      ensemble_outputs(ensemble, features, config.workers);

  const int count = static_cast<int>(data.q_true.size());
  std::vector<AngleSpectrum> spectra(count);
  parallel_for(count, config.workers, [&](int i) {
    spectra[i] = assemble_spectrum(ensemble.framework,
                                   predictions_for_instance(outputs, i));
  });

  const ThresholdResult result = optimize_threshold(
      spectra, data.q_true, config.threshold_candidates(), grid);
  if (result.degenerate)
    std::cerr << "warning: no threshold level discriminated; keeping the "
                 "lowest candidate "
              << result.level << "\n";

  json doc;
  doc["level"] = result.level;
  doc["degenerate"] = result.degenerate;
  json table = json::array();
  for (const auto& [level, correct] : result.correct_count_per_level)
    table.push_back({{"level", level}, {"correct", correct}});
  doc["table"] = std::move(table);
  write_text_file(paths.threshold(), doc.dump(2) + "\n");

  manifest_record(manifest, "threshold", {paths.threshold()});
  manifest_save(paths, manifest);
}

namespace {

struct EvalResult {
  InstanceOutcome outcomes[5];  // indexed like method_names()
  std::vector<int> predicted_class;
  std::vector<int> target_class_;
  std::vector<double> spectrum;  // kept only when dump_spectra
};

json outcome_to_json(const InstanceOutcome& outcome, int instance_id) {
  return {{"instance_id", instance_id},
          {"q_true", outcome.q_true},
          {"aoas_true", outcome.aoas_true},
          {"q_hat", outcome.q_hat},
          {"aoas_hat", outcome.aoas_hat}};
}

json metrics_json(const std::vector<InstanceOutcome>& outcomes,
                  const std::vector<double>& curve_points) {
  json doc;
  const std::optional<double> rmse_value = rmse(outcomes);
  doc["rmse_deg"] = rmse_value ? json(*rmse_value) : json(nullptr);
  doc["p_q_correct_pct"] = p_q_correct(outcomes);
  json curve = json::object();
  for (double theta : curve_points)
    curve[format_angle(theta)] = success_rate(outcomes, theta);
  doc["success_rate_pct"] = std::move(curve);
  return doc;
}

}  // namespace

void evaluate_stage(const ExperimentConfig& config, const RunPaths& paths) {
  config.validate();
  json manifest = manifest_load_or_create(paths, config);
  manifest_require(manifest, {"generate", "train", "threshold"});

  const Ensemble ensemble = load_ensemble(paths.models_dir());
  const Framework& framework = ensemble.framework;
  const FovGrid grid = framework.grid;
  const ArrayGeometry geometry = config.geometry();
  const double threshold =
      json::parse(read_text_file(paths.threshold())).at("level").get<double>();

  const std::string dataset_path = dataset_for_role(manifest, "test");
  FeaturizedDataset data = featurize(dataset_path, grid, config.workers);
  const int count = static_cast<int>(data.q_true.size());
  const int classifier_count = framework.classifier_count();

  const Eigen::MatrixXd features =
      standardize_rows(data.features, ensemble.stats);
  const std::vector<Eigen::MatrixXd> outputs =
      ensemble_outputs(ensemble, features, config.workers);

  const MusicWorkspace low_workspace =
      make_music_workspace(geometry, MusicConfig::grid_centers(grid));
  const MusicWorkspace high_workspace = make_music_workspace(
      geometry, MusicConfig::uniform(config.fov_min_deg, config.fov_max_deg,
                                     config.music_high_res_deg));

  std::vector<EvalResult> results(count);
  parallel_for(count, config.workers, [&](int i) {
    EvalResult& result = results[i];
    const std::vector<Eigen::VectorXd> predictions =
        predictions_for_instance(outputs, i);

    const AngleSpectrum spectrum = assemble_spectrum(framework, predictions);
    const JointEstimate mlf_estimate = detect_peaks(spectrum, threshold, grid);
    if (config.dump_spectra)
      result.spectrum.assign(spectrum.data(), spectrum.data() + spectrum.size());

    result.predicted_class.resize(classifier_count);
    result.target_class_.resize(classifier_count);
    for (int j = 0; j < classifier_count; ++j) {
      int argmax = 0;
      for (int e = 1; e < predictions[j].size(); ++e)
        if (predictions[j](e) > predictions[j](argmax)) argmax = e;
      result.predicted_class[j] = argmax;
      result.target_class_[j] = target_class(framework.labelset(j),
                                             data.active[i],
                                             framework.subsets(j));
    }

    const Eigen::MatrixXcd covariance =
        covariance_from_features(data.features.row(i).transpose());
    const EigenDecomposition decomposition = hermitian_eig(covariance);
    const int q_mdl = mdl(decomposition.eigenvalues, config.snapshot_count);
    const int q_aic = aic(decomposition.eigenvalues, config.snapshot_count);

    const JointEstimate estimates[5] = {
        mlf_estimate,
        music_estimate(decomposition, q_mdl, low_workspace),
        music_estimate(decomposition, q_mdl, high_workspace),
        music_estimate(decomposition, q_aic, low_workspace),
        music_estimate(decomposition, q_aic, high_workspace),
    };
    for (int method = 0; method < 5; ++method) {
      InstanceOutcome& outcome = result.outcomes[method];
      outcome.q_true = data.q_true[i];
      outcome.aoas_true = data.aoas[i];
      outcome.q_hat = estimates[method].q_hat;
      outcome.aoas_hat = estimates[method].aoas_deg;
    }
  });

  fs::create_directories(paths.results_dir());
  const std::vector<double> curve_points = config.curve_points();
  std::vector<std::string> artifacts;

  // Outcome records, one JSONL file per method.
  for (std::size_t method = 0; method < method_names().size(); ++method) {
    const std::string& name = method_names()[method];
    std::ofstream out(paths.outcomes(name));
    if (!out)
      throw std::runtime_error("harness: cannot write " + paths.outcomes(name));
    for (int i = 0; i < count; ++i) {
      json record = outcome_to_json(results[i].outcomes[method], i);
      if (name == "mlf") {
        record["method"] = "mlf";
        record["threshold"] = threshold;
        if (config.dump_spectra) record["spectrum"] = results[i].spectrum;
      } else {
        record["method"] = "music";
        record["order_selector"] =
            name.find("mdl") != std::string::npos ? "mdl" : "aic";
        record["grid"] = name.find("low") != std::string::npos ? "low" : "high";
      }
      out << record.dump() << "\n";
    }
    out.close();
    if (!out) throw std::runtime_error("harness: write failed: " + paths.outcomes(name));
    artifacts.push_back(paths.outcomes(name));
  }

  // F1 statistics of the classifier predictions (framework method only).
  F1Accumulator f1(framework);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < classifier_count; ++j)
      f1.add_argmax(j, results[i].predicted_class[j],
                    results[i].target_class_[j]);

  // Per-method aggregate reports.
  std::vector<std::vector<InstanceOutcome>> by_method(5);
  for (int method = 0; method < 5; ++method) {
    by_method[method].reserve(count);
    for (int i = 0; i < count; ++i)
      by_method[method].push_back(results[i].outcomes[method]);
  }

  for (std::size_t method = 0; method < method_names().size(); ++method) {
    const std::string& name = method_names()[method];
    json report = metrics_json(by_method[method], curve_points);
    report["scenario"] = config.scenario;
    report["snr_db"] = config.snr_db;
    report["delta_theta_deg"] = grid.resolution_deg();
    report["segment_count"] = grid.segment_count;
    report["labelset_size"] = framework.labelset_size;
    report["layer_count"] = framework.layer_count;
    report["instances"] = count;
    if (name == "mlf") {
      report["method"] = "mlf";
      report["threshold"] = {{"level", threshold},
                             {"candidates", config.threshold_candidates()}};
      json expected = json::object();
      for (double theta : curve_points) {
        ExpectedSuccess value{false, 0.0};
        if (config.scenario == "fixed") {
          if (config.fixed_source_count >= 1)
            value = expected_success_rate(theta, grid.resolution_deg(),
                                          config.fixed_source_count,
                                          grid.segment_count);
        } else {
          const std::vector<double> weights(config.max_source_count, 1.0);
          value = expected_success_rate(theta, grid.resolution_deg(), weights,
                                        grid.segment_count);
        }
        expected[format_angle(theta)] =
            value.defined ? json(value.percent) : json(nullptr);
      }
      report["expected_success_rate_pct"] = std::move(expected);
      json f1_doc = json::object();
      for (int cardinality = 0; cardinality <= framework.labelset_size;
           ++cardinality) {
        const std::optional<double> value =
            averaged_f1(f1.table(), framework, cardinality);
        f1_doc[std::to_string(cardinality)] = value ? json(*value)
                                                    : json(nullptr);
      }
      report["f1"] = std::move(f1_doc);
    } else {
      report["method"] = "music";
      report["order_selector"] =
          name.find("mdl") != std::string::npos ? "mdl" : "aic";
      report["grid"] = name.find("low") != std::string::npos ? "low" : "high";
    }
    write_text_file(paths.report(name), report.dump(2) + "\n");
    artifacts.push_back(paths.report(name));
  }

  // Plot-ready long-format success-rate curves.
  {
    std::ofstream csv(paths.curves());
    if (!csv) throw std::runtime_error("harness: cannot write " + paths.curves());
    csv << "theta_tilde,method,value\n";
    char line[128];
    for (double theta : curve_points) {
      for (int method = 0; method < 5; ++method) {
        std::snprintf(line, sizeof(line), "%.1f,%s,%.6f\n", theta,
                      method_names()[method].c_str(),
                      success_rate(by_method[method], theta));
        csv << line;
      }
      ExpectedSuccess expected{false, 0.0};
      if (config.scenario == "fixed") {
        if (config.fixed_source_count >= 1)
          expected = expected_success_rate(theta, grid.resolution_deg(),
                                           config.fixed_source_count,
                                           grid.segment_count);
      } else {
        const std::vector<double> weights(config.max_source_count, 1.0);
        expected = expected_success_rate(theta, grid.resolution_deg(), weights,
                                         grid.segment_count);
      }
      if (expected.defined) {
        std::snprintf(line, sizeof(line), "%.1f,expected_ideal,%.6f\n", theta,
                      expected.percent);
        csv << line;
      }
    }
    csv.close();
    if (!csv) throw std::runtime_error("harness: write failed: " + paths.curves());
    artifacts.push_back(paths.curves());
  }

  // Success rate at 1 degree, grouped by true source number.
  {
    std::ofstream csv(paths.success_by_q());
    if (!csv)
      throw std::runtime_error("harness: cannot write " + paths.success_by_q());
    csv << "method,q,success_rate_pct\n";
    std::vector<int> distinct_q = data.q_true;
    std::sort(distinct_q.begin(), distinct_q.end());
    distinct_q.erase(std::unique(distinct_q.begin(), distinct_q.end()),
                     distinct_q.end());
    char line[128];
    for (int method = 0; method < 5; ++method)
      for (int q : distinct_q) {
        std::vector<InstanceOutcome> group;
        for (const InstanceOutcome& outcome : by_method[method])
          if (outcome.q_true == q) group.push_back(outcome);
        std::snprintf(line, sizeof(line), "%s,%d,%.6f\n",
                      method_names()[method].c_str(), q,
                      success_rate(group, 1.0));
        csv << line;
      }
    csv.close();
    if (!csv)
      throw std::runtime_error("harness: write failed: " + paths.success_by_q());
    artifacts.push_back(paths.success_by_q());
  }

  manifest_record(manifest, "evaluate", artifacts);
  manifest_save(paths, manifest);
}

RunPaths run_all(const ExperimentConfig& config, const std::string& out_root) {
  const RunPaths paths = RunPaths::under(out_root, config);
  generate_stage(config, paths);
  framework_stage(config, paths);
  train_stage(config, paths);
  threshold_stage(config, paths);
  evaluate_stage(config, paths);
  return paths;
}

std::string format_report(const RunPaths& paths) {
  const ExperimentConfig config =
      config_from_json(read_text_file(paths.config()));
  const FovGrid grid = config.grid();

  std::ostringstream out;
  out << "run: " << paths.root << "\n";
  out << "scenario " << config.scenario << ", SNR " << config.snr_db
      << " dB, M=" << config.segment_count << " (delta_theta="
      << grid.resolution_deg() << " deg), k=" << config.labelset_size
      << ", L=" << config.layer_count << ", seed " << config.seed << "\n";

  const json mlf_report = json::parse(read_text_file(paths.report("mlf")));
  out << "threshold level: "
      << mlf_report.at("threshold").at("level").get<double>() << "\n\n";

  const double delta = grid.resolution_deg();
  const std::vector<double> sample_points = {0.5 * delta, delta, 2.0 * delta};

  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %10s %8s", "method", "P(Q^=Q)%",
                "RMSE");
  out << line;
  for (double theta : sample_points) {
    std::snprintf(line, sizeof(line), "  f_sr(%s)%%", format_angle(theta).c_str());
    out << line;
  }
  out << "\n";

  for (const std::string& name : method_names()) {
    const json report = json::parse(read_text_file(paths.report(name)));
    const json& rmse_value = report.at("rmse_deg");
    char rmse_text[16];
    if (rmse_value.is_null())
      std::snprintf(rmse_text, sizeof(rmse_text), "undef");
    else
      std::snprintf(rmse_text, sizeof(rmse_text), "%.3f",
                    rmse_value.get<double>());
    std::snprintf(line, sizeof(line), "%-16s %10.2f %8s", name.c_str(),
                  report.at("p_q_correct_pct").get<double>(), rmse_text);
    out << line;
    for (double theta : sample_points) {
      const auto& curve = report.at("success_rate_pct");
      const std::string key = format_angle(theta);
      if (curve.contains(key))
        std::snprintf(line, sizeof(line), "  %9.2f",
                      curve.at(key).get<double>());
      else
        std::snprintf(line, sizeof(line), "  %9s", "-");
      out << line;
    }
    out << "\n";
  }

  out << "\nideal-classifier bound f_sr_exp:";
  const auto& expected = mlf_report.at("expected_success_rate_pct");
  for (double theta : sample_points) {
    const std::string key = format_angle(theta);
    if (expected.contains(key) && !expected.at(key).is_null()) {
      std::snprintf(line, sizeof(line), "  %s->%.2f%%", key.c_str(),
                    expected.at(key).get<double>());
      out << line;
    }
  }
  out << "\n";

  out << "classifier F1 by subset cardinality:";
  for (const auto& [key, value] : mlf_report.at("f1").items()) {
    if (value.is_null())
      std::snprintf(line, sizeof(line), "  %s->undef", key.c_str());
    else
      std::snprintf(line, sizeof(line), "  %s->%.3f", key.c_str(),
                    value.get<double>());
    out << line;
  }
  out << "\n";
  return out.str();
}

}  // namespace aoa
