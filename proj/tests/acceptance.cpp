// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Heavy end-to-end checks run last.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoa/baselines.hpp"
#include "aoa/dataset_io.hpp"
#include "aoa/estimator.hpp"
#include "aoa/harness.hpp"
#include "aoa/metrics.hpp"
#include "aoa/model_io.hpp"
#include "aoa/network.hpp"
#include "aoa/parallel.hpp"
#include "aoa/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aoa;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL",
              criterion, what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("acceptance: cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buffer))) break;
  }
  return hash;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("acceptance: cannot open " + path);
  json doc;
  in >> doc;
  return doc;
}

// --------------------------------------------------------------------------
// 1. Closed-form ideal-classifier success rate vs Monte Carlo.

void criterion_1() {
  struct Combo {
    int segment_count;
    int source_count;
  };
  const Combo combos[] = {{60, 2}, {120, 2}, {60, 3}};
  const int trials = 50000;

  double worst = 0.0;
  bool pass = true;
  for (const Combo& combo : combos) {
    const FovGrid grid = build_grid(-60.0, 60.0, combo.segment_count);
    const double delta = grid.resolution_deg();
    const Framework framework = generate_framework(grid, 3, 3, 11);

    std::vector<InstanceOutcome> outcomes(trials);
    parallel_for(trials, 0, [&](int t) {
      Rng rng = Rng::stream(500 + combo.segment_count + combo.source_count,
                            {static_cast<std::uint64_t>(t)});
      std::vector<double> aoas(combo.source_count);
      for (double& aoa : aoas) aoa = rng.uniform(-60.0, 60.0);
      const std::vector<int> active = active_labels(grid, aoas);
      std::vector<Eigen::VectorXd> predictions;
      predictions.reserve(framework.classifier_count());
      for (int j = 0; j < framework.classifier_count(); ++j)
        predictions.push_back(target_vector(framework.labelset(j), active,
                                            framework.subsets(j)));
      const JointEstimate estimate =
          detect_peaks(assemble_spectrum(framework, predictions), 0.5, grid);
      outcomes[t] = {combo.source_count, aoas, estimate.q_hat,
                     estimate.aoas_deg};
    });

    for (double factor : {0.25, 0.5, 1.0, 2.0}) {
      const double theta = factor * delta;
      const ExpectedSuccess expected = expected_success_rate(
          theta, delta, combo.source_count, combo.segment_count);
      const double empirical = success_rate(outcomes, theta);
      const double deviation = std::abs(empirical - expected.percent);
      worst = std::max(worst, deviation);
      pass = pass && expected.defined && deviation < 0.5;
    }
  }

  const double reference = expected_success_rate(2.0, 2.0, 2, 60).percent;
  pass = pass && std::abs(reference - 95.06) < 0.01;

  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "max |MC - closed form| = %.3f pp over 12 points; "
                "f_max(60,2) = %.4f%%",
                worst, reference);
  report(1, pass, "ideal-classifier success rate: closed form vs Monte Carlo",
         detail);
}

// --------------------------------------------------------------------------
// 2. Analytic gradients vs central finite differences.

double worst_gradient_error(const NetworkSpec& spec, std::uint64_t seed,
                            int batch_size) {
  Network net = init_network(spec, seed);
  Rng rng = Rng::stream(seed, {12345});
  Eigen::MatrixXd inputs(batch_size, spec.input_size);
  for (int r = 0; r < batch_size; ++r)
    for (int c = 0; c < spec.input_size; ++c)
      inputs(r, c) = rng.uniform(-1.5, 1.5);
  std::vector<int> targets(batch_size);
  for (int r = 0; r < batch_size; ++r)
    targets[r] = static_cast<int>(rng.below(spec.output_size));

  const Gradients analytic = backprop(net, inputs, targets);
  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& parameter, double analytic_grad) {
    const double saved = parameter;
    parameter = saved + h;
    const double up = batch_loss(net, inputs, targets);
    parameter = saved - h;
    const double down = batch_loss(net, inputs, targets);
    parameter = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel =
        std::abs(analytic_grad - numeric) /
        std::max(std::abs(analytic_grad) + std::abs(numeric), 1e-6);
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c)
        probe(net.weights[l](r, c), analytic.weights[l](r, c));
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
      probe(net.biases[l](i), analytic.biases[l](i));
  }
  return worst;
}

void criterion_2() {
  const double small = worst_gradient_error(NetworkSpec{8, {5}, 4}, 211, 4);
  const double large =
      worst_gradient_error(NetworkSpec{64, {64, 36}, 8}, 212, 3);
  const double worst = std::max(small, large);
  char detail[96];
  std::snprintf(detail, sizeof(detail),
                "max relative error %.2e (8-5-4 and 64-64-36-8)", worst);
  report(2, worst < 1e-4, "backprop gradients match finite differences",
         detail);
}

// --------------------------------------------------------------------------
// 3. Framework coverage over the published grid.

void criterion_3() {
  bool pass = true;
  std::string note;
  for (int segment_count : {60, 120}) {
    for (int layers : {1, 3, 5}) {
      const Framework framework = generate_framework(
          build_grid(-60.0, 60.0, segment_count), 3, layers, 31);
      const int expected_m = layers * ((segment_count + 2) / 3);
      pass = pass && framework.classifier_count() == expected_m;

      std::vector<int> appearances(segment_count, 0);
      for (const auto& layer : framework.layers)
        for (const auto& labelset : layer)
          for (int label : labelset.labels) ++appearances[label];
      for (int label = 0; label < segment_count; ++label)
        pass = pass && appearances[label] == layers;

      if (segment_count == 60 && layers == 5)
        pass = pass && framework.classifier_count() == 100;
      if (segment_count == 120 && layers == 5)
        pass = pass && framework.classifier_count() == 200;
    }
  }
  report(3, pass, "every label sits in exactly L labelsets, m = L*ceil(M/k)",
         "M in {60,120}, k=3, L in {1,3,5}; m(60,3,5)=100, m(120,3,5)=200");
}

// --------------------------------------------------------------------------
// 4. Spectrum normalization fuzz.

void criterion_4() {
  Rng rng(41);
  bool pass = true;
  double min_seen = 1.0, max_seen = 0.0;
  for (int trial = 0; trial < 10000 && pass; ++trial) {
    const int m = 6 + static_cast<int>(rng.below(40));
    const int k = std::min(2 + static_cast<int>(rng.below(3)), m - 1);
    const int layers = 1 + static_cast<int>(rng.below(5));
    const Framework framework = generate_framework(
        build_grid(-60.0, 60.0, m), k, layers, rng.next_u64());

    std::vector<Eigen::VectorXd> predictions;
    for (int j = 0; j < framework.classifier_count(); ++j) {
      const int size = framework.subsets(j).subset_count();
      Eigen::VectorXd logits(size);
      for (int e = 0; e < size; ++e) logits(e) = rng.uniform(-8.0, 8.0);
      logits.array() -= logits.maxCoeff();
      Eigen::VectorXd p = logits.array().exp();
      p /= p.sum();
      predictions.push_back(std::move(p));
    }
    const AngleSpectrum spectrum = assemble_spectrum(framework, predictions);
    min_seen = std::min(min_seen, spectrum.minCoeff());
    max_seen = std::max(max_seen, spectrum.maxCoeff());
    pass = pass && spectrum.minCoeff() >= 0.0 && spectrum.maxCoeff() <= 1.0;
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail),
                "10000 random frameworks; observed range [%.3g, %.3g]",
                min_seen, max_seen);
  report(4, pass, "assembled spectra stay inside [0, 1]", detail);
}

// --------------------------------------------------------------------------
// 5. MUSIC oracle on exact covariances.

void criterion_5() {
  const ArrayGeometry geometry{8, 0.5};
  const MusicWorkspace workspace = make_music_workspace(
      geometry, MusicConfig::uniform(-60.0, 60.0, 0.1));

  int correct = 0;
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    // Case 0 is the reference pair; the rest sweep well-separated pairs.
    double first = -20.0, second = 40.0;
    if (c > 0) {
      first = -58.0 + 0.37 * c;
      second = first + 20.0 + (c % 17);
    }
    const SourceScene scene = SourceScene::from_snr({first, second}, 10.0);
    const CovarianceEstimate covariance{exact_covariance(geometry, scene), 1};
    const JointEstimate estimate = music_estimate(
        hermitian_eig(covariance.matrix), 2, workspace);
    const double error = std::max(std::abs(estimate.aoas_deg[0] - first),
                                  std::abs(estimate.aoas_deg[1] - second));
    worst = std::max(worst, error);
    if (estimate.q_hat == 2 && error <= 0.1) ++correct;
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail), "%d/100 within 0.1 deg; worst %.4f deg",
                correct, worst);
  report(5, correct == 100, "MUSIC pinpoints exact two-source covariances",
         detail);
}

// --------------------------------------------------------------------------
// 6. MDL/AIC statistics at desk scale.

double criterion_6_rate(double snr_db, bool use_mdl, int instances) {
  const ArrayGeometry geometry{8, 0.5};
  std::vector<int> hits(instances, 0);
  parallel_for(instances, 0, [&](int i) {
    Rng rng = Rng::stream(600 + static_cast<int>(snr_db * 10) + use_mdl,
                          {static_cast<std::uint64_t>(i)});
    std::vector<double> aoas = {rng.uniform(-60.0, 60.0),
                                rng.uniform(-60.0, 60.0)};
    const SourceScene scene = SourceScene::from_snr(aoas, snr_db);
    const SnapshotBatch batch = synthesize_snapshots(geometry, scene, 100, rng);
    const EigenDecomposition decomposition =
        hermitian_eig(sample_covariance(batch).matrix);
    const int estimate = use_mdl
                             ? mdl(decomposition.eigenvalues, 100)
                             : aic(decomposition.eigenvalues, 100);
    hits[i] = estimate == 2 ? 1 : 0;
  });
  int total = 0;
  for (int h : hits) total += h;
  return 100.0 * total / instances;
}

void criterion_6() {
  const int instances = 5000;
  const double mdl_low = criterion_6_rate(-10.0, true, instances);
  const double aic_low = criterion_6_rate(-10.0, false, instances);
  const double mdl_high = criterion_6_rate(10.0, true, instances);

  const bool pass =
      mdl_low < 5.0 && aic_low >= 50.0 && aic_low <= 75.0 && mdl_high > 90.0;
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "-10 dB: MDL %.1f%% (<5), AIC %.1f%% (50..75); +10 dB: MDL "
                "%.1f%% (>90)",
                mdl_low, aic_low, mdl_high);
  report(6, pass, "MDL/AIC reproduce the published ordering", detail);
}

// --------------------------------------------------------------------------
// 7-9. Desk-scale end-to-end runs.

ExperimentConfig acceptance_config() {
  ExperimentConfig config = preset("desk-I");
  config.seed = 2025;
  config.workers = 0;
  return config;
}

void criterion_7(const RunPaths& run) {
  const json mlf = load_json(run.report("mlf"));
  const json mdl_low = load_json(run.report("music_mdl_low"));
  const json mdl_high = load_json(run.report("music_mdl_high"));

  const double p_q = mlf.at("p_q_correct_pct").get<double>();
  const bool rmse_defined = !mlf.at("rmse_deg").is_null();
  const double rmse_value = rmse_defined ? mlf.at("rmse_deg").get<double>()
                                         : std::nan("");
  const double mlf_sr = mlf.at("success_rate_pct").at("2.0").get<double>();
  const double music_sr =
      std::max(mdl_low.at("success_rate_pct").at("2.0").get<double>(),
               mdl_high.at("success_rate_pct").at("2.0").get<double>());

  const bool pass = p_q >= 85.0 && rmse_defined && rmse_value <= 1.0 &&
                    mlf_sr > music_sr;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "P(Q^=Q) %.1f%% (>=85), RMSE %.3f deg (<=1), f_sr(2deg) MLF "
                "%.1f%% vs MUSIC+MDL %.1f%%",
                p_q, rmse_value, mlf_sr, music_sr);
  report(7, pass, "desk-scale framework beats the MUSIC+MDL baseline", detail);
}

void criterion_8(const ExperimentConfig& config, const RunPaths& run) {
  bool pass = true;
  std::string note = "curves monotone";

  // f_sr non-decreasing in theta and bounded by P(Q^=Q), for every method.
  for (const std::string& method : method_names()) {
    const json doc = load_json(run.report(method));
    const double p_q = doc.at("p_q_correct_pct").get<double>();
    double previous = -1.0;
    for (double theta : config.curve_points()) {
      char key[16];
      std::snprintf(key, sizeof(key), "%.1f", theta);
      const double value =
          doc.at("success_rate_pct").at(key).get<double>();
      pass = pass && value >= previous && value <= p_q + 1e-12;
      previous = value;
    }
  }

  // Peak counts are non-increasing in the threshold: real spectra from the
  // trained ensemble plus random fuzz.
  const Ensemble ensemble = load_ensemble(run.models_dir());
  const FovGrid grid = ensemble.framework.grid;
  {
    DatasetReader reader(run.dataset("test"));
    DatasetInstance instance;
    int checked = 0;
    while (checked < 200 && reader.next(instance)) {
      const FeatureVector feature = standardize(
          feature_vector(
              sample_covariance({instance.snapshots, SourceScene{}}).matrix),
          ensemble.stats);
      const AngleSpectrum spectrum = ensemble_spectrum(ensemble, feature);
      int previous = detect_peaks(spectrum, 0.0, grid).q_hat;
      for (double threshold = 0.05; threshold <= 1.0; threshold += 0.05) {
        const int current = detect_peaks(spectrum, threshold, grid).q_hat;
        pass = pass && current <= previous;
        previous = current;
      }
      ++checked;
    }
  }
  Rng rng(71);
  for (int trial = 0; trial < 500; ++trial) {
    AngleSpectrum spectrum(grid.segment_count);
    for (int i = 0; i < grid.segment_count; ++i)
      spectrum(i) = rng.uniform() < 0.4 ? 0.0 : rng.uniform();
    int previous = detect_peaks(spectrum, 0.0, grid).q_hat;
    for (double threshold = 0.05; threshold <= 1.0; threshold += 0.05) {
      const int current = detect_peaks(spectrum, threshold, grid).q_hat;
      pass = pass && current <= previous;
      previous = current;
    }
  }

  report(8, pass,
         "monotonicity: f_sr in theta, peaks in threshold, f_sr <= P(Q^=Q)",
         "5 method curves, 200 ensemble spectra, 500 fuzz spectra");
}

void criterion_9(const ExperimentConfig& config, const RunPaths& first,
                 const std::string& scratch) {
  const RunPaths second = run_all(config, scratch + "/rerun");

  std::vector<std::string> files;
  for (const char* role : {"train", "validation", "threshold", "test"})
    files.push_back(std::string("data/") + role + ".aoad");
  files.push_back("framework.json");
  files.push_back("threshold.json");
  files.push_back("models/training_report.json");
  files.push_back("results/curves.csv");
  files.push_back("results/success_by_q.csv");
  for (const std::string& method : method_names()) {
    files.push_back("results/outcomes_" + method + ".jsonl");
    files.push_back("results/report_" + method + ".json");
  }

  int mismatches = 0;
  for (const std::string& file : files) {
    const std::uint64_t digest_a = file_digest(first.root + "/" + file);
    const std::uint64_t digest_b = file_digest(second.root + "/" + file);
    if (digest_a != digest_b) {
      ++mismatches;
      std::fprintf(stderr, "  determinism mismatch: %s\n", file.c_str());
    }
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail), "%zu artifacts compared, %d mismatches",
                files.size(), mismatches);
  report(9, mismatches == 0, "same seed reproduces the run byte for byte",
         detail);
}

}  // namespace

int main() {
  const std::string scratch = "aoa_acceptance_scratch";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();

  const ExperimentConfig config = acceptance_config();
  std::printf("... running the desk-I pipeline end to end (this is the slow "
              "part)\n");
  std::fflush(stdout);
  const RunPaths run = run_all(config, scratch + "/main");
  criterion_7(run);
  criterion_8(config, run);
  criterion_9(config, run, scratch);

  if (failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
