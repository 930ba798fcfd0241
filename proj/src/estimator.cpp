#include "aoa/estimator.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace aoa {

AngleSpectrum assemble_spectrum(
    const Framework& framework,
    const std::vector<Eigen::VectorXd>& predictions) {
  const int classifier_count = framework.classifier_count();
  if (static_cast<int>(predictions.size()) != classifier_count)
    throw std::invalid_argument("assemble_spectrum: need one prediction per classifier");

  AngleSpectrum spectrum =
      AngleSpectrum::Zero(framework.grid.segment_count);
  for (int j = 0; j < classifier_count; ++j) {
    const KLabelset& labelset = framework.labelset(j);
    const SubsetIndex& index = framework.subsets(j);
    const Eigen::VectorXd& prediction = predictions[j];
    if (prediction.size() != index.subset_count())
      throw std::invalid_argument("assemble_spectrum: prediction length mismatch");

    for (int e = 0; e < index.subset_count(); ++e) {
      const double mass = prediction(e);
      if (mass == 0.0) continue;
      std::uint32_t mask = index.masks[e];
      while (mask != 0) {
        const int position = std::countr_zero(mask);
        mask &= mask - 1;
        spectrum(labelset.labels[position]) += mass;
      }
    }
  }
  spectrum /= static_cast<double>(framework.layer_count);
  // Each label is covered by exactly layer_count classifiers whose relevant
  // masses each sum to <= 1, so only rounding can push past the bound.
  return spectrum.cwiseMin(1.0).cwiseMax(0.0);
}

JointEstimate detect_peaks(const AngleSpectrum& spectrum, double threshold,
                           const FovGrid& grid) {
  const int m = static_cast<int>(spectrum.size());
  if (m != grid.segment_count)
    throw std::invalid_argument("detect_peaks: spectrum does not match grid");

  JointEstimate estimate;
  int i = 0;
  while (i < m) {
    int j = i;
    while (j + 1 < m && spectrum(j + 1) == spectrum(i)) ++j;
    const bool above = spectrum(i) > threshold;
    const bool left_ok = (i == 0) || (spectrum(i - 1) < spectrum(i));
    const bool right_ok = (j == m - 1) || (spectrum(j + 1) < spectrum(i));
    if (above && left_ok && right_ok)
      estimate.aoas_deg.push_back(
          0.5 * (grid.center_deg(i) + grid.center_deg(j)));
    i = j + 1;
  }
  estimate.q_hat = static_cast<int>(estimate.aoas_deg.size());
  return estimate;
}

ThresholdResult optimize_threshold(const std::vector<AngleSpectrum>& spectra,
                                   const std::vector<int>& true_counts,
                                   const std::vector<double>& candidate_levels,
                                   const FovGrid& grid) {
  if (candidate_levels.empty())
    throw std::domain_error("optimize_threshold: no candidate levels");
  if (spectra.size() != true_counts.size())
    throw std::invalid_argument("optimize_threshold: spectra/count mismatch");
  if (!std::is_sorted(candidate_levels.begin(), candidate_levels.end()))
    throw std::invalid_argument("optimize_threshold: candidates must ascend");
  for (double level : candidate_levels)
    if (!(level >= 0.0 && level <= 1.0))
      throw std::domain_error("optimize_threshold: level outside [0, 1]");

  ThresholdResult result;
  int best_count = -1;
  for (double level : candidate_levels) {
    int correct = 0;
    for (std::size_t p = 0; p < spectra.size(); ++p)
      if (detect_peaks(spectra[p], level, grid).q_hat == true_counts[p])
        ++correct;
    result.correct_count_per_level.emplace_back(level, correct);
    if (correct > best_count) {  // ties keep the lowest level
      best_count = correct;
      result.level = level;
    }
  }

  const auto [lo, hi] = std::minmax_element(
      result.correct_count_per_level.begin(),
      result.correct_count_per_level.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  result.degenerate = (lo->second == hi->second);
  return result;
}

std::vector<Eigen::VectorXd> ensemble_predictions(
    const Ensemble& ensemble, const Eigen::VectorXd& standardized_feature) {
  std::vector<Eigen::VectorXd> predictions;
  predictions.reserve(ensemble.networks.size());
  for (const Network& net : ensemble.networks)
    predictions.push_back(forward(net, standardized_feature));
  return predictions;
}

AngleSpectrum ensemble_spectrum(const Ensemble& ensemble,
                                const Eigen::VectorXd& standardized_feature) {
  return assemble_spectrum(ensemble.framework,
                           ensemble_predictions(ensemble, standardized_feature));
}

JointEstimate estimate(const Ensemble& ensemble, const SnapshotBatch& batch,
                       double threshold) {
  const CovarianceEstimate covariance = sample_covariance(batch);
  const FeatureVector features =
      standardize(feature_vector(covariance.matrix), ensemble.stats);
  return detect_peaks(ensemble_spectrum(ensemble, features), threshold,
                      ensemble.framework.grid);
}

}  // namespace aoa
