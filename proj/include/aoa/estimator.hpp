#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aoa/array_signal.hpp"
#include "aoa/fov.hpp"
#include "aoa/network.hpp"

namespace aoa {

/// Per-segment probabilities P_0..P_{M-1} aligned to the FOV grid.
using AngleSpectrum = Eigen::VectorXd;

/// Decoded joint estimate: source count plus ascending AOA estimates.
struct JointEstimate {
  int q_hat = 0;
  std::vector<double> aoas_deg;
};

struct ThresholdResult {
  double level = 0.0;
  std::vector<std::pair<double, int>> correct_count_per_level;
  bool degenerate = false;  // no candidate level discriminated
};

/// A trained classifier ensemble bound to its framework and feature stats.
struct Ensemble {
  Framework framework;
  std::vector<Network> networks;
  FeatureStats stats;
};

/// Combine per-classifier subset probabilities into segment probabilities:
/// every subset's mass is credited to each label it contains, summed over the
/// L classifiers covering a label and divided by L.
AngleSpectrum assemble_spectrum(const Framework& framework,
                                const std::vector<Eigen::VectorXd>& predictions);

/// Locate peaks strictly above the threshold. A peak is a maximal run of
/// equal consecutive values strictly greater than both neighbours (one-sided
/// at the spectrum edges); its estimate is the mean of the run's segment
/// centers. Estimates come back ascending.
JointEstimate detect_peaks(const AngleSpectrum& spectrum, double threshold,
                           const FovGrid& grid);

/// Pick the candidate level maximizing the number of spectra whose decoded
/// source count matches the truth; ties resolve to the lowest level.
ThresholdResult optimize_threshold(const std::vector<AngleSpectrum>& spectra,
                                   const std::vector<int>& true_counts,
                                   const std::vector<double>& candidate_levels,
                                   const FovGrid& grid);

/// All m classifier outputs for one standardized feature vector.
std::vector<Eigen::VectorXd> ensemble_predictions(
    const Ensemble& ensemble, const Eigen::VectorXd& standardized_feature);

/// Spectrum for one standardized feature vector.
AngleSpectrum ensemble_spectrum(const Ensemble& ensemble,
                                const Eigen::VectorXd& standardized_feature);

/// Full deployment path: covariance -> features -> standardize -> forward
/// through all classifiers -> spectrum -> peak decode.
JointEstimate estimate(const Ensemble& ensemble, const SnapshotBatch& batch,
                       double threshold);

}  // namespace aoa
