#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aoa/rng.hpp"

namespace aoa {

using FeatureVector = Eigen::VectorXd;

/// Uniform linear array: N isotropic sensors, spacing given in wavelengths.
struct ArrayGeometry {
  int sensor_count = 8;
  double spacing_wavelengths = 0.5;
};

/// Ground truth of one simulated instance: equal-power uncorrelated plane
/// waves in white noise. signal_variance applies to every source;
/// snr_db = 10*log10(signal_variance / noise_variance).
struct SourceScene {
  std::vector<double> aoas_deg;
  double snr_db = 0.0;
  double signal_variance = 1.0;
  double noise_variance = 1.0;

  int source_count() const { return static_cast<int>(aoas_deg.size()); }

  /// Scene with unit signal power and noise power set from the SNR.
  static SourceScene from_snr(std::vector<double> aoas_deg, double snr_db);
};

/// T time samples of the array output; rows are snapshots y(t)^T.
struct SnapshotBatch {
  Eigen::MatrixXcd snapshots;  // T x N
  SourceScene scene;

  int snapshot_count() const { return static_cast<int>(snapshots.rows()); }
  int sensor_count() const { return static_cast<int>(snapshots.cols()); }
};

/// Hermitian sample covariance and the number of snapshots it was formed from.
struct CovarianceEstimate {
  Eigen::MatrixXcd matrix;  // N x N, Hermitian
  int snapshot_count = 0;
};

/// Per-feature standardization constants, fit on classifier training data.
struct FeatureStats {
  Eigen::VectorXd means;
  Eigen::VectorXd std_devs;
};

/// Array response a(theta): element n is exp(j*2*pi*(d/lambda)*n*sin(theta)).
/// Requires -90 <= aoa_deg < 90.
Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry, double aoa_deg);

/// N x Q manifold whose columns are the steering vectors of the given AOAs.
Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry,
                                 const std::vector<double>& aoas_deg);

/// Draw T snapshots y(t) = A s(t) + n(t) with circular complex gaussian
/// waveforms and noise; fresh draws per snapshot, deterministic given rng.
SnapshotBatch synthesize_snapshots(const ArrayGeometry& geometry,
                                   const SourceScene& scene, int snapshot_count,
                                   Rng& rng);

/// Ensemble covariance A P A^H + noise_variance * I with P = sigma^2 I_Q.
Eigen::MatrixXcd exact_covariance(const ArrayGeometry& geometry,
                                  const SourceScene& scene);

/// Maximum-likelihood covariance estimate (1/T) sum_t y(t) y(t)^H,
/// symmetrized so the Hermitian invariant holds exactly.
CovarianceEstimate sample_covariance(const SnapshotBatch& batch);

/// Flatten an N x N Hermitian matrix to N^2 reals: the diagonal first, then
/// Re/Im pairs of the strictly-upper triangle in row-major order.
FeatureVector feature_vector(const Eigen::MatrixXcd& covariance);

/// Inverse of feature_vector (exact round trip).
Eigen::MatrixXcd covariance_from_features(const FeatureVector& features);

/// Per-element means and population standard deviations. Requires >= 2 rows;
/// zero-variance features get std 1 so they standardize to a constant 0.
FeatureStats fit_feature_stats(const Eigen::MatrixXd& feature_rows);

/// (f - means) / std_devs, elementwise.
FeatureVector standardize(const FeatureVector& features,
                          const FeatureStats& stats);

/// Standardize a whole feature matrix (one instance per row).
Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& feature_rows,
                                 const FeatureStats& stats);

}  // namespace aoa
