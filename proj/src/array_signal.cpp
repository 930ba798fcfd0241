#include "aoa/array_signal.hpp"

#include <cmath>
#include <stdexcept>

namespace aoa {

namespace {

void check_geometry(const ArrayGeometry& geometry) {
  if (geometry.sensor_count < 2)
    throw std::domain_error("ArrayGeometry: sensor_count must be >= 2");
  if (!(geometry.spacing_wavelengths > 0.0))
    throw std::domain_error("ArrayGeometry: spacing must be positive");
}

void check_scene(const SourceScene& scene) {
  for (double aoa : scene.aoas_deg)
    if (!(aoa >= -90.0 && aoa < 90.0))
      throw std::domain_error("SourceScene: AOA outside [-90, 90)");
  if (!(scene.signal_variance > 0.0) || !(scene.noise_variance > 0.0))
    throw std::domain_error("SourceScene: variances must be positive");
}

}  // namespace

SourceScene SourceScene::from_snr(std::vector<double> aoas_deg, double snr_db) {
  SourceScene scene;
  scene.aoas_deg = std::move(aoas_deg);
  scene.snr_db = snr_db;
  scene.signal_variance = 1.0;
  scene.noise_variance = std::pow(10.0, -snr_db / 10.0);
  return scene;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry, double aoa_deg) {
  check_geometry(geometry);
  if (!(aoa_deg >= -90.0 && aoa_deg < 90.0))
    throw std::domain_error("steering_vector: AOA outside [-90, 90)");

  const int n = geometry.sensor_count;
  const double phase_step = 2.0 * M_PI * geometry.spacing_wavelengths *
                            std::sin(aoa_deg * M_PI / 180.0);
  Eigen::VectorXcd a(n);
  for (int i = 0; i < n; ++i)
    a(i) = std::polar(1.0, phase_step * static_cast<double>(i));
  return a;
}

Eigen::MatrixXcd steering_matrix(const ArrayGeometry& geometry,
                                 const std::vector<double>& aoas_deg) {
  Eigen::MatrixXcd manifold(geometry.sensor_count,
                            static_cast<int>(aoas_deg.size()));
  for (int q = 0; q < static_cast<int>(aoas_deg.size()); ++q)
    manifold.col(q) = steering_vector(geometry, aoas_deg[q]);
  return manifold;
}

SnapshotBatch synthesize_snapshots(const ArrayGeometry& geometry,
                                   const SourceScene& scene, int snapshot_count,
                                   Rng& rng) {
  check_geometry(geometry);
  check_scene(scene);
  if (snapshot_count < 1)
    throw std::domain_error("synthesize_snapshots: need at least one snapshot");

  const int n = geometry.sensor_count;
  const int q = scene.source_count();
  const Eigen::MatrixXcd manifold = steering_matrix(geometry, scene.aoas_deg);

  Eigen::MatrixXcd snapshots(snapshot_count, n);
  Eigen::VectorXcd waveforms(q);
  for (int t = 0; t < snapshot_count; ++t) {
    for (int s = 0; s < q; ++s)
      waveforms(s) = rng.complex_gaussian(scene.signal_variance);
    Eigen::VectorXcd y = manifold * waveforms;
    for (int e = 0; e < n; ++e)
      y(e) += rng.complex_gaussian(scene.noise_variance);
    snapshots.row(t) = y.transpose();
  }
  return SnapshotBatch{std::move(snapshots), scene};
}

Eigen::MatrixXcd exact_covariance(const ArrayGeometry& geometry,
                                  const SourceScene& scene) {
  check_geometry(geometry);
  check_scene(scene);
  const int n = geometry.sensor_count;
  const Eigen::MatrixXcd manifold = steering_matrix(geometry, scene.aoas_deg);
  Eigen::MatrixXcd covariance =
      scene.signal_variance * (manifold * manifold.adjoint());
  covariance += scene.noise_variance * Eigen::MatrixXcd::Identity(n, n);
  return covariance;
}

CovarianceEstimate sample_covariance(const SnapshotBatch& batch) {
  const int t = batch.snapshot_count();
  if (t < 1) throw std::domain_error("sample_covariance: empty batch");

  const Eigen::MatrixXcd& y = batch.snapshots;
  Eigen::MatrixXcd covariance =
      (y.transpose() * y.conjugate()) / static_cast<double>(t);
  // Enforce exact Hermitian symmetry (blocked products may round asymmetrically).
  covariance = 0.5 * (covariance + covariance.adjoint()).eval();
  return CovarianceEstimate{std::move(covariance), t};
}

FeatureVector feature_vector(const Eigen::MatrixXcd& covariance) {
  const int n = static_cast<int>(covariance.rows());
  if (covariance.cols() != n)
    throw std::invalid_argument("feature_vector: matrix must be square");

  FeatureVector features(n * n);
  int idx = 0;
  for (int i = 0; i < n; ++i) features(idx++) = covariance(i, i).real();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      features(idx++) = covariance(i, j).real();
      features(idx++) = covariance(i, j).imag();
    }
  return features;
}

Eigen::MatrixXcd covariance_from_features(const FeatureVector& features) {
  const int n = static_cast<int>(std::lround(std::sqrt(
      static_cast<double>(features.size()))));
  if (static_cast<Eigen::Index>(n) * n != features.size())
    throw std::invalid_argument(
        "covariance_from_features: length is not a perfect square");

  Eigen::MatrixXcd covariance(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i) covariance(i, i) = features(idx++);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double re = features(idx++);
      const double im = features(idx++);
      covariance(i, j) = {re, im};
      covariance(j, i) = {re, -im};
    }
  return covariance;
}

FeatureStats fit_feature_stats(const Eigen::MatrixXd& feature_rows) {
  if (feature_rows.rows() < 2)
    throw std::domain_error("fit_feature_stats: need at least two vectors");

  FeatureStats stats;
  stats.means = feature_rows.colwise().mean();
  const Eigen::MatrixXd centered =
      feature_rows.rowwise() - stats.means.transpose();
  const Eigen::VectorXd variance =
      centered.array().square().colwise().mean();
  stats.std_devs = variance.array().sqrt();
  for (Eigen::Index i = 0; i < stats.std_devs.size(); ++i)
    if (stats.std_devs(i) == 0.0) stats.std_devs(i) = 1.0;
  return stats;
}

FeatureVector standardize(const FeatureVector& features,
                          const FeatureStats& stats) {
  if (features.size() != stats.means.size())
    throw std::invalid_argument("standardize: length mismatch");
  return (features - stats.means).cwiseQuotient(stats.std_devs);
}

Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& feature_rows,
                                 const FeatureStats& stats) {
  if (feature_rows.cols() != stats.means.size())
    throw std::invalid_argument("standardize_rows: width mismatch");
  return (feature_rows.rowwise() - stats.means.transpose()).array().rowwise() /
         stats.std_devs.transpose().array();
}

}  // namespace aoa
