#pragma once

#include <Eigen/Dense>
#include <vector>

#include "aoa/array_signal.hpp"
#include "aoa/estimator.hpp"
#include "aoa/fov.hpp"

namespace aoa {

/// Hermitian eigendecomposition with eigenvalues sorted descending and
/// matching unitary eigenvector columns.
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
};

EigenDecomposition hermitian_eig(const Eigen::MatrixXcd& matrix);

/// Eigenvalue-based information criteria for the source count (Wax-Kailath
/// form): the likelihood term is T*(N-q) times the log ratio of the
/// arithmetic to geometric mean of the N-q smallest eigenvalues;
/// MDL adds 0.5*q*(2N-q)*ln(T), AIC doubles the likelihood and adds
/// 2*q*(2N-q). Both return the minimizing q in {0..N-1}.
int mdl(const Eigen::VectorXd& eigenvalues_desc, int snapshot_count);
int aic(const Eigen::VectorXd& eigenvalues_desc, int snapshot_count);

/// Search grid for the MUSIC pseudospectrum, sorted ascending inside the FOV.
struct MusicConfig {
  std::vector<double> search_grid_deg;

  /// Right-open uniform grid: lo, lo+step, ... while < hi.
  static MusicConfig uniform(double lo_deg, double hi_deg, double step_deg);
  /// The FOV segment centers (the "low" resolution of the benchmarks).
  static MusicConfig grid_centers(const FovGrid& grid);
};

/// Search grid plus its precomputed N x G steering matrix, for evaluating
/// many covariances against the same grid without rebuilding it.
struct MusicWorkspace {
  MusicConfig config;
  Eigen::MatrixXcd steering;
};

MusicWorkspace make_music_workspace(const ArrayGeometry& geometry,
                                    const MusicConfig& config);

/// 1 / ||E_n^H a(theta)||^2 over the search grid, where E_n spans the
/// N - q_hat smallest-eigenvalue eigenvectors. q_hat = 0 yields the constant
/// 1/N (every eigenvector counts as noise).
Eigen::VectorXd music_spectrum(const CovarianceEstimate& covariance, int q_hat,
                               const ArrayGeometry& geometry,
                               const MusicConfig& config);
Eigen::VectorXd music_spectrum(const EigenDecomposition& decomposition,
                               int q_hat, const MusicWorkspace& workspace);

/// Arguments of the q_hat tallest pseudospectrum peaks, ascending. When the
/// spectrum has fewer local maxima than q_hat, the remaining slots are filled
/// with the largest leftover spectrum values' arguments.
JointEstimate music_estimate(const CovarianceEstimate& covariance, int q_hat,
                             const ArrayGeometry& geometry,
                             const MusicConfig& config);
JointEstimate music_estimate(const EigenDecomposition& decomposition,
                             int q_hat, const MusicWorkspace& workspace);

}  // namespace aoa
