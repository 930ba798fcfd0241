#include "aoa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace aoa {

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

/// Shared criterion scaffold; `penalty(q)` differs between MDL and AIC.
template <typename Penalty>
int argmin_criterion(const Eigen::VectorXd& eigenvalues_desc,
                     int snapshot_count, double likelihood_factor,
                     Penalty penalty) {
  const int n = static_cast<int>(eigenvalues_desc.size());
  if (n < 1) throw std::domain_error("information criterion: no eigenvalues");
  if (snapshot_count < 1)
    throw std::domain_error("information criterion: need T >= 1");
  for (int i = 0; i < n; ++i)
    if (!(eigenvalues_desc(i) > 0.0))
      throw std::domain_error("information criterion: eigenvalues must be > 0");
  if (!std::is_sorted(eigenvalues_desc.data(), eigenvalues_desc.data() + n,
                      std::greater<double>()))
    throw std::invalid_argument(
        "information criterion: eigenvalues must descend");

  // Suffix sums of values and logs give the arithmetic/geometric means of the
  // n - q smallest eigenvalues in O(n) total.
  Eigen::VectorXd suffix_sum(n + 1), suffix_log(n + 1);
  suffix_sum(n) = suffix_log(n) = 0.0;
  for (int i = n; i-- > 0;) {
    suffix_sum(i) = suffix_sum(i + 1) + eigenvalues_desc(i);
    suffix_log(i) = suffix_log(i + 1) + std::log(eigenvalues_desc(i));
  }

  int best_q = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int q = 0; q < n; ++q) {
    const int tail = n - q;
    const double arithmetic = suffix_sum(q) / tail;
    const double log_geometric = suffix_log(q) / tail;
    const double log_ratio = std::log(arithmetic) - log_geometric;  // >= 0
    const double value = likelihood_factor * snapshot_count * tail * log_ratio +
                         penalty(q);
    if (value < best_value) {
      best_value = value;
      best_q = q;
    }
  }
  return best_q;
}

}  // namespace

EigenDecomposition hermitian_eig(const Eigen::MatrixXcd& matrix) {
  const int n = static_cast<int>(matrix.rows());
  if (matrix.cols() != n)
    throw std::invalid_argument("hermitian_eig: matrix must be square");
  const double scale = std::max(1.0, max_abs(matrix));
  if (max_abs(matrix - matrix.adjoint()) > 1e-12 * scale)
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eig: eigensolver failed");

  // Eigen returns ascending order; the criteria and MUSIC want descending.
  EigenDecomposition decomposition;
  decomposition.eigenvalues = solver.eigenvalues().reverse();
  decomposition.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return decomposition;
}

int mdl(const Eigen::VectorXd& eigenvalues_desc, int snapshot_count) {
  const double log_t = std::log(static_cast<double>(snapshot_count));
  const int n = static_cast<int>(eigenvalues_desc.size());
  return argmin_criterion(eigenvalues_desc, snapshot_count, 1.0,
                          [n, log_t](int q) {
                            return 0.5 * q * (2.0 * n - q) * log_t;
                          });
}

int aic(const Eigen::VectorXd& eigenvalues_desc, int snapshot_count) {
  const int n = static_cast<int>(eigenvalues_desc.size());
  return argmin_criterion(eigenvalues_desc, snapshot_count, 2.0,
                          [n](int q) { return 2.0 * q * (2.0 * n - q); });
}

MusicConfig MusicConfig::uniform(double lo_deg, double hi_deg,
                                 double step_deg) {
  if (!(step_deg > 0.0) || !(hi_deg > lo_deg))
    throw std::domain_error("MusicConfig: invalid grid parameters");
  MusicConfig config;
  const int count = static_cast<int>(std::ceil((hi_deg - lo_deg) / step_deg -
                                               1e-9));
  for (int i = 0; i < count; ++i)
    config.search_grid_deg.push_back(lo_deg + i * step_deg);
  return config;
}

MusicConfig MusicConfig::grid_centers(const FovGrid& grid) {
  MusicConfig config;
  for (int i = 0; i < grid.segment_count; ++i)
    config.search_grid_deg.push_back(grid.center_deg(i));
  return config;
}

MusicWorkspace make_music_workspace(const ArrayGeometry& geometry,
                                    const MusicConfig& config) {
  MusicWorkspace workspace;
  workspace.config = config;
  workspace.steering = steering_matrix(geometry, config.search_grid_deg);
  return workspace;
}

Eigen::VectorXd music_spectrum(const EigenDecomposition& decomposition,
                               int q_hat, const MusicWorkspace& workspace) {
  const int n = static_cast<int>(decomposition.eigenvectors.rows());
  if (q_hat < 0 || q_hat >= n)
    throw std::domain_error("music_spectrum: need 0 <= q_hat < N");

  const Eigen::MatrixXcd noise_subspace =
      decomposition.eigenvectors.rightCols(n - q_hat);
  const Eigen::VectorXd denominators = (noise_subspace.adjoint() *
                                        workspace.steering)
                                           .colwise()
                                           .squaredNorm()
                                           .transpose();
  return denominators.cwiseMax(1e-300).cwiseInverse();
}

Eigen::VectorXd music_spectrum(const CovarianceEstimate& covariance, int q_hat,
                               const ArrayGeometry& geometry,
                               const MusicConfig& config) {
  return music_spectrum(hermitian_eig(covariance.matrix), q_hat,
                        make_music_workspace(geometry, config));
}

JointEstimate music_estimate(const CovarianceEstimate& covariance, int q_hat,
                             const ArrayGeometry& geometry,
                             const MusicConfig& config) {
  return music_estimate(hermitian_eig(covariance.matrix), q_hat,
                        make_music_workspace(geometry, config));
}

JointEstimate music_estimate(const EigenDecomposition& decomposition, int q_hat,
                             const MusicWorkspace& workspace) {
  const MusicConfig& config = workspace.config;
  JointEstimate estimate;
  estimate.q_hat = q_hat;
  if (q_hat == 0) return estimate;

  const Eigen::VectorXd spectrum =
      music_spectrum(decomposition, q_hat, workspace);
  const int grid_size = static_cast<int>(spectrum.size());

  // Maximal equal runs strictly above both neighbours, one-sided at edges;
  // same rule as the framework's peak decode so the comparison is fair.
  struct Peak {
    double height;
    double angle;
  };
  std::vector<Peak> peaks;
  std::vector<bool> in_peak(grid_size, false);
  int i = 0;
  while (i < grid_size) {
    int j = i;
    while (j + 1 < grid_size && spectrum(j + 1) == spectrum(i)) ++j;
    const bool left_ok = (i == 0) || (spectrum(i - 1) < spectrum(i));
    const bool right_ok = (j == grid_size - 1) || (spectrum(j + 1) < spectrum(i));
    if (left_ok && right_ok) {
      const double angle = 0.5 * (config.search_grid_deg[i] +
                                  config.search_grid_deg[j]);
      peaks.push_back({spectrum(i), angle});
      for (int s = i; s <= j; ++s) in_peak[s] = true;
    }
    i = j + 1;
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) {
                     return a.height > b.height;
                   });

  for (int p = 0; p < q_hat && p < static_cast<int>(peaks.size()); ++p)
    estimate.aoas_deg.push_back(peaks[p].angle);

  // Too few local maxima: fall back to the tallest remaining grid values.
  if (static_cast<int>(estimate.aoas_deg.size()) < q_hat) {
    std::vector<int> order;
    for (int g = 0; g < grid_size; ++g)
      if (!in_peak[g]) order.push_back(g);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return spectrum(a) > spectrum(b);
    });
    for (int g : order) {
      if (static_cast<int>(estimate.aoas_deg.size()) >= q_hat) break;
      estimate.aoas_deg.push_back(config.search_grid_deg[g]);
    }
  }

  std::sort(estimate.aoas_deg.begin(), estimate.aoas_deg.end());
  return estimate;
}

}  // namespace aoa
