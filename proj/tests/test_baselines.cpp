#include <doctest.h>

#include <cmath>
#include <complex>

#include "aoa/baselines.hpp"
#include "aoa/rng.hpp"

using namespace aoa;

namespace {

const ArrayGeometry kUla8{8, 0.5};

Eigen::MatrixXcd random_hermitian(int n, Rng& rng) {
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = rng.uniform(-2.0, 2.0);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("eigendecomposition of a scaled identity") {
  const Eigen::MatrixXcd r = 0.3 * Eigen::MatrixXcd::Identity(5, 5);
  const EigenDecomposition decomposition = hermitian_eig(r);
  for (int i = 0; i < 5; ++i)
    CHECK(decomposition.eigenvalues(i) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("eigendecomposition of the classic two-by-two") {
  Eigen::MatrixXcd r(2, 2);
  r << 2.0, 1.0, 1.0, 2.0;
  const EigenDecomposition decomposition = hermitian_eig(r);
  CHECK(decomposition.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(decomposition.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-source covariance has exactly six noise eigenvalues") {
  const SourceScene scene = SourceScene::from_snr({-20.0, 40.0}, 0.0);
  const EigenDecomposition decomposition =
      hermitian_eig(exact_covariance(kUla8, scene));
  for (int i = 0; i < 8; ++i) {
    if (i < 2)
      CHECK(decomposition.eigenvalues(i) > scene.noise_variance + 1e-6);
    else
      CHECK(std::abs(decomposition.eigenvalues(i) - scene.noise_variance) <
            1e-8);
  }
}

TEST_CASE("eigendecomposition reconstructs and stays orthonormal") {
  Rng rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const Eigen::MatrixXcd r = random_hermitian(n, rng);
    const EigenDecomposition decomposition = hermitian_eig(r);

    const Eigen::MatrixXcd reconstructed =
        decomposition.eigenvectors *
        decomposition.eigenvalues.asDiagonal().toDenseMatrix().cast<std::complex<double>>() *
        decomposition.eigenvectors.adjoint();
    CHECK((reconstructed - r).norm() <= 1e-8 * std::max(1.0, r.norm()));

    const Eigen::MatrixXcd gram =
        decomposition.eigenvectors.adjoint() * decomposition.eigenvectors;
    CHECK((gram - Eigen::MatrixXcd::Identity(n, n)).norm() <= 1e-8);

    for (int i = 1; i < n; ++i)
      CHECK(decomposition.eigenvalues(i - 1) >= decomposition.eigenvalues(i));
  }
}

TEST_CASE("non-Hermitian input is a contract error") {
  Eigen::MatrixXcd r(2, 2);
  r << 1.0, std::complex<double>(0.0, 1.0), std::complex<double>(0.0, 1.0), 1.0;
  CHECK_THROWS_AS(hermitian_eig(r), std::invalid_argument);
}

TEST_CASE("equal eigenvalues select zero sources") {
  const Eigen::VectorXd eigenvalues = Eigen::VectorXd::Constant(8, 0.7);
  CHECK(mdl(eigenvalues, 100) == 0);
  CHECK(aic(eigenvalues, 100) == 0);
}

TEST_CASE("exact two-source eigenvalues select two sources") {
  const SourceScene scene = SourceScene::from_snr({-20.0, 40.0}, 10.0);
  const EigenDecomposition decomposition =
      hermitian_eig(exact_covariance(kUla8, scene));
  CHECK(mdl(decomposition.eigenvalues, 10000) == 2);
  CHECK(aic(decomposition.eigenvalues, 10000) == 2);
}

TEST_CASE("the criteria are scale invariant") {
  Rng rng(67);
  const SourceScene scene = SourceScene::from_snr({-35.0, 10.0, 44.0}, 5.0);
  Eigen::VectorXd eigenvalues =
      hermitian_eig(exact_covariance(kUla8, scene)).eigenvalues;
  const int mdl_base = mdl(eigenvalues, 500);
  const int aic_base = aic(eigenvalues, 500);
  for (double scale : {1e-6, 0.35, 7.0, 1e9}) {
    CHECK(mdl(scale * eigenvalues, 500) == mdl_base);
    CHECK(aic(scale * eigenvalues, 500) == aic_base);
  }
}

TEST_CASE("non-positive eigenvalues are rejected") {
  Eigen::VectorXd eigenvalues(3);
  eigenvalues << 2.0, 1.0, 0.0;
  CHECK_THROWS_AS(mdl(eigenvalues, 10), std::domain_error);
  CHECK_THROWS_AS(aic(eigenvalues, 10), std::domain_error);
}

TEST_CASE("music pseudospectrum peaks exactly at an on-grid source") {
  const FovGrid grid = build_grid(-60.0, 60.0, 60);
  const MusicConfig config = MusicConfig::grid_centers(grid);
  const double truth = grid.center_deg(40);  // 21 degrees
  const SourceScene scene = SourceScene::from_snr({truth}, 10.0);
  const CovarianceEstimate covariance{exact_covariance(kUla8, scene), 1};

  const Eigen::VectorXd spectrum =
      music_spectrum(covariance, 1, kUla8, config);
  Eigen::Index argmax = 0;
  spectrum.maxCoeff(&argmax);
  CHECK(config.search_grid_deg[argmax] == truth);
}

TEST_CASE("music with no signal subspace is flat at one over N") {
  const SourceScene scene = SourceScene::from_snr({}, 0.0);
  const CovarianceEstimate covariance{exact_covariance(kUla8, scene), 1};
  const Eigen::VectorXd spectrum = music_spectrum(
      covariance, 0, kUla8, MusicConfig::uniform(-60.0, 60.0, 1.0));
  for (Eigen::Index g = 0; g < spectrum.size(); ++g)
    CHECK(spectrum(g) == doctest::Approx(1.0 / 8.0).epsilon(1e-9));
}

TEST_CASE("music rejects an out-of-range source order") {
  const SourceScene scene = SourceScene::from_snr({0.0}, 0.0);
  const CovarianceEstimate covariance{exact_covariance(kUla8, scene), 1};
  const MusicConfig config = MusicConfig::uniform(-60.0, 60.0, 1.0);
  CHECK_THROWS_AS(music_spectrum(covariance, 8, kUla8, config),
                  std::domain_error);
  CHECK_THROWS_AS(music_spectrum(covariance, -1, kUla8, config),
                  std::domain_error);
}

TEST_CASE("music estimates two well-separated sources on the fine grid") {
  const SourceScene scene = SourceScene::from_snr({-20.0, 40.0}, 10.0);
  const CovarianceEstimate covariance{exact_covariance(kUla8, scene), 1};
  const JointEstimate estimate = music_estimate(
      covariance, 2, kUla8, MusicConfig::uniform(-60.0, 60.0, 0.1));
  REQUIRE(estimate.q_hat == 2);
  CHECK(std::abs(estimate.aoas_deg[0] - (-20.0)) <= 0.05 + 1e-9);
  CHECK(std::abs(estimate.aoas_deg[1] - 40.0) <= 0.05 + 1e-9);
}

TEST_CASE("music with order zero returns no estimates") {
  const SourceScene scene = SourceScene::from_snr({5.0}, 0.0);
  const CovarianceEstimate covariance{exact_covariance(kUla8, scene), 1};
  const JointEstimate estimate = music_estimate(
      covariance, 0, kUla8, MusicConfig::uniform(-60.0, 60.0, 1.0));
  CHECK(estimate.q_hat == 0);
  CHECK(estimate.aoas_deg.empty());
}

TEST_CASE("music spectrum ignores eigenvector phases") {
  // A sample covariance keeps the nulls finite, so the spectra can be
  // compared in relative terms without dividing by roundoff.
  const SourceScene scene = SourceScene::from_snr({-8.0, 33.0}, 5.0);
  Rng data_rng = Rng::stream(71, {1});
  EigenDecomposition decomposition = hermitian_eig(
      sample_covariance(synthesize_snapshots(kUla8, scene, 200, data_rng))
          .matrix);
  const MusicWorkspace workspace =
      make_music_workspace(kUla8, MusicConfig::uniform(-60.0, 60.0, 0.5));

  const Eigen::VectorXd reference = music_spectrum(decomposition, 2, workspace);
  Rng rng(71);
  for (int col = 0; col < 8; ++col)
    decomposition.eigenvectors.col(col) *=
        std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
  const Eigen::VectorXd rotated = music_spectrum(decomposition, 2, workspace);
  const double worst =
      ((reference - rotated).cwiseAbs().cwiseQuotient(reference.cwiseAbs()))
          .maxCoeff();
  CHECK(worst < 1e-9);
}

TEST_CASE("music pads when a close pair merges into one peak") {
  // Sample covariance of a closely spaced pair: the spectrum often shows a
  // single merged peak, so the second requested estimate lands far away.
  const SourceScene scene = SourceScene::from_snr({0.0, 1.0}, 10.0);
  const MusicConfig config = MusicConfig::uniform(-60.0, 60.0, 0.1);

  bool saw_large_error = false;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng = Rng::stream(90 + seed, {});
    const SnapshotBatch batch = synthesize_snapshots(kUla8, scene, 100, rng);
    const JointEstimate estimate =
        music_estimate(sample_covariance(batch), 2, kUla8, config);
    REQUIRE(estimate.q_hat == 2);
    REQUIRE(estimate.aoas_deg.size() == 2);
    const double worst = std::max(std::abs(estimate.aoas_deg[0] - 0.0),
                                  std::abs(estimate.aoas_deg[1] - 1.0));
    saw_large_error |= worst > 5.0;
  }
  CHECK(saw_large_error);
}
