#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "aoa/fov.hpp"

namespace aoa {

/// Truth and estimate for one evaluated instance. AOA lists need not arrive
/// sorted; every metric sorts both ascending before pairing them up.
struct InstanceOutcome {
  int q_true = 0;
  std::vector<double> aoas_true;
  int q_hat = 0;
  std::vector<double> aoas_hat;
};

/// RMSE in degrees over the instances with a correct source count estimate,
/// averaging squared errors within each instance first. Empty optional when
/// no instance qualifies.
std::optional<double> rmse(const std::vector<InstanceOutcome>& outcomes);

/// Percentage of instances with q_hat == q_true. Throws on empty input.
double p_q_correct(const std::vector<InstanceOutcome>& outcomes);

/// Joint success percentage: correct source count and every sorted pairwise
/// AOA error at most theta_tilde degrees.
double success_rate(const std::vector<InstanceOutcome>& outcomes,
                    double theta_tilde_deg);

struct ExpectedSuccess {
  bool defined = false;
  double percent = 0.0;
};

/// Closed-form success rate of an ideal-classifier framework for Q uniform
/// AOAs on an M-segment grid: C(M+1-Q, Q) * Q! / M^Q, scaled by
/// (theta_tilde / (delta_theta/2))^Q when theta_tilde < delta_theta/2.
/// Undefined (0, flagged) when M < 2Q - 1.
ExpectedSuccess expected_success_rate(double theta_tilde_deg,
                                      double delta_theta_deg, int source_count,
                                      int segment_count);

/// Weighted average over source counts 1..weights.size(); weights need not be
/// normalized. Used for variable-source-number scenarios.
ExpectedSuccess expected_success_rate(double theta_tilde_deg,
                                      double delta_theta_deg,
                                      const std::vector<double>& q_weights,
                                      int segment_count);

/// One F1 cell: counts plus the score, invalid (excluded) while tp == 0.
struct F1Entry {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  bool valid() const { return tp > 0; }
  double f1() const;
};

/// tp/fp/fn counts per (classifier, subset label), filled by booleanizing
/// each prediction via argmax (ties to the lowest index).
class F1Accumulator {
 public:
  explicit F1Accumulator(const Framework& framework);

  void add(int classifier, const Eigen::VectorXd& prediction, int target_class);
  void add_argmax(int classifier, int predicted_class, int target_class);
  void merge(const F1Accumulator& other);

  const std::vector<std::vector<F1Entry>>& table() const { return table_; }

 private:
  std::vector<std::vector<F1Entry>> table_;
};

using F1Table = std::vector<std::vector<F1Entry>>;

/// Convenience wrapper: predictions[j][i] and target_classes[j][i] aligned per
/// classifier j and instance i.
F1Table f1_scores(const std::vector<std::vector<Eigen::VectorXd>>& predictions,
                  const std::vector<std::vector<int>>& target_classes,
                  const Framework& framework);

/// Mean F1 over subsets of the given cardinality, averaged per classifier and
/// then across classifiers; invalid cells and empty classifiers are skipped.
std::optional<double> averaged_f1(const F1Table& table,
                                  const Framework& framework, int cardinality);

}  // namespace aoa
