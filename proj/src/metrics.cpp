#include "aoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aoa {

namespace {

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

std::optional<double> rmse(const std::vector<InstanceOutcome>& outcomes) {
  long qualified = 0;
  double total = 0.0;
  for (const InstanceOutcome& outcome : outcomes) {
    if (outcome.q_hat != outcome.q_true) continue;
    ++qualified;
    if (outcome.q_true == 0) continue;  // vacuously perfect
    const std::vector<double> truth = sorted(outcome.aoas_true);
    const std::vector<double> estimate = sorted(outcome.aoas_hat);
    double instance_sum = 0.0;
    for (std::size_t q = 0; q < truth.size(); ++q) {
      const double error = truth[q] - estimate[q];
      instance_sum += error * error;
    }
    total += instance_sum / static_cast<double>(outcome.q_true);
  }
  if (qualified == 0) return std::nullopt;
  return std::sqrt(total / static_cast<double>(qualified));
}

double p_q_correct(const std::vector<InstanceOutcome>& outcomes) {
  if (outcomes.empty()) throw std::domain_error("p_q_correct: no outcomes");
  long correct = 0;
  for (const InstanceOutcome& outcome : outcomes)
    if (outcome.q_hat == outcome.q_true) ++correct;
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(outcomes.size());
}

double success_rate(const std::vector<InstanceOutcome>& outcomes,
                    double theta_tilde_deg) {
  if (theta_tilde_deg < 0.0)
    throw std::domain_error("success_rate: theta_tilde must be >= 0");
  if (outcomes.empty()) throw std::domain_error("success_rate: no outcomes");

  long successes = 0;
  for (const InstanceOutcome& outcome : outcomes) {
    if (outcome.q_hat != outcome.q_true) continue;
    const std::vector<double> truth = sorted(outcome.aoas_true);
    const std::vector<double> estimate = sorted(outcome.aoas_hat);
    bool ok = true;
    for (std::size_t q = 0; q < truth.size() && ok; ++q)
      ok = std::abs(estimate[q] - truth[q]) <= theta_tilde_deg;
    if (ok) ++successes;
  }
  return 100.0 * static_cast<double>(successes) /
         static_cast<double>(outcomes.size());
}

ExpectedSuccess expected_success_rate(double theta_tilde_deg,
                                      double delta_theta_deg, int source_count,
                                      int segment_count) {
  if (source_count < 1)
    throw std::domain_error("expected_success_rate: need Q >= 1");
  if (theta_tilde_deg < 0.0 || !(delta_theta_deg > 0.0))
    throw std::domain_error("expected_success_rate: bad angles");

  if (segment_count < 2 * source_count - 1) return {false, 0.0};

  // C(M+1-Q, Q) * Q! / M^Q = prod_{i=0}^{Q-1} (M+1-Q-i) / M.
  double max_rate = 1.0;
  for (int i = 0; i < source_count; ++i)
    max_rate *= static_cast<double>(segment_count + 1 - source_count - i) /
                static_cast<double>(segment_count);

  double rate = max_rate;
  const double half_segment = delta_theta_deg / 2.0;
  if (theta_tilde_deg < half_segment)
    rate *= std::pow(theta_tilde_deg / half_segment, source_count);
  return {true, 100.0 * rate};
}

ExpectedSuccess expected_success_rate(double theta_tilde_deg,
                                      double delta_theta_deg,
                                      const std::vector<double>& q_weights,
                                      int segment_count) {
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < q_weights.size(); ++i) {
    if (q_weights[i] == 0.0) continue;
    const ExpectedSuccess per_q = expected_success_rate(
        theta_tilde_deg, delta_theta_deg, static_cast<int>(i) + 1,
        segment_count);
    if (!per_q.defined) return {false, 0.0};
    weighted += q_weights[i] * per_q.percent;
    weight_sum += q_weights[i];
  }
  if (weight_sum == 0.0) return {false, 0.0};
  return {true, weighted / weight_sum};
}

double F1Entry::f1() const {
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

F1Accumulator::F1Accumulator(const Framework& framework) {
  table_.resize(framework.classifier_count());
  for (int j = 0; j < framework.classifier_count(); ++j)
    table_[j].resize(framework.subsets(j).subset_count());
}

void F1Accumulator::add(int classifier, const Eigen::VectorXd& prediction,
                        int target_class) {
  int argmax = 0;
  for (int e = 1; e < prediction.size(); ++e)
    if (prediction(e) > prediction(argmax)) argmax = e;  // ties keep lowest
  add_argmax(classifier, argmax, target_class);
}

void F1Accumulator::add_argmax(int classifier, int predicted_class,
                               int target_class) {
  auto& row = table_.at(classifier);
  if (predicted_class == target_class) {
    ++row.at(predicted_class).tp;
  } else {
    ++row.at(predicted_class).fp;
    ++row.at(target_class).fn;
  }
}

void F1Accumulator::merge(const F1Accumulator& other) {
  for (std::size_t j = 0; j < table_.size(); ++j)
    for (std::size_t e = 0; e < table_[j].size(); ++e) {
      table_[j][e].tp += other.table_[j][e].tp;
      table_[j][e].fp += other.table_[j][e].fp;
      table_[j][e].fn += other.table_[j][e].fn;
    }
}

F1Table f1_scores(const std::vector<std::vector<Eigen::VectorXd>>& predictions,
                  const std::vector<std::vector<int>>& target_classes,
                  const Framework& framework) {
  if (predictions.size() != target_classes.size())
    throw std::invalid_argument("f1_scores: misaligned inputs");
  F1Accumulator accumulator(framework);
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (predictions[j].size() != target_classes[j].size())
      throw std::invalid_argument("f1_scores: misaligned instances");
    for (std::size_t i = 0; i < predictions[j].size(); ++i)
      accumulator.add(static_cast<int>(j), predictions[j][i],
                      target_classes[j][i]);
  }
  return accumulator.table();
}

std::optional<double> averaged_f1(const F1Table& table,
                                  const Framework& framework,
                                  int cardinality) {
  if (cardinality < 0 || cardinality > framework.labelset_size)
    throw std::domain_error("averaged_f1: cardinality outside 0..k");

  double outer_sum = 0.0;
  int outer_count = 0;
  for (int j = 0; j < framework.classifier_count(); ++j) {
    const SubsetIndex& index = framework.subsets(j);
    double inner_sum = 0.0;
    int inner_count = 0;
    for (int e = 0; e < index.subset_count(); ++e) {
      if (index.cardinality(e) != cardinality) continue;
      if (!table[j][e].valid()) continue;
      inner_sum += table[j][e].f1();
      ++inner_count;
    }
    if (inner_count == 0) continue;  // no valid cell at this cardinality
    outer_sum += inner_sum / inner_count;
    ++outer_count;
  }
  if (outer_count == 0) return std::nullopt;
  return outer_sum / outer_count;
}

}  // namespace aoa
