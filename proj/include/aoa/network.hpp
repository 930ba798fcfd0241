#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoa {

/// Fully-connected architecture: rectifier hidden layers, softmax output.
struct NetworkSpec {
  int input_size = 0;
  std::vector<int> hidden_sizes;
  int output_size = 0;

  int layer_count() const { return static_cast<int>(hidden_sizes.size()) + 1; }
};

/// Layer weights stored input-major: weights[l] is (fan_in x fan_out), so a
/// batch of row vectors propagates as X * W + b^T.
struct Network {
  NetworkSpec spec;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct TrainConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int patience_epochs = 3;
  int max_epochs = 200;
  std::uint64_t seed = 0;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based epoch whose weights were returned
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::string stop_reason;
};

/// Raised when a training pass produces a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(int epoch, int batch)
      : std::runtime_error("training diverged at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

/// Gradients with the same shapes as the network parameters.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Glorot-uniform weights, zero biases; deterministic given the seed.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

/// Softmax class probabilities for one input (max-subtracted, so arbitrary
/// finite logits cannot overflow).
Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& input);

/// Batched forward pass; rows are instances.
Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& inputs);

/// Categorical cross entropy -log(p[target]), probability floored at 1e-12.
double cross_entropy(const Eigen::VectorXd& predicted, int target_class);
double cross_entropy(const Eigen::VectorXd& predicted,
                     const Eigen::VectorXd& one_hot_target);

/// Mean cross entropy of a batch.
double batch_loss(const Network& net, const Eigen::MatrixXd& inputs,
                  const std::vector<int>& target_classes);

/// Mean-loss gradients for a batch (softmax + cross-entropy backprop).
Gradients backprop(const Network& net, const Eigen::MatrixXd& inputs,
                   const std::vector<int>& target_classes);

/// Adam with bias-corrected first and second moments.
class AdamState {
 public:
  explicit AdamState(const Network& net);
  void step(Network& net, const Gradients& grads, const TrainConfig& config);

 private:
  std::vector<Eigen::MatrixXd> weight_m_, weight_v_;
  std::vector<Eigen::VectorXd> bias_m_, bias_v_;
  long step_count_ = 0;
};

/// Stop once `patience` consecutive epochs fail to improve on the best
/// validation loss seen so far; remembers which epoch was best.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Feed one epoch's validation loss; returns true when training should stop.
  bool observe(double validation_loss);
  bool improved_last() const { return improved_last_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  int epochs_seen_ = 0;
  int best_epoch_ = 0;
  int stale_epochs_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  bool improved_last_ = false;
};

/// Mini-batch Adam training with per-epoch seeded shuffling and validation
/// based early stopping; returns the weights of the best-validation epoch.
std::pair<Network, TrainReport> train(Network net,
                                      const Eigen::MatrixXd& train_inputs,
                                      const std::vector<int>& train_targets,
                                      const Eigen::MatrixXd& val_inputs,
                                      const std::vector<int>& val_targets,
                                      const TrainConfig& config);

}  // namespace aoa
