#include "aoa/network.hpp"

#include <cmath>
#include <numeric>

#include "aoa/rng.hpp"

namespace aoa {

namespace {

constexpr double kProbabilityFloor = 1e-12;

void check_spec(const NetworkSpec& spec) {
  if (spec.hidden_sizes.empty())
    throw std::domain_error("NetworkSpec: need at least one hidden layer");
  if (spec.input_size < 1 || spec.output_size < 1)
    throw std::domain_error("NetworkSpec: sizes must be >= 1");
  for (int h : spec.hidden_sizes)
    if (h < 1) throw std::domain_error("NetworkSpec: sizes must be >= 1");
}

std::vector<int> layer_sizes(const NetworkSpec& spec) {
  std::vector<int> sizes;
  sizes.push_back(spec.input_size);
  sizes.insert(sizes.end(), spec.hidden_sizes.begin(), spec.hidden_sizes.end());
  sizes.push_back(spec.output_size);
  return sizes;
}

void softmax_rows_in_place(Eigen::MatrixXd& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::RowVectorXd row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    logits.row(r) = row / row.sum();
  }
}

/// Forward pass keeping every post-activation (index 0 is the input batch).
std::vector<Eigen::MatrixXd> forward_cached(const Network& net,
                                            const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(net.weights.size() + 1);
  activations.push_back(inputs);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Eigen::MatrixXd z =
        (activations.back() * net.weights[l]).rowwise() +
        net.biases[l].transpose();
    if (l + 1 < net.weights.size())
      z = z.cwiseMax(0.0);  // rectifier
    else
      softmax_rows_in_place(z);
    activations.push_back(std::move(z));
  }
  return activations;
}

/// One cached forward pass serving both the batch loss and its gradients.
std::pair<double, Gradients> loss_and_gradients(
    const Network& net, const Eigen::MatrixXd& inputs,
    const std::vector<int>& target_classes) {
  const std::vector<Eigen::MatrixXd> activations = forward_cached(net, inputs);
  const Eigen::Index batch = inputs.rows();
  const std::size_t layers = net.weights.size();

  double total = 0.0;
  for (Eigen::Index r = 0; r < batch; ++r)
    total += -std::log(
        std::max(activations.back()(r, target_classes[r]), kProbabilityFloor));

  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  // Softmax + cross entropy: output delta is (p - y) / batch.
  Eigen::MatrixXd delta = activations.back();
  for (Eigen::Index r = 0; r < batch; ++r) delta(r, target_classes[r]) -= 1.0;
  delta /= static_cast<double>(batch);

  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = activations[l].transpose() * delta;
    grads.biases[l] = delta.colwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = delta * net.weights[l].transpose();
      // Rectifier gate: activations[l] > 0 iff the preactivation was > 0.
      delta = upstream.cwiseProduct(
          (activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return {total / static_cast<double>(batch), std::move(grads)};
}

}  // namespace

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  const std::vector<int> sizes = layer_sizes(spec);

  Network net;
  net.spec = spec;
  Rng rng = Rng::stream(seed, {stream_tag::kNetworkInit});
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) w(r, c) = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& input) {
  if (input.size() != net.spec.input_size)
    throw std::invalid_argument("forward: input length mismatch");
  return forward_batch(net, input.transpose()).row(0);
}

Eigen::MatrixXd forward_batch(const Network& net,
                              const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != net.spec.input_size)
    throw std::invalid_argument("forward_batch: input width mismatch");
  return forward_cached(net, inputs).back();
}

double cross_entropy(const Eigen::VectorXd& predicted, int target_class) {
  if (target_class < 0 || target_class >= predicted.size())
    throw std::invalid_argument("cross_entropy: target class out of range");
  return -std::log(std::max(predicted(target_class), kProbabilityFloor));
}

double cross_entropy(const Eigen::VectorXd& predicted,
                     const Eigen::VectorXd& one_hot_target) {
  if (predicted.size() != one_hot_target.size())
    throw std::invalid_argument("cross_entropy: length mismatch");
  Eigen::Index target_class = 0;
  one_hot_target.maxCoeff(&target_class);
  return cross_entropy(predicted, static_cast<int>(target_class));
}

double batch_loss(const Network& net, const Eigen::MatrixXd& inputs,
                  const std::vector<int>& target_classes) {
  const Eigen::MatrixXd probabilities = forward_batch(net, inputs);
  double total = 0.0;
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r)
    total += -std::log(
        std::max(probabilities(r, target_classes[r]), kProbabilityFloor));
  return total / static_cast<double>(probabilities.rows());
}

Gradients backprop(const Network& net, const Eigen::MatrixXd& inputs,
                   const std::vector<int>& target_classes) {
  return loss_and_gradients(net, inputs, target_classes).second;
}

AdamState::AdamState(const Network& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weight_m_.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                              net.weights[l].cols()));
    weight_v_.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                              net.weights[l].cols()));
    bias_m_.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    bias_v_.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
}

void AdamState::step(Network& net, const Gradients& grads,
                     const TrainConfig& config) {
  ++step_count_;
  const double m_correction =
      1.0 - std::pow(config.beta1, static_cast<double>(step_count_));
  const double v_correction =
      1.0 - std::pow(config.beta2, static_cast<double>(step_count_));

  auto update = [&](auto& params, auto& m, auto& v, const auto& g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v.array() + (1.0 - config.beta2) * g.array().square();
    params.array() -= config.alpha * (m.array() / m_correction) /
                      ((v.array() / v_correction).sqrt() + config.epsilon);
  };

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    update(net.weights[l], weight_m_[l], weight_v_[l], grads.weights[l]);
    update(net.biases[l], bias_m_[l], bias_v_[l], grads.biases[l]);
  }
}

bool EarlyStopping::observe(double validation_loss) {
  ++epochs_seen_;
  if (validation_loss < best_loss_) {
    best_loss_ = validation_loss;
    best_epoch_ = epochs_seen_;
    stale_epochs_ = 0;
    improved_last_ = true;
  } else {
    ++stale_epochs_;
    improved_last_ = false;
  }
  return stale_epochs_ >= patience_;
}

std::pair<Network, TrainReport> train(Network net,
                                      const Eigen::MatrixXd& train_inputs,
                                      const std::vector<int>& train_targets,
                                      const Eigen::MatrixXd& val_inputs,
                                      const std::vector<int>& val_targets,
                                      const TrainConfig& config) {
  if (train_inputs.rows() == 0 || val_inputs.rows() == 0)
    throw std::domain_error("train: empty split");
  if (train_inputs.rows() != static_cast<Eigen::Index>(train_targets.size()) ||
      val_inputs.rows() != static_cast<Eigen::Index>(val_targets.size()))
    throw std::invalid_argument("train: inputs and targets disagree");

  const int instance_count = static_cast<int>(train_inputs.rows());
  const int batch_size = std::min(config.batch_size, instance_count);

  AdamState adam(net);
  EarlyStopping stopping(config.patience_epochs);
  TrainReport report;
  Network best = net;

  std::vector<int> order(instance_count);
  std::iota(order.begin(), order.end(), 0);

  Eigen::MatrixXd batch_inputs(batch_size, train_inputs.cols());
  std::vector<int> batch_targets(batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(
        config.seed, {stream_tag::kTraining, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    int batch_count = 0;
    for (int start = 0; start + batch_size <= instance_count;
         start += batch_size) {
      for (int b = 0; b < batch_size; ++b) {
        batch_inputs.row(b) = train_inputs.row(order[start + b]);
        batch_targets[b] = train_targets[order[start + b]];
      }
      auto [loss, grads] = loss_and_gradients(net, batch_inputs, batch_targets);
      if (!std::isfinite(loss)) throw TrainingError(epoch, batch_count);
      epoch_loss += loss;
      ++batch_count;
      adam.step(net, grads, config);
    }
    report.train_loss.push_back(epoch_loss / std::max(batch_count, 1));

    const double validation_loss = batch_loss(net, val_inputs, val_targets);
    if (!std::isfinite(validation_loss)) throw TrainingError(epoch, -1);
    report.validation_loss.push_back(validation_loss);
    report.epochs_run = epoch;

    const bool stop = stopping.observe(validation_loss);
    if (stopping.improved_last()) best = net;
    if (stop) {
      report.stop_reason = "validation loss stalled";
      break;
    }
    if (epoch == config.max_epochs) report.stop_reason = "max epochs reached";
  }

  report.best_epoch = stopping.best_epoch();
  return {std::move(best), std::move(report)};
}

}  // namespace aoa
