#pragma once

// Feed-forward ReLU network with a single sigmoid output, trained with
// binary cross-entropy to tell learned post-processing unitaries from Haar
// random ones.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfl/linalg.hpp"
#include "pfl/training.hpp"

namespace pfl {

/// Row-major Re/Im interleaving: out[2(r*dim + c)] = Re u(r, c), then Im.
Eigen::VectorXd flatten_unitary(const ComplexMatrixd& u);
ComplexMatrixd unflatten_unitary(const Eigen::VectorXd& features);

struct MlpConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  std::uint64_t seed = 0;
};

/// First hidden layer twice the input width, second 2^9 wide.
std::vector<int> shape_rule_hidden_dims(int input_dim);

/// Parameters live in one contiguous vector: for each layer, the weight
/// matrix (out x in, column-major) followed by the bias vector.
class Mlp {
 public:
  Mlp() = default;

  /// All-zero network with layer widths dims[0] (input) ... dims.back() == 1.
  explicit Mlp(std::vector<int> dims);

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static Mlp initialized(const MlpConfig& config);

  int layer_count() const noexcept { return static_cast<int>(dims_.size()) - 1; }
  int input_dim() const noexcept { return dims_.empty() ? 0 : dims_.front(); }
  const std::vector<int>& dims() const noexcept { return dims_; }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  Eigen::VectorXd& parameters() noexcept { return params_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }

  bool operator==(const Mlp& other) const {
    return dims_ == other.dims_ && params_ == other.params_;
  }

 private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weights
  Eigen::VectorXd params_;
};

/// Output probability in (0, 1).
double forward(const Mlp& net, const Eigen::VectorXd& x);

/// Column-wise forward pass over a batch (input_dim x batch).
Eigen::VectorXd forward_batch(const Mlp& net, const Eigen::MatrixXd& xs);

inline constexpr double kProbabilityClamp = 1e-12;

/// -[y ln p + (1 - y) ln(1 - p)] with p clamped to [1e-12, 1 - 1e-12].
double bce_loss(double prediction, int label);

/// dL/dp of bce_loss at the clamped prediction.
double bce_derivative(double prediction, int label);

/// Gradient of bce_loss(forward(net, x), label) in Mlp::parameters() layout.
/// At the output, dL/dz = p - y (the sigmoid/BCE composition).
Eigen::VectorXd backprop_gradient(const Mlp& net, const Eigen::VectorXd& x, int label);

struct BatchGradient {
  double mean_loss = 0.0;
  Eigen::VectorXd gradient;  // mean over the batch
};

BatchGradient backprop_batch(const Mlp& net, const Eigen::MatrixXd& xs, std::span<const int> labels);

struct LabeledExample {
  Eigen::VectorXd features;
  int label = 0;
};

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<double> scores;
};

/// A score counts as class 1 only when strictly greater than 0.5.
Evaluation evaluate(const Mlp& net, std::span<const LabeledExample> examples);

struct ClassifierTrainConfig {
  AdamConfig adam{};
  int max_epochs = 50;
  int batch_size = 32;
  int patience = 5;
  std::uint64_t seed = 0;  // batch shuffling
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct ClassifierTrainResult {
  Mlp net;  // snapshot with the best validation loss
  std::vector<EpochMetrics> history;
  int best_epoch = 0;  // 1-based, indexes history[best_epoch - 1]
};

/// Mini-batch ADAM with validation-loss early stopping. With an empty
/// validation set the training loss drives the stopping rule.
ClassifierTrainResult train_classifier(Mlp net, std::span<const LabeledExample> train,
                                       std::span<const LabeledExample> validation,
                                       const ClassifierTrainConfig& config);

}  // namespace pfl
