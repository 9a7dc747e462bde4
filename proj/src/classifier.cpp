#include "pfl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "pfl/errors.hpp"

namespace pfl {

Eigen::VectorXd flatten_unitary(const ComplexMatrixd& u) {
  if (u.rows() != u.cols()) throw DimensionError("flatten_unitary: matrix is not square");
  return to_parameters(u);
}

ComplexMatrixd unflatten_unitary(const Eigen::VectorXd& features) { return from_parameters(features); }

std::vector<int> shape_rule_hidden_dims(int input_dim) { return {2 * input_dim, 512}; }

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
  if (dims_.back() != 1) throw std::invalid_argument("mlp: output layer must have a single unit");
  for (const int d : dims_) {
    if (d < 1) throw std::invalid_argument("mlp: layer widths must be positive");
  }
  Eigen::Index offset = 0;
  for (int l = 0; l < layer_count(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l] + dims_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Mlp Mlp::initialized(const MlpConfig& config) {
  std::vector<int> dims{config.input_dim};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);
  Mlp net(std::move(dims));
  std::mt19937_64 rng(config.seed);
  for (int l = 0; l < net.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (net.dims_[l] + net.dims_[l + 1]));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    auto w = net.weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform(rng);
    }
  }
  return net;
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + offsets_.at(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + offsets_.at(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  const auto start = offsets_.at(layer) + static_cast<Eigen::Index>(dims_[layer + 1]) * dims_[layer];
  return {params_.data() + start, dims_[layer + 1]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  const auto start = offsets_.at(layer) + static_cast<Eigen::Index>(dims_[layer + 1]) * dims_[layer];
  return {params_.data() + start, dims_[layer + 1]};
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Pre-activations and activations of every layer for a batch.
struct Trace {
  std::vector<Eigen::MatrixXd> pre;         // z_l
  std::vector<Eigen::MatrixXd> activation;  // a_{-1} = input, a_l
};

Trace run_forward(const Mlp& net, const Eigen::MatrixXd& xs) {
  if (xs.rows() != net.input_dim()) {
    throw DimensionError("mlp: input has " + std::to_string(xs.rows()) + " features, expected " +
                         std::to_string(net.input_dim()));
  }
  Trace trace;
  trace.activation.push_back(xs);
  for (int l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd z = net.weight(l) * trace.activation.back();
    z.colwise() += net.bias(l);
    Eigen::MatrixXd a = (l + 1 == net.layer_count()) ? z.unaryExpr(&sigmoid).eval() : z.cwiseMax(0.0).eval();
    trace.pre.push_back(std::move(z));
    trace.activation.push_back(std::move(a));
  }
  return trace;
}

// Sum of per-example gradients given dL/dz at the output (1 x batch).
Eigen::VectorXd run_backward(const Mlp& net, const Trace& trace, Eigen::MatrixXd delta) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameters().size());
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    const auto& input = trace.activation[l];
    const auto rows = net.dims()[l + 1];
    const auto cols = net.dims()[l];
    const auto w_offset = net.weight(l).data() - net.parameters().data();
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + w_offset, rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + w_offset + static_cast<Eigen::Index>(rows) * cols, rows);
    gw.noalias() = delta * input.transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = net.weight(l).transpose() * delta;
      delta = upstream.cwiseProduct((trace.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

}  // namespace

double forward(const Mlp& net, const Eigen::VectorXd& x) { return forward_batch(net, x)[0]; }

Eigen::VectorXd forward_batch(const Mlp& net, const Eigen::MatrixXd& xs) {
  return run_forward(net, xs).activation.back().row(0).transpose();
}

double bce_loss(double prediction, int label) {
  const double p = std::clamp(prediction, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_derivative(double prediction, int label) {
  const double p = std::clamp(prediction, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label == 1 ? -1.0 / p : 1.0 / (1.0 - p);
}

Eigen::VectorXd backprop_gradient(const Mlp& net, const Eigen::VectorXd& x, int label) {
  const int labels[] = {label};
  return backprop_batch(net, x, labels).gradient;
}

BatchGradient backprop_batch(const Mlp& net, const Eigen::MatrixXd& xs, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != xs.cols()) {
    throw DimensionError("backprop: label count does not match batch size");
  }
  const auto trace = run_forward(net, xs);
  const auto& out = trace.activation.back();
  const auto batch = xs.cols();
  Eigen::MatrixXd delta(1, batch);
  double total = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    delta(0, b) = out(0, b) - y;
    total += bce_loss(out(0, b), y);
  }
  BatchGradient result;
  result.gradient = run_backward(net, trace, std::move(delta)) / static_cast<double>(batch);
  result.mean_loss = total / static_cast<double>(batch);
  return result;
}

namespace {

Eigen::MatrixXd stack_features(std::span<const LabeledExample> examples, std::span<const std::size_t> order) {
  Eigen::MatrixXd xs(examples.front().features.size(), static_cast<Eigen::Index>(order.size()));
  for (std::size_t k = 0; k < order.size(); ++k) xs.col(static_cast<Eigen::Index>(k)) = examples[order[k]].features;
  return xs;
}

}  // namespace

Evaluation evaluate(const Mlp& net, std::span<const LabeledExample> examples) {
  Evaluation eval;
  if (examples.empty()) return eval;
  constexpr std::size_t kChunk = 256;
  std::size_t correct = 0;
  double total = 0.0;
  std::vector<std::size_t> order;
  for (std::size_t start = 0; start < examples.size(); start += kChunk) {
    const auto stop = std::min(examples.size(), start + kChunk);
    order.resize(stop - start);
    std::iota(order.begin(), order.end(), start);
    const Eigen::VectorXd scores = forward_batch(net, stack_features(examples, order));
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double s = scores[static_cast<Eigen::Index>(k)];
      const int y = examples[order[k]].label;
      eval.scores.push_back(s);
      total += bce_loss(s, y);
      if ((s > 0.5 ? 1 : 0) == y) ++correct;
    }
  }
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  eval.mean_loss = total / static_cast<double>(examples.size());
  return eval;
}

ClassifierTrainResult train_classifier(Mlp net, std::span<const LabeledExample> train,
                                       std::span<const LabeledExample> validation,
                                       const ClassifierTrainConfig& config) {
  if (train.empty()) throw std::invalid_argument("train_classifier: empty training set");
  if (config.batch_size < 1 || config.max_epochs < 1 || config.patience < 1) {
    throw std::invalid_argument("train_classifier: batch size, epochs and patience must be >= 1");
  }
  config.adam.validate();

  const auto count = net.parameters().size();
  Eigen::VectorXd first = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(count);
  std::int64_t t = 0;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> labels;

  ClassifierTrainResult result{net, {}, 0};
  double best = 0.0;
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      labels.clear();
      for (const auto i : batch) labels.push_back(train[i].label);
      const auto step = backprop_batch(net, stack_features(train, batch), labels);
      if (!std::isfinite(step.mean_loss) || !step.gradient.allFinite()) {
        throw DivergenceError("classifier training diverged at epoch " + std::to_string(epoch));
      }
      adam_update(net.parameters(), first, second, t, step.gradient, config.adam);
    }

    const auto on_train = evaluate(net, train);
    const auto on_validation = evaluate(net, validation);
    result.history.push_back({epoch + 1, on_train.mean_loss, on_train.accuracy, on_validation.mean_loss,
                              on_validation.accuracy});
    const double monitored = validation.empty() ? on_train.mean_loss : on_validation.mean_loss;
    if (!std::isfinite(monitored)) throw DivergenceError("classifier loss became non-finite");
    if (result.best_epoch == 0 || monitored < best) {
      best = monitored;
      result.best_epoch = epoch + 1;
      result.net = net;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace pfl
