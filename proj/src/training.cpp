#include "pfl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "pfl/errors.hpp"

namespace pfl {

std::string_view to_string(TargetKind kind) noexcept {
  switch (kind) {
    case TargetKind::QftReference: return "qft";
    case TargetKind::SinglePeak: return "single-peak";
    case TargetKind::Step: return "step";
    case TargetKind::Gaussian: return "gaussian";
  }
  return "unknown";
}

TargetKind parse_target_kind(std::string_view name) {
  if (name == "qft" || name == "qft-reference") return TargetKind::QftReference;
  if (name == "single-peak") return TargetKind::SinglePeak;
  if (name == "step") return TargetKind::Step;
  if (name == "gaussian") return TargetKind::Gaussian;
  throw std::invalid_argument("unknown target kind '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("loss config: k must be > 0");
  if (target == TargetKind::Gaussian && !(gaussian_sigma > 0.0)) {
    throw std::invalid_argument("loss config: gaussian_sigma must be > 0");
  }
}

void AdamConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("adam: alpha must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("adam: beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam: beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam: epsilon must be > 0");
}

Eigen::VectorXd to_parameters(const ComplexMatrixd& m3) {
  const auto rows = m3.rows();
  const auto cols = m3.cols();
  Eigen::VectorXd w(2 * rows * cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto k = 2 * (r * cols + c);
      w[k] = m3(r, c).real();
      w[k + 1] = m3(r, c).imag();
    }
  }
  return w;
}

ComplexMatrixd from_parameters(const Eigen::VectorXd& w) {
  const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(w.size()) / 2.0)));
  if (2 * dim * dim != w.size()) {
    throw DimensionError("from_parameters: " + std::to_string(w.size()) +
                         " values do not form a square complex matrix");
  }
  ComplexMatrixd m3(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto k = 2 * (r * dim + c);
      m3(r, c) = {w[k], w[k + 1]};
    }
  }
  return m3;
}

Distribution target_distribution(TargetKind kind, const PeriodicFunction& f, double gaussian_sigma) {
  f.validate();
  const auto size = f.domain_size();
  const auto r = static_cast<std::int64_t>(f.period);
  Distribution p = Distribution::Zero(size);
  switch (kind) {
    case TargetKind::QftReference:
      return reference_distribution(f);
    case TargetKind::SinglePeak:
      if (r >= size) throw std::invalid_argument("single-peak target needs r < 2^n");
      p[r] = 1.0;
      return p;
    case TargetKind::Step:
      if (r >= size) throw std::invalid_argument("step target needs r < 2^n");
      p.tail(size - r).setConstant(1.0 / static_cast<double>(size - r));
      return p;
    case TargetKind::Gaussian: {
      if (!(gaussian_sigma > 0.0)) throw std::invalid_argument("gaussian target needs sigma > 0");
      for (std::int64_t i = 0; i < size; ++i) {
        const double z = static_cast<double>(i - r) / gaussian_sigma;
        p[i] = std::exp(-0.5 * z * z);
      }
      const double total = p.sum();
      if (!(total > 0.0)) throw std::invalid_argument("gaussian target underflows on the domain");
      return p / total;
    }
  }
  throw std::invalid_argument("unknown target kind");
}

void TrainingDataset::validate() const {
  if (samples.empty()) throw std::invalid_argument("training dataset is empty");
  for (const auto& s : samples) {
    s.function.validate();
    if (s.function.n != n() || s.function.m != m()) {
      throw std::invalid_argument("training dataset mixes register widths");
    }
    if (s.target.size() != s.function.domain_size()) {
      throw DimensionError("training dataset: target length does not match 2^n");
    }
  }
}

TrainingDataset make_dataset(int n, int m, int size, const LossConfig& loss_cfg,
                             std::uint64_t seed, int max_period) {
  if (size < 1) throw std::invalid_argument("make_dataset: size must be >= 1");
  if (n < 1 || m < 1) throw std::invalid_argument("make_dataset: n, m must be >= 1");
  if (max_period == 0) max_period = static_cast<int>(std::max<std::int64_t>(1, register_dim(n) / 2));
  if (max_period < 1 || max_period > register_dim(n) || max_period > register_dim(m)) {
    throw std::invalid_argument("make_dataset: max_period out of range");
  }
  std::mt19937_64 rng(seed);
  std::vector<int> deck;
  TrainingDataset dataset;
  for (int s = 0; s < size; ++s) {
    if (deck.empty()) {
      deck.resize(static_cast<std::size_t>(max_period));
      std::iota(deck.begin(), deck.end(), 1);
      std::shuffle(deck.begin(), deck.end(), rng);
    }
    const int period = deck.back();
    deck.pop_back();
    auto f = generate_periodic_function(n, m, period, rng());
    auto target = target_distribution(loss_cfg.target, f, loss_cfg.gaussian_sigma);
    dataset.samples.push_back({std::move(f), std::move(target)});
  }
  return dataset;
}

namespace {

// Loss evaluation specialised to the oracle image: after the oracle the
// X amplitudes conditioned on each F value are a scaled indicator of one
// coset {i : f(i) = v}, so M3 applied to it is a scaled sum of M3 columns.
class SampleObjective {
 public:
  SampleObjective(const PeriodicFunction& f, const Distribution& target, Eigen::Index dim)
      : target_(target), system_dim_(f.domain_size()), dim_(dim) {
    if (target.size() != system_dim_) {
      throw DimensionError("loss: target distribution length does not match 2^n");
    }
    if (!is_power_of_two(dim) || dim < system_dim_) {
      throw DimensionError("loss: M3 dimension " + std::to_string(dim) +
                           " cannot act on an n = " + std::to_string(f.n) + " register");
    }
    ancilla_ = qubits_for_dim(dim) - f.n;
    std::vector<std::uint32_t> values(f.table.begin(), f.table.begin() + f.period);
    class_of_.resize(f.table.size());
    for (std::size_t i = 0; i < f.table.size(); ++i) {
      class_of_[i] = static_cast<Eigen::Index>(
          std::find(values.begin(), values.end(), f.table[i]) - values.begin());
    }
    classes_ = f.period;
  }

  LossAndGradient evaluate(const ComplexMatrixd& m3, double k, bool with_gradient) const {
    if (m3.rows() != dim_ || m3.cols() != dim_) throw DimensionError("loss: M3 has the wrong shape");
    const double scale = 1.0 / std::sqrt(static_cast<double>(system_dim_));
    const double n_sys = static_cast<double>(system_dim_);
    const double n_dim = static_cast<double>(dim_);

    ComplexMatrixd psi = ComplexMatrixd::Zero(dim_, classes_);
    for (Eigen::Index i = 0; i < system_dim_; ++i) psi.col(class_of_[i]) += m3.col(i << ancilla_);
    psi *= scale;

    const Eigen::VectorXd per_x = psi.cwiseAbs2().rowwise().sum();
    Distribution actual = Distribution::Zero(system_dim_);
    for (Eigen::Index x = 0; x < dim_; ++x) actual[x >> ancilla_] += per_x[x];
    const Eigen::VectorXd diff = actual - target_;

    ComplexMatrixd defect = m3.adjoint() * m3;
    defect.diagonal().array() -= 1.0;

    LossAndGradient out;
    out.loss = diff.squaredNorm() / n_sys + k * defect.squaredNorm() / (n_dim * n_dim);
    if (!with_gradient) return out;

    // Real gradient packed as G = dL/dRe + i dL/dIm = 2 dL/d conj(M3).
    ComplexMatrixd grad = (4.0 * k / (n_dim * n_dim)) * (m3 * defect);
    Eigen::VectorXd diff_x(dim_);
    for (Eigen::Index x = 0; x < dim_; ++x) diff_x[x] = diff[x >> ancilla_];
    const double coeff = 4.0 * scale / n_sys;
    for (Eigen::Index i = 0; i < system_dim_; ++i) {
      grad.col(i << ancilla_) += coeff * (diff_x.cast<Complexd>().cwiseProduct(psi.col(class_of_[i])));
    }
    out.gradient = to_parameters(grad);
    return out;
  }

 private:
  Distribution target_;
  Eigen::Index system_dim_;
  Eigen::Index dim_;
  int ancilla_ = 0;
  std::vector<Eigen::Index> class_of_;
  Eigen::Index classes_ = 1;
};

}  // namespace

LossAndGradient loss_and_gradient(const ComplexMatrixd& m3, const PeriodicFunction& f,
                                  const Distribution& p_d, double k) {
  return SampleObjective(f, p_d, m3.rows()).evaluate(m3, k, true);
}

double loss(const ComplexMatrixd& m3, const PeriodicFunction& f, const Distribution& p_d, double k) {
  return SampleObjective(f, p_d, m3.rows()).evaluate(m3, k, false).loss;
}

Eigen::VectorXd loss_gradient(const ComplexMatrixd& m3, const PeriodicFunction& f,
                              const Distribution& p_d, double k) {
  return loss_and_gradient(m3, f, p_d, k).gradient;
}

double mean_loss(const ComplexMatrixd& m3, const TrainingDataset& dataset, double k) {
  dataset.validate();
  double total = 0.0;
  for (const auto& s : dataset.samples) total += loss(m3, s.function, s.target, k);
  return total / static_cast<double>(dataset.samples.size());
}

void adam_update(Eigen::Ref<Eigen::VectorXd> w, Eigen::Ref<Eigen::VectorXd> first_moment,
                 Eigen::Ref<Eigen::VectorXd> second_moment, std::int64_t& t,
                 const Eigen::Ref<const Eigen::VectorXd>& grad, const AdamConfig& cfg) {
  const auto size = w.size();
  if (first_moment.size() != size || second_moment.size() != size || grad.size() != size) {
    throw DimensionError("adam: parameter, moment and gradient lengths differ");
  }
  t += 1;
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (Eigen::Index i = 0; i < size; ++i) {
    const double g = grad[i];
    first_moment[i] = cfg.beta1 * first_moment[i] + (1.0 - cfg.beta1) * g;
    second_moment[i] = cfg.beta2 * second_moment[i] + (1.0 - cfg.beta2) * (g * g);
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    w[i] = w[i] - cfg.alpha * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

TrainState adam_step(TrainState state, const Eigen::VectorXd& grad, const AdamConfig& cfg) {
  adam_update(state.w, state.adam_m, state.adam_v, state.t, grad, cfg);
  return state;
}

TrainState initialize_parameters(int qubits, std::uint64_t seed) {
  if (qubits < 1) throw std::invalid_argument("initialize_parameters: qubits must be >= 1");
  const auto dim = register_dim(qubits);
  const auto count = 2 * dim * dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  TrainState state;
  state.w.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) state.w[i] = normal(rng);
  state.adam_m = Eigen::VectorXd::Zero(count);
  state.adam_v = Eigen::VectorXd::Zero(count);
  return state;
}

TrainResult train(const TrainingDataset& dataset, const LossConfig& loss_cfg,
                  const AdamConfig& adam_cfg, const TrainOptions& options) {
  dataset.validate();
  loss_cfg.validate();
  adam_cfg.validate();
  if (options.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (options.ancilla < 0) throw std::invalid_argument("train: ancilla must be >= 0");

  const int qubits = dataset.n() + options.ancilla;
  TrainState state;
  if (options.initial) {
    if (options.initial->rows() != register_dim(qubits) || options.initial->cols() != register_dim(qubits)) {
      throw DimensionError("train: initial matrix does not match n + ancilla qubits");
    }
    state.w = to_parameters(*options.initial);
    state.adam_m = Eigen::VectorXd::Zero(state.w.size());
    state.adam_v = Eigen::VectorXd::Zero(state.w.size());
  } else {
    state = initialize_parameters(qubits, options.seed);
  }

  std::vector<SampleObjective> objectives;
  objectives.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) objectives.emplace_back(s.function, s.target, register_dim(qubits));

  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(options.epochs));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t s = 0; s < objectives.size(); ++s) {
      const auto eval = objectives[s].evaluate(from_parameters(state.w), loss_cfg.k, true);
      if (!std::isfinite(eval.loss) || eval.loss > options.divergence_limit) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", sample " +
                              std::to_string(s) + ": loss = " + std::to_string(eval.loss));
      }
      total += eval.loss;
      adam_update(state.w, state.adam_m, state.adam_v, state.t, eval.gradient, adam_cfg);
    }
    const double epoch_loss = total / static_cast<double>(objectives.size());
    result.loss_history.push_back(epoch_loss);
    if (options.on_epoch) options.on_epoch(epoch, epoch_loss);
  }
  result.m3 = from_parameters(state.w);
  return result;
}

}  // namespace pfl
