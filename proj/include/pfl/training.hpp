#pragma once

// Learning a post-processing unitary: the distribution-matching loss with a
// unitarity penalty, its closed-form gradient, ADAM, and the epoch loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pfl/circuit.hpp"

namespace pfl {

enum class TargetKind { QftReference, SinglePeak, Step, Gaussian };

std::string_view to_string(TargetKind kind) noexcept;

/// Accepts "qft", "qft-reference", "single-peak", "step" and "gaussian".
TargetKind parse_target_kind(std::string_view name);

struct LossConfig {
  double k = 1.0;  // unitarity penalty weight
  TargetKind target = TargetKind::QftReference;
  double gaussian_sigma = 2.0;

  void validate() const;
};

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;

  void validate() const;
};

/// Parameters of M3 plus ADAM accumulators. `w` holds Re/Im pairs of M3 in
/// row-major order: w[2(r*dim + c)] = Re M3(r, c), w[2(r*dim + c) + 1] = Im.
struct TrainState {
  Eigen::VectorXd w;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::int64_t t = 0;
};

Eigen::VectorXd to_parameters(const ComplexMatrixd& m3);
ComplexMatrixd from_parameters(const Eigen::VectorXd& w);

/// Distribution the learner is asked to reproduce for `f`.
Distribution target_distribution(TargetKind kind, const PeriodicFunction& f,
                                 double gaussian_sigma = 2.0);

struct TrainingSample {
  PeriodicFunction function;
  Distribution target;
};

struct TrainingDataset {
  std::vector<TrainingSample> samples;

  int n() const { return samples.front().function.n; }
  int m() const { return samples.front().function.m; }
  void validate() const;
};

/// `size` random functions with targets for `loss_cfg.target`. Periods are
/// dealt from reshuffled decks of 1..max_period so every period appears once
/// before any repeats. `max_period` = 0 means 2^(n-1).
TrainingDataset make_dataset(int n, int m, int size, const LossConfig& loss_cfg,
                             std::uint64_t seed, int max_period = 0);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as TrainState::w
};

/// g = (1/2^n) sum_i (P_a(i) - P_d(i))^2 + (k/dim^2) sum_ij |M3^dagger M3 - I|_ij^2.
/// M3 may act on n + ancilla qubits; the ancilla count is inferred from its
/// dimension and ancillas are marginalized like register F.
double loss(const ComplexMatrixd& m3, const PeriodicFunction& f, const Distribution& p_d, double k);

Eigen::VectorXd loss_gradient(const ComplexMatrixd& m3, const PeriodicFunction& f,
                              const Distribution& p_d, double k);

LossAndGradient loss_and_gradient(const ComplexMatrixd& m3, const PeriodicFunction& f,
                                  const Distribution& p_d, double k);

/// Mean loss over the dataset, combined in sample order.
double mean_loss(const ComplexMatrixd& m3, const TrainingDataset& dataset, double k);

/// One ADAM iteration on raw vectors; all vectors share one length.
void adam_update(Eigen::Ref<Eigen::VectorXd> w, Eigen::Ref<Eigen::VectorXd> first_moment,
                 Eigen::Ref<Eigen::VectorXd> second_moment, std::int64_t& t,
                 const Eigen::Ref<const Eigen::VectorXd>& grad, const AdamConfig& cfg);

TrainState adam_step(TrainState state, const Eigen::VectorXd& grad, const AdamConfig& cfg);

/// Gaussian parameters (mean 0, sd 2^(-qubits/2) per real component) for a
/// 2^qubits square matrix; moments zeroed.
TrainState initialize_parameters(int qubits, std::uint64_t seed);

struct TrainOptions {
  int epochs = 3000;
  std::uint64_t seed = 0;
  int ancilla = 0;
  double divergence_limit = 1e6;
  std::optional<ComplexMatrixd> initial;  // overrides the random start
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct TrainResult {
  ComplexMatrixd m3;
  std::vector<double> loss_history;  // per epoch, mean of pre-update sample losses
};

/// Per-sample ADAM updates, dataset in fixed order each epoch. Throws
/// DivergenceError on a non-finite loss or one above the divergence limit.
TrainResult train(const TrainingDataset& dataset, const LossConfig& loss_cfg,
                  const AdamConfig& adam_cfg, const TrainOptions& options);

}  // namespace pfl
