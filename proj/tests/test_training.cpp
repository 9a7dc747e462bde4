#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "pfl/training.hpp"

using pfl::ComplexMatrixd;
using pfl::TargetKind;

namespace {

double relative_error(double got, double want) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

// Central differences of the oracle loss in the Re/Im parameter layout.
Eigen::VectorXd numeric_gradient(const ComplexMatrixd& m, const pfl::PeriodicFunction& f,
                                 const pfl::Distribution& target, double k) {
  constexpr double h = 1e-5;
  Eigen::VectorXd w = pfl::to_parameters(m);
  Eigen::VectorXd g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + h;
    const double up = oracle::loss(pfl::from_parameters(w), f, target, k);
    w[i] = saved - h;
    const double down = oracle::loss(pfl::from_parameters(w), f, target, k);
    w[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void check_gradient(int n, int ancilla, std::uint64_t seed, double k, TargetKind kind) {
  const int r = 1 + static_cast<int>(seed % static_cast<std::uint64_t>(pfl::register_dim(n) - 1));
  const auto f = pfl::generate_periodic_function(n, n, r, seed);
  const auto target = pfl::target_distribution(kind, f);
  const auto dim = pfl::register_dim(n + ancilla);
  const auto m = oracle::random_matrix(dim, dim, seed + 1, 1.0 / std::sqrt(static_cast<double>(dim)));
  const auto analytic = pfl::loss_gradient(m, f, target, k);
  const auto numeric = numeric_gradient(m, f, target, k);
  ASSERT_EQ(analytic.size(), numeric.size());
  const double scale = numeric.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < numeric.size(); ++i) {
    // Components far below the largest one are compared on the common scale.
    const double err = std::abs(analytic[i] - numeric[i]) / std::max(std::abs(numeric[i]), 1e-3 * scale);
    EXPECT_LE(err, 1e-5) << "n=" << n << " ancilla=" << ancilla << " seed=" << seed << " i=" << i;
  }
}

}  // namespace

TEST(Parameters, RowMajorInterleavedLayout) {
  const auto m = oracle::random_matrix(4, 4, 3);
  const auto w = pfl::to_parameters(m);
  ASSERT_EQ(w.size(), 32);
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      EXPECT_EQ(w[2 * (r * 4 + c)], m(r, c).real());
      EXPECT_EQ(w[2 * (r * 4 + c) + 1], m(r, c).imag());
    }
  }
  EXPECT_EQ(pfl::from_parameters(w), m);
  EXPECT_THROW(pfl::from_parameters(Eigen::VectorXd::Zero(6)), pfl::DimensionError);
}

TEST(Targets, ShapesAndNormalization) {
  const auto f = pfl::generate_periodic_function(3, 3, 3, 4);
  EXPECT_EQ(pfl::target_distribution(TargetKind::QftReference, f), pfl::reference_distribution(f));

  const auto peak = pfl::target_distribution(TargetKind::SinglePeak, f);
  EXPECT_EQ(peak[3], 1.0);
  EXPECT_EQ(peak.sum(), 1.0);

  const auto step = pfl::target_distribution(TargetKind::Step, f);
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(step[i], i < 3 ? 0.0 : 0.2);

  const auto gauss = pfl::target_distribution(TargetKind::Gaussian, f, 1.5);
  EXPECT_NEAR(gauss.sum(), 1.0, 1e-15);
  EXPECT_EQ(std::max_element(gauss.data(), gauss.data() + 8) - gauss.data(), 3);
  EXPECT_NEAR(gauss[2] / gauss[3], std::exp(-0.5 / 2.25), 1e-14);

  const auto full = pfl::generate_periodic_function(3, 3, 8, 4);
  EXPECT_THROW(pfl::target_distribution(TargetKind::SinglePeak, full), std::invalid_argument);
  EXPECT_THROW(pfl::target_distribution(TargetKind::Gaussian, f, 0.0), std::invalid_argument);
}

TEST(Targets, NamesRoundTrip) {
  for (auto kind : {TargetKind::QftReference, TargetKind::SinglePeak, TargetKind::Step, TargetKind::Gaussian}) {
    EXPECT_EQ(pfl::parse_target_kind(pfl::to_string(kind)), kind);
  }
  EXPECT_EQ(pfl::parse_target_kind("qft"), TargetKind::QftReference);
  EXPECT_THROW(pfl::parse_target_kind("sawtooth"), std::invalid_argument);
}

TEST(Loss, MatchesStraightLineOracle) {
  for (int n = 1; n <= 4; ++n) {
    for (int ancilla = 0; ancilla <= 1; ++ancilla) {
      const auto f = pfl::generate_periodic_function(n, n, 1 + n % 2, 11 * n);
      const auto target = pfl::reference_distribution(f);
      const auto dim = pfl::register_dim(n + ancilla);
      const auto m = oracle::random_matrix(dim, dim, 5 * n + ancilla, 0.4);
      for (double k : {0.0, 1.0, 2.5}) {
        EXPECT_LT(relative_error(pfl::loss(m, f, target, k), oracle::loss(m, f, target, k)), 1e-12);
      }
    }
  }
}

TEST(Loss, ZeroAtTheInverseQft) {
  for (int n = 1; n <= 6; ++n) {
    for (int r = 1; r <= pfl::register_dim(n); r += 3) {
      const auto f = pfl::generate_periodic_function(n, n, r, r);
      EXPECT_LT(pfl::loss(pfl::inverse_qft_matrix(n), f, pfl::reference_distribution(f), 1.0), 1e-26);
    }
  }
}

TEST(Loss, RejectsMismatchedShapes) {
  const auto f = pfl::generate_periodic_function(3, 3, 2, 1);
  const auto target = pfl::reference_distribution(f);
  EXPECT_THROW(pfl::loss(pfl::inverse_qft_matrix(2), f, target, 1.0), pfl::DimensionError);
  EXPECT_THROW(pfl::loss(oracle::random_matrix(12, 12, 1), f, target, 1.0), pfl::DimensionError);
  EXPECT_THROW(pfl::loss(pfl::inverse_qft_matrix(3), f, pfl::Distribution::Zero(4), 1.0), pfl::DimensionError);
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::uint64_t seed = 1;
  for (int point = 0; point < 20; ++point) {
    const int n = point < 10 ? 2 : 3;
    check_gradient(n, 0, seed++, 1.0, TargetKind::QftReference);
  }
}

TEST(Gradient, OtherTargetsWeightsAndAncilla) {
  check_gradient(2, 0, 90, 0.0, TargetKind::QftReference);
  check_gradient(2, 0, 91, 3.0, TargetKind::Step);
  check_gradient(3, 0, 92, 1.0, TargetKind::Gaussian);
  check_gradient(3, 0, 93, 1.0, TargetKind::SinglePeak);
  check_gradient(2, 1, 94, 1.0, TargetKind::QftReference);
  check_gradient(2, 2, 95, 0.7, TargetKind::QftReference);
}

TEST(Gradient, CombinedCallAgrees) {
  const auto f = pfl::generate_periodic_function(3, 3, 3, 1);
  const auto target = pfl::reference_distribution(f);
  const auto m = oracle::random_matrix(8, 8, 2, 0.3);
  const auto both = pfl::loss_and_gradient(m, f, target, 1.0);
  EXPECT_EQ(both.loss, pfl::loss(m, f, target, 1.0));
  EXPECT_EQ(both.gradient, pfl::loss_gradient(m, f, target, 1.0));
}

TEST(Adam, TranscriptMatchesScalarReference) {
  // Minimize f(w) = w^2 from w0 = 1 for 10 steps.
  pfl::AdamConfig cfg;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(1);
  std::int64_t t = 0;
  oracle::ScalarAdam ref;
  std::vector<double> ref_w{1.0};
  for (int step = 0; step < 10; ++step) {
    const Eigen::VectorXd g = 2.0 * w;
    ref.step(ref_w, {2.0 * ref_w[0]});
    pfl::adam_update(w, m, v, t, g, cfg);
    ASSERT_EQ(w[0], ref_w[0]) << "step " << step;
  }
  EXPECT_EQ(t, 10);
}

TEST(Adam, FirstStepMagnitude) {
  pfl::AdamConfig cfg;
  pfl::TrainState s;
  s.w = Eigen::VectorXd::Constant(3, 0.5);
  s.adam_m = Eigen::VectorXd::Zero(3);
  s.adam_v = Eigen::VectorXd::Zero(3);
  const auto next = pfl::adam_step(s, Eigen::VectorXd::Ones(3), cfg);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(0.5 - next.w[i], cfg.alpha / (1.0 + cfg.epsilon));
  EXPECT_EQ(next.t, 1);
}

TEST(Adam, ValidatesConfigAndLengths) {
  EXPECT_THROW((pfl::AdamConfig{-1.0, 0.9, 0.99, 1e-8}.validate()), std::invalid_argument);
  EXPECT_THROW((pfl::AdamConfig{1e-3, 1.0, 0.99, 1e-8}.validate()), std::invalid_argument);
  EXPECT_THROW((pfl::AdamConfig{1e-3, 0.9, 0.99, 0.0}.validate()), std::invalid_argument);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2), m = Eigen::VectorXd::Zero(2), v = Eigen::VectorXd::Zero(3);
  std::int64_t t = 0;
  EXPECT_THROW(pfl::adam_update(w, m, v, t, Eigen::VectorXd::Zero(2), pfl::AdamConfig{}), pfl::DimensionError);
}

TEST(Dataset, CoversEveryPeriodBeforeRepeating) {
  pfl::LossConfig cfg;
  const auto ds = pfl::make_dataset(4, 4, 20, cfg, 7);
  ASSERT_EQ(ds.samples.size(), 20u);
  std::multiset<int> first8, all;
  for (std::size_t s = 0; s < ds.samples.size(); ++s) {
    const auto& sample = ds.samples[s];
    EXPECT_NO_THROW(sample.function.validate());
    EXPECT_EQ(sample.target, pfl::reference_distribution(sample.function));
    if (s < 8) first8.insert(sample.function.period);
    all.insert(sample.function.period);
  }
  for (int r = 1; r <= 8; ++r) EXPECT_EQ(first8.count(r), 1u) << r;
  EXPECT_EQ(all.count(9), 0u);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Dataset, SeededAndBounded) {
  pfl::LossConfig cfg;
  const auto a = pfl::make_dataset(3, 3, 6, cfg, 1);
  const auto b = pfl::make_dataset(3, 3, 6, cfg, 1);
  for (std::size_t s = 0; s < 6; ++s) EXPECT_EQ(a.samples[s].function, b.samples[s].function);
  const auto wide = pfl::make_dataset(3, 3, 16, cfg, 1, 8);
  int max_r = 0;
  for (const auto& s : wide.samples) max_r = std::max(max_r, s.function.period);
  EXPECT_EQ(max_r, 8);
  EXPECT_THROW(pfl::make_dataset(3, 3, 0, cfg, 1), std::invalid_argument);
  EXPECT_THROW(pfl::make_dataset(3, 3, 4, cfg, 1, 9), std::invalid_argument);
}

TEST(Initialization, ScaleAndSeed) {
  const auto s = pfl::initialize_parameters(4, 3);
  ASSERT_EQ(s.w.size(), 2 * 16 * 16);
  const double var = s.w.squaredNorm() / static_cast<double>(s.w.size());
  EXPECT_NEAR(var, 1.0 / 16.0, 0.01);
  EXPECT_EQ(s.w, pfl::initialize_parameters(4, 3).w);
  EXPECT_EQ(s.t, 0);
  EXPECT_TRUE(s.adam_m.isZero());
}

TEST(Train, ConvergesAtTwoQubits) {
  pfl::LossConfig loss_cfg;
  const auto ds = pfl::make_dataset(2, 2, 4, loss_cfg, 3);
  pfl::TrainOptions opt;
  opt.epochs = 3000;
  opt.seed = 5;
  int calls = 0;
  opt.on_epoch = [&](int, double) { ++calls; };
  const auto result = pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt);
  EXPECT_EQ(calls, 3000);
  ASSERT_EQ(result.loss_history.size(), 3000u);
  EXPECT_LT(result.loss_history.back(), result.loss_history.front());
  EXPECT_LT(pfl::mean_loss(result.m3, ds, 1.0), 1e-6);
  EXPECT_LT(pfl::unitarity_defect(result.m3), 1e-6);
}

TEST(Train, DeterministicForSeed) {
  pfl::LossConfig loss_cfg;
  const auto ds = pfl::make_dataset(2, 2, 3, loss_cfg, 1);
  pfl::TrainOptions opt;
  opt.epochs = 50;
  opt.seed = 9;
  const auto a = pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt);
  const auto b = pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt);
  EXPECT_EQ(a.m3, b.m3);
  EXPECT_EQ(a.loss_history, b.loss_history);
  opt.seed = 10;
  EXPECT_NE(pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt).m3, a.m3);
}

TEST(Train, InitialMatrixAndAncilla) {
  pfl::LossConfig loss_cfg;
  const auto ds = pfl::make_dataset(2, 2, 2, loss_cfg, 1);
  pfl::TrainOptions opt;
  opt.epochs = 1;
  opt.initial = pfl::inverse_qft_matrix(2);
  const auto stay = pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt);
  EXPECT_LT(stay.loss_history[0], 1e-20);

  opt.initial.reset();
  opt.ancilla = 1;
  const auto wide = pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt);
  EXPECT_EQ(wide.m3.rows(), 8);

  opt.initial = pfl::inverse_qft_matrix(2);
  EXPECT_THROW(pfl::train(ds, loss_cfg, pfl::AdamConfig{}, opt), pfl::DimensionError);
}

TEST(Train, DivergenceIsReported) {
  pfl::LossConfig loss_cfg;
  const auto ds = pfl::make_dataset(2, 2, 2, loss_cfg, 1);
  pfl::TrainOptions opt;
  opt.epochs = 20;
  pfl::AdamConfig wild;
  wild.alpha = 1e4;
  EXPECT_THROW(pfl::train(ds, loss_cfg, wild, opt), pfl::DivergenceError);
}
