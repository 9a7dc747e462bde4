#include <gtest/gtest.h>

#include <numeric>

#include "pfl/period.hpp"

using pfl::Convergent;

namespace {

// Best rational approximations by brute force: h/k is a convergent of x only
// if no fraction with a smaller denominator is at least as close.
bool is_best_approximation(std::int64_t num, std::int64_t den, const Convergent& c) {
  const double x = static_cast<double>(num) / static_cast<double>(den);
  const double err = std::abs(x * static_cast<double>(c.denominator) - static_cast<double>(c.numerator));
  for (std::int64_t k = 1; k < c.denominator; ++k) {
    const auto h = static_cast<std::int64_t>(std::llround(x * static_cast<double>(k)));
    if (std::abs(x * static_cast<double>(k) - static_cast<double>(h)) < err - 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST(Convergents, KnownExpansion) {
  // 3/8 = [0; 2, 1, 2]
  const std::vector<Convergent> want{{0, 1}, {1, 2}, {1, 3}, {3, 8}};
  EXPECT_EQ(pfl::convergents(3, 8), want);
  // 13/32 = [0; 2, 2, 6]
  const std::vector<Convergent> want2{{0, 1}, {1, 2}, {2, 5}, {13, 32}};
  EXPECT_EQ(pfl::convergents(13, 32), want2);
}

TEST(Convergents, ExhaustiveProperties) {
  for (std::int64_t den : {8, 32, 64}) {
    for (std::int64_t num = 0; num < den; ++num) {
      const auto cs = pfl::convergents(num, den);
      ASSERT_FALSE(cs.empty());
      const auto g = std::gcd(num, den);
      EXPECT_EQ(cs.back(), (Convergent{num / g, den / g})) << num << "/" << den;
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i > 1) EXPECT_GT(cs[i].denominator, cs[i - 1].denominator);
        EXPECT_EQ(std::gcd(cs[i].numerator, cs[i].denominator), 1);
        EXPECT_TRUE(is_best_approximation(num, den, cs[i])) << num << "/" << den << " -> " << cs[i].numerator
                                                           << "/" << cs[i].denominator;
      }
    }
  }
}

TEST(Convergents, RejectsZeroDenominator) { EXPECT_THROW(pfl::convergents(1, 0), std::invalid_argument); }

TEST(PeriodPeaks, ThresholdIsHalfUniform) {
  pfl::Distribution p = pfl::Distribution::Zero(8);
  p[0] = 0.5;
  p[3] = 1.0 / 16.0;  // exactly the threshold: excluded
  p[4] = 0.4375;
  EXPECT_EQ(pfl::period_peaks(p), (std::vector<std::int64_t>{0, 4}));
}

TEST(EstimatePeriod, ExhaustiveOnReferenceDistributions) {
  for (int n = 2; n <= 7; ++n) {
    for (int r = 1; r <= pfl::register_dim(n) / 2; ++r) {
      const auto f = pfl::generate_periodic_function(n, n, r, 31 * n + r);
      EXPECT_EQ(pfl::estimate_period(pfl::reference_distribution(f), n), r) << "n=" << n;
    }
  }
}

TEST(EstimatePeriod, RobustToSmallNoise) {
  const auto f = pfl::generate_periodic_function(5, 5, 6, 3);
  pfl::Distribution p = pfl::reference_distribution(f);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += 1e-4 * ((i * 7) % 5 - 2);
  p = p.cwiseMax(0.0);
  p /= p.sum();
  EXPECT_EQ(pfl::estimate_period(p, 5), 6);
}

TEST(EstimatePeriod, Errors) {
  EXPECT_THROW(pfl::estimate_period(pfl::Distribution::Zero(8), 3), pfl::EstimationError);
  EXPECT_THROW(pfl::estimate_period(pfl::Distribution::Constant(4, 0.25), 3), pfl::DimensionError);
}
