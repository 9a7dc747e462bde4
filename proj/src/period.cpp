#include "pfl/period.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

#include "pfl/errors.hpp"

namespace pfl {

std::vector<Convergent> convergents(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0 || numerator < 0) {
    throw std::invalid_argument("convergents: need numerator >= 0 and denominator > 0");
  }
  std::vector<Convergent> out;
  // Seeds h_{-2}/k_{-2} = 0/1 and h_{-1}/k_{-1} = 1/0.
  std::int64_t h_prev = 0, h = 1;
  std::int64_t k_prev = 1, k = 0;
  std::int64_t a = numerator, b = denominator;
  while (b != 0) {
    const std::int64_t term = a / b;
    const std::int64_t h_next = term * h + h_prev;
    const std::int64_t k_next = term * k + k_prev;
    h_prev = h;
    k_prev = k;
    h = h_next;
    k = k_next;
    out.push_back({h, k});
    const std::int64_t rem = a % b;
    a = b;
    b = rem;
  }
  return out;
}

std::vector<std::int64_t> period_peaks(const Distribution& p) {
  const double threshold = 1.0 / (2.0 * static_cast<double>(p.size()));
  std::vector<std::int64_t> peaks;
  for (Eigen::Index q = 0; q < p.size(); ++q) {
    if (p[q] > threshold) peaks.push_back(q);
  }
  return peaks;
}

namespace {

// Inverse-QFT output for f(x) = x mod c in closed form: every coset is an
// arithmetic progression, so each amplitude is a geometric sum.
Distribution ideal_distribution(int n, std::int64_t c) {
  const std::int64_t dim = register_dim(n);
  const std::int64_t short_len = dim / c;
  const std::int64_t long_count = dim % c;  // cosets with short_len + 1 members
  const double size = static_cast<double>(dim);
  Distribution p(dim);
  for (std::int64_t q = 0; q < dim; ++q) {
    const std::int64_t phase = (q * c) % dim;
    auto geometric = [&](std::int64_t len) {
      if (phase == 0) return static_cast<double>(len * len);
      const double theta = std::numbers::pi * static_cast<double>(phase) / size;
      const double ratio = std::sin(theta * static_cast<double>(len)) / std::sin(theta);
      return ratio * ratio;
    };
    p[q] = (static_cast<double>(long_count) * geometric(short_len + 1) +
            static_cast<double>(c - long_count) * geometric(short_len)) /
           (size * size);
  }
  return p;
}

}  // namespace

int estimate_period(const Distribution& p, int n) {
  if (p.size() != register_dim(n)) {
    throw DimensionError("estimate_period: distribution has " + std::to_string(p.size()) +
                         " entries, expected 2^" + std::to_string(n));
  }
  const auto peaks = period_peaks(p);
  if (peaks.empty()) throw EstimationError("estimate_period: no outcome above the peak threshold");

  const std::int64_t dim = register_dim(n);
  const std::int64_t limit = std::max<std::int64_t>(1, dim / 2);
  std::set<std::int64_t> candidates{1};
  for (const auto q : peaks) {
    for (const auto& c : convergents(q, dim)) {
      if (c.denominator <= limit) candidates.insert(c.denominator);
    }
  }
  for (bool grew = true; grew;) {
    grew = false;
    const std::vector<std::int64_t> snapshot(candidates.begin(), candidates.end());
    for (std::size_t a = 0; a < snapshot.size(); ++a) {
      for (std::size_t b = a + 1; b < snapshot.size(); ++b) {
        const auto l = std::lcm(snapshot[a], snapshot[b]);
        if (l <= limit && candidates.insert(l).second) grew = true;
      }
    }
  }

  int best = 0;
  double best_distance = 0.0;
  for (const auto candidate : candidates) {  // ascending, so ties keep the smaller period
    const double distance = (p - ideal_distribution(n, candidate)).squaredNorm();
    if (best == 0 || distance < best_distance) {
      best = static_cast<int>(candidate);
      best_distance = distance;
    }
  }
  return best;
}

}  // namespace pfl
