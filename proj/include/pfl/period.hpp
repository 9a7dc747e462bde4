#pragma once

#include <cstdint>
#include <vector>

#include "pfl/circuit.hpp"

namespace pfl {

struct Convergent {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;

  bool operator==(const Convergent&) const = default;
};

/// Continued-fraction convergents of numerator/denominator, in order of
/// increasing denominator. The last one equals the reduced fraction.
std::vector<Convergent> convergents(std::int64_t numerator, std::int64_t denominator);

/// Outcomes q with P(q) > 1/(2 * 2^n).
std::vector<std::int64_t> period_peaks(const Distribution& p);

/// Recovers the period from an X-register distribution of 2^n outcomes.
///
/// Every peak q contributes the denominators of the convergents of q/2^n
/// (up to 2^(n-1)); the candidate set is closed under lcm. The winner is the
/// candidate whose ideal inverse-QFT distribution is closest to `p`, ties
/// going to the smaller period. Throws EstimationError when no outcome
/// clears the peak threshold.
int estimate_period(const Distribution& p, int n);

}  // namespace pfl
