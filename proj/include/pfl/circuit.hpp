#pragma once

// Exact state-vector simulation of the period-finding circuit: uniform
// superposition on register X, oracle |i>|0> -> |i>|f(i)>, a post-processing
// unitary on X, and the X-register measurement statistics.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "pfl/linalg.hpp"

namespace pfl {

using Distribution = Eigen::VectorXd;

/// Tabulated f : {0..2^n-1} -> {0..2^m-1} with period r and r distinct
/// values per period.
struct PeriodicFunction {
  int n = 0;       // X-register qubits
  int m = 0;       // F-register qubits
  int period = 1;  // r
  std::vector<std::uint32_t> table;

  std::int64_t domain_size() const noexcept { return register_dim(n); }

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const;

  bool operator==(const PeriodicFunction&) const = default;
};

PeriodicFunction generate_periodic_function(int n, int m, int period, std::uint64_t seed);

/// Joint amplitudes of X (system qubits followed by ancilla qubits) and F.
/// Basis index = x * 2^m + j, with x = i * 2^ancilla + a for system value i
/// and ancilla value a.
struct JointState {
  int system_qubits = 0;
  int ancilla_qubits = 0;
  int f_qubits = 0;
  StateVectord amplitudes;

  int x_qubits() const noexcept { return system_qubits + ancilla_qubits; }
  std::int64_t x_dim() const noexcept { return register_dim(x_qubits()); }
  std::int64_t f_dim() const noexcept { return register_dim(f_qubits); }

  Complexd amplitude(std::int64_t x, std::int64_t j) const { return amplitudes[x * f_dim() + j]; }
};

/// H^{(x)n} on the system qubits; ancillas and F stay |0>.
JointState prepare_superposition(int n, int m, int ancilla = 0);

/// Moves the amplitude of |x>|0> to |x>|f(i)>. Only states supported on
/// F = 0 are accepted.
JointState apply_oracle(const JointState& state, const PeriodicFunction& f);

/// Entry (j, k) = exp(-2 pi i jk / 2^n) / sqrt(2^n).
ComplexMatrixd inverse_qft_matrix(int n);

/// Applies `m3` (tensored with the identity on F) to register X.
JointState apply_post_unitary(const JointState& state, const ComplexMatrixd& m3);

/// Projects F onto |f_value> and renormalizes; models a mid-circuit
/// measurement of F. Throws if the outcome has zero probability.
JointState condition_on_f(const JointState& state, std::uint32_t f_value);

/// P(i) = sum over ancilla and F of |amplitude|^2, for every system value i.
Distribution marginal_distribution(const JointState& state);

/// Output distribution of the textbook circuit (inverse QFT post-processing).
Distribution reference_distribution(const PeriodicFunction& f);

/// Full pipeline with `m3` as post-processing. Extra qubits of `m3` beyond
/// f.n are ancillas prepared in |0>.
Distribution output_distribution(const ComplexMatrixd& m3, const PeriodicFunction& f);

}  // namespace pfl
