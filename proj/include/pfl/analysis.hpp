#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pfl/circuit.hpp"

namespace pfl {

/// |<psi| U1^dagger U2 |psi>|^2.
double loschmidt_echo(const ComplexMatrixd& u1, const ComplexMatrixd& u2, const StateVectord& psi);

/// sum_i (p_i - q_i)^2 / len(p).
double distribution_distance(const Distribution& p, const Distribution& q);

struct EchoReport {
  std::string subject_id;
  std::string reference_id;
  double echo_on_zero = 0.0;     // on |0>^n
  double echo_on_uniform = 0.0;  // on H^n |0>
};

EchoReport echo_report(const ComplexMatrixd& subject, const ComplexMatrixd& reference, int n,
                       std::string subject_id = {}, std::string reference_id = {});

/// 20 equal-width bins over [-pi, pi]. Bins are half-open [lo, hi) except
/// the last, which also takes +pi.
struct Histogram {
  static constexpr int kBins = 20;
  std::array<double, kBins + 1> bin_edges{};
  std::array<std::int64_t, kBins> counts{};

  Histogram();

  void add(double phase);
  void add(std::span<const double> phases);
  std::int64_t total() const;
};

Histogram eigenphase_histogram(const ComplexMatrixd& u);

/// Largest |count - N/20| / sqrt(N p (1 - p)), p = 1/20: the worst bin's
/// deviation from uniform in binomial standard deviations.
double max_binomial_deviation(const Histogram& h);

// CSV emitters (header row included).
void write_echo_csv(std::ostream& out, std::span<const EchoReport> rows);
void write_histogram_csv(std::ostream& out, const Histogram& h);

}  // namespace pfl
