#include "pfl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include "pfl/errors.hpp"
#include "pfl/io.hpp"

namespace pfl {

double loschmidt_echo(const ComplexMatrixd& u1, const ComplexMatrixd& u2, const StateVectord& psi) {
  if (u1.rows() != u1.cols() || u2.rows() != u2.cols() || u1.rows() != u2.rows() ||
      psi.size() != u1.rows()) {
    throw DimensionError("loschmidt_echo: operator and state dimensions differ");
  }
  // <psi|U1^dagger U2|psi> = <U1 psi | U2 psi>
  const StateVectord a = u1 * psi;
  const StateVectord b = u2 * psi;
  return std::norm(a.dot(b));
}

double distribution_distance(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) {
    throw DimensionError("distribution_distance: lengths " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  if (p.size() == 0) return 0.0;
  return (p - q).squaredNorm() / static_cast<double>(p.size());
}

EchoReport echo_report(const ComplexMatrixd& subject, const ComplexMatrixd& reference, int n,
                       std::string subject_id, std::string reference_id) {
  const auto dim = register_dim(n);
  if (subject.rows() != dim || reference.rows() != dim) {
    throw DimensionError("echo_report: matrices must be 2^n x 2^n");
  }
  StateVectord zero = StateVectord::Zero(dim);
  zero[0] = 1.0;
  const StateVectord uniform =
      StateVectord::Constant(dim, Complexd(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
  EchoReport report;
  report.subject_id = std::move(subject_id);
  report.reference_id = std::move(reference_id);
  report.echo_on_zero = loschmidt_echo(subject, reference, zero);
  report.echo_on_uniform = loschmidt_echo(subject, reference, uniform);
  return report;
}

Histogram::Histogram() {
  for (int b = 0; b <= kBins; ++b) {
    bin_edges[b] = -std::numbers::pi + 2.0 * std::numbers::pi * b / kBins;
  }
  bin_edges[kBins] = std::numbers::pi;
}

void Histogram::add(double phase) {
  if (!(phase >= -std::numbers::pi && phase <= std::numbers::pi)) {
    throw std::invalid_argument("histogram: phase outside [-pi, pi]");
  }
  auto bin = static_cast<int>(std::floor((phase + std::numbers::pi) / (2.0 * std::numbers::pi) * kBins));
  bin = std::clamp(bin, 0, kBins - 1);
  // Keep the bin consistent with the stored edges under rounding.
  if (bin > 0 && phase < bin_edges[bin]) --bin;
  if (bin < kBins - 1 && phase >= bin_edges[bin + 1]) ++bin;
  ++counts[bin];
}

void Histogram::add(std::span<const double> phases) {
  for (const double p : phases) add(p);
}

std::int64_t Histogram::total() const {
  std::int64_t sum = 0;
  for (const auto c : counts) sum += c;
  return sum;
}

Histogram eigenphase_histogram(const ComplexMatrixd& u) {
  Histogram h;
  const auto phases = eigenphases(u);
  h.add(phases);
  return h;
}

double max_binomial_deviation(const Histogram& h) {
  const auto total = static_cast<double>(h.total());
  if (total == 0.0) return 0.0;
  const double p = 1.0 / Histogram::kBins;
  const double expected = total * p;
  const double sd = std::sqrt(total * p * (1.0 - p));
  double worst = 0.0;
  for (const auto c : h.counts) worst = std::max(worst, std::abs(static_cast<double>(c) - expected) / sd);
  return worst;
}

void write_echo_csv(std::ostream& out, std::span<const EchoReport> rows) {
  out << "subject_path,reference,echo_zero,echo_uniform\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << csv_field(r.subject_id) << ',' << csv_field(r.reference_id) << ',' << r.echo_on_zero << ',' << r.echo_on_uniform
        << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_lo,bin_hi,count\n";
  out << std::setprecision(17);
  for (int b = 0; b < Histogram::kBins; ++b) {
    out << h.bin_edges[b] << ',' << h.bin_edges[b + 1] << ',' << h.counts[b] << '\n';
  }
}

}  // namespace pfl
