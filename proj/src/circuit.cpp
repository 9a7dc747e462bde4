#include "pfl/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace pfl {

void PeriodicFunction::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("periodic function: register widths must be >= 1");
  if (n > 30 || m > 30) throw std::invalid_argument("periodic function: register too wide");
  const auto size = domain_size();
  if (period < 1 || period > size) {
    throw std::invalid_argument("periodic function: period " + std::to_string(period) +
                                " outside [1, 2^n]");
  }
  if (static_cast<std::int64_t>(table.size()) != size) {
    throw std::invalid_argument("periodic function: table has " + std::to_string(table.size()) +
                                " entries, expected " + std::to_string(size));
  }
  const auto codomain = register_dim(m);
  for (std::int64_t x = 0; x < size; ++x) {
    if (table[x] >= codomain) {
      throw std::invalid_argument("periodic function: f(" + std::to_string(x) + ") out of range");
    }
    if (table[x] != table[x % period]) {
      throw std::invalid_argument("periodic function: f(" + std::to_string(x) +
                                  ") != f(x mod r)");
    }
  }
  std::vector<std::uint32_t> head(table.begin(), table.begin() + period);
  std::sort(head.begin(), head.end());
  if (std::adjacent_find(head.begin(), head.end()) != head.end()) {
    throw std::invalid_argument("periodic function: values repeat within one period");
  }
}

PeriodicFunction generate_periodic_function(int n, int m, int period, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("generate_periodic_function: n, m must be >= 1");
  if (period < 1 || period > register_dim(n)) {
    throw std::invalid_argument("generate_periodic_function: need 1 <= r <= 2^n");
  }
  if (period > register_dim(m)) {
    throw std::invalid_argument("generate_periodic_function: r = " + std::to_string(period) +
                                " exceeds 2^m distinct values");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> values(static_cast<std::size_t>(register_dim(m)));
  std::iota(values.begin(), values.end(), 0u);
  // Partial Fisher-Yates: the first `period` slots become the distinct values.
  for (int k = 0; k < period; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, values.size() - 1);
    std::swap(values[k], values[pick(rng)]);
  }
  PeriodicFunction f{n, m, period, {}};
  f.table.resize(static_cast<std::size_t>(register_dim(n)));
  for (std::size_t x = 0; x < f.table.size(); ++x) f.table[x] = values[x % period];
  return f;
}

JointState prepare_superposition(int n, int m, int ancilla) {
  if (n < 1 || m < 1 || ancilla < 0) {
    throw std::invalid_argument("prepare_superposition: need n >= 1, m >= 1, ancilla >= 0");
  }
  JointState s{n, ancilla, m, {}};
  s.amplitudes = StateVectord::Zero(s.x_dim() * s.f_dim());
  const double amp = 1.0 / std::sqrt(static_cast<double>(register_dim(n)));
  for (std::int64_t i = 0; i < register_dim(n); ++i) {
    s.amplitudes[(i << ancilla) * s.f_dim()] = amp;
  }
  return s;
}

JointState apply_oracle(const JointState& state, const PeriodicFunction& f) {
  if (f.n != state.system_qubits || f.m != state.f_qubits) {
    throw DimensionError("apply_oracle: function widths do not match the registers");
  }
  const auto f_dim = state.f_dim();
  JointState out = state;
  out.amplitudes.setZero();
  for (std::int64_t x = 0; x < state.x_dim(); ++x) {
    for (std::int64_t j = 1; j < f_dim; ++j) {
      if (state.amplitude(x, j) != Complexd{}) {
        throw std::invalid_argument("apply_oracle: input has support outside F = |0>");
      }
    }
    const auto i = x >> state.ancilla_qubits;
    out.amplitudes[x * f_dim + f.table[i]] = state.amplitude(x, 0);
  }
  return out;
}

ComplexMatrixd inverse_qft_matrix(int n) {
  if (n < 1) throw std::invalid_argument("inverse_qft_matrix: n must be >= 1");
  const auto dim = register_dim(n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
  ComplexMatrixd f(dim, dim);
  for (std::int64_t j = 0; j < dim; ++j) {
    for (std::int64_t k = 0; k < dim; ++k) {
      // Reduce jk mod 2^n first so the angle stays small and exact.
      const auto e = (j * k) & (dim - 1);
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(dim);
      f(j, k) = std::polar(norm, angle);
    }
  }
  return f;
}

namespace {

// Amplitudes viewed as an (F x X) column-major matrix: element (j, x) sits at
// x * 2^m + j, which is the basis index of |x>|j>.
using ConstStateView = Eigen::Map<const ComplexMatrixd>;

}  // namespace

JointState apply_post_unitary(const JointState& state, const ComplexMatrixd& m3) {
  const auto x_dim = state.x_dim();
  if (m3.rows() != x_dim || m3.cols() != x_dim) {
    throw DimensionError("apply_post_unitary: matrix is " + std::to_string(m3.rows()) + "x" +
                         std::to_string(m3.cols()) + ", register X has dimension " +
                         std::to_string(x_dim));
  }
  const ConstStateView in(state.amplitudes.data(), state.f_dim(), x_dim);
  JointState out = state;
  Eigen::Map<ComplexMatrixd> result(out.amplitudes.data(), state.f_dim(), x_dim);
  result.noalias() = in * m3.transpose();
  return out;
}

JointState condition_on_f(const JointState& state, std::uint32_t f_value) {
  if (f_value >= state.f_dim()) throw std::invalid_argument("condition_on_f: value out of range");
  JointState out = state;
  out.amplitudes.setZero();
  double norm2 = 0.0;
  for (std::int64_t x = 0; x < state.x_dim(); ++x) {
    const auto a = state.amplitude(x, f_value);
    out.amplitudes[x * state.f_dim() + f_value] = a;
    norm2 += std::norm(a);
  }
  if (norm2 == 0.0) throw std::invalid_argument("condition_on_f: outcome has zero probability");
  out.amplitudes /= std::sqrt(norm2);
  return out;
}

Distribution marginal_distribution(const JointState& state) {
  const ConstStateView view(state.amplitudes.data(), state.f_dim(), state.x_dim());
  const Eigen::VectorXd per_x = view.cwiseAbs2().colwise().sum().transpose();
  const auto group = register_dim(state.ancilla_qubits);
  Distribution p = Distribution::Zero(register_dim(state.system_qubits));
  for (std::int64_t x = 0; x < state.x_dim(); ++x) p[x / group] += per_x[x];
  return p;
}

Distribution reference_distribution(const PeriodicFunction& f) {
  f.validate();
  auto state = prepare_superposition(f.n, f.m);
  state = apply_oracle(state, f);
  state = apply_post_unitary(state, inverse_qft_matrix(f.n));
  return marginal_distribution(state);
}

Distribution output_distribution(const ComplexMatrixd& m3, const PeriodicFunction& f) {
  f.validate();
  const int ancilla = qubits_for_dim(m3.rows()) - f.n;
  if (ancilla < 0) throw DimensionError("output_distribution: matrix smaller than register X");
  auto state = prepare_superposition(f.n, f.m, ancilla);
  state = apply_oracle(state, f);
  state = apply_post_unitary(state, m3);
  return marginal_distribution(state);
}

}  // namespace pfl
