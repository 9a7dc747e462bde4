#pragma once

// Dense complex linear algebra on Eigen types: products, unitarity checks,
// Haar sampling and eigenphase extraction. Everything is templated on the
// real scalar so the same code serves double and long double.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pfl/errors.hpp"

namespace pfl {

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using StateVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

using ComplexMatrixd = ComplexMatrix<double>;
using StateVectord = StateVector<double>;
using Complexd = std::complex<double>;

/// Eigenphases are only extracted from matrices whose defect is below this.
inline constexpr double kUnitaryTolerance = 1e-6;

constexpr bool is_power_of_two(std::int64_t v) noexcept { return v > 0 && (v & (v - 1)) == 0; }

constexpr std::int64_t register_dim(int qubits) noexcept { return std::int64_t{1} << qubits; }

/// Number of qubits of a register of dimension `dim`; throws unless `dim` is
/// a power of two.
inline int qubits_for_dim(std::int64_t dim) {
  if (!is_power_of_two(dim)) {
    throw DimensionError("dimension " + std::to_string(dim) + " is not a power of two");
  }
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const auto z = m(r, c);
      if (!std::isfinite(std::real(z)) || !std::isfinite(std::imag(z))) return false;
    }
  }
  return true;
}

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  using Result = Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Result out = a * b;
  return out;
}

template <typename Derived>
auto adjoint(const Eigen::MatrixBase<Derived>& a) {
  using Result = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Result out = a.adjoint();
  return out;
}

/// (1/dim^2) * sum_ij |M^dagger M - I|_ij^2. Zero exactly for unitaries.
template <typename Derived>
auto unitarity_defect(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (m.rows() != m.cols()) {
    throw DimensionError("unitarity_defect: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  const auto dim = static_cast<Real>(m.rows());
  auto gram = (m.adjoint() * m).eval();
  gram.diagonal().array() -= Real(1);
  return gram.squaredNorm() / (dim * dim);
}

/// Haar-distributed 2^n x 2^n unitary: QR of a complex Ginibre matrix with
/// the phases of R's diagonal folded back into Q.
template <typename Scalar = double>
ComplexMatrix<Scalar> haar_random_unitary(int n_qubits, std::uint64_t seed) {
  if (n_qubits < 1) throw std::invalid_argument("haar_random_unitary: n_qubits must be >= 1");
  const auto dim = static_cast<Eigen::Index>(register_dim(n_qubits));
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));

  ComplexMatrix<Scalar> z(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const Scalar re = normal(rng);
      const Scalar im = normal(rng);
      z(r, c) = {re, im};
    }
  }

  Eigen::HouseholderQR<ComplexMatrix<Scalar>> qr(z);
  ComplexMatrix<Scalar> q = qr.householderQ();
  const auto& packed = qr.matrixQR();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const auto d = packed(k, k);
    const Scalar mag = std::abs(d);
    if (mag > Scalar(0)) q.col(k) *= d / mag;
  }
  return q;
}

template <typename Scalar>
struct EigenSystem {
  StateVector<Scalar> values;
  ComplexMatrix<Scalar> vectors;  // column k pairs with values[k]
};

/// Complex Schur based eigendecomposition of a (near-)unitary matrix.
template <typename Derived>
auto unitary_eigensystem(const Eigen::MatrixBase<Derived>& u) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  using Matrix = ComplexMatrix<Real>;
  const auto defect = unitarity_defect(u);
  if (!(defect < Real(kUnitaryTolerance))) {
    throw NotUnitaryError("eigenphases requested for a matrix with unitarity defect " +
                          std::to_string(static_cast<double>(defect)));
  }
  Eigen::ComplexEigenSolver<Matrix> solver(Matrix(u), /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("complex eigensolver did not converge");
  }
  return EigenSystem<Real>{solver.eigenvalues(), solver.eigenvectors()};
}

/// Arguments of all eigenvalues, each in (-pi, pi]. Order is unspecified.
template <typename Derived>
auto eigenphases(const Eigen::MatrixBase<Derived>& u) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const auto system = unitary_eigensystem(u);
  std::vector<Real> phases;
  phases.reserve(static_cast<std::size_t>(system.values.size()));
  for (Eigen::Index k = 0; k < system.values.size(); ++k) {
    Real phase = std::arg(system.values[k]);
    if (phase <= -std::numbers::pi_v<Real>) phase = std::numbers::pi_v<Real>;
    phases.push_back(phase);
  }
  return phases;
}

}  // namespace pfl
