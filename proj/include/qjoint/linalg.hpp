#pragma once

// Dense complex linear algebra used throughout the library. Matrices are
// Eigen::MatrixXcd (pairs of 64-bit floats); the wrappers below add the
// dimension checks and tolerance discipline the rest of qjoint relies on.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "qjoint/error.hpp"

namespace qjoint {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Non-negative absolute tolerance.
class Tolerance {
 public:
  constexpr Tolerance() = default;
  Tolerance(double value) : value_(value) {  // NOLINT(google-explicit-constructor)
    if (!(value >= 0.0) || !std::isfinite(value))
      throw Error(ErrorKind::InvalidArgument, "tolerance must be finite and >= 0");
  }
  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 1e-9;
};

namespace tol {
inline constexpr double norm = 1e-9;
inline constexpr double hermitian = 1e-9;
inline constexpr double psd = 1e-9;
inline constexpr double check = 1e-7;     // default for property checks
inline constexpr double golden = 1e-6;    // printed-precision tier
inline constexpr double printed = 1e-5;   // operator validation of six-digit data
inline constexpr double probability = 1e-12;
}  // namespace tol

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " must be a non-empty square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_dim(Eigen::Index actual, Eigen::Index expected, const char* what) {
  if (actual != expected)
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": expected dimension " +
                                                  std::to_string(expected) + ", got " +
                                                  std::to_string(actual));
}

inline double frobenius_norm(const Matrix& m) { return m.norm(); }
inline double vector_norm(const Vector& v) { return v.norm(); }
inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline Matrix adjoint(const Matrix& m) { return m.adjoint(); }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw Error(ErrorKind::DimensionMismatch, "matmul: inner dimensions " +
                                                  std::to_string(a.cols()) + " vs " +
                                                  std::to_string(b.rows()));
  return a * b;
}

inline Vector matvec(const Matrix& a, const Vector& v) {
  if (a.cols() != v.size())
    throw Error(ErrorKind::DimensionMismatch, "matvec: matrix has " + std::to_string(a.cols()) +
                                                  " columns, vector has " +
                                                  std::to_string(v.size()) + " entries");
  return a * v;
}

inline Complex trace(const Matrix& m) {
  require_square(m, "trace argument");
  return m.trace();
}

/// Tr(a b) without forming the product.
inline Complex trace_product(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols())
    throw Error(ErrorKind::DimensionMismatch, "trace_product: incompatible shapes");
  return (a.array() * b.transpose().array()).sum();
}

inline double kron_delta(long i, long j) { return i == j ? 1.0 : 0.0; }

inline Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

inline Matrix outer(const Vector& a, const Vector& b) { return a * b.adjoint(); }
inline Matrix outer(const Vector& a) { return a * a.adjoint(); }

inline double hermiticity_residual(const Matrix& m) { return (m - m.adjoint()).norm(); }

/// Frobenius norm of the commutator [a, b].
inline double commutator_norm(const Matrix& a, const Matrix& b) { return (a * b - b * a).norm(); }

/// Combined Hermiticity and idempotence residual, in Frobenius norm.
inline double projector_residual(const Matrix& m) {
  return std::max(hermiticity_residual(m), (m * m - m).norm());
}

struct EigenPair {
  double value;
  Vector vector;
};

/// Eigen-decomposition of a Hermitian matrix; values ascending, vectors are
/// the matching columns.
struct HermitianEigen {
  Eigen::VectorXd values;
  Matrix vectors;

  std::vector<EigenPair> pairs() const {
    std::vector<EigenPair> out;
    out.reserve(static_cast<std::size_t>(values.size()));
    for (Eigen::Index k = 0; k < values.size(); ++k) out.push_back({values[k], vectors.col(k)});
    return out;
  }

  Matrix reconstruct() const { return vectors * values.cast<Complex>().asDiagonal() * vectors.adjoint(); }
};

inline HermitianEigen hermitian_eigendecompose(const Matrix& m, Tolerance tolerance = Tolerance(tol::hermitian)) {
  require_square(m, "eigendecomposition input");
  if (!all_finite(m)) throw Error(ErrorKind::InvalidArgument, "matrix has non-finite entries");
  const double residual = hermiticity_residual(m);
  if (residual > tolerance.value())
    throw Error(ErrorKind::NotHermitian, "symmetry residual " + std::to_string(residual));
  // Symmetrize so the solver only ever sees an exactly Hermitian input.
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::ConvergenceFailure, "Hermitian eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Hermitian PSD square root. For projectors this returns the projector.
inline Matrix psd_sqrt(const Matrix& m, Tolerance tolerance = Tolerance(tol::psd)) {
  const HermitianEigen eig = hermitian_eigendecompose(m, tolerance);
  Eigen::VectorXd roots(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    const double lambda = eig.values[k];
    if (lambda < -tolerance.value())
      throw Error(ErrorKind::NotPsd, "eigenvalue " + std::to_string(lambda) + " below -tol");
    roots[k] = std::sqrt(std::max(lambda, 0.0));
  }
  Matrix s = eig.vectors * roots.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  return 0.5 * (s + s.adjoint());
}

inline double min_eigenvalue(const Matrix& m, Tolerance tolerance = Tolerance(tol::hermitian)) {
  return hermitian_eigendecompose(m, tolerance).values[0];
}

/// exp(iH) for Hermitian H.
inline Matrix expi_hermitian(const Matrix& h) {
  const HermitianEigen eig = hermitian_eigendecompose(h, Tolerance(1e-9 * std::max(1.0, h.norm())));
  Eigen::VectorXcd phases(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    phases[k] = std::polar(1.0, eig.values[k]);
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

/// Half the trace norm of a - b.
inline double trace_distance(const Matrix& a, const Matrix& b) {
  require_dim(b.rows(), a.rows(), "trace_distance");
  const Matrix d = a - b;
  const HermitianEigen eig = hermitian_eigendecompose(0.5 * (d + d.adjoint()), Tolerance(1e300));
  return 0.5 * eig.values.cwiseAbs().sum();
}

/// Modified Gram–Schmidt. Vectors whose residual norm falls below `tolerance`
/// after projection are dropped, so the result spans the input.
inline std::vector<Vector> gram_schmidt(std::span<const Vector> vectors, Tolerance tolerance = Tolerance(1e-12)) {
  std::vector<Vector> basis;
  for (const Vector& v : vectors) {
    if (!basis.empty()) require_dim(v.size(), basis.front().size(), "gram_schmidt");
    Vector w = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& b : basis) w -= b * b.dot(w);
    const double n = w.norm();
    if (n > tolerance.value()) basis.push_back(w / n);
  }
  return basis;
}

/// Unit-norm state vector.
class StateVector {
 public:
  explicit StateVector(Vector amplitudes, Tolerance tolerance = Tolerance(tol::norm))
      : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) throw Error(ErrorKind::DimensionMismatch, "empty state vector");
    if (!amplitudes_.allFinite()) throw Error(ErrorKind::InvalidArgument, "state has non-finite entries");
    const double n = amplitudes_.norm();
    if (std::abs(n - 1.0) > tolerance.value())
      throw Error(ErrorKind::InvalidArgument, "state norm " + std::to_string(n) + " is not 1");
  }

  static StateVector normalized(const Vector& v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "cannot normalize the zero vector");
    return StateVector(v / n);
  }

  static StateVector basis(Eigen::Index dim, Eigen::Index k) {
    Vector v = Vector::Zero(dim);
    v[k] = 1.0;
    return StateVector(std::move(v));
  }

  Eigen::Index dim() const noexcept { return amplitudes_.size(); }
  const Vector& amplitudes() const noexcept { return amplitudes_; }
  Matrix projector() const { return outer(amplitudes_); }

 private:
  Vector amplitudes_;
};

/// Hermitian, PSD, unit-trace operator.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m, Tolerance tolerance = Tolerance(tol::norm)) : matrix_(std::move(m)) {
    require_square(matrix_, "density matrix");
    if (!all_finite(matrix_)) throw Error(ErrorKind::InvalidArgument, "density matrix has non-finite entries");
    const double herm = hermiticity_residual(matrix_);
    if (herm > std::max(tolerance.value(), tol::hermitian))
      throw Error(ErrorKind::NotHermitian, "density matrix symmetry residual " + std::to_string(herm));
    matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > tolerance.value())
      throw Error(ErrorKind::InvalidArgument, "density matrix trace " + std::to_string(tr) + " is not 1");
    const double lo = min_eigenvalue(matrix_);
    if (lo < -std::max(tolerance.value(), tol::psd))
      throw Error(ErrorKind::NotPsd, "density matrix eigenvalue " + std::to_string(lo));
  }

  static DensityMatrix pure(const StateVector& psi) { return DensityMatrix(psi.projector()); }

  /// The normalized branch state A rho A^dagger / p. Rounding is amplified by
  /// the inverse probability of the whole history, `history` (defaults to p).
  static DensityMatrix from_branch(const Matrix& unnormalized, double p, double history = 0.0) {
    const double scale = history > 0.0 ? history : p;
    return DensityMatrix(0.5 * (unnormalized + unnormalized.adjoint()) / p,
                         Tolerance(std::max(tol::norm, 1e-14 / scale)));
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(identity(dim) / static_cast<double>(dim));
  }

  /// Renormalizes a non-zero PSD operator to unit trace.
  static DensityMatrix from_unnormalized(const Matrix& m) {
    const double tr = m.trace().real();
    if (!(tr > 0.0)) throw Error(ErrorKind::InvalidArgument, "operator has non-positive trace");
    return DensityMatrix(m / tr);
  }

  Eigen::Index dim() const noexcept { return matrix_.rows(); }
  const Matrix& matrix() const noexcept { return matrix_; }

  double purity() const { return trace_product(matrix_, matrix_).real(); }

 private:
  Matrix matrix_;
};

}  // namespace qjoint
