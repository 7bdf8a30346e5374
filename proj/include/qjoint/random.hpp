#pragma once

// Seeded random generators for states, unitaries and projectors.

#include <cstdint>
#include <random>

#include "qjoint/linalg.hpp"

namespace qjoint {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  return g;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the R-diagonal phases
/// divided out).
inline Matrix haar_unitary(Eigen::Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

inline StateVector random_state(Eigen::Index dim, Rng& rng) {
  return StateVector::normalized(ginibre(dim, 1, rng).col(0));
}

/// Random mixed state of full rank (Ginibre ensemble).
inline DensityMatrix random_density(Eigen::Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  const Matrix m = g * g.adjoint();
  return DensityMatrix::from_unnormalized(0.5 * (m + m.adjoint()));
}

/// Rank-`rank` orthogonal projector onto a Haar-random subspace.
inline Matrix random_projector(Eigen::Index dim, Eigen::Index rank, Rng& rng) {
  if (rank < 0 || rank > dim) throw Error(ErrorKind::InvalidArgument, "rank out of range");
  const Matrix u = haar_unitary(dim, rng);
  const Matrix v = u.leftCols(rank);
  const Matrix p = v * v.adjoint();
  return 0.5 * (p + p.adjoint());
}

}  // namespace qjoint
