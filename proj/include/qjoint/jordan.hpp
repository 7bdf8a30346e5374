#pragma once

// Simultaneous block decomposition of two orthogonal projectors and the
// commuting repair of the second one.
//
// Two-dimensional blocks come from the eigenvectors of P1 P2 P1 with
// eigenvalue c = cos^2(theta) strictly inside (snap, 1 - snap): v1 is the
// eigenvector, v2 = P2 v1 / ||P2 v1|| and v1_perp = (P2 - c) v1 normalized, so
// that v2 = cos(theta) v1 + sin(theta) v1_perp. The remaining space is spanned
// by common eigenvectors of P1 and P2 (the one-dimensional blocks).

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qjoint/linalg.hpp"

namespace qjoint {

struct OneDimBlock {
  Vector u;
  int lambda1 = 0;  // eigenvalue of P1 on u
  int lambda2 = 0;  // eigenvalue of P2 on u
};

struct TwoDimBlock {
  Vector v1;
  Vector v1_perp;
  double theta = 0.0;  // in (0, pi/2); cos(theta) = <v1|v2>

  Vector v2() const { return std::cos(theta) * v1 + std::sin(theta) * v1_perp; }
};

struct JordanDecomposition {
  Eigen::Index dim = 0;
  std::vector<OneDimBlock> one_dim_blocks;
  std::vector<TwoDimBlock> two_dim_blocks;

  Matrix reconstruct_p1() const {
    Matrix p = Matrix::Zero(dim, dim);
    for (const auto& b : one_dim_blocks)
      if (b.lambda1) p += outer(b.u);
    for (const auto& b : two_dim_blocks) p += outer(b.v1);
    return p;
  }

  Matrix reconstruct_p2() const {
    Matrix p = Matrix::Zero(dim, dim);
    for (const auto& b : one_dim_blocks)
      if (b.lambda2) p += outer(b.u);
    for (const auto& b : two_dim_blocks) p += outer(b.v2());
    return p;
  }

  /// Columns: every u, then v1 and v1_perp of each two-dimensional block.
  Matrix basis() const {
    Matrix m(dim, static_cast<Eigen::Index>(one_dim_blocks.size() + 2 * two_dim_blocks.size()));
    Eigen::Index c = 0;
    for (const auto& b : one_dim_blocks) m.col(c++) = b.u;
    for (const auto& b : two_dim_blocks) {
      m.col(c++) = b.v1;
      m.col(c++) = b.v1_perp;
    }
    return m;
  }

  /// max |<e_i|e_j> - delta_ij| over the basis vectors.
  double orthonormality_residual() const {
    const Matrix b = basis();
    return max_abs(b.adjoint() * b - identity(b.cols()));
  }
};

struct JordanOptions {
  double tolerance = tol::norm;
  /// cos^2(theta) within this distance of 0 or 1 counts as a shared eigenvector.
  double angle_snap = 1e-9;
};

inline void require_projector(const Matrix& p, const char* what, double tolerance) {
  require_square(p, what);
  const double residual = projector_residual(p);
  if (residual > tolerance * std::max<double>(1.0, static_cast<double>(p.rows())))
    throw Error(ErrorKind::NotProjector, std::string(what) + " projector residual " + std::to_string(residual));
}

inline JordanDecomposition jordan_decompose(const Matrix& p1_in, const Matrix& p2_in, JordanOptions options = {}) {
  require_projector(p1_in, "P1", options.tolerance);
  require_projector(p2_in, "P2", options.tolerance);
  require_dim(p2_in.rows(), p1_in.rows(), "P2");
  const Eigen::Index d = p1_in.rows();
  const Matrix p1 = 0.5 * (p1_in + p1_in.adjoint());
  const Matrix p2 = 0.5 * (p2_in + p2_in.adjoint());

  JordanDecomposition out;
  out.dim = d;

  const HermitianEigen sandwich = hermitian_eigendecompose(p1 * p2 * p1, Tolerance(1e-8));
  Matrix span_2d = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double c = sandwich.values[k];
    if (!(c > options.angle_snap && c < 1.0 - options.angle_snap)) continue;
    Vector v1 = p1 * sandwich.vectors.col(k);
    v1.normalize();
    const Vector partner = p2 * v1 - c * v1;
    const double partner_norm = partner.norm();
    const double expected = std::sqrt(c * (1.0 - c));
    if (partner_norm < options.tolerance || std::abs(partner_norm - expected) > 1e-6)
      throw Error(ErrorKind::DegeneratePairingFailure,
                  "cannot pair eigenvector with cos^2(theta) = " + std::to_string(c));
    TwoDimBlock block{v1, partner / partner_norm, std::acos(std::sqrt(c))};
    span_2d += outer(block.v1) + outer(block.v1_perp);
    out.two_dim_blocks.push_back(std::move(block));
  }

  // On the complement P1 and P2 commute; 1 + P1 + 2 P2 has eigenvalue
  // 1 + lambda1 + 2 lambda2 there and 0 on the two-dimensional blocks.
  const Matrix complement = identity(d) - span_2d;
  const Matrix labeller = complement * (identity(d) + p1 + 2.0 * p2) * complement;
  const HermitianEigen shared = hermitian_eigendecompose(0.5 * (labeller + labeller.adjoint()), Tolerance(1e-6));
  for (Eigen::Index k = 0; k < d; ++k) {
    const double label = shared.values[k];
    if (label < 0.5) continue;
    const long code = std::lround(label - 1.0);
    out.one_dim_blocks.push_back({shared.vectors.col(k), static_cast<int>(code & 1), static_cast<int>((code >> 1) & 1)});
  }
  const auto total = static_cast<Eigen::Index>(out.one_dim_blocks.size() + 2 * out.two_dim_blocks.size());
  if (total != d)
    throw Error(ErrorKind::DegeneratePairingFailure,
                "block dimensions sum to " + std::to_string(total) + " instead of " + std::to_string(d));
  return out;
}

struct RepairResult {
  Matrix p2_prime;
  double epsilon = 0.0;            // ||(P1 P2 - P2 P1) psi||
  double on_state_distance = 0.0;  // ||(P2' - P2) psi||
  double commutator_norm = 0.0;    // ||[P1, P2']||_F
  double projector_residual = 0.0; // ||P2'^2 - P2'||_F
  double block_sum = 0.0;          // sum_k sin^2 cos^2 (|<v1_perp|psi>|^2 + |<v1|psi>|^2)
  double identity_residual = 0.0;  // |epsilon^2 - block_sum|
  double worst_branch_slack = 0.0; // max over blocks of (lhs - rhs) of the per-block bound; <= 0 expected
  JordanDecomposition decomposition;

  double bound() const { return std::numbers::sqrt2 * epsilon; }
};

/// Replaces each two-dimensional block of P2 by |v1><v1| when theta <= pi/4
/// and by |v1_perp><v1_perp| otherwise; one-dimensional blocks are kept.
inline RepairResult repair_projector(const Matrix& p1, const Matrix& p2, const StateVector& psi,
                                     JordanOptions options = {}) {
  require_dim(psi.dim(), p1.rows(), "state");
  RepairResult result;
  result.decomposition = jordan_decompose(p1, p2, options);
  const JordanDecomposition& jd = result.decomposition;
  const Eigen::Index d = jd.dim;
  const Vector& v = psi.amplitudes();

  Matrix p2_prime = Matrix::Zero(d, d);
  for (const auto& b : jd.one_dim_blocks)
    if (b.lambda2) p2_prime += outer(b.u);
  double worst_slack = -std::numeric_limits<double>::infinity();
  for (const auto& b : jd.two_dim_blocks) {
    const bool keep_v1 = b.theta <= std::numbers::pi / 4.0;
    const Vector& target = keep_v1 ? b.v1 : b.v1_perp;
    p2_prime += outer(target);
    const double s = std::sin(b.theta);
    const double c = std::cos(b.theta);
    const double weight = std::norm(b.v1_perp.dot(v)) + std::norm(b.v1.dot(v));
    result.block_sum += s * s * c * c * weight;
    const Vector v2 = b.v2();
    const double lhs = (target * target.dot(v) - v2 * v2.dot(v)).squaredNorm();
    worst_slack = std::max(worst_slack, lhs - 2.0 * s * s * c * c * weight);
  }
  result.worst_branch_slack = jd.two_dim_blocks.empty() ? 0.0 : worst_slack;
  result.p2_prime = 0.5 * (p2_prime + p2_prime.adjoint());

  const Matrix p1h = 0.5 * (p1 + p1.adjoint());
  const Matrix p2h = 0.5 * (p2 + p2.adjoint());
  result.epsilon = (p1h * (p2h * v) - p2h * (p1h * v)).norm();
  result.on_state_distance = ((result.p2_prime - p2h) * v).norm();
  result.commutator_norm = commutator_norm(p1h, result.p2_prime);
  result.projector_residual = (result.p2_prime * result.p2_prime - result.p2_prime).norm();
  result.identity_residual = std::abs(result.epsilon * result.epsilon - result.block_sum);
  return result;
}

}  // namespace qjoint
