#pragma once

#include <string>
#include <vector>

#include "qjoint/qjoint.hpp"

namespace fixtures {

using namespace qjoint;

/// Projectors diagonal in a shared random basis.
inline std::vector<Matrix> commuting_projectors(std::size_t n, Eigen::Index dim, Rng& rng) {
  const Matrix u = haar_unitary(dim, rng);
  std::bernoulli_distribution bit(0.5);
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXcd diag(dim);
    for (Eigen::Index k = 0; k < dim; ++k) diag[k] = bit(rng) ? 1.0 : 0.0;
    const Matrix p = u * diag.asDiagonal() * u.adjoint();
    out.push_back(0.5 * (p + p.adjoint()));
  }
  return out;
}

/// Haar-random projectors of ranks in [1, dim - 1].
inline std::vector<Matrix> generic_projectors(std::size_t n, Eigen::Index dim, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> rank(1, dim - 1);
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_projector(dim, rank(rng), rng));
  return out;
}

/// |0><0| (+) random projector on the complement, so |0> is a shared
/// eigenvector while the projectors do not commute elsewhere.
inline std::vector<Matrix> anchored_projectors(std::size_t n, Eigen::Index dim, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> rank(1, dim - 2);
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix p = Matrix::Zero(dim, dim);
    p(0, 0) = 1.0;
    p.bottomRightCorner(dim - 1, dim - 1) = random_projector(dim - 1, rank(rng), rng);
    out.push_back(p);
  }
  return out;
}

inline StateFamily random_pure_states(std::size_t count, Eigen::Index dim, Rng& rng) {
  std::vector<StateVector> states;
  for (std::size_t k = 0; k < count; ++k) states.push_back(random_state(dim, rng));
  return StateFamily::pure(states);
}

inline MeasurementFamily appendix_family() { return induced_family(load_appendix_instance()); }

inline StateFamily appendix_states() {
  return StateFamily::pure({StateVector::normalized(load_appendix_instance().state.amplitudes())});
}

inline Matrix ket0_projector() { return StateVector::basis(2, 0).projector(); }
inline Matrix plus_projector() { return StateVector::normalized(Vector::Ones(2)).projector(); }

/// P = |theta><theta| with |theta> = cos(theta)|0> + sin(theta)|1>.
inline Matrix angled_projector(double theta) {
  Vector v(2);
  v << std::cos(theta), std::sin(theta);
  return outer(v);
}

}  // namespace fixtures
