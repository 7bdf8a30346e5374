#pragma once

// On-state permutators of square-root operators and permutability verdicts.
//
// For operators (R_1, ..., R_s) the reference ordering applies R_1 first:
// R_s ... R_1 psi R_1^dagger ... R_s^dagger. A permutation sigma compares it
// with R_{sigma(s)} ... R_{sigma(1)}.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qjoint/combinatorics.hpp"
#include "qjoint/distribution.hpp"
#include "qjoint/linalg.hpp"
#include "qjoint/measurement.hpp"

namespace qjoint {

namespace detail {

inline void require_ops(std::span<const Matrix> ops, Eigen::Index dim, const Permutation& sigma) {
  if (sigma.size() != ops.size())
    throw Error(ErrorKind::DimensionMismatch, "permutation size does not match operator count");
  for (const Matrix& op : ops) {
    require_square(op, "operator");
    require_dim(op.rows(), dim, "operator");
  }
}

/// R_{sigma(s)} ... R_{sigma(1)}.
inline Matrix ordered_product(std::span<const Matrix> ops, const Permutation& sigma) {
  Matrix product = identity(ops.empty() ? 1 : ops.front().rows());
  for (std::size_t k = 0; k < ops.size(); ++k) product = ops[static_cast<std::size_t>(sigma(k))] * product;
  return product;
}

}  // namespace detail

/// Tr(R_s...R_1 psi R_1^+...R_s^+) - Tr(R_sigma(s)...R_sigma(1) psi R_sigma(1)^+...R_sigma(s)^+).
inline double permutator_trace(std::span<const Matrix> ops, const DensityMatrix& psi, const Permutation& sigma) {
  detail::require_ops(ops, psi.dim(), sigma);
  const auto sequenced = [&](const Permutation& order) {
    const Matrix r = detail::ordered_product(ops, order);
    return trace_product(r * psi.matrix(), r.adjoint()).real();
  };
  return sequenced(Permutation::identity(ops.size())) - sequenced(sigma);
}

/// ||(R_s...R_1 - R_sigma(s)...R_sigma(1)) phi||.
inline double vector_permutation_defect(std::span<const Matrix> ops, const Vector& phi, const Permutation& sigma) {
  detail::require_ops(ops, phi.size(), sigma);
  Vector reference = phi;
  Vector permuted = phi;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    reference = ops[k] * reference;
    permuted = ops[static_cast<std::size_t>(sigma(k))] * permuted;
  }
  return (reference - permuted).norm();
}

inline double vector_permutation_defect(std::span<const Matrix> ops, const StateVector& phi, const Permutation& sigma) {
  return vector_permutation_defect(ops, phi.amplitudes(), sigma);
}

/// Entry (i, j) is ||(R_i R_j - R_j R_i) phi||.
inline Eigen::MatrixXd pairwise_commutation_defects(std::span<const Matrix> ops, const Vector& phi) {
  const auto n = static_cast<Eigen::Index>(ops.size());
  for (const Matrix& op : ops) require_dim(op.rows(), phi.size(), "operator");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = ops[static_cast<std::size_t>(i)];
      const auto& b = ops[static_cast<std::size_t>(j)];
      out(i, j) = out(j, i) = (a * (b * phi) - b * (a * phi)).norm();
    }
  return out;
}

inline Eigen::MatrixXd pairwise_commutation_defects(std::span<const Matrix> ops, const StateVector& phi) {
  return pairwise_commutation_defects(ops, phi.amplitudes());
}

enum class PermutabilityMode {
  /// Vector equalities on pure states; binary projective families use only
  /// the outcome-1 projectors.
  Vector,
  /// Trace permutators over every outcome tuple.
  Trace,
};

struct StateDefects {
  std::size_t state_id = 0;
  double trace_defect = 0.0;
  double vector_defect = 0.0;
  bool pure = false;
};

struct PermutatorReport {
  std::size_t s = 0;
  double worst_trace_defect = 0.0;
  double worst_vector_defect = 0.0;
  Permutation witness_permutation;
  IndexSet witness_subset;
  OutcomeTuple witness_outcomes;
  std::size_t witness_state = 0;
  std::vector<StateDefects> per_state;
  double tolerance = 0.0;
  bool passed = true;
  std::string mode;
  std::size_t evaluations = 0;
};

namespace detail {

/// Pure states give their unit vector, mixed states nothing.
inline std::optional<Vector> pure_vector(const DensityMatrix& rho) {
  if (std::abs(rho.purity() - 1.0) > 1e-9) return std::nullopt;
  const HermitianEigen eig = hermitian_eigendecompose(rho.matrix());
  return Vector(eig.vectors.col(eig.vectors.cols() - 1));
}

struct OperatorChoice {
  IndexSet subset;
  OutcomeTuple outcomes;
  std::vector<Matrix> ops;
};

class PermutatorScan {
 public:
  PermutatorScan(const StateFamily& f, double tolerance, std::size_t s, std::string mode) {
    report_.s = s;
    report_.tolerance = tolerance;
    report_.mode = std::move(mode);
    report_.witness_permutation = Permutation::identity(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
      pure_.push_back(pure_vector(f[i]));
      report_.per_state.push_back({i, 0.0, 0.0, pure_.back().has_value()});
    }
  }

  void scan(const StateFamily& f, const OperatorChoice& choice, bool use_vector, bool use_trace) {
    const std::vector<Permutation> sigmas = Permutation::all(choice.ops.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      StateDefects& defects = report_.per_state[i];
      for (const Permutation& sigma : sigmas) {
        if (sigma.is_identity()) continue;
        double score = 0.0;
        if (use_trace || !pure_[i]) {
          const double t = std::abs(permutator_trace(choice.ops, f[i], sigma));
          defects.trace_defect = std::max(defects.trace_defect, t);
          report_.worst_trace_defect = std::max(report_.worst_trace_defect, t);
          score = std::max(score, t);
        }
        if (pure_[i] && (use_vector || use_trace)) {
          const double v = vector_permutation_defect(choice.ops, *pure_[i], sigma);
          defects.vector_defect = std::max(defects.vector_defect, v);
          report_.worst_vector_defect = std::max(report_.worst_vector_defect, v);
          if (use_vector) score = std::max(score, v);
        }
        ++report_.evaluations;
        if (score > best_) {
          best_ = score;
          report_.witness_permutation = sigma;
          report_.witness_subset = choice.subset;
          report_.witness_outcomes = choice.outcomes;
          report_.witness_state = i;
        }
      }
    }
  }

  PermutatorReport finish() {
    report_.passed = best_ <= report_.tolerance;
    return report_;
  }

 private:
  PermutatorReport report_;
  std::vector<std::optional<Vector>> pure_;
  double best_ = 0.0;
};

inline std::vector<OperatorChoice> all_outcome_choices(const MeasurementFamily& family, const IndexSet& subset) {
  std::vector<OperatorChoice> out;
  const std::vector<int> idx = subset.indices();
  for (const OutcomeTuple& y : outcome_tuples(family, subset)) {
    OperatorChoice c{subset, y, {}};
    for (std::size_t k = 0; k < idx.size(); ++k) c.ops.push_back(family.root(static_cast<std::size_t>(idx[k]), y[k]));
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<std::uint32_t> subsets_of_size(std::size_t n, std::size_t t) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask : nonempty_submasks(IndexSet::full(n).mask()))
    if (static_cast<std::size_t>(std::popcount(mask)) == t) out.push_back(mask);
  return out;
}

}  // namespace detail

/// Trace-form permutability of every choice of one square root per
/// measurement, over all orderings and all states of the family.
inline PermutatorReport is_fully_permutable(const MeasurementFamily& family, const StateFamily& f,
                                            double tolerance = tol::check, std::size_t max_measurements = 6) {
  require_compatible(family, f.dim());
  if (family.size() > max_measurements)
    throw Error(ErrorKind::CombinatorialLimitExceeded, "too many measurements for full permutability scan");
  detail::PermutatorScan scan(f, tolerance, family.size(), "full_trace");
  for (const auto& choice : detail::all_outcome_choices(family, family.all_indices()))
    scan.scan(f, choice, false, true);
  return scan.finish();
}

/// Permutability of every size-t subset of the measurements.
inline PermutatorReport is_t_permutable(const MeasurementFamily& family, const StateFamily& f, std::size_t t,
                                        double tolerance = tol::check,
                                        PermutabilityMode mode = PermutabilityMode::Vector,
                                        std::size_t max_measurements = 6) {
  require_compatible(family, f.dim());
  if (t == 0 || t > family.size()) throw Error(ErrorKind::InvalidArgument, "t must lie in [1, N]");
  if (family.size() > max_measurements)
    throw Error(ErrorKind::CombinatorialLimitExceeded, "too many measurements for permutability scan");
  const bool vector_mode = mode == PermutabilityMode::Vector;
  const bool projector_only = vector_mode && family.all_binary_projective(std::max(tolerance, tol::check));
  detail::PermutatorScan scan(f, tolerance, t, vector_mode ? "vector" : "trace");
  for (std::uint32_t mask : detail::subsets_of_size(family.size(), t)) {
    const IndexSet subset = IndexSet::from_mask(mask);
    if (projector_only) {
      detail::OperatorChoice c{subset, OutcomeTuple(t, 1), {}};
      for (int i : subset.indices()) c.ops.push_back(family.root(static_cast<std::size_t>(i), 1));
      scan.scan(f, c, true, false);
    } else {
      for (const auto& choice : detail::all_outcome_choices(family, subset)) scan.scan(f, choice, vector_mode, !vector_mode);
    }
  }
  return scan.finish();
}

/// Vector-level t-permutability with every projector optionally replaced by
/// its complement (all 2^t choices per subset).
inline PermutatorReport complemented_t_permutable(const MeasurementFamily& family, const StateFamily& f, std::size_t t,
                                                  double tolerance = tol::check, std::size_t max_measurements = 6) {
  require_compatible(family, f.dim());
  if (!family.all_binary_projective(std::max(tolerance, tol::check)))
    throw Error(ErrorKind::NotProjective, "complemented permutability needs binary projective measurements");
  if (t == 0 || t > family.size()) throw Error(ErrorKind::InvalidArgument, "t must lie in [1, N]");
  if (family.size() > max_measurements)
    throw Error(ErrorKind::CombinatorialLimitExceeded, "too many measurements for permutability scan");
  detail::PermutatorScan scan(f, tolerance, t, "vector_complemented");
  for (std::uint32_t mask : detail::subsets_of_size(family.size(), t))
    for (const auto& choice : detail::all_outcome_choices(family, IndexSet::from_mask(mask)))
      scan.scan(f, choice, true, false);
  return scan.finish();
}

}  // namespace qjoint
