#pragma once

// POVMs, their square-root operators, outcome probabilities and
// post-measurement states, plus the ordered products of square roots used for
// sequences of measurements.
//
// Measurement indices are 0-based. For a sequence over an index set S with
// outcomes y the square root is R_S^y = R_{S(1)}^{y_1} R_{S(2)}^{y_2} ... R_{S(t)}^{y_t},
// so the highest index acts on the state first.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qjoint/linalg.hpp"

namespace qjoint {

using Outcome = int;

class Povm {
 public:
  Povm(std::vector<Outcome> outcomes, std::vector<Matrix> elements, Tolerance tolerance = Tolerance(tol::psd))
      : outcomes_(std::move(outcomes)), elements_(std::move(elements)) {
    if (outcomes_.empty() || outcomes_.size() != elements_.size())
      throw Error(ErrorKind::InvalidArgument, "POVM needs one element per outcome label");
    {
      std::vector<Outcome> sorted = outcomes_;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.front() < 0)
        throw Error(ErrorKind::InvalidArgument, "outcome labels must be distinct and non-negative");
    }
    require_square(elements_.front(), "POVM element");
    const Eigen::Index d = elements_.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (Matrix& q : elements_) {
      require_square(q, "POVM element");
      require_dim(q.rows(), d, "POVM element");
      const double herm = hermiticity_residual(q);
      if (herm > tolerance.value())
        throw Error(ErrorKind::NotHermitian, "POVM element symmetry residual " + std::to_string(herm));
      q = 0.5 * (q + q.adjoint()).eval();
      const double lo = min_eigenvalue(q);
      if (lo < -tolerance.value())
        throw Error(ErrorKind::NotPsd, "POVM element eigenvalue " + std::to_string(lo));
      sum += q;
    }
    const double completeness = (sum - identity(d)).norm();
    if (completeness > static_cast<double>(d) * tolerance.value())
      throw Error(ErrorKind::InvalidArgument,
                  "POVM elements do not sum to identity (residual " + std::to_string(completeness) + ")");
  }

  /// Binary projective measurement {0 -> 1 - P, 1 -> P}.
  static Povm binary_projector(const Matrix& p, Tolerance tolerance = Tolerance(tol::psd)) {
    require_square(p, "projector");
    return Povm({0, 1}, {identity(p.rows()) - p, p}, tolerance);
  }

  static Povm computational_basis(Eigen::Index dim) {
    std::vector<Outcome> labels(static_cast<std::size_t>(dim));
    std::vector<Matrix> elements;
    std::iota(labels.begin(), labels.end(), 0);
    for (Eigen::Index k = 0; k < dim; ++k) elements.push_back(StateVector::basis(dim, k).projector());
    return Povm(std::move(labels), std::move(elements));
  }

  Eigen::Index dim() const noexcept { return elements_.front().rows(); }
  std::size_t size() const noexcept { return outcomes_.size(); }
  const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }
  const std::vector<Matrix>& elements() const noexcept { return elements_; }

  std::size_t index_of(Outcome label) const {
    const auto it = std::find(outcomes_.begin(), outcomes_.end(), label);
    if (it == outcomes_.end())
      throw Error(ErrorKind::UnknownOutcome, "outcome " + std::to_string(label) + " is not a label of this POVM");
    return static_cast<std::size_t>(it - outcomes_.begin());
  }

  const Matrix& element(Outcome label) const { return elements_[index_of(label)]; }

  bool is_projective(double tolerance = tol::check) const {
    return std::all_of(elements_.begin(), elements_.end(),
                       [&](const Matrix& q) { return max_abs(q * q - q) <= tolerance; });
  }

  bool is_binary() const {
    return outcomes_.size() == 2 && std::find(outcomes_.begin(), outcomes_.end(), 0) != outcomes_.end() &&
           std::find(outcomes_.begin(), outcomes_.end(), 1) != outcomes_.end();
  }

 private:
  std::vector<Outcome> outcomes_;
  std::vector<Matrix> elements_;
};

struct SquareRootOperator {
  Outcome outcome;
  Matrix matrix;
};

/// Strictly ascending subset of {0, ..., N-1}, stored as a bitmask.
class IndexSet {
 public:
  IndexSet() = default;

  static IndexSet from_mask(std::uint32_t mask) {
    IndexSet s;
    s.mask_ = mask;
    return s;
  }

  static IndexSet full(std::size_t n) { return from_mask(n >= 32 ? ~0U : ((1U << n) - 1U)); }

  explicit IndexSet(std::initializer_list<int> indices) {
    for (int i : indices) {
      if (i < 0 || i >= 32) throw Error(ErrorKind::InvalidArgument, "index out of range");
      mask_ |= 1U << i;
    }
  }

  std::uint32_t mask() const noexcept { return mask_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }
  bool empty() const noexcept { return mask_ == 0; }
  bool contains(int i) const noexcept { return (mask_ >> i) & 1U; }

  std::vector<int> indices() const {
    std::vector<int> out;
    for (std::uint32_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  IndexSet complement(std::size_t n) const { return from_mask(full(n).mask_ & ~mask_); }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::uint32_t mask_ = 0;
};

/// Outcome labels, one per index of an associated IndexSet (or of [N]).
using OutcomeTuple = std::vector<Outcome>;

/// x_S: the entries of a full tuple at the positions in S.
inline OutcomeTuple restrict_outcomes(const OutcomeTuple& x, const IndexSet& s) {
  OutcomeTuple out;
  for (int i : s.indices()) {
    if (static_cast<std::size_t>(i) >= x.size())
      throw Error(ErrorKind::DimensionMismatch, "outcome tuple shorter than index set");
    out.push_back(x[static_cast<std::size_t>(i)]);
  }
  return out;
}

class MeasurementFamily {
 public:
  /// Square roots default to the Hermitian PSD root of every element.
  explicit MeasurementFamily(std::vector<Povm> povms, Tolerance tolerance = Tolerance(tol::psd))
      : povms_(std::move(povms)) {
    validate_dims();
    for (const Povm& povm : povms_) {
      std::vector<SquareRootOperator> r;
      for (std::size_t k = 0; k < povm.size(); ++k)
        r.push_back({povm.outcomes()[k], psd_sqrt(povm.elements()[k], tolerance)});
      roots_.push_back(std::move(r));
    }
  }

  /// Explicit square roots; each must satisfy R^dagger R = Q within tolerance.
  MeasurementFamily(std::vector<Povm> povms, std::vector<std::vector<SquareRootOperator>> roots,
                    Tolerance tolerance = Tolerance(tol::psd))
      : povms_(std::move(povms)), roots_(std::move(roots)) {
    validate_dims();
    if (roots_.size() != povms_.size())
      throw Error(ErrorKind::InvalidArgument, "need one list of square roots per POVM");
    for (std::size_t i = 0; i < povms_.size(); ++i) {
      if (roots_[i].size() != povms_[i].size())
        throw Error(ErrorKind::InvalidArgument, "need one square root per outcome");
      for (const SquareRootOperator& r : roots_[i]) {
        const Matrix& q = povms_[i].element(r.outcome);
        require_dim(r.matrix.rows(), q.rows(), "square root");
        require_dim(r.matrix.cols(), q.cols(), "square root");
        const double residual = (r.matrix.adjoint() * r.matrix - q).norm();
        if (residual > static_cast<double>(q.rows()) * tolerance.value())
          throw Error(ErrorKind::InvalidArgument, "square root does not reproduce its POVM element");
      }
    }
  }

  /// Family of binary projective measurements {1 - P_i, P_i}.
  static MeasurementFamily from_projectors(const std::vector<Matrix>& projectors,
                                           Tolerance tolerance = Tolerance(tol::psd)) {
    std::vector<Povm> povms;
    for (const Matrix& p : projectors) povms.push_back(Povm::binary_projector(p, tolerance));
    return MeasurementFamily(std::move(povms), tolerance);
  }

  std::size_t size() const noexcept { return povms_.size(); }
  Eigen::Index dim() const noexcept { return povms_.front().dim(); }
  const std::vector<Povm>& povms() const noexcept { return povms_; }
  const Povm& povm(std::size_t i) const { return povms_.at(i); }

  const Matrix& root(std::size_t i, Outcome label) const {
    const std::size_t k = povms_.at(i).index_of(label);
    return roots_[i][k].matrix;
  }

  const std::vector<SquareRootOperator>& roots(std::size_t i) const { return roots_.at(i); }

  IndexSet all_indices() const { return IndexSet::full(size()); }

  bool all_binary_projective(double tolerance = tol::check) const {
    return std::all_of(povms_.begin(), povms_.end(),
                       [&](const Povm& p) { return p.is_binary() && p.is_projective(tolerance); });
  }

 private:
  void validate_dims() const {
    if (povms_.empty()) throw Error(ErrorKind::InvalidArgument, "measurement family is empty");
    if (povms_.size() > 31) throw Error(ErrorKind::CombinatorialLimitExceeded, "too many measurements");
    for (const Povm& p : povms_) require_dim(p.dim(), povms_.front().dim(), "POVM");
  }

  std::vector<Povm> povms_;
  std::vector<std::vector<SquareRootOperator>> roots_;
};

/// Tr(Q^x rho), clamped to [0, 1] after checking it lies in [-tol, 1 + tol].
inline double outcome_probability(const Povm& povm, Outcome outcome, const DensityMatrix& rho,
                                  Tolerance tolerance = Tolerance(tol::check)) {
  require_dim(rho.dim(), povm.dim(), "outcome_probability state");
  const double p = trace_product(povm.element(outcome), rho.matrix()).real();
  if (p < -tolerance.value() || p > 1.0 + tolerance.value())
    throw Error(ErrorKind::InvalidArgument, "probability " + std::to_string(p) + " outside [0, 1]");
  return std::clamp(p, 0.0, 1.0);
}

struct PostMeasurement {
  DensityMatrix state;
  double probability;
};

/// rho_x = A rho A^dagger / Tr(Q rho).
inline PostMeasurement post_measurement_state(const SquareRootOperator& root, const DensityMatrix& rho,
                                              double prob_tolerance = tol::probability) {
  require_dim(rho.dim(), root.matrix.rows(), "post_measurement_state");
  const Matrix unnormalized = root.matrix * rho.matrix() * root.matrix.adjoint();
  const double p = unnormalized.trace().real();
  if (!(p > prob_tolerance))
    throw Error(ErrorKind::ZeroProbabilityBranch,
                "outcome " + std::to_string(root.outcome) + " has probability " + std::to_string(p));
  return {DensityMatrix::from_branch(unnormalized, p), p};
}

/// R_S^y. The empty index set gives the identity.
inline Matrix sequence_root(const MeasurementFamily& family, const IndexSet& s, const OutcomeTuple& y) {
  const std::vector<int> idx = s.indices();
  if (idx.size() != y.size())
    throw Error(ErrorKind::DimensionMismatch, "outcome tuple length does not match index set");
  if (!idx.empty() && static_cast<std::size_t>(idx.back()) >= family.size())
    throw Error(ErrorKind::InvalidArgument, "index set exceeds family size");
  Matrix r = identity(family.dim());
  for (std::size_t k = 0; k < idx.size(); ++k) r = r * family.root(static_cast<std::size_t>(idx[k]), y[k]);
  return r;
}

/// Q_S^y = (R_S^y)^dagger R_S^y.
inline Matrix sequence_povm_element(const MeasurementFamily& family, const IndexSet& s, const OutcomeTuple& y) {
  const Matrix r = sequence_root(family, s, y);
  const Matrix q = r.adjoint() * r;
  return 0.5 * (q + q.adjoint());
}

/// All outcome tuples for S, lexicographic in each POVM's label order.
inline std::vector<OutcomeTuple> outcome_tuples(const MeasurementFamily& family, const IndexSet& s) {
  std::vector<OutcomeTuple> out{OutcomeTuple{}};
  for (int i : s.indices()) {
    std::vector<OutcomeTuple> next;
    for (const OutcomeTuple& prefix : out)
      for (Outcome label : family.povm(static_cast<std::size_t>(i)).outcomes()) {
        OutcomeTuple t = prefix;
        t.push_back(label);
        next.push_back(std::move(t));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace qjoint
