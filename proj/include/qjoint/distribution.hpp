#pragma once

// The joint-outcome functional W, its conditionals, orbits of post-measurement
// states, and numerical checks of the four quantum distribution properties
// (marginals, disjointness, reducibility, sequential independence) together
// with the on-state projector condition.
//
// Quantifier domains follow the definitions literally: marginals are checked
// on the orbit over all measurements, disjointness and reducibility for a set
// S on the orbit over the complement of S, and sequential independence and
// the on-state projector condition on the state family itself.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qjoint/combinatorics.hpp"
#include "qjoint/linalg.hpp"
#include "qjoint/measurement.hpp"
#include "qjoint/random.hpp"
#include "qjoint/report.hpp"

namespace qjoint {

class StateFamily {
 public:
  explicit StateFamily(std::vector<DensityMatrix> states) : states_(std::move(states)) {
    if (states_.empty()) throw Error(ErrorKind::InvalidArgument, "state family is empty");
    for (const DensityMatrix& s : states_) require_dim(s.dim(), states_.front().dim(), "state family member");
  }

  static StateFamily pure(const std::vector<StateVector>& vectors) {
    std::vector<DensityMatrix> states;
    for (const StateVector& v : vectors) states.push_back(DensityMatrix::pure(v));
    return StateFamily(std::move(states));
  }

  std::size_t size() const noexcept { return states_.size(); }
  Eigen::Index dim() const noexcept { return states_.front().dim(); }
  const std::vector<DensityMatrix>& states() const noexcept { return states_; }
  const DensityMatrix& operator[](std::size_t i) const { return states_.at(i); }

 private:
  std::vector<DensityMatrix> states_;
};

struct JointDistributionTable {
  MeasurementFamily family;
  DensityMatrix state;
  std::vector<OutcomeTuple> outcomes;  // every full tuple, lexicographic
  std::vector<double> probabilities;   // aligned with `outcomes`

  double total() const {
    double s = 0.0;
    for (double p : probabilities) s += p;
    return s;
  }

  double at(const OutcomeTuple& x) const {
    for (std::size_t k = 0; k < outcomes.size(); ++k)
      if (outcomes[k] == x) return probabilities[k];
    throw Error(ErrorKind::UnknownOutcome, "outcome tuple not in table");
  }
};

struct OrbitSpec {
  IndexSet u;
  std::size_t max_partition_blocks = 32;
  std::size_t max_states = 1'000'000;
  double dedup_tolerance = 1e-9;
  double prob_tolerance = tol::probability;
};

/// A reachable post-measurement state with its history.
struct OrbitState {
  StateRef ref;
  DensityMatrix state;
  std::uint32_t used_mask = 0;
  double weight = 1.0;  // probability of the whole history from the family state
};

struct CheckOptions {
  double tolerance = tol::check;
  std::size_t max_measurements = 6;
  Eigen::Index max_dim = 32;
  std::size_t max_partition_blocks = 0;  // 0: no cap beyond |T|
  std::size_t max_states = 1'000'000;
  double dedup_tolerance = 1e-9;
  double prob_tolerance = tol::probability;
  bool require_prerequisites = true;
  std::size_t max_witnesses = 16;
  std::size_t linearity_samples = 8;
  std::uint64_t seed = 0x51ed'2718ULL;
};

inline void require_compatible(const MeasurementFamily& family, Eigen::Index dim) {
  require_dim(dim, family.dim(), "state dimension vs measurement family");
}

/// W^rho(x) = Tr(Q_[N]^x rho).
inline double w_functional(const MeasurementFamily& family, const DensityMatrix& rho, const OutcomeTuple& x) {
  require_compatible(family, rho.dim());
  if (x.size() != family.size())
    throw Error(ErrorKind::DimensionMismatch, "outcome tuple must cover every measurement");
  return trace_product(sequence_povm_element(family, family.all_indices(), x), rho.matrix()).real();
}

/// W^rho(x | y) for outcomes y on the index set s.
inline double conditional_w(const MeasurementFamily& family, const DensityMatrix& rho, const OutcomeTuple& x,
                            const IndexSet& s, const OutcomeTuple& y, double prob_tolerance = tol::probability) {
  require_compatible(family, rho.dim());
  const Matrix r = sequence_root(family, s, y);
  const Matrix conditioned = r * rho.matrix() * r.adjoint();
  const double p = conditioned.trace().real();
  if (!(p > prob_tolerance))
    throw Error(ErrorKind::ZeroProbabilityBranch, "conditioning event has probability " + std::to_string(p));
  return w_functional(family, DensityMatrix::from_branch(conditioned, p), x);
}

inline JointDistributionTable build_joint_distribution(const MeasurementFamily& family, const DensityMatrix& rho,
                                                       double tolerance = tol::check) {
  require_compatible(family, rho.dim());
  JointDistributionTable table{family, rho, outcome_tuples(family, family.all_indices()), {}};
  table.probabilities.reserve(table.outcomes.size());
  for (const OutcomeTuple& x : table.outcomes) {
    const double w = w_functional(family, rho, x);
    if (w < -tolerance) throw Error(ErrorKind::NotPsd, "negative joint probability " + std::to_string(w));
    table.probabilities.push_back(std::max(w, 0.0));
  }
  return table;
}

namespace detail {

/// Fixed Hermitian probe with operator norm <= 1, used to bucket states.
inline Matrix dedup_probe(Eigen::Index dim) {
  Matrix k(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      k(i, j) = Complex(std::cos(1.3 * static_cast<double>(i) + 2.1 * static_cast<double>(j) + 0.5),
                        std::sin(0.7 * static_cast<double>(i) - 1.9 * static_cast<double>(j)));
  k = 0.5 * (k + k.adjoint()).eval();
  return k / k.norm();
}

/// Keeps the first of every group of states closer than `tolerance` in trace
/// distance. |Tr(K(a - b))| <= 2 T(a, b) for the probe K, and
/// ||a - b||_F <= 2 T(a, b), so both are exact pre-filters.
inline std::vector<std::size_t> dedup_indices(const std::vector<const Matrix*>& states, double tolerance) {
  std::vector<std::size_t> kept;
  if (states.empty()) return kept;
  const Matrix probe = dedup_probe(states.front()->rows());
  std::multimap<double, std::size_t> by_key;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double key = trace_product(probe, *states[i]).real();
    bool duplicate = false;
    for (auto it = by_key.lower_bound(key - 2.0 * tolerance); it != by_key.end() && it->first <= key + 2.0 * tolerance;
         ++it) {
      const Matrix& other = *states[it->second];
      if ((other - *states[i]).norm() >= 2.0 * tolerance) continue;
      if (trace_distance(other, *states[i]) < tolerance) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      by_key.emplace(key, i);
      kept.push_back(i);
    }
  }
  return kept;
}

inline void enumerate_orbit(const MeasurementFamily& family, std::uint32_t u_mask, std::size_t max_blocks,
                            std::size_t max_states, double prob_tolerance, OrbitState current,
                            std::vector<OrbitState>& out) {
  if (current.ref.blocks.size() >= max_blocks) return;
  const std::uint32_t available = u_mask & ~current.used_mask;
  for (std::uint32_t block_mask : nonempty_submasks(available)) {
    const IndexSet block = IndexSet::from_mask(block_mask);
    for (const OutcomeTuple& y : outcome_tuples(family, block)) {
      const Matrix r = sequence_root(family, block, y);
      const Matrix next = r * current.state.matrix() * r.adjoint();
      const double p = next.trace().real();
      const double weight = current.weight * p;
      if (!(weight > prob_tolerance)) continue;
      if (out.size() >= max_states)
        throw Error(ErrorKind::CombinatorialLimitExceeded,
                    "orbit enumeration exceeds " + std::to_string(max_states) + " states");
      OrbitState child{current.ref, DensityMatrix::from_branch(next, p, weight), current.used_mask | block_mask,
                       weight};
      child.ref.blocks.push_back(block);
      child.ref.outcomes.push_back(y);
      out.push_back(child);
      enumerate_orbit(family, u_mask, max_blocks, max_states, prob_tolerance, std::move(child), out);
    }
  }
}

}  // namespace detail

/// Orbit states with their histories (deduplicated, first occurrence kept).
/// Members of the family come first, in order.
inline std::vector<OrbitState> orbit(const MeasurementFamily& family, const OrbitSpec& spec, const StateFamily& f) {
  require_compatible(family, f.dim());
  if ((spec.u.mask() & ~family.all_indices().mask()) != 0)
    throw Error(ErrorKind::InvalidArgument, "orbit index set is not a subset of the measurements");
  std::vector<OrbitState> raw;
  for (std::size_t i = 0; i < f.size(); ++i) raw.push_back({StateRef{i, {}, {}}, f[i], 0U});
  for (std::size_t i = 0; i < f.size(); ++i)
    detail::enumerate_orbit(family, spec.u.mask(), spec.max_partition_blocks, spec.max_states, spec.prob_tolerance,
                            raw[i], raw);
  std::vector<const Matrix*> ptrs;
  ptrs.reserve(raw.size());
  for (const OrbitState& s : raw) ptrs.push_back(&s.state.matrix());
  std::vector<OrbitState> out;
  for (std::size_t k : detail::dedup_indices(ptrs, spec.dedup_tolerance)) out.push_back(raw[k]);
  return out;
}

inline std::vector<DensityMatrix> orbit_states(const MeasurementFamily& family, const OrbitSpec& spec,
                                               const StateFamily& f) {
  std::vector<DensityMatrix> out;
  for (OrbitState& s : orbit(family, spec, f)) out.push_back(std::move(s.state));
  return out;
}

/// Runs the property checks for one (family, state family) pair, sharing the
/// orbit enumeration and the sequence operators between checks.
class PropertyChecker {
 public:
  PropertyChecker(MeasurementFamily family, StateFamily states, CheckOptions options = {})
      : family_(std::move(family)), states_(std::move(states)), options_(options) {
    require_compatible(family_, states_.dim());
    if (family_.size() > options_.max_measurements)
      throw Error(ErrorKind::CombinatorialLimitExceeded,
                  std::to_string(family_.size()) + " measurements exceed the cap of " +
                      std::to_string(options_.max_measurements));
    if (family_.dim() > options_.max_dim)
      throw Error(ErrorKind::CombinatorialLimitExceeded, "dimension exceeds the cap");
    const std::uint32_t full = family_.all_indices().mask();
    sequences_.resize(static_cast<std::size_t>(full) + 1);
    for (std::uint32_t mask : submasks(full)) {
      const IndexSet s = IndexSet::from_mask(mask);
      Sequences& seq = sequences_[mask];
      seq.tuples = outcome_tuples(family_, s);
      for (std::size_t k = 0; k < seq.tuples.size(); ++k) {
        seq.roots.push_back(sequence_root(family_, s, seq.tuples[k]));
        seq.elements.push_back(sequence_povm_element(family_, s, seq.tuples[k]));
        seq.lookup.emplace(seq.tuples[k], k);
      }
    }
    // For every S and full tuple x, the position of x_S among the tuples of S.
    const Sequences& all = sequences_[full];
    restriction_.resize(sequences_.size());
    for (std::uint32_t mask : submasks(full)) {
      const IndexSet s = IndexSet::from_mask(mask);
      for (const OutcomeTuple& x : all.tuples)
        restriction_[mask].push_back(sequences_[mask].lookup.at(restrict_outcomes(x, s)));
    }
  }

  const MeasurementFamily& family() const noexcept { return family_; }
  const StateFamily& states() const noexcept { return states_; }
  const CheckOptions& options() const noexcept { return options_; }

  /// Deduplicated orbit over the measurements in `u_mask`.
  const std::vector<OrbitState>& orbit_over(std::uint32_t u_mask) {
    auto it = orbits_.find(u_mask);
    if (it != orbits_.end()) return it->second;
    const std::vector<OrbitState>& all = raw_orbit();
    std::vector<const Matrix*> ptrs;
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < all.size(); ++k)
      if ((all[k].used_mask & ~u_mask) == 0) {
        ptrs.push_back(&all[k].state.matrix());
        members.push_back(k);
      }
    std::vector<OrbitState> kept;
    for (std::size_t k : detail::dedup_indices(ptrs, options_.dedup_tolerance)) kept.push_back(all[members[k]]);
    return orbits_.emplace(u_mask, std::move(kept)).first->second;
  }

  PropertyReport functional_axioms() {
    const std::uint32_t full = family_.all_indices().mask();
    const Sequences& all = sequences_[full];
    const Eigen::Index d = family_.dim();
    WitnessCollector normalization(options_.tolerance, options_.max_witnesses);
    Matrix sum = Matrix::Zero(d, d);
    for (const Matrix& q : all.elements) sum += q;
    normalization.add((sum - identity(d)).norm(), [] { return Witness{"normalization", {}, {}, {}, 0.0}; });

    WitnessCollector nonneg(options_.tolerance, options_.max_witnesses);
    for (std::size_t k = 0; k < all.tuples.size(); ++k) {
      const double lo = min_eigenvalue(all.elements[k]);
      nonneg.add(std::max(0.0, -lo), [&] { return Witness{"operator_positivity", {}, {family_.all_indices()}, {all.tuples[k]}, 0.0}; });
    }
    for (std::size_t i = 0; i < states_.size(); ++i)
      for (std::size_t k = 0; k < all.tuples.size(); ++k) {
        const double w = trace_product(all.elements[k], states_[i].matrix()).real();
        nonneg.add(std::max(0.0, -w), [&] {
          return Witness{"non_negativity", StateRef{i, {}, {}}, {family_.all_indices()}, {all.tuples[k]}, 0.0};
        });
      }

    WitnessCollector linearity(options_.tolerance, options_.max_witnesses);
    Rng rng(options_.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, states_.size() - 1);
    for (std::size_t sample = 0; sample < options_.linearity_samples; ++sample) {
      const std::size_t a = pick(rng);
      const double lambda = sample == 0 ? 0.5 : unit(rng);
      // Partner alternates between family members and random states.
      const DensityMatrix partner = sample % 2 == 0 ? states_[pick(rng)] : random_density(family_.dim(), rng);
      const DensityMatrix mix(lambda * states_[a].matrix() + (1.0 - lambda) * partner.matrix());
      for (std::size_t k = 0; k < all.tuples.size(); ++k) {
        const double lhs = trace_product(all.elements[k], mix.matrix()).real();
        const double rhs = lambda * trace_product(all.elements[k], states_[a].matrix()).real() +
                           (1.0 - lambda) * trace_product(all.elements[k], partner.matrix()).real();
        linearity.add(std::abs(lhs - rhs), [&] {
          return Witness{"linearity", StateRef{a, {}, {}}, {family_.all_indices()}, {all.tuples[k]}, 0.0};
        });
      }
    }
    PropertyReport report = normalization.finish("functional_axioms");
    nonneg.merge_into(report);
    linearity.merge_into(report);
    return report;
  }

  PropertyReport marginals() {
    if (marginals_) return *marginals_;
    const std::uint32_t full = family_.all_indices().mask();
    const Sequences& all = sequences_[full];
    WitnessCollector c(options_.tolerance, options_.max_witnesses);
    for (std::size_t i = 0; i < family_.size(); ++i) {
      const IndexSet s = IndexSet::from_mask(1U << i);
      const Sequences& seq = sequences_[s.mask()];
      for (std::size_t k = 0; k < seq.tuples.size(); ++k) {
        const double residual = (seq.elements[k] - family_.povm(i).element(seq.tuples[k][0])).norm();
        c.add(residual, [&] { return Witness{"single_measurement_operator", {}, {s}, {seq.tuples[k]}, 0.0}; });
      }
    }
    for (const OrbitState& rho : orbit_over(full)) {
      std::vector<double> w(all.tuples.size());
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = trace_product(all.elements[k], rho.state.matrix()).real();
      for (std::uint32_t mask : submasks(full)) {
        const Sequences& seq = sequences_[mask];
        std::vector<double> summed(seq.tuples.size(), 0.0);
        for (std::size_t k = 0; k < w.size(); ++k) summed[restriction_[mask][k]] += w[k];
        for (std::size_t j = 0; j < seq.tuples.size(); ++j) {
          const double direct = trace_product(seq.elements[j], rho.state.matrix()).real();
          c.add(std::abs(summed[j] - direct), [&] {
            return Witness{"marginal_sum", rho.ref, {IndexSet::from_mask(mask)}, {seq.tuples[j]}, 0.0};
          });
        }
      }
    }
    marginals_ = c.finish("marginals");
    return *marginals_;
  }

  PropertyReport disjointness() {
    PropertyReport report = prerequisite_guard("disjointness");
    const std::uint32_t full = family_.all_indices().mask();
    const Sequences& all = sequences_[full];
    WitnessCollector c(options_.tolerance, options_.max_witnesses);
    for (std::uint32_t mask : nonempty_submasks(full)) {
      const Sequences& seq = sequences_[mask];
      for (const OrbitState& rho : orbit_over(full & ~mask)) {
        for (std::size_t j = 0; j < seq.tuples.size(); ++j) {
          const Matrix conditioned = seq.roots[j] * rho.state.matrix() * seq.roots[j].adjoint();
          for (std::size_t k = 0; k < all.tuples.size(); ++k) {
            if (restriction_[mask][k] == j) continue;
            const double value = std::abs(trace_product(all.elements[k], conditioned));
            c.add(value, [&] {
              return Witness{"mismatched_condition", rho.ref, {IndexSet::from_mask(mask), family_.all_indices()},
                             {seq.tuples[j], all.tuples[k]}, 0.0};
            });
          }
        }
      }
    }
    c.merge_into(report);
    return report;
  }

  PropertyReport reducibility() {
    PropertyReport report = prerequisite_guard("reducibility");
    const std::uint32_t full = family_.all_indices().mask();
    const Sequences& all = sequences_[full];
    WitnessCollector c(options_.tolerance, options_.max_witnesses);
    for (std::uint32_t mask : submasks(full)) {
      const Sequences& seq = sequences_[mask];
      for (const OrbitState& rho : orbit_over(full & ~mask)) {
        std::vector<Matrix> conditioned;
        conditioned.reserve(seq.tuples.size());
        for (std::size_t j = 0; j < seq.tuples.size(); ++j)
          conditioned.push_back(seq.roots[j] * rho.state.matrix() * seq.roots[j].adjoint());
        for (std::size_t k = 0; k < all.tuples.size(); ++k) {
          const std::size_t j = restriction_[mask][k];
          const Complex lhs = trace_product(all.elements[k], conditioned[j]);
          const Complex rhs = trace_product(all.elements[k], rho.state.matrix());
          c.add(std::abs(lhs - rhs), [&] {
            return Witness{"matched_condition", rho.ref, {IndexSet::from_mask(mask), family_.all_indices()},
                           {seq.tuples[j], all.tuples[k]}, 0.0};
          });
        }
      }
    }
    c.merge_into(report);
    return report;
  }

  PropertyReport on_state_projector() {
    const std::uint32_t full = family_.all_indices().mask();
    const Sequences& all = sequences_[full];
    WitnessCollector c(options_.tolerance, options_.max_witnesses);
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const Matrix& psi = states_[i].matrix();
      std::vector<Complex> base(all.tuples.size());
      for (std::size_t k = 0; k < base.size(); ++k) base[k] = trace_product(all.elements[k], psi);
      for (std::uint32_t mask : submasks(full)) {
        const Sequences& seq = sequences_[mask];
        for (std::size_t j = 0; j < seq.tuples.size(); ++j) {
          const Matrix conditioned = seq.roots[j] * psi * seq.roots[j].adjoint();
          for (std::size_t k = 0; k < all.tuples.size(); ++k) {
            const Complex lhs = trace_product(all.elements[k], conditioned);
            const Complex rhs = restriction_[mask][k] == j ? base[k] : Complex(0.0);
            c.add(std::abs(lhs - rhs), [&] {
              return Witness{restriction_[mask][k] == j ? "repeated_projection" : "orthogonal_projection",
                             StateRef{i, {}, {}}, {IndexSet::from_mask(mask), family_.all_indices()},
                             {seq.tuples[j], all.tuples[k]}, 0.0};
            });
          }
        }
      }
    }
    return c.finish("on_state_projector");
  }

  PropertyReport sequential_independence() {
    PropertyReport report = prerequisite_guard("sequential_independence");
    const std::uint32_t full = family_.all_indices().mask();
    WitnessCollector c(options_.tolerance, options_.max_witnesses);
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const Matrix& psi = states_[i].matrix();
      for (std::uint32_t t_mask : nonempty_submasks(full)) {
        const IndexSet t = IndexSet::from_mask(t_mask);
        const std::vector<int> t_idx = t.indices();
        for (const SetPartition& partition : set_partitions(t)) {
          if (partition.size() < 2) continue;  // a single block has only one ordering
          const std::vector<Permutation> sigmas = Permutation::all(partition.size());
          for (const OutcomeTuple& x_t : sequences_[t_mask].tuples) {
            OutcomeTuple x_full(family_.size(), 0);
            for (std::size_t k = 0; k < t_idx.size(); ++k) x_full[static_cast<std::size_t>(t_idx[k])] = x_t[k];
            const double reference = nested_trace(partition, x_full, psi);
            for (std::size_t p = 1; p < sigmas.size(); ++p) {
              const SetPartition permuted = permute_blocks(partition, sigmas[p]);
              const double value = nested_trace(permuted, x_full, psi);
              c.add(std::abs(reference - value), [&] {
                Witness w{"ordering", StateRef{i, {}, {}}, {}, {}, 0.0};
                for (const IndexSet& block : permuted) {
                  w.index_sets.push_back(block);
                  w.outcomes.push_back(restrict_outcomes(x_full, block));
                }
                return w;
              });
            }
          }
        }
      }
    }
    c.merge_into(report);
    return report;
  }

  /// Runs marginals, disjointness and reducibility; when all three hold,
  /// sequential independence must hold too. A violation then is a
  /// contradiction (a numerical or library defect), not a property failure.
  PropertyReport theorem1() {
    PropertyReport report;
    report.property_name = "theorem1_implication";
    report.tolerance = options_.tolerance;
    const bool applicable = marginals().passed && disjointness().passed && reducibility().passed;
    if (!applicable) {
      report.status = "not_applicable";
      report.passed = true;
      return report;
    }
    PropertyReport s = sequential_independence();
    report.worst_residual = s.worst_residual;
    report.witnesses = s.witnesses;
    report.evaluations = s.evaluations;
    report.passed = s.passed;
    report.status = s.passed ? "pass" : "contradiction";
    return report;
  }

 private:
  struct Sequences {
    std::vector<OutcomeTuple> tuples;
    std::vector<Matrix> roots;
    std::vector<Matrix> elements;
    std::map<OutcomeTuple, std::size_t> lookup;
  };

  const std::vector<OrbitState>& raw_orbit() {
    if (!raw_orbit_) {
      const std::size_t n = family_.size();
      OrbitSpec spec;
      spec.u = family_.all_indices();
      spec.max_partition_blocks = options_.max_partition_blocks == 0 ? n : options_.max_partition_blocks;
      spec.max_states = options_.max_states;
      spec.prob_tolerance = options_.prob_tolerance;
      std::vector<OrbitState> raw;
      for (std::size_t i = 0; i < states_.size(); ++i) raw.push_back({StateRef{i, {}, {}}, states_[i], 0U});
      for (std::size_t i = 0; i < states_.size(); ++i)
        detail::enumerate_orbit(family_, spec.u.mask(), spec.max_partition_blocks, spec.max_states,
                                spec.prob_tolerance, raw[i], raw);
      raw_orbit_ = std::move(raw);
    }
    return *raw_orbit_;
  }

  /// Tr(Q_{B_s} R_{B_{s-1}} ... R_{B_1} psi R_{B_1}^dagger ... R_{B_{s-1}}^dagger).
  double nested_trace(const SetPartition& blocks, const OutcomeTuple& x_full, const Matrix& psi) const {
    Matrix rho = psi;
    for (std::size_t k = 0; k + 1 < blocks.size(); ++k) {
      const Sequences& seq = sequences_[blocks[k].mask()];
      const Matrix& r = seq.roots[seq.lookup.at(restrict_outcomes(x_full, blocks[k]))];
      rho = r * rho * r.adjoint();
    }
    const Sequences& last = sequences_[blocks.back().mask()];
    return trace_product(last.elements[last.lookup.at(restrict_outcomes(x_full, blocks.back()))], rho).real();
  }

  /// Checks that presuppose the marginals property either refuse to run or,
  /// when prerequisites are not enforced, run with `prerequisites_met` cleared.
  PropertyReport prerequisite_guard(const std::string& name) {
    PropertyReport report;
    report.property_name = name;
    report.tolerance = options_.tolerance;
    if (marginals().passed) return report;
    if (options_.require_prerequisites)
      throw Error(ErrorKind::PrerequisiteFailed, name + " requires the marginals property");
    report.prerequisites_met = false;
    return report;
  }

  MeasurementFamily family_;
  StateFamily states_;
  CheckOptions options_;
  std::vector<Sequences> sequences_;
  std::vector<std::vector<std::size_t>> restriction_;
  std::optional<std::vector<OrbitState>> raw_orbit_;
  std::map<std::uint32_t, std::vector<OrbitState>> orbits_;
  std::optional<PropertyReport> marginals_;
};

inline PropertyReport check_functional_axioms(const MeasurementFamily& family, const StateFamily& f,
                                              CheckOptions options = {}) {
  return PropertyChecker(family, f, options).functional_axioms();
}

inline PropertyReport check_marginals(const MeasurementFamily& family, const StateFamily& f, CheckOptions options = {}) {
  return PropertyChecker(family, f, options).marginals();
}

inline PropertyReport check_disjointness(const MeasurementFamily& family, const StateFamily& f,
                                         CheckOptions options = {}) {
  return PropertyChecker(family, f, options).disjointness();
}

inline PropertyReport check_reducibility(const MeasurementFamily& family, const StateFamily& f,
                                         CheckOptions options = {}) {
  return PropertyChecker(family, f, options).reducibility();
}

inline PropertyReport check_on_state_projector(const MeasurementFamily& family, const StateFamily& f,
                                               CheckOptions options = {}) {
  return PropertyChecker(family, f, options).on_state_projector();
}

inline PropertyReport check_sequential_independence(const MeasurementFamily& family, const StateFamily& f,
                                                    CheckOptions options = {}) {
  return PropertyChecker(family, f, options).sequential_independence();
}

inline PropertyReport theorem1_check(const MeasurementFamily& family, const StateFamily& f, CheckOptions options = {}) {
  return PropertyChecker(family, f, options).theorem1();
}

}  // namespace qjoint
