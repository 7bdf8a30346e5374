#pragma once

// Evidence objects shared by the property checks and the permutator checks.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "qjoint/measurement.hpp"

namespace qjoint {

/// Identifies a state checked by a property: member `source` of the state
/// family, optionally followed by a sequence of measurement blocks (the
/// history of an orbit state, first block applied first).
struct StateRef {
  std::size_t source = 0;
  std::vector<IndexSet> blocks;
  std::vector<OutcomeTuple> outcomes;
};

struct Witness {
  std::string kind;  // sub-check that produced the residual
  StateRef state;
  std::vector<IndexSet> index_sets;
  std::vector<OutcomeTuple> outcomes;
  double residual = 0.0;
};

struct PropertyReport {
  std::string property_name;
  double worst_residual = 0.0;
  double tolerance = 0.0;
  std::vector<Witness> witnesses;  // violations, worst first
  bool passed = true;
  bool prerequisites_met = true;
  /// "pass", "fail", "not_applicable" or "contradiction".
  std::string status = "pass";
  std::size_t evaluations = 0;
};

/// Accumulates residuals for one report, keeping the worst violations.
class WitnessCollector {
 public:
  WitnessCollector(double tolerance, std::size_t max_witnesses)
      : tolerance_(tolerance), max_witnesses_(max_witnesses) {}

  /// `make` is only invoked when the residual is a violation worth keeping.
  template <typename MakeWitness>
  void add(double residual, MakeWitness&& make) {
    ++evaluations_;
    if (!(residual <= worst_)) worst_ = residual;  // NaN propagates as a failure
    if (residual <= tolerance_) return;
    ++violations_;
    if (witnesses_.size() >= max_witnesses_ && residual <= witnesses_.back().residual) return;
    Witness w = make();
    w.residual = residual;
    const auto pos = std::upper_bound(witnesses_.begin(), witnesses_.end(), residual,
                                      [](double r, const Witness& x) { return r > x.residual; });
    witnesses_.insert(pos, std::move(w));
    if (witnesses_.size() > max_witnesses_) witnesses_.pop_back();
  }

  void merge_into(PropertyReport& report) const {
    report.worst_residual = std::max(report.worst_residual, worst_);
    report.evaluations += evaluations_;
    for (const Witness& w : witnesses_) {
      const auto pos = std::upper_bound(report.witnesses.begin(), report.witnesses.end(), w.residual,
                                        [](double r, const Witness& x) { return r > x.residual; });
      report.witnesses.insert(pos, w);
    }
    if (report.witnesses.size() > max_witnesses_) report.witnesses.resize(max_witnesses_);
    report.tolerance = tolerance_;
    report.passed = report.worst_residual <= tolerance_;
    report.status = report.passed ? "pass" : "fail";
  }

  PropertyReport finish(std::string name) const {
    PropertyReport r;
    r.property_name = std::move(name);
    merge_into(r);
    return r;
  }

  std::size_t violations() const noexcept { return violations_; }

 private:
  double tolerance_;
  std::size_t max_witnesses_;
  double worst_ = 0.0;
  std::size_t evaluations_ = 0;
  std::size_t violations_ = 0;
  std::vector<Witness> witnesses_;
};

}  // namespace qjoint
