#pragma once

// Full property pipeline over a measurement family and a state family, with
// the joint-distribution verdict and its permutability counterpart.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "qjoint/distribution.hpp"
#include "qjoint/permutation.hpp"

namespace qjoint {

inline const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names{"axioms",
                                              "marginals",
                                              "disjointness",
                                              "reducibility",
                                              "on_state_projector",
                                              "sequential_independence",
                                              "theorem1",
                                              "permutability"};
  return names;
}

struct AnalysisOptions {
  CheckOptions check{};
  /// Subset of property_names(); run in the order of that list.
  std::vector<std::string> properties = property_names();
  double permutability_tolerance = tol::check;
};

struct FamilyAnalysis {
  std::vector<PropertyReport> reports;
  std::optional<PermutatorReport> permutability;
  /// All four distribution properties hold; set when all four were run.
  std::optional<bool> joint_distribution;
  /// Full permutability and the on-state projector condition hold; set when both were run.
  std::optional<bool> permutable_projectors;
  /// The two verdicts agree; set when both are available.
  std::optional<bool> verdicts_agree;
  bool passed = true;

  const PropertyReport* find(const std::string& name) const {
    for (const PropertyReport& r : reports)
      if (r.property_name == name) return &r;
    return nullptr;
  }
};

inline FamilyAnalysis analyze_family(const MeasurementFamily& family, const StateFamily& states,
                                     AnalysisOptions options = {}) {
  for (const std::string& p : options.properties)
    if (std::find(property_names().begin(), property_names().end(), p) == property_names().end())
      throw Error(ErrorKind::InvalidArgument, "unknown property '" + p + "'");
  const auto selected = [&](const std::string& name) {
    return std::find(options.properties.begin(), options.properties.end(), name) != options.properties.end();
  };

  FamilyAnalysis out;
  if (options.properties.empty()) return out;
  PropertyChecker checker(family, states, options.check);
  if (selected("axioms")) out.reports.push_back(checker.functional_axioms());
  if (selected("marginals")) out.reports.push_back(checker.marginals());
  if (selected("disjointness")) out.reports.push_back(checker.disjointness());
  if (selected("reducibility")) out.reports.push_back(checker.reducibility());
  if (selected("on_state_projector")) out.reports.push_back(checker.on_state_projector());
  if (selected("sequential_independence")) out.reports.push_back(checker.sequential_independence());
  if (selected("theorem1")) out.reports.push_back(checker.theorem1());
  if (selected("permutability")) {
    out.permutability = is_fully_permutable(family, states, options.permutability_tolerance,
                                            options.check.max_measurements);
    PropertyReport r;
    r.property_name = "permutability";
    r.tolerance = out.permutability->tolerance;
    r.worst_residual = out.permutability->worst_trace_defect;
    r.evaluations = out.permutability->evaluations;
    r.passed = out.permutability->passed;
    r.status = r.passed ? "pass" : "fail";
    if (!r.passed) {
      Witness w{"ordering", StateRef{out.permutability->witness_state, {}, {}}, {}, {}, r.worst_residual};
      for (int k : out.permutability->witness_permutation.mapping())
        w.index_sets.push_back(IndexSet{out.permutability->witness_subset.indices().at(static_cast<std::size_t>(k))});
      w.outcomes.push_back(out.permutability->witness_outcomes);
      r.witnesses.push_back(std::move(w));
    }
    out.reports.push_back(std::move(r));
  }

  const auto passed = [&](const std::string& name) -> std::optional<bool> {
    const PropertyReport* r = out.find(name);
    if (!r) return std::nullopt;
    return r->passed;
  };
  const auto m = passed("marginals");
  const auto d = passed("disjointness");
  const auto red = passed("reducibility");
  const auto s = passed("sequential_independence");
  if (m && d && red && s) out.joint_distribution = *m && *d && *red && *s;
  const auto perm = passed("permutability");
  const auto proj = passed("on_state_projector");
  if (perm && proj) out.permutable_projectors = *perm && *proj;
  if (out.joint_distribution && out.permutable_projectors)
    out.verdicts_agree = *out.joint_distribution == *out.permutable_projectors;
  for (const PropertyReport& r : out.reports) out.passed = out.passed && r.passed;
  return out;
}

}  // namespace qjoint
