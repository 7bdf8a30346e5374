#pragma once

// JSON interchange: complex numbers as [re, im], matrices as row-major nested
// arrays.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qjoint/analysis.hpp"
#include "qjoint/counterexample.hpp"
#include "qjoint/jordan.hpp"

namespace qjoint::json_io {

using Json = nlohmann::json;

[[noreturn]] inline void parse_error(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    parse_error("complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(to_json(v[k]));
  return out;
}

inline Vector vector_from(const Json& j) {
  if (!j.is_array() || j.empty()) parse_error("vector must be a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = complex_from(j[k]);
  return v;
}

inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    out.push_back(std::move(row));
  }
  return out;
}

inline Json to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix matrix_from(const Json& j) {
  if (!j.is_array() || j.empty()) parse_error("matrix must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols || cols == 0) parse_error("matrix rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = complex_from(j[i][k]);
  }
  return m;
}

inline Json to_json(const IndexSet& s) { return Json(s.indices()); }

inline Json to_json(const StateRef& s) {
  Json blocks = Json::array();
  for (const IndexSet& b : s.blocks) blocks.push_back(to_json(b));
  return {{"source", s.source}, {"blocks", blocks}, {"outcomes", s.outcomes}};
}

inline Json to_json(const Witness& w) {
  Json sets = Json::array();
  for (const IndexSet& s : w.index_sets) sets.push_back(to_json(s));
  return {{"kind", w.kind},
          {"state", to_json(w.state)},
          {"index_sets", sets},
          {"outcomes", w.outcomes},
          {"residual", w.residual}};
}

inline Json to_json(const PropertyReport& r) {
  Json witnesses = Json::array();
  for (const Witness& w : r.witnesses) witnesses.push_back(to_json(w));
  return {{"property_name", r.property_name},
          {"status", r.status},
          {"passed", r.passed},
          {"prerequisites_met", r.prerequisites_met},
          {"worst_residual", r.worst_residual},
          {"tolerance", r.tolerance},
          {"evaluations", r.evaluations},
          {"witnesses", witnesses}};
}

inline Json to_json(const PermutatorReport& r) {
  Json per_state = Json::array();
  for (const StateDefects& s : r.per_state)
    per_state.push_back({{"state", s.state_id},
                         {"pure", s.pure},
                         {"trace_defect", s.trace_defect},
                         {"vector_defect", s.vector_defect}});
  return {{"s", r.s},
          {"mode", r.mode},
          {"passed", r.passed},
          {"tolerance", r.tolerance},
          {"worst_trace_defect", r.worst_trace_defect},
          {"worst_vector_defect", r.worst_vector_defect},
          {"witness_permutation", r.witness_permutation.mapping()},
          {"witness_subset", to_json(r.witness_subset)},
          {"witness_outcomes", r.witness_outcomes},
          {"witness_state", r.witness_state},
          {"evaluations", r.evaluations},
          {"per_state", per_state}};
}

inline Json to_json(const FamilyAnalysis& a) {
  Json reports = Json::array();
  for (const PropertyReport& r : a.reports) reports.push_back(to_json(r));
  const auto opt = [](const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); };
  Json out{{"passed", a.passed},
           {"reports", reports},
           {"joint_distribution", opt(a.joint_distribution)},
           {"permutable_and_on_state_projectors", opt(a.permutable_projectors)},
           {"verdicts_agree", opt(a.verdicts_agree)}};
  if (a.permutability) out["permutability"] = to_json(*a.permutability);
  return out;
}

inline Json to_json(const JordanDecomposition& jd) {
  Json one = Json::array();
  for (const OneDimBlock& b : jd.one_dim_blocks)
    one.push_back({{"u", to_json(b.u)}, {"lambda1", b.lambda1}, {"lambda2", b.lambda2}});
  Json two = Json::array();
  for (const TwoDimBlock& b : jd.two_dim_blocks)
    two.push_back({{"theta", b.theta}, {"v1", to_json(b.v1)}, {"v1_perp", to_json(b.v1_perp)}});
  return {{"dim", jd.dim},
          {"one_dim_blocks", one},
          {"two_dim_blocks", two},
          {"orthonormality_residual", jd.orthonormality_residual()}};
}

inline Json to_json(const RepairResult& r) {
  return {{"epsilon", r.epsilon},
          {"on_state_distance", r.on_state_distance},
          {"bound", r.bound()},
          {"margin", r.bound() - r.on_state_distance},
          {"commutator_norm", r.commutator_norm},
          {"projector_residual", r.projector_residual},
          {"block_sum", r.block_sum},
          {"identity_residual", r.identity_residual},
          {"worst_branch_slack", r.worst_branch_slack},
          {"p2_prime", to_json(r.p2_prime)},
          {"decomposition", to_json(r.decomposition)}};
}

inline Json to_json(const CounterexampleInstance& inst, bool include_projectors = true) {
  Json out{{"dim", inst.dim}, {"state", to_json(inst.state.amplitudes())}};
  if (include_projectors || !inst.eigenvector_form) {
    Json ps = Json::array();
    for (const Matrix& p : inst.projectors) ps.push_back(to_json(p));
    out["projectors"] = ps;
  }
  if (inst.eigenvector_form) {
    Json ev = Json::array();
    for (const auto& vs : *inst.eigenvector_form) {
      Json list = Json::array();
      for (const Vector& v : vs) list.push_back(to_json(v));
      ev.push_back(list);
    }
    out["eigenvectors"] = ev;
  }
  return out;
}

inline CounterexampleInstance instance_from(const Json& j, double state_tolerance = tol::golden) {
  const Vector state = vector_from(field(j, "state"));
  if (j.contains("dim") && j.at("dim").get<Eigen::Index>() != state.size()) parse_error("dim does not match state");
  try {
    if (j.contains("eigenvectors")) {
      std::vector<std::vector<Vector>> ev;
      for (const Json& list : j.at("eigenvectors")) {
        std::vector<Vector> vs;
        for (const Json& v : list) vs.push_back(vector_from(v));
        ev.push_back(std::move(vs));
      }
      CounterexampleInstance inst = make_instance(state, std::move(ev), state_tolerance);
      if (j.contains("projectors")) {
        std::vector<Matrix> ps;
        for (const Json& p : j.at("projectors")) ps.push_back(matrix_from(p));
        if (ps.size() != inst.projectors.size()) parse_error("projector and eigenvector counts differ");
        inst.projectors = std::move(ps);
      }
      return inst;
    }
    std::vector<Matrix> ps;
    for (const Json& p : field(j, "projectors")) ps.push_back(matrix_from(p));
    return make_instance(state, std::move(ps), state_tolerance);
  } catch (const Json::exception& e) {
    parse_error(e.what());
  }
}

inline Json to_json(const InstanceReport& r) {
  Json spectrum = Json::array();
  for (const SigmaDefect& s : r.spectrum) spectrum.push_back({{"sigma", s.sigma.mapping()}, {"defect", s.defect}});
  return {{"tolerance", r.tolerance},
          {"is_counterexample", r.is_counterexample},
          {"projectors_ok", r.projectors_ok},
          {"state_ok", r.state_ok},
          {"pairwise_ok", r.pairwise_ok},
          {"idempotence_residual", r.idempotence_residual},
          {"hermiticity_residual", r.hermiticity_residual},
          {"eigenvector_residual", r.eigenvector_residual},
          {"state_norm", r.state_norm},
          {"pairwise_defects", to_json(r.pairwise_defects)},
          {"worst_pairwise_defect", r.worst_pairwise_defect},
          {"block_swap_sigma", r.block_swap_sigma.mapping()},
          {"block_swap_defect", r.block_swap_defect},
          {"worst_sigma", {{"sigma", r.worst_sigma.sigma.mapping()}, {"defect", r.worst_sigma.defect}}},
          {"spectrum", spectrum},
          {"report", to_json(r.report)}};
}

inline Json to_json(const SearchResult& r) {
  Json restarts = Json::array();
  for (const RestartSummary& s : r.restarts)
    restarts.push_back({{"restart", s.restart},
                        {"seed", s.seed},
                        {"objective", s.objective},
                        {"worst_constraint_residual", s.worst_constraint_residual}});
  return {{"objective", r.objective},
          {"worst_constraint_residual", r.worst_constraint_residual},
          {"iterations", r.iterations},
          {"seed_used", r.seed_used},
          {"restart", r.restart},
          {"is_counterexample", r.is_counterexample},
          {"restarts", restarts},
          {"instance", to_json(r.instance)}};
}

/// Measurement family plus state family.
struct FamilyInput {
  MeasurementFamily family;
  StateFamily states;
};

/// Either a family file
///   {"dim", "tolerance"?, "measurements": [{"outcomes"?, "elements": [M, ...]} | {"projector": M}],
///    "states": [{"vector": v} | {"density": M}]}
/// or an instance file, read as the binary projective family of its projectors
/// on its state.
inline FamilyInput family_from(const Json& j) {
  try {
    if (j.contains("measurements")) {
      const double tolerance = j.value("tolerance", tol::psd);
      std::vector<Povm> povms;
      for (const Json& m : j.at("measurements")) {
        if (m.contains("projector")) {
          povms.push_back(Povm::binary_projector(matrix_from(m.at("projector")), Tolerance(tolerance)));
          continue;
        }
        std::vector<Matrix> elements;
        for (const Json& e : field(m, "elements")) elements.push_back(matrix_from(e));
        std::vector<Outcome> labels;
        if (m.contains("outcomes")) {
          labels = m.at("outcomes").get<std::vector<Outcome>>();
        } else {
          for (std::size_t k = 0; k < elements.size(); ++k) labels.push_back(static_cast<Outcome>(k));
        }
        povms.emplace_back(std::move(labels), std::move(elements), Tolerance(tolerance));
      }
      if (povms.empty()) parse_error("no measurements");
      std::vector<DensityMatrix> states;
      for (const Json& s : field(j, "states")) {
        if (s.contains("vector"))
          states.push_back(DensityMatrix::pure(StateVector(vector_from(s.at("vector")), Tolerance(tolerance))));
        else
          states.push_back(DensityMatrix(matrix_from(field(s, "density")), Tolerance(tolerance)));
      }
      if (states.empty()) parse_error("no states");
      MeasurementFamily family(std::move(povms), Tolerance(tolerance));
      if (j.contains("dim") && j.at("dim").get<Eigen::Index>() != family.dim()) parse_error("dim does not match");
      return {std::move(family), StateFamily(std::move(states))};
    }
    const CounterexampleInstance inst = instance_from(j);
    const Vector& phi = inst.state.amplitudes();
    return {induced_family(inst), StateFamily({DensityMatrix(outer(phi) / phi.squaredNorm())})};
  } catch (const Json::exception& e) {
    parse_error(e.what());
  }
}

struct ProjectorPair {
  Matrix p1;
  Matrix p2;
  std::optional<StateVector> state;
};

/// {"p1": M, "p2": M, "state"?: v}
inline ProjectorPair projector_pair_from(const Json& j) {
  try {
    ProjectorPair out{matrix_from(field(j, "p1")), matrix_from(field(j, "p2")), std::nullopt};
    if (j.contains("state")) out.state = StateVector(vector_from(j.at("state")), Tolerance(tol::golden));
    return out;
  } catch (const Json::exception& e) {
    parse_error(e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    parse_error(e.what());
  }
}

}  // namespace qjoint::json_io
