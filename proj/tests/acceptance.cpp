// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "fixtures.hpp"

using namespace qjoint;
namespace jio = qjoint::json_io;
using jio::Json;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string(QJOINT_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

int failures = 0;

void criterion(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (seconds > budget_seconds) {
    o.passed = false;
    o.detail += "; over time budget of " + fmt(budget_seconds) + " s";
  }
  if (!o.passed) ++failures;
  std::cout << (o.passed ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail << " (" << fmt(seconds)
            << " s)" << std::endl;
}

Outcome appendix_golden() {
  const CliRun run = run_cli("verify-appendix --json");
  const Json doc = jio::parse(run.out);
  const Json& r = doc.at("result");
  const double defect = r.at("block_swap_defect").get<double>();
  const double pairwise = r.at("worst_pairwise_defect").get<double>();
  const double idem = r.at("idempotence_residual").get<double>();
  const double norm = r.at("state_norm").get<double>();
  const bool ok = run.exit_code == 0 && std::abs(defect - 0.25) <= 1e-4 && pairwise <= 1e-6 && idem <= 1e-6 &&
                  std::abs(norm - 1.0) <= 1e-6 && doc.at("manifest").contains("wall_time_seconds");
  return {ok, "exit " + std::to_string(run.exit_code) + ", defect " + fmt(defect) + ", pairwise " + fmt(pairwise) +
                  ", idempotence " + fmt(idem) + ", norm " + fmt(norm)};
}

Outcome repair_bound() {
  Rng rng(20240601);
  std::uniform_int_distribution<Eigen::Index> dims(2, 16);
  std::size_t trials = 0, violations = 0;
  double worst_identity = 0.0, worst_margin = std::numeric_limits<double>::infinity();
  for (; trials < 1200; ++trials) {
    const Eigen::Index d = dims(rng);
    std::uniform_int_distribution<Eigen::Index> ranks(1, d - 1);
    const Matrix p1 = random_projector(d, ranks(rng), rng);
    const Matrix p2 = random_projector(d, ranks(rng), rng);
    const RepairResult r = repair_projector(p1, p2, random_state(d, rng));
    worst_identity = std::max(worst_identity, r.identity_residual);
    worst_margin = std::min(worst_margin, r.bound() - r.on_state_distance);
    if (r.commutator_norm > static_cast<double>(d) * 1e-9 || r.projector_residual > 1e-9 ||
        r.on_state_distance > r.bound() + 1e-9 || r.identity_residual > 1e-8)
      ++violations;
  }
  return {violations == 0, std::to_string(trials) + " trials, " + std::to_string(violations) +
                               " violations, worst identity residual " + fmt(worst_identity) + ", smallest margin " +
                               fmt(worst_margin)};
}

Outcome two_dim_oracle() {
  double worst = 0.0;
  for (double theta : {std::numbers::pi / 12, std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 3}) {
    const RepairResult r =
        repair_projector(fixtures::ket0_projector(), fixtures::angled_projector(theta), StateVector::basis(2, 0));
    worst = std::max(worst, std::abs(r.epsilon - std::sin(theta) * std::cos(theta)));
    worst = std::max(worst, std::abs(r.on_state_distance - std::min(std::sin(theta), std::cos(theta))));
  }
  return {worst <= 1e-12, "worst deviation " + fmt(worst)};
}

CheckOptions checks(double tolerance) {
  CheckOptions o;
  o.tolerance = tolerance;
  o.require_prerequisites = false;
  return o;
}

Outcome implication_suite() {
  Rng rng(4242);
  std::uniform_int_distribution<std::size_t> ns(2, 4);
  std::uniform_int_distribution<Eigen::Index> dims(2, 8);
  std::size_t applicable = 0, implication_failures = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index d = dims(rng);
    PropertyChecker c(MeasurementFamily::from_projectors(fixtures::commuting_projectors(ns(rng), d, rng)),
                      fixtures::random_pure_states(2, d, rng), checks(1e-7));
    const PropertyReport t = c.theorem1();
    if (t.status != "not_applicable") ++applicable;
    if (t.status != "pass") ++implication_failures;
  }
  std::uniform_int_distribution<Eigen::Index> small_dims(2, 4);
  std::size_t caught = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index d = small_dims(rng);
    PropertyChecker c(MeasurementFamily::from_projectors(fixtures::generic_projectors(ns(rng), d, rng)),
                      fixtures::random_pure_states(1, d, rng), checks(1e-7));
    bool failed_with_witness = false;
    for (const PropertyReport& r : {c.marginals(), c.disjointness(), c.reducibility(), c.sequential_independence()})
      if (!r.passed && !r.witnesses.empty()) failed_with_witness = true;
    if (failed_with_witness) ++caught;
  }
  return {implication_failures == 0 && applicable == 100 && caught == 100,
          "commuting: " + std::to_string(applicable) + "/100 applicable, " + std::to_string(implication_failures) +
              " failures; non-permutable: " + std::to_string(caught) + "/100 caught with a witness"};
}

Outcome equivalence_suite() {
  Rng rng(777);
  AnalysisOptions opts;
  opts.check = checks(1e-7);
  opts.permutability_tolerance = 1e-7;
  opts.properties = {"marginals", "disjointness", "reducibility", "sequential_independence", "on_state_projector",
                     "permutability"};
  std::uniform_int_distribution<std::size_t> ns(2, 3);
  std::uniform_int_distribution<Eigen::Index> dims(3, 5);
  std::size_t agree = 0, total = 0, yes = 0, no = 0;
  const auto tally = [&](const FamilyAnalysis& a) {
    ++total;
    if (a.verdicts_agree.value_or(false)) ++agree;
    if (a.joint_distribution.value_or(false)) ++yes; else ++no;
  };
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index d = dims(rng);
    if (k % 2 == 0) {
      tally(analyze_family(MeasurementFamily::from_projectors(fixtures::commuting_projectors(ns(rng), d, rng)),
                           fixtures::random_pure_states(2, d, rng), opts));
    } else {
      tally(analyze_family(MeasurementFamily::from_projectors(fixtures::anchored_projectors(ns(rng), d, rng)),
                           StateFamily::pure({StateVector::basis(d, 0)}), opts));
    }
  }
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index d = dims(rng);
    tally(analyze_family(MeasurementFamily::from_projectors(fixtures::generic_projectors(ns(rng), d, rng)),
                         fixtures::random_pure_states(1, d, rng), opts));
  }
  return {agree == total && yes == 50 && no == 50,
          std::to_string(agree) + "/" + std::to_string(total) + " agree; joint distribution on " +
              std::to_string(yes) + ", absent on " + std::to_string(no)};
}

Outcome refutation() {
  const MeasurementFamily family = fixtures::appendix_family();
  const StateFamily f = fixtures::appendix_states();
  const PermutatorReport t2 = is_t_permutable(family, f, 2, 1e-6);
  const PermutatorReport c2 = complemented_t_permutable(family, f, 2, 1e-6);
  const PermutatorReport t4 = is_t_permutable(family, f, 4, 1e-6);
  const CliRun run = run_cli("check --input " + std::string(QJOINT_DATA_DIR) +
                             "/appendix_a.json --tol 1e-6 --properties sequential_independence --json");
  const Json doc = jio::parse(run.out);
  bool witness = false;
  for (const Json& r : doc.at("result").at("reports"))
    if (r.at("property_name") == "sequential_independence" && !r.at("passed").get<bool>() &&
        !r.at("witnesses").empty())
      witness = true;
  const bool ok = t2.passed && c2.passed && !t4.passed && t4.worst_vector_defect >= 0.24 && run.exit_code == 2 && witness;
  return {ok, "t=2 " + fmt(t2.worst_vector_defect) + ", complemented t=2 " + fmt(c2.worst_vector_defect) +
                  ", t=4 " + fmt(t4.worst_vector_defect) + ", check exit " + std::to_string(run.exit_code) +
                  (witness ? " with" : " without") + " sequential-independence witness"};
}

Outcome search_regression() {
  const CliRun run = run_cli("search --dim 8 --ranks 1,2,3,2 --seed 0 --restarts 2 --json");
  const Json doc = jio::parse(run.out);
  const Json& r = doc.at("result");
  const CounterexampleInstance inst = jio::instance_from(r.at("instance"), 1e-7);
  const InstanceReport check = verify_instance(inst, 1e-7);
  const double objective = r.at("objective").get<double>();
  const bool ok = run.exit_code == 0 && objective >= 0.1 && check.is_counterexample &&
                  check.worst_pairwise_defect <= 1e-7 && check.idempotence_residual <= 1e-7 &&
                  std::abs(check.block_swap_defect - objective) <= 1e-9;
  return {ok, "seed 0, restarts 2: objective " + fmt(objective) + ", re-verified defect " +
                  fmt(check.block_swap_defect) + ", pairwise " + fmt(check.worst_pairwise_defect) +
                  ", idempotence " + fmt(check.idempotence_residual)};
}

Outcome order_dependence() {
  const Matrix a = fixtures::ket0_projector();
  const Matrix b = fixtures::plus_projector();
  const DensityMatrix rho = DensityMatrix::pure(StateVector::basis(2, 0));
  const double aba = w_functional(MeasurementFamily::from_projectors({b, a}), rho, {1, 1});
  const double bab = w_functional(MeasurementFamily::from_projectors({a, b}), rho, {1, 1});
  const bool ok = std::abs(aba - 0.5) <= 1e-12 && std::abs(bab - 0.25) <= 1e-12;
  return {ok, "Tr(ABA rho) " + fmt(aba) + ", Tr(BAB rho) " + fmt(bab)};
}

}  // namespace

int main() {
  criterion(1, "bundled instance reproduces defect 0.25", 1.0, appendix_golden);
  criterion(2, "commuting repair bound on random triples", 30.0, repair_bound);
  criterion(3, "two-dimensional repair closed forms", 1.0, two_dim_oracle);
  criterion(4, "implication suite on commuting and non-permutable families", 120.0, implication_suite);
  criterion(5, "joint distribution iff permutable on-state projectors", 120.0, equivalence_suite);
  criterion(6, "pairwise permutable instance without sequential independence", 10.0, refutation);
  criterion(7, "pinned-seed search regression", 600.0, search_regression);
  criterion(8, "two-projector order dependence", 1.0, order_dependence);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
