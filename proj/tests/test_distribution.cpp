#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"

using namespace qjoint;

namespace {

/// Samples full outcome tuples by measuring the highest index first and
/// updating the state after each outcome.
std::map<OutcomeTuple, double> sequential_sampling(const MeasurementFamily& family, const DensityMatrix& rho,
                                                   std::size_t samples, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<OutcomeTuple, double> counts;
  for (std::size_t s = 0; s < samples; ++s) {
    Matrix state = rho.matrix();
    OutcomeTuple x(family.size(), 0);
    for (std::size_t i = family.size(); i-- > 0;) {
      double u = unit(rng) * trace(state).real();
      for (const SquareRootOperator& r : family.roots(i)) {
        const Matrix next = r.matrix * state * r.matrix.adjoint();
        const double p = trace(next).real();
        x[i] = r.outcome;
        if (u < p || &r == &family.roots(i).back()) {
          state = next;
          break;
        }
        u -= p;
      }
    }
    counts[x] += 1.0 / static_cast<double>(samples);
  }
  return counts;
}

CheckOptions lenient() {
  CheckOptions o;
  o.require_prerequisites = false;
  return o;
}

}  // namespace

TEST(WFunctional, SingleMeasurement) {
  const MeasurementFamily family = MeasurementFamily::from_projectors({fixtures::ket0_projector()});
  const DensityMatrix plus = DensityMatrix::pure(StateVector::normalized(Vector::Ones(2)));
  EXPECT_NEAR(w_functional(family, plus, {1}), 0.5, 1e-15);
  EXPECT_NEAR(w_functional(family, plus, {0}), 0.5, 1e-15);
}

TEST(WFunctional, CommutingDiagonalFactorizes) {
  Matrix a = Matrix::Zero(4, 4);
  a(0, 0) = a(1, 1) = 1.0;
  Matrix b = Matrix::Zero(4, 4);
  b(0, 0) = b(2, 2) = 1.0;
  const MeasurementFamily family = MeasurementFamily::from_projectors({a, b});
  Vector v(4);
  v << 0.1, 0.2, 0.3, 0.4;
  const DensityMatrix rho = DensityMatrix::pure(StateVector::normalized(v));
  const double n = v.squaredNorm();
  EXPECT_NEAR(w_functional(family, rho, {1, 1}), 0.01 / n, 1e-15);
  EXPECT_NEAR(w_functional(family, rho, {1, 0}), 0.04 / n, 1e-15);
  EXPECT_NEAR(w_functional(family, rho, {0, 1}), 0.09 / n, 1e-15);
  EXPECT_NEAR(w_functional(family, rho, {0, 0}), 0.16 / n, 1e-15);
}

TEST(WFunctional, OrderDependenceOfTwoProjectors) {
  const Matrix a = fixtures::ket0_projector();
  const Matrix b = fixtures::plus_projector();
  const DensityMatrix rho = DensityMatrix::pure(StateVector::basis(2, 0));
  // W over (A, B) measures B first: Tr(BAB rho); over (B, A) it is Tr(ABA rho).
  EXPECT_NEAR(w_functional(MeasurementFamily::from_projectors({a, b}), rho, {1, 1}), 0.25, 1e-12);
  EXPECT_NEAR(w_functional(MeasurementFamily::from_projectors({b, a}), rho, {1, 1}), 0.5, 1e-12);
}

TEST(WFunctional, BundledPairAgreesWithStateEvolution) {
  const MeasurementFamily all = fixtures::appendix_family();
  const MeasurementFamily pair({all.povm(0), all.povm(1)}, {all.roots(0), all.roots(1)}, Tolerance(1e-6));
  const StateFamily states = fixtures::appendix_states();
  const DensityMatrix& rho = states[0];
  const Vector phi = StateVector::normalized(load_appendix_instance().state.amplitudes()).amplitudes();
  const Matrix& p1 = all.root(0, 1);
  const Matrix& p2 = all.root(1, 1);
  const double w = w_functional(pair, rho, {1, 1});
  EXPECT_NEAR(w, (p1 * (p2 * phi)).squaredNorm(), 1e-12);
  EXPECT_NEAR(w, (p2 * (p1 * phi)).squaredNorm(), 1e-7);
  EXPECT_NEAR(w, 1.19721387751431e-12, 1e-14);
}

TEST(JointDistribution, BundledTableMatchesGoldenAndSampling) {
  const MeasurementFamily family = fixtures::appendix_family();
  const StateFamily states = fixtures::appendix_states();
  const DensityMatrix& rho = states[0];
  const JointDistributionTable table = build_joint_distribution(family, rho, 1e-6);
  ASSERT_EQ(table.outcomes.size(), 16U);
  EXPECT_NEAR(table.total(), 1.0, 1e-5);
  EXPECT_NEAR(table.at({0, 0, 0, 0}), 0.187580146795031, 1e-12);
  EXPECT_NEAR(table.at({1, 1, 1, 1}), 0.0625002296524017, 1e-12);

  Rng rng(2024);
  const std::size_t samples = 100000;
  const auto freq = sequential_sampling(family, rho, samples, rng);
  for (std::size_t k = 0; k < table.outcomes.size(); ++k) {
    const double p = table.probabilities[k];
    const auto it = freq.find(table.outcomes[k]);
    const double f = it == freq.end() ? 0.0 : it->second;
    const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(samples));
    EXPECT_LE(std::abs(f - p), 5.0 * sigma + 1e-9) << "tuple " << k;
  }
}

TEST(ConditionalW, BundledDisjointAfterConditioning) {
  const MeasurementFamily family = fixtures::appendix_family();
  const StateFamily states = fixtures::appendix_states();
  const DensityMatrix& rho = states[0];
  for (const OutcomeTuple& x : outcome_tuples(family, family.all_indices())) {
    if (x[1] != 0) continue;
    EXPECT_NEAR(conditional_w(family, rho, x, IndexSet{1}, {1}), 0.0, 1e-7);
  }
}

TEST(ConditionalW, ZeroProbabilityConditionThrows) {
  const MeasurementFamily family = MeasurementFamily::from_projectors({fixtures::ket0_projector()});
  const DensityMatrix rho = DensityMatrix::pure(StateVector::basis(2, 0));
  EXPECT_THROW(conditional_w(family, rho, {1}, IndexSet{0}, {0}), Error);
}

TEST(Orbit, TwoProjectorOrbitOnKet0) {
  const MeasurementFamily family =
      MeasurementFamily::from_projectors({fixtures::ket0_projector(), fixtures::plus_projector()});
  const StateFamily f = StateFamily::pure({StateVector::basis(2, 0)});
  OrbitSpec spec;
  spec.u = family.all_indices();
  const auto states = orbit(family, spec, f);
  EXPECT_EQ(states.size(), 4U);  // |0>, |1>, |+>, |->
  spec.u = IndexSet{0};
  EXPECT_EQ(orbit(family, spec, f).size(), 1U);
}

TEST(Orbit, StateLimitIsEnforced) {
  Rng rng(1);
  const MeasurementFamily family = MeasurementFamily::from_projectors(fixtures::generic_projectors(4, 4, rng));
  OrbitSpec spec;
  spec.u = family.all_indices();
  spec.max_states = 10;
  EXPECT_THROW(orbit(family, spec, fixtures::random_pure_states(1, 4, rng)), Error);
}

TEST(Properties, CommutingFamilyPassesEverything) {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const MeasurementFamily family = MeasurementFamily::from_projectors(fixtures::commuting_projectors(3, 4, rng));
    PropertyChecker checker(family, fixtures::random_pure_states(2, 4, rng));
    EXPECT_TRUE(checker.functional_axioms().passed);
    EXPECT_TRUE(checker.marginals().passed);
    EXPECT_TRUE(checker.disjointness().passed);
    EXPECT_TRUE(checker.reducibility().passed);
    EXPECT_TRUE(checker.on_state_projector().passed);
    EXPECT_TRUE(checker.sequential_independence().passed);
    EXPECT_EQ(checker.theorem1().status, "pass");
  }
}

TEST(Properties, NonProjectivePovmFailsOnStateProjector) {
  const Povm half({0, 1}, {0.5 * identity(2), 0.5 * identity(2)});
  const MeasurementFamily family({half});
  const StateFamily f = StateFamily::pure({StateVector::basis(2, 0)});
  const PropertyReport r = check_on_state_projector(family, f);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.worst_residual, 0.25, 1e-12);
  ASSERT_FALSE(r.witnesses.empty());
}

TEST(Properties, NonCommutingPairFailsMarginals) {
  const MeasurementFamily family =
      MeasurementFamily::from_projectors({fixtures::ket0_projector(), fixtures::plus_projector()});
  const StateFamily f = StateFamily::pure({StateVector::basis(2, 0)});
  const PropertyReport m = check_marginals(family, f);
  EXPECT_FALSE(m.passed);
  ASSERT_FALSE(m.witnesses.empty());
  EXPECT_EQ(m.witnesses.front().kind, "marginal_sum");
  try {
    check_disjointness(family, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PrerequisiteFailed);
  }
  const PropertyReport d = check_disjointness(family, f, lenient());
  EXPECT_FALSE(d.prerequisites_met);
  EXPECT_EQ(theorem1_check(family, f).status, "not_applicable");
}

TEST(Properties, BundledFamilyFailsSequentialIndependence) {
  CheckOptions o = lenient();
  o.tolerance = 1e-6;
  PropertyChecker checker(fixtures::appendix_family(), fixtures::appendix_states(), o);
  const PropertyReport s = checker.sequential_independence();
  EXPECT_FALSE(s.passed);
  EXPECT_NEAR(s.worst_residual, 0.0937538309379372, 1e-6);
  ASSERT_FALSE(s.witnesses.empty());
  EXPECT_EQ(s.witnesses.front().kind, "ordering");
}

TEST(Properties, BundledFunctionalAxiomsHold) {
  CheckOptions o = lenient();
  o.tolerance = 1e-5;
  EXPECT_TRUE(check_functional_axioms(fixtures::appendix_family(), fixtures::appendix_states(), o).passed);
}

TEST(Properties, MeasurementCapIsEnforced) {
  Rng rng(3);
  CheckOptions o;
  o.max_measurements = 2;
  const MeasurementFamily family = MeasurementFamily::from_projectors(fixtures::commuting_projectors(3, 2, rng));
  EXPECT_THROW(PropertyChecker(family, fixtures::random_pure_states(1, 2, rng), o), Error);
}

TEST(Analysis, VerdictsOnCommutingAndGenericFamilies) {
  Rng rng(99);
  const MeasurementFamily commuting = MeasurementFamily::from_projectors(fixtures::commuting_projectors(3, 3, rng));
  AnalysisOptions opts;
  opts.check.require_prerequisites = false;
  const FamilyAnalysis yes = analyze_family(commuting, fixtures::random_pure_states(1, 3, rng), opts);
  EXPECT_TRUE(yes.passed);
  EXPECT_EQ(yes.joint_distribution, std::optional<bool>(true));
  EXPECT_EQ(yes.verdicts_agree, std::optional<bool>(true));

  const MeasurementFamily generic = MeasurementFamily::from_projectors(fixtures::generic_projectors(3, 3, rng));
  const FamilyAnalysis no = analyze_family(generic, fixtures::random_pure_states(1, 3, rng), opts);
  EXPECT_FALSE(no.passed);
  EXPECT_EQ(no.joint_distribution, std::optional<bool>(false));
  EXPECT_EQ(no.verdicts_agree, std::optional<bool>(true));
}

TEST(Analysis, EmptyPropertyListIsNoOp) {
  Rng rng(1);
  AnalysisOptions opts;
  opts.properties.clear();
  const FamilyAnalysis a = analyze_family(MeasurementFamily::from_projectors(fixtures::generic_projectors(2, 2, rng)),
                                          fixtures::random_pure_states(1, 2, rng), opts);
  EXPECT_TRUE(a.passed);
  EXPECT_TRUE(a.reports.empty());
  opts.properties = {"bogus"};
  EXPECT_THROW(analyze_family(MeasurementFamily::from_projectors(fixtures::generic_projectors(2, 2, rng)),
                              fixtures::random_pure_states(1, 2, rng), opts),
               Error);
}
