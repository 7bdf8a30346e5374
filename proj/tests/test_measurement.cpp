#include <gtest/gtest.h>

#include <cmath>

#include <functional>

#include "fixtures.hpp"

using namespace qjoint;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Povm, ValidatesElements) {
  const Matrix half = 0.5 * identity(2);
  EXPECT_NO_THROW(Povm({0, 1}, {half, half}));
  EXPECT_EQ(kind_of([&] { Povm({0, 1}, {half, half * 0.5}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { Povm({0, 0}, {half, half}); }), ErrorKind::InvalidArgument);
  Matrix skew = half;
  skew(0, 1) = 0.3;
  EXPECT_EQ(kind_of([&] { Povm({0, 1}, {skew, identity(2) - skew}); }), ErrorKind::NotHermitian);
  Matrix negative = Matrix::Zero(2, 2);
  negative(0, 0) = 1.5;
  negative(1, 1) = 0.5;
  EXPECT_EQ(kind_of([&] { Povm({0, 1}, {negative, identity(2) - negative}); }), ErrorKind::NotPsd);
}

TEST(Povm, LabelsAndProjectivity) {
  const Povm p = Povm::binary_projector(fixtures::ket0_projector());
  EXPECT_TRUE(p.is_binary());
  EXPECT_TRUE(p.is_projective());
  EXPECT_EQ(kind_of([&] { p.element(7); }), ErrorKind::UnknownOutcome);
  EXPECT_FALSE(Povm({0, 1}, {0.5 * identity(2), 0.5 * identity(2)}).is_projective());
  EXPECT_EQ(Povm::computational_basis(3).size(), 3U);
}

TEST(Measurement, ProbabilityOfKet0OnPlus) {
  const Povm p = Povm::binary_projector(fixtures::ket0_projector());
  const DensityMatrix plus = DensityMatrix::pure(StateVector::normalized(Vector::Ones(2)));
  EXPECT_NEAR(outcome_probability(p, 1, plus), 0.5, 1e-15);
  EXPECT_NEAR(outcome_probability(p, 0, plus), 0.5, 1e-15);
}

TEST(Measurement, BundledFirstProjectorProbability) {
  // <phi|P1|phi> from the printed data, evaluated independently in numpy.
  const MeasurementFamily family = fixtures::appendix_family();
  const StateFamily states = fixtures::appendix_states();
  const DensityMatrix& rho = states[0];
  EXPECT_NEAR(outcome_probability(family.povm(0), 1, rho), 6.49781887099084e-13, 1e-15);
}

TEST(Measurement, PostMeasurementStateIsNormalized) {
  const MeasurementFamily family = fixtures::appendix_family();
  const StateFamily states = fixtures::appendix_states();
  const DensityMatrix& rho = states[0];
  const PostMeasurement post = post_measurement_state({1, family.root(1, 1)}, rho);
  EXPECT_NEAR(trace(post.state.matrix()).real(), 1.0, 1e-9);
  EXPECT_GT(post.probability, 0.1);
}

TEST(Measurement, ZeroProbabilityBranchThrows) {
  const DensityMatrix zero = DensityMatrix::pure(StateVector::basis(2, 0));
  const SquareRootOperator onto_one{1, StateVector::basis(2, 1).projector()};
  EXPECT_EQ(kind_of([&] { post_measurement_state(onto_one, zero); }), ErrorKind::ZeroProbabilityBranch);
}

TEST(Measurement, SequenceRootIsOrderedProduct) {
  const MeasurementFamily family = fixtures::appendix_family();
  const Matrix r = sequence_root(family, IndexSet{0, 1}, {1, 1});
  EXPECT_LE((r - family.root(0, 1) * family.root(1, 1)).norm(), 1e-15);
  EXPECT_LE((sequence_root(family, IndexSet{}, {}) - identity(8)).norm(), 0.0);
}

TEST(Measurement, SequenceElementsTelescopeToIdentity) {
  Rng rng(6);
  std::vector<Povm> povms;
  for (int i = 0; i < 3; ++i) {
    const Matrix g = ginibre(4, 4, rng);
    const Matrix a = g * g.adjoint();
    const Matrix scaled = a / (hermitian_eigendecompose(a).values.maxCoeff() * 1.01);
    povms.emplace_back(std::vector<Outcome>{0, 1}, std::vector<Matrix>{scaled, identity(4) - scaled});
  }
  const MeasurementFamily family(std::move(povms));
  for (std::uint32_t mask : submasks(family.all_indices().mask())) {
    const IndexSet s = IndexSet::from_mask(mask);
    Matrix sum = Matrix::Zero(4, 4);
    for (const OutcomeTuple& y : outcome_tuples(family, s)) sum += sequence_povm_element(family, s, y);
    EXPECT_LE((sum - identity(4)).norm(), 4e-9);
  }
}

TEST(Measurement, ExplicitRootsAreValidated) {
  const Matrix p = fixtures::ket0_projector();
  const Povm povm = Povm::binary_projector(p);
  EXPECT_THROW(MeasurementFamily({povm}, {{{0, p}, {1, p}}}), Error);
  EXPECT_NO_THROW(MeasurementFamily({povm}, {{{0, identity(2) - p}, {1, p}}}));
}

TEST(IndexSet, BasicOperations) {
  const IndexSet s{0, 2};
  EXPECT_EQ(s.mask(), 5U);
  EXPECT_EQ(s.size(), 2U);
  EXPECT_TRUE(s.contains(2));
  EXPECT_FALSE(s.contains(1));
  EXPECT_EQ(s.complement(4), IndexSet({1, 3}));
  EXPECT_EQ(restrict_outcomes({7, 8, 9}, s), (OutcomeTuple{7, 9}));
}

TEST(Combinatorics, SetPartitionCountsAreBellNumbers) {
  const std::size_t bell[] = {1, 1, 2, 5, 15, 52};
  for (std::size_t n = 0; n <= 5; ++n) EXPECT_EQ(set_partitions(IndexSet::full(n)).size(), bell[n]);
}

TEST(Combinatorics, PartitionsAreCanonical) {
  for (const SetPartition& p : set_partitions(IndexSet::full(4))) {
    std::uint32_t seen = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_EQ(seen & p[k].mask(), 0U);
      seen |= p[k].mask();
      if (k > 0) {
        EXPECT_LT(p[k - 1].indices().front(), p[k].indices().front());
      }
    }
    EXPECT_EQ(seen, 15U);
  }
}

TEST(Combinatorics, Permutations) {
  const auto all = Permutation::all(4);
  EXPECT_EQ(all.size(), 24U);
  EXPECT_TRUE(all.front().is_identity());
  const Permutation swap = Permutation::from_one_based({3, 4, 1, 2});
  EXPECT_EQ(swap.mapping(), (std::vector<int>{2, 3, 0, 1}));
  EXPECT_THROW(Permutation({0, 0}), Error);
  const SetPartition blocks{IndexSet{0}, IndexSet{1, 2}};
  EXPECT_EQ(permute_blocks(blocks, Permutation({1, 0})).front(), IndexSet({1, 2}));
}

TEST(Combinatorics, Submasks) {
  EXPECT_EQ(nonempty_submasks(5U), (std::vector<std::uint32_t>{1U, 4U, 5U}));
  EXPECT_EQ(submasks(5U), (std::vector<std::uint32_t>{0U, 1U, 4U, 5U}));
}
