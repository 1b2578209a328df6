#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spectral_cutoff/distances.hpp"

using namespace spectral_cutoff;

namespace {

std::vector<oracle::Mat> dense_images(const ConvexProblem& p) {
  std::vector<oracle::Mat> out;
  for (const auto& k : p.constraint_images) out.emplace_back(k);
  return out;
}

/// Random problem with `n` coefficients and generic complex images.
ConvexProblem random_problem(std::mt19937& rng, int n, int dim) {
  std::normal_distribution<double> gauss;
  ConvexProblem p;
  p.objective = RealVector(n);
  for (int i = 0; i < n; ++i) {
    ComplexMatrix k(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) k(r, c) = cplx(gauss(rng), gauss(rng));
    p.constraint_images.push_back(k.sparseView());
    p.objective(i) = gauss(rng);
  }
  return p;
}

}  // namespace

TEST(Maximize, KernelDirectionWithObjectiveIsInfinite) {
  // Identity-only subspace, constraint a -> [D, a] kills it, objective nonzero.
  const auto g = build_circle(2);
  SparseComplexMatrix id = ComplexMatrix(ComplexMatrix::Identity(5, 5)).sparseView();
  ConvexProblem p;
  p.constraint_images.push_back(circle_commutator_map(g)(id));
  p.objective = RealVector::Constant(1, 0.3);
  const SolveReport r = maximize(p);
  EXPECT_EQ(r.status, SolveStatus::kernel_unbounded);
  EXPECT_TRUE(r.value.is_infinite());
  EXPECT_LE(op_norm(p.constraint_at(r.witness)), 1e-9);
  EXPECT_GT(p.objective.dot(r.witness), 0.0);
}

TEST(Maximize, OneDimensionalClosedForm) {
  ComplexMatrix x0(2, 2);
  x0 << 0.0, 3.0, cplx(0.0, 1.0), 0.5;
  ConvexProblem p;
  p.constraint_images.push_back(x0.sparseView());
  p.objective = RealVector::Constant(1, -2.5);
  const SolveReport r = maximize(p);
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.value.value(), 2.5 / oracle::spectral_norm(x0), 1e-9);
}

TEST(Maximize, FejerPairNEqualsOneMatchesOracle) {
  const auto g = build_circle(1);
  const ConvexProblem p = bi_problem(g, fejer_state(0.0, 1), fejer_state(std::numbers::pi, 1));
  const SolveReport r = maximize(p);
  const auto o = oracle::direction_search(dense_images(p), p.objective);
  EXPECT_EQ(r.status, SolveStatus::optimal);
  EXPECT_NEAR(r.value.value(), o.value, 1e-4);
  EXPECT_NEAR(r.value.value(), std::sqrt(2.0), 1e-4);
}

TEST(Maximize, OracleEquivalenceOnSmallProblems) {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + trial % 4;
    const ConvexProblem p = random_problem(rng, n, 3 + trial % 3);
    const SolveReport r = maximize(p);
    const auto o = oracle::direction_search(dense_images(p), p.objective, 40000, 100 + trial);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.value.value(), o.value, 1e-3 * o.value) << "trial " << trial;
  }
}

TEST(Maximize, WitnessCertifies) {
  std::mt19937 rng(62);
  for (int trial = 0; trial < 6; ++trial) {
    const ConvexProblem p = random_problem(rng, 6, 5);
    const SolveReport r = maximize(p);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    const Certificate c = certify(p, r.witness);
    EXPECT_LE(c.feas_residual, 1e-7);
    EXPECT_NEAR(c.objective, r.value.value(), 1e-9);
    EXPECT_NEAR(c.feas_residual, r.feas_residual, 1e-12);
    EXPECT_LE(r.gap_estimate, 1e-5 * r.value.value() + 1e-9);
  }
}

TEST(Maximize, SymmetryUnderStateSwap) {
  const auto g = build_circle(3);
  const auto a = fejer_state(0.4, 3), b = fejer_state(2.9, 3);
  const double ab = distance_bi(g, a, b).value.value();
  const double ba = distance_bi(g, b, a).value.value();
  EXPECT_NEAR(ab, ba, 2e-5 * ab);
}

TEST(Maximize, HomogeneityInConstraintScale) {
  std::mt19937 rng(63);
  const ConvexProblem p = random_problem(rng, 5, 4);
  ConvexProblem q = p;
  for (auto& k : q.constraint_images) k *= cplx(3.0);
  const double vp = maximize(p).value.value(), vq = maximize(q).value.value();
  EXPECT_NEAR(vq, vp / 3.0, 1e-5 * vp);
}

TEST(Maximize, EnlargingBasisNeverDecreases) {
  std::mt19937 rng(64);
  const ConvexProblem big = random_problem(rng, 6, 4);
  ConvexProblem small;
  small.objective = big.objective.head(3);
  small.constraint_images.assign(big.constraint_images.begin(), big.constraint_images.begin() + 3);
  const SolveReport rs = maximize(small), rb = maximize(big);
  EXPECT_GE(rb.value.value(), rs.value.value() - 2.0 * (rs.gap_estimate + rb.gap_estimate));
}

TEST(Maximize, IllConditionedBasisReportsCondition) {
  ConvexProblem p;
  p.constraint_images.push_back(ComplexMatrix(ComplexMatrix::Identity(2, 2)).sparseView());
  p.objective = RealVector::Constant(1, 1.0);
  p.gram_condition = 1e15;
  try {
    maximize(p);
    FAIL() << "expected IllConditionedBasis";
  } catch (const IllConditionedBasis& e) {
    EXPECT_EQ(e.condition_number(), 1e15);
  }
}

TEST(Certify, ZeroWitness) {
  std::mt19937 rng(65);
  const ConvexProblem p = random_problem(rng, 3, 3);
  const Certificate c = certify(p, RealVector::Zero(3));
  EXPECT_EQ(c.objective, 0.0);
  EXPECT_EQ(c.feas_residual, -1.0);
}

TEST(Certify, IdentityWitnessForUnitalStates) {
  const auto g = build_circle(2);
  const SubspaceBasis basis = toeplitz_basis(g, true);
  const ConvexProblem p = make_problem(basis, circle_commutator_map(g), [&] {
    RealVector c(static_cast<Eigen::Index>(basis.size()));
    const auto a = fejer_state(0.2, 2), b = fejer_state(1.9, 2);
    for (std::size_t i = 0; i < basis.size(); ++i) c(static_cast<Eigen::Index>(i)) = a(basis[i]) - b(basis[i]);
    return c;
  }());
  RealVector id = RealVector::Zero(static_cast<Eigen::Index>(basis.size()));
  id(0) = 1.0;
  const Certificate c = certify(p, id);
  EXPECT_NEAR(c.objective, 0.0, 1e-10);
  EXPECT_EQ(c.feas_residual, -1.0);
}

TEST(DivergenceProbe, EqualPointsGiveZero) {
  const auto probe = divergence_probe(build_circle(2), PointFunctional(1.0), PointFunctional(1.0), {2, 4});
  for (const auto& [band, d] : probe) EXPECT_EQ(d.value.value(), 0.0);
}

TEST(DivergenceProbe, NestedBandsAreMonotone) {
  const auto probe = divergence_probe(build_circle(2), PointFunctional(0.0), PointFunctional(1.0), {2, 4, 6});
  for (std::size_t i = 1; i < probe.size(); ++i)
    EXPECT_GE(probe[i].second.value.value(), probe[i - 1].second.value.value() - 1e-6);
}

TEST(DivergenceProbe, GrowsWithBand) {
  const auto probe =
      divergence_probe(build_circle(2), PointFunctional(0.0), PointFunctional(std::numbers::pi), {4, 8, 16, 32});
  for (std::size_t i = 1; i < probe.size(); ++i)
    EXPECT_GT(probe[i].second.value.value(), probe[i - 1].second.value.value());
  EXPECT_GT(probe.back().second.value.value(), 2.0 * probe.front().second.value.value());
}

TEST(DivergenceProbe, RejectsUnsortedBands) {
  EXPECT_THROW(divergence_probe(build_circle(2), PointFunctional(0.0), PointFunctional(1.0), {4, 2}),
               InvalidArgument);
}
