#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spectral_cutoff/seminorm.hpp"

using namespace spectral_cutoff;

namespace {

FourierSymbol random_symbol(std::mt19937& rng, int band) {
  std::normal_distribution<double> gauss;
  std::vector<double> a(band), b(band);
  for (int k = 0; k < band; ++k) {
    a[k] = gauss(rng);
    b[k] = gauss(rng);
  }
  return FourierSymbol::from_real(gauss(rng), a, b);
}

}  // namespace

TEST(CommutatorBi, IdentityCommutes) {
  const auto g = build_circle(3);
  const auto r = commutator_bi(g, HermitianMatrix::identity(7));
  EXPECT_EQ(r.norm, 0.0);
  EXPECT_EQ(r.matrix.norm(), 0.0);
}

TEST(CommutatorBi, TwoCosineNEqualsOne) {
  const auto g = build_circle(1);
  const auto r = commutator_bi(g, compress_symbol(g, FourierSymbol::cosine(1, 2.0)));
  ComplexMatrix expected(3, 3);
  expected << 0, -1, 0, 1, 0, -1, 0, 1, 0;
  // Entry (m', m) = (m' - m) a_{m'-m}: the subdiagonal carries +1.
  EXPECT_TRUE(r.matrix.isApprox(expected, 1e-15));
  EXPECT_NEAR(r.norm, std::sqrt(2.0), 1e-12);
}

TEST(CommutatorBi, CornerEntry) {
  const auto g = build_circle(2);
  const std::vector<cplx> c = {0.0, 0.0, 0.0, 0.0, 1.0};
  const auto r = commutator_bi(g, toeplitz_hermitian(c, 5));
  EXPECT_NEAR(r.norm, 4.0, 1e-12);
}

TEST(CommutatorBi, RejectsNonToeplitz) {
  ComplexMatrix a = ComplexMatrix::Zero(3, 3);
  a(0, 0) = 1.0;
  EXPECT_THROW(commutator_bi(build_circle(1), HermitianMatrix(a)), InvalidArgument);
}

TEST(CommutatorBi, AntiHermitianAndMatchesMap) {
  std::mt19937 rng(51);
  const auto g = build_circle(4);
  const auto map = circle_commutator_map(g);
  for (int trial = 0; trial < 10; ++trial) {
    const HermitianMatrix a = compress_symbol(g, random_symbol(rng, 8));
    const auto r = commutator_bi(g, a);
    EXPECT_LE((r.matrix + r.matrix.adjoint()).norm(), 1e-12 * std::max(1.0, r.matrix.norm()));
    EXPECT_LE((ComplexMatrix(map(a.matrix().sparseView())) - r.matrix).norm(), 1e-12);
    EXPECT_NEAR(r.norm, oracle::spectral_norm(r.matrix), 1e-10 * std::max(1.0, r.norm));
  }
}

TEST(CommutatorTruncDFull, ConstantCommutes) {
  EXPECT_EQ(commutator_truncD_full(build_circle(2), FourierSymbol::constant(3.0)).norm, 0.0);
}

TEST(CommutatorTruncDFull, HighModeInvisibleToCompression) {
  const int N = 2, k = 6;
  const auto g = build_circle(N);
  const FourierSymbol f = FourierSymbol::cosine(k, 2.0);
  EXPECT_EQ(compress_symbol(g, f).matrix().norm(), 0.0);
  const auto r = commutator_truncD_full(g, f);
  EXPECT_GT(r.norm, 0.0);
  EXPECT_LE(r.norm, 2.0 * N + 1e-12);
}

TEST(CommutatorTruncDFull, NEqualsOneTwoCosine) {
  const auto g = build_circle(1);
  const auto r = commutator_truncD_full(g, FourierSymbol::cosine(1, 2.0));
  ASSERT_EQ(r.matrix.rows(), 5);
  EXPECT_EQ(r.window_lo, -2);
  EXPECT_EQ(r.window_hi, 2);
  // Hand-built 5x5: entry (m', m) = (w(m') - w(m)) for |m' - m| = 1, w(m) = m on |m| <= 1.
  ComplexMatrix expected = ComplexMatrix::Zero(5, 5);
  auto w = [](int m) { return std::abs(m) <= 1 ? double(m) : 0.0; };
  for (int mp = -2; mp <= 2; ++mp)
    for (int m = -2; m <= 2; ++m)
      if (std::abs(mp - m) == 1) expected(mp + 2, m + 2) = w(mp) - w(m);
  EXPECT_TRUE(r.matrix.isApprox(expected, 1e-15));
  EXPECT_NEAR(r.norm, oracle::spectral_norm(expected), 1e-12);
}

TEST(CommutatorTruncDFull, WindowSufficiency) {
  std::mt19937 rng(52);
  for (int N : {1, 3, 5}) {
    const auto g = build_circle(N);
    for (int band : {1, 4, 9}) {
      const FourierSymbol f = random_symbol(rng, band);
      const double exact = commutator_truncD_full(g, f).norm;
      const double wide = commutator_truncD_full(g, f, N + band + 5).norm;
      EXPECT_NEAR(exact, wide, 1e-12 * std::max(1.0, exact));
    }
  }
}

TEST(LipFullCircle, Examples) {
  EXPECT_NEAR(lip_full_circle(FourierSymbol::cosine(1, 2.0)), 2.0, 1e-12);
  EXPECT_EQ(lip_full_circle(FourierSymbol::constant(1.0)), 0.0);
  EXPECT_NEAR(lip_full_circle(FourierSymbol::sine(3, 1.0)), 3.0, 1e-12);
}

TEST(LipFullCircle, AgreesWithDenseScan) {
  std::mt19937 rng(53);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 8; ++trial) {
    const int band = 3 + 4 * trial;
    std::vector<double> a(band), b(band);
    for (int k = 0; k < band; ++k) {
      a[k] = gauss(rng) / (k + 1);
      b[k] = gauss(rng) / (k + 1);
    }
    const double lip = lip_full_circle(FourierSymbol::from_real(0.0, a, b));
    const double dense = oracle::dense_slope(a, b);
    EXPECT_GE(lip, dense - 1e-9 * dense);
    EXPECT_LE(lip, dense * (1.0 + 1e-6));
  }
}

TEST(CommutatorBerezin, IdentityCommutes) {
  const auto g = build_berezin(1.0, 6);
  EXPECT_EQ(commutator_berezin(g, HermitianMatrix::identity(7)).norm, 0.0);
}

TEST(CommutatorBerezin, PositionOperator) {
  const auto g = build_berezin(1.0, 64);
  const auto r = commutator_berezin(g, HermitianMatrix(0.5 * (g.lower + g.raise)));
  // Untruncated, [a, a + a^*] = 1; truncation leaves diag(1, ..., 1, -K).
  EXPECT_NEAR(interior_norm(r, 63), 1.0, 1e-12);
  EXPECT_GE(interior_norm(r, 63), 0.95);
  EXPECT_LE(interior_norm(r, 63), 1.05);
  EXPECT_NEAR(r.norm, 64.0, 1e-10);
  EXPECT_NEAR(r.boundary_defect, 64.0, 1e-10);
}

TEST(CommutatorBerezin, NumberOperator) {
  const int K = 9;
  const auto g = build_berezin(1.0, K);
  ComplexMatrix n = ComplexMatrix::Zero(K + 1, K + 1);
  for (int k = 0; k <= K; ++k) n(k, k) = double(k);
  EXPECT_NEAR(commutator_berezin(g, HermitianMatrix(n)).norm, 2.0 * std::sqrt(double(K)), 1e-12);
}

TEST(CommutatorBerezin, NormEqualsFullBlockCommutator) {
  std::mt19937 rng(54);
  std::normal_distribution<double> gauss;
  const auto g = build_berezin(2.5, 7);
  for (int trial = 0; trial < 5; ++trial) {
    ComplexMatrix b(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) b(i, j) = cplx(gauss(rng), gauss(rng));
    const HermitianMatrix a(ComplexMatrix(b + b.adjoint()));
    const ComplexMatrix full = berezin_full_commutator(g, a);
    EXPECT_LE((full + full.adjoint()).norm(), 1e-12 * full.norm());
    EXPECT_NEAR(commutator_berezin(g, a).norm, oracle::spectral_norm(full), 1e-10 * full.norm());
  }
}

TEST(LipschitzCheck, CircleToeplitzKernelIsIdentity) {
  for (int N = 1; N <= 6; ++N) {
    const auto g = build_circle(N);
    const auto report = lipschitz_check(toeplitz_basis(g, true), circle_commutator_map(g));
    EXPECT_TRUE(report.lipschitz) << "N=" << N;
    ASSERT_EQ(report.kernel.size(), 1u);
  }
}

TEST(LipschitzCheck, NullspaceOfCircleCommutatorNTwo) {
  const auto g = build_circle(2);
  const auto kernel = map_nullspace(toeplitz_basis(g, true), circle_commutator_map(g));
  ASSERT_EQ(kernel.size(), 1u);
  EXPECT_NEAR(std::abs(kernel[0](0)), 1.0, 1e-12);
}

TEST(LipschitzCheck, ZeroMapFails) {
  const auto g = build_circle(1);
  const LinearMatrixMap zero = [](const SparseComplexMatrix& a) { return SparseComplexMatrix(a.rows(), a.cols()); };
  const auto basis = toeplitz_basis(g, true);
  const auto report = lipschitz_check(basis, zero);
  EXPECT_FALSE(report.lipschitz);
  EXPECT_EQ(report.kernel.size(), basis.size());
}

TEST(LipschitzCheck, BerezinKernelContainsIdentity) {
  const auto g = build_berezin(1.0, 4);
  const auto report = lipschitz_check(full_hermitian_basis(5), berezin_commutator_map(g));
  ASSERT_GE(report.kernel.size(), 1u);
  EXPECT_TRUE(report.lipschitz);
}

TEST(CommutatorMaps, LinearAndKillIdentity) {
  std::mt19937 rng(55);
  std::normal_distribution<double> gauss;
  const auto circle = build_circle(3);
  const auto fock = build_berezin(1.7, 6);
  const std::vector<std::pair<LinearMatrixMap, int>> maps = {
      {circle_commutator_map(circle), circle.dim()}, {berezin_commutator_map(fock), fock.levels()}};
  for (const auto& [map, n] : maps) {
    const SparseComplexMatrix id = ComplexMatrix(ComplexMatrix::Identity(n, n)).sparseView();
    EXPECT_EQ(map(id).norm(), 0.0);
    for (int trial = 0; trial < 5; ++trial) {
      ComplexMatrix a(n, n), b(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          a(i, j) = cplx(gauss(rng), gauss(rng));
          b(i, j) = cplx(gauss(rng), gauss(rng));
        }
      const double s = gauss(rng);
      const ComplexMatrix lhs = map(ComplexMatrix(a + s * b).sparseView());
      const ComplexMatrix rhs = ComplexMatrix(map(a.sparseView())) + s * ComplexMatrix(map(b.sparseView()));
      EXPECT_LE((lhs - rhs).norm(), 1e-10 * std::max(1.0, lhs.norm()));
    }
  }
}

TEST(CommutatorMaps, DiracScalingMultipliesNorm) {
  std::mt19937 rng(56);
  for (double s : {0.5, 3.0, -2.0}) {
    const auto g1 = build_circle(3), gs = build_circle(3, s);
    const HermitianMatrix a = compress_symbol(g1, random_symbol(rng, 5));
    EXPECT_NEAR(commutator_bi(gs, a).norm, std::abs(s) * commutator_bi(g1, a).norm, 1e-12 * commutator_bi(gs, a).norm);
  }
}
