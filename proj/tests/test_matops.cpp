#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spectral_cutoff/matops.hpp"

using namespace spectral_cutoff;

namespace {

ComplexMatrix random_matrix(std::mt19937& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  ComplexMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

ComplexMatrix random_hermitian(std::mt19937& rng, int n) {
  const ComplexMatrix a = random_matrix(rng, n, n);
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST(HermitianEigen, Identity) {
  const auto e = hermitian_eigen(HermitianMatrix::identity(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values(i), 1.0, 1e-14);
}

TEST(HermitianEigen, DiagonalAscending) {
  ComplexMatrix d = ComplexMatrix::Zero(3, 3);
  d(0, 0) = 2.0;
  d(1, 1) = -1.0;
  const auto e = hermitian_eigen(HermitianMatrix(d));
  EXPECT_NEAR(e.values(0), -1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 0.0, 1e-14);
  EXPECT_NEAR(e.values(2), 2.0, 1e-14);
}

TEST(HermitianEigen, PauliX) {
  ComplexMatrix x(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  const auto e = hermitian_eigen(HermitianMatrix(x));
  EXPECT_NEAR(e.values(0), -1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
}

TEST(HermitianEigen, RejectsNonHermitian) {
  ComplexMatrix x(2, 2);
  x << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(HermitianMatrix{x}, InvalidArgument);
}

TEST(HermitianEigen, ReconstructionAndTrace) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const HermitianMatrix h(random_hermitian(rng, 12));
    const auto e = hermitian_eigen(h);
    const ComplexMatrix rec = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LE((rec - h.matrix()).norm(), 1e-10 * h.matrix().norm());
    for (int i = 1; i < 12; ++i) EXPECT_LE(e.values(i - 1), e.values(i));
    const double trace = h.matrix().trace().real();
    EXPECT_NEAR(e.values.sum(), trace, 1e-9 * std::max(1.0, std::abs(trace)));
  }
}

TEST(HermitianMatrix, SymmetrizedExactly) {
  std::mt19937 rng(2);
  ComplexMatrix a = random_hermitian(rng, 6);
  a(1, 2) += cplx(1e-13, 0.0);
  const HermitianMatrix h(a);
  EXPECT_LE((h.matrix() - h.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OpNorm, Zero) { EXPECT_EQ(op_norm(ComplexMatrix::Zero(4, 4)), 0.0); }

TEST(OpNorm, TridiagonalAntisymmetric) {
  ComplexMatrix x(3, 3);
  x << 0, 1, 0, -1, 0, 1, 0, -1, 0;
  EXPECT_NEAR(op_norm(x), std::sqrt(2.0), 1e-12);
}

TEST(OpNorm, DiagonalDirac) {
  ComplexMatrix d = ComplexMatrix::Zero(11, 11);
  for (int m = -5; m <= 5; ++m) d(m + 5, m + 5) = double(m);
  EXPECT_EQ(op_norm(d), 5.0);
}

TEST(OpNorm, AgreesWithJacobiSvd) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const ComplexMatrix x = random_matrix(rng, 7, 5);
    EXPECT_NEAR(op_norm(x), oracle::spectral_norm(x), 1e-10 * oracle::spectral_norm(x));
  }
}

TEST(OpNorm, AdjointInvariance) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const ComplexMatrix x = random_matrix(rng, 6, 6);
    EXPECT_NEAR(op_norm(x), op_norm(ComplexMatrix(x.adjoint())), 1e-9);
  }
}

TEST(OpNorm, SubadditiveAndHomogeneous) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    const ComplexMatrix x = random_matrix(rng, 5, 5), y = random_matrix(rng, 5, 5);
    EXPECT_LE(op_norm(ComplexMatrix(x + y)), op_norm(x) + op_norm(y) + 1e-9);
    const cplx s(g(rng), g(rng));
    EXPECT_NEAR(op_norm(ComplexMatrix(s * x)), std::abs(s) * op_norm(x), 1e-9 * (1.0 + std::abs(s) * op_norm(x)));
  }
}

TEST(Toeplitz, IdentityFromConstant) {
  const std::vector<cplx> c = {1.0};
  EXPECT_TRUE(toeplitz_hermitian(c, 5).matrix().isApprox(ComplexMatrix::Identity(5, 5)));
}

TEST(Toeplitz, TwoCosine) {
  const std::vector<cplx> c = {0.0, 1.0};
  ComplexMatrix expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_EQ(toeplitz_hermitian(c, 3).matrix(), expected);
}

TEST(Toeplitz, SkewBand) {
  const std::vector<cplx> c = {0.0, 0.0, cplx(0.0, 1.0)};
  const HermitianMatrix t = toeplitz_hermitian(c, 5);
  EXPECT_EQ(t(2, 0), cplx(0.0, 1.0));
  EXPECT_EQ(t(0, 2), cplx(0.0, -1.0));
  EXPECT_EQ((t.matrix() - t.matrix().adjoint()).norm(), 0.0);
}

TEST(Toeplitz, EntryDependsOnlyOnOffset) {
  const std::vector<cplx> c = {0.3, cplx(1.0, -2.0), cplx(0.5, 0.25), cplx(0.0, 1.5)};
  const HermitianMatrix t = toeplitz_hermitian(c, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      const int k = i - j;
      if (std::abs(k) >= 4) {
        EXPECT_EQ(t(i, j), cplx(0.0));
      } else {
        EXPECT_EQ(t(i, j), k >= 0 ? c[k] : std::conj(c[-k]));
      }
    }
}

TEST(Toeplitz, RejectsOversizedBand) {
  const std::vector<cplx> c(6, 1.0);
  EXPECT_THROW(toeplitz_hermitian(c, 5), InvalidArgument);
}

TEST(SubspaceBasis, RejectsDependentElements) {
  SparseComplexMatrix a(2, 2);
  a.insert(0, 1) = 1.0;
  a.insert(1, 0) = 1.0;
  SparseComplexMatrix b = 2.0 * a;
  EXPECT_THROW(SubspaceBasis(2, {a, b}), Error);
}

TEST(SubspaceBasis, FullHermitianIsOrthonormal) {
  const SubspaceBasis basis = full_hermitian_basis(4);
  EXPECT_EQ(basis.size(), 16u);
  EXPECT_NEAR(basis.gram_condition(), 1.0, 1e-12);
}

TEST(MapNullspace, IdentityMapHasNone) {
  const SubspaceBasis basis = full_hermitian_basis(3);
  const LinearMatrixMap id = [](const SparseComplexMatrix& a) { return a; };
  EXPECT_TRUE(map_nullspace(basis, id).empty());
}

TEST(MapNullspace, ZeroMapHasEverything) {
  const SubspaceBasis basis = full_hermitian_basis(2);
  ASSERT_EQ(basis.size(), 4u);
  const LinearMatrixMap zero = [](const SparseComplexMatrix& a) {
    return SparseComplexMatrix(a.rows(), a.cols());
  };
  const auto kernel = map_nullspace(basis, zero);
  ASSERT_EQ(kernel.size(), 4u);
  RealMatrix k(4, 4);
  for (int i = 0; i < 4; ++i) k.col(i) = kernel[i];
  EXPECT_TRUE((k.transpose() * k).isApprox(RealMatrix::Identity(4, 4), 1e-12));
}

TEST(MapNullspace, RejectsNonlinearMap) {
  const SubspaceBasis basis = full_hermitian_basis(2);
  const LinearMatrixMap square = [](const SparseComplexMatrix& a) { return SparseComplexMatrix(a * a); };
  EXPECT_THROW(map_nullspace(basis, square), InvalidArgument);
}
