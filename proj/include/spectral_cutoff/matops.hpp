#pragma once

// Dense Hermitian linear algebra used throughout the library: eigensolves,
// operator norms through the Hermitian dilation, Hermitian Toeplitz matrices,
// real-linear subspaces of Hermitian matrices and kernels of linear maps on
// those subspaces.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace spectral_cutoff {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using SparseComplexMatrix = Eigen::SparseMatrix<cplx>;

/// A linear map from (sparse) matrices to (sparse) matrices, e.g. a -> [D, a].
using LinearMatrixMap = std::function<SparseComplexMatrix(const SparseComplexMatrix&)>;

namespace detail {

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline bool is_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != cplx(0.0)) return false;
  return true;
}

inline double frobenius(const SparseComplexMatrix& m) { return m.norm(); }

/// Real inner product Re tr(a^* b) of two sparse matrices of equal shape.
inline double real_inner(const SparseComplexMatrix& a, const SparseComplexMatrix& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

/// Groups matrices into classes whose members share at least one nonzero
/// position (transitively). Matrices with no nonzeros form singleton classes.
/// Quantities such as Gram matrices and kernels decouple across classes.
inline std::vector<std::vector<int>> overlap_components(
    const std::vector<SparseComplexMatrix>& mats) {
  const int m = static_cast<int>(mats.size());
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  std::unordered_map<std::int64_t, int> owner;
  for (int e = 0; e < m; ++e) {
    const auto& s = mats[e];
    for (int k = 0; k < s.outerSize(); ++k) {
      for (SparseComplexMatrix::InnerIterator it(s, k); it; ++it) {
        if (it.value() == cplx(0.0)) continue;
        const std::int64_t key = static_cast<std::int64_t>(it.row()) * s.cols() + it.col();
        auto [pos, inserted] = owner.emplace(key, e);
        if (!inserted) {
          const int a = find(pos->second), b = find(e);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
      }
    }
  }
  std::vector<std::vector<int>> groups;
  std::unordered_map<int, int> slot;
  for (int e = 0; e < m; ++e) {
    const int r = find(e);
    auto [it, inserted] = slot.emplace(r, static_cast<int>(groups.size()));
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(e);
  }
  return groups;
}

/// Stacks the real and imaginary parts of the matrices in `members` into the
/// columns of a real matrix, restricted to the positions they touch.
inline RealMatrix stacked_real_columns(const std::vector<SparseComplexMatrix>& mats,
                                       const std::vector<int>& members) {
  std::unordered_map<std::int64_t, int> row_of;
  for (int e : members) {
    const auto& s = mats[e];
    for (int k = 0; k < s.outerSize(); ++k)
      for (SparseComplexMatrix::InnerIterator it(s, k); it; ++it) {
        const std::int64_t key = static_cast<std::int64_t>(it.row()) * s.cols() + it.col();
        row_of.emplace(key, static_cast<int>(row_of.size()));
      }
  }
  RealMatrix out = RealMatrix::Zero(2 * static_cast<Eigen::Index>(row_of.size()),
                                    static_cast<Eigen::Index>(members.size()));
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& s = mats[members[c]];
    for (int k = 0; k < s.outerSize(); ++k)
      for (SparseComplexMatrix::InnerIterator it(s, k); it; ++it) {
        const std::int64_t key = static_cast<std::int64_t>(it.row()) * s.cols() + it.col();
        const int r = row_of.at(key);
        out(2 * r, static_cast<Eigen::Index>(c)) += it.value().real();
        out(2 * r + 1, static_cast<Eigen::Index>(c)) += it.value().imag();
      }
  }
  return out;
}

}  // namespace detail

/// Square complex matrix equal to its adjoint.
///
/// Inputs within `input_tolerance` (relative to the largest entry) of being
/// Hermitian are accepted and symmetrized, so the stored matrix is exactly
/// Hermitian. Anything further off is rejected.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  explicit HermitianMatrix(const ComplexMatrix& m, double input_tolerance = 1e-9) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw InvalidArgument("HermitianMatrix: matrix must be square and nonempty");
    if (!detail::all_finite(m)) throw InvalidArgument("HermitianMatrix: non-finite entry");
    const double scale = std::max(1.0, detail::max_abs(m));
    const double deviation = detail::max_abs(m - m.adjoint());
    if (deviation > input_tolerance * scale)
      throw InvalidArgument("HermitianMatrix: input is not Hermitian (deviation " +
                            std::to_string(deviation) + ")");
    entries_ = 0.5 * (m + m.adjoint());
  }

  static HermitianMatrix identity(int dim) {
    return HermitianMatrix(ComplexMatrix::Identity(dim, dim));
  }

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& matrix() const noexcept { return entries_; }
  cplx operator()(int i, int j) const { return entries_(i, j); }

 private:
  ComplexMatrix entries_;
};

struct EigenDecomposition {
  RealVector values;      ///< ascending
  ComplexMatrix vectors;  ///< unitary; column k belongs to values[k]
};

inline EigenDecomposition hermitian_eigen(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error("hermitian_eigen: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Rejects non-Hermitian input.
inline EigenDecomposition hermitian_eigen(const ComplexMatrix& m) {
  return hermitian_eigen(HermitianMatrix(m));
}

inline RealVector hermitian_eigenvalues(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("hermitian_eigen: eigensolver did not converge");
  return solver.eigenvalues();
}

/// Largest singular value of an arbitrary complex matrix, taken as the top
/// eigenvalue of the Hermitian dilation [[0, X], [X^*, 0]].
inline double op_norm(const ComplexMatrix& x) {
  if (x.size() == 0) return 0.0;
  if (!detail::all_finite(x)) throw InvalidArgument("op_norm: non-finite entry");
  // The dilation of a diagonal matrix has spectrum {±|x_ii|}.
  if (detail::is_diagonal(x)) return x.diagonal().cwiseAbs().maxCoeff();
  const Eigen::Index r = x.rows(), c = x.cols();
  ComplexMatrix dilation = ComplexMatrix::Zero(r + c, r + c);
  dilation.topRightCorner(r, c) = x;
  dilation.bottomLeftCorner(c, r) = x.adjoint();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(dilation, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("op_norm: eigensolver did not converge");
  return std::max(0.0, solver.eigenvalues()(r + c - 1));
}

inline double op_norm(const SparseComplexMatrix& x) { return op_norm(ComplexMatrix(x)); }

/// Hermitian Toeplitz matrix of size `dim` with entry (i, j) = coeffs[i - j],
/// where coeffs[-k] = conj(coeffs[k]). coeffs[0] must be real.
inline HermitianMatrix toeplitz_hermitian(std::span<const cplx> coeffs, int dim) {
  if (dim <= 0) throw InvalidArgument("toeplitz_hermitian: dim must be positive");
  if (static_cast<int>(coeffs.size()) > dim)
    throw InvalidArgument("toeplitz_hermitian: band exceeds matrix dimension");
  if (!coeffs.empty() && coeffs[0].imag() != 0.0)
    throw InvalidArgument("toeplitz_hermitian: diagonal coefficient must be real");
  ComplexMatrix t = ComplexMatrix::Zero(dim, dim);
  for (int k = 0; k < static_cast<int>(coeffs.size()); ++k) {
    for (int j = 0; j + k < dim; ++j) {
      t(j + k, j) = coeffs[k];
      t(j, j + k) = std::conj(coeffs[k]);
    }
  }
  return HermitianMatrix(t, 0.0);
}

/// Real-linear basis of a subspace of Hermitian matrices of size dim x dim.
///
/// Elements are stored sparse. Construction computes the condition number of
/// the trace-inner-product Gram matrix and rejects dependent families.
class SubspaceBasis {
 public:
  SubspaceBasis(int dim, std::vector<SparseComplexMatrix> elements)
      : dim_(dim), elements_(std::move(elements)) {
    if (dim <= 0) throw InvalidArgument("SubspaceBasis: dim must be positive");
    for (auto& e : elements_) {
      if (e.rows() != dim || e.cols() != dim)
        throw InvalidArgument("SubspaceBasis: element has wrong shape");
      e.makeCompressed();
      const double n = detail::frobenius(e);
      if (n == 0.0) throw InvalidArgument("SubspaceBasis: zero element");
      const SparseComplexMatrix adj = e.adjoint();
      if ((e - adj).norm() > 1e-12 * n)
        throw InvalidArgument("SubspaceBasis: element is not Hermitian");
    }
    condition_ = compute_gram_condition();
    if (!std::isfinite(condition_) || condition_ > 1e14)
      throw InvalidArgument("SubspaceBasis: elements are linearly dependent");
  }

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return elements_.size(); }
  const std::vector<SparseComplexMatrix>& elements() const noexcept { return elements_; }
  const SparseComplexMatrix& operator[](std::size_t i) const { return elements_[i]; }
  double gram_condition() const noexcept { return condition_; }

  SparseComplexMatrix combine(const RealVector& coeffs) const {
    if (static_cast<std::size_t>(coeffs.size()) != elements_.size())
      throw InvalidArgument("SubspaceBasis::combine: coefficient length mismatch");
    SparseComplexMatrix out(dim_, dim_);
    for (std::size_t i = 0; i < elements_.size(); ++i)
      if (coeffs[static_cast<Eigen::Index>(i)] != 0.0)
        out += cplx(coeffs[static_cast<Eigen::Index>(i)]) * elements_[i];
    return out;
  }

 private:
  double compute_gram_condition() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& group : detail::overlap_components(elements_)) {
      const auto n = static_cast<Eigen::Index>(group.size());
      RealMatrix gram(n, n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b)
          gram(a, b) = gram(b, a) = detail::real_inner(elements_[group[a]], elements_[group[b]]);
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues()(0));
      hi = std::max(hi, es.eigenvalues()(n - 1));
    }
    if (elements_.empty()) return 1.0;
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
  }

  int dim_;
  std::vector<SparseComplexMatrix> elements_;
  double condition_ = 1.0;
};

/// Orthonormal (trace inner product) real basis of all n x n Hermitian
/// matrices: E_pp, then (E_pq + E_qp)/sqrt2 and i(E_pq - E_qp)/sqrt2 for p < q.
inline SubspaceBasis full_hermitian_basis(int n) {
  if (n <= 0) throw InvalidArgument("full_hermitian_basis: n must be positive");
  const double r = std::sqrt(0.5);
  std::vector<SparseComplexMatrix> elements;
  elements.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    SparseComplexMatrix e(n, n);
    e.insert(p, p) = 1.0;
    elements.push_back(std::move(e));
  }
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      SparseComplexMatrix re(n, n), im(n, n);
      re.insert(p, q) = r;
      re.insert(q, p) = r;
      im.insert(p, q) = cplx(0.0, r);
      im.insert(q, p) = cplx(0.0, -r);
      elements.push_back(std::move(re));
      elements.push_back(std::move(im));
    }
  return SubspaceBasis(n, std::move(elements));
}

/// Relative singular-value threshold below which a direction counts as null.
inline constexpr double kNullspaceThreshold = 1e-9;

/// Orthonormal basis of {c : sum_i c_i images[i] = 0} (c real).
inline std::vector<RealVector> image_nullspace(const std::vector<SparseComplexMatrix>& images) {
  const auto m = static_cast<Eigen::Index>(images.size());
  struct Block {
    std::vector<int> members;
    RealVector sigma;
    RealMatrix v;
  };
  std::vector<Block> blocks;
  double sigma_max = 0.0;
  for (auto& group : detail::overlap_components(images)) {
    RealMatrix a = detail::stacked_real_columns(images, group);
    Block b{std::move(group), {}, {}};
    if (a.rows() == 0) {
      b.sigma = RealVector();
      b.v = RealMatrix::Identity(a.cols(), a.cols());
    } else {
      Eigen::BDCSVD<RealMatrix> svd(a, Eigen::ComputeFullV);
      b.sigma = svd.singularValues();
      b.v = svd.matrixV();
      if (b.sigma.size() > 0) sigma_max = std::max(sigma_max, b.sigma(0));
    }
    blocks.push_back(std::move(b));
  }
  const double cut = kNullspaceThreshold * sigma_max;
  std::vector<RealVector> kernel;
  for (const auto& b : blocks) {
    const auto n = static_cast<Eigen::Index>(b.members.size());
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool null = k >= b.sigma.size() || b.sigma(k) <= cut;
      if (!null) continue;
      RealVector c = RealVector::Zero(m);
      for (Eigen::Index r = 0; r < n; ++r) c(b.members[r]) = b.v(r, k);
      kernel.push_back(std::move(c));
    }
  }
  return kernel;
}

/// Applies `map` to every basis element.
inline std::vector<SparseComplexMatrix> map_images(const SubspaceBasis& basis,
                                                   const LinearMatrixMap& map) {
  std::vector<SparseComplexMatrix> images;
  images.reserve(basis.size());
  for (const auto& b : basis.elements()) {
    SparseComplexMatrix img = map(b);
    img.prune(cplx(0.0), 0.0);
    img.makeCompressed();
    images.push_back(std::move(img));
  }
  return images;
}

/// Spot-checks K(b_i + s b_j) = K(b_i) + s K(b_j) on deterministic index pairs.
inline void check_linearity(const SubspaceBasis& basis, const LinearMatrixMap& map,
                            const std::vector<SparseComplexMatrix>& images, double tol = 1e-10) {
  const std::size_t m = basis.size();
  if (m == 0) return;
  const double scales[] = {0.7, -1.3, 2.5};
  for (int t = 0; t < 3; ++t) {
    const std::size_t i = (7919u * static_cast<std::size_t>(t + 1)) % m;
    const std::size_t j = (104729u * static_cast<std::size_t>(t + 3)) % m;
    const double s = scales[t];
    SparseComplexMatrix combo = basis[i] + cplx(s) * basis[j];
    SparseComplexMatrix lhs = map(combo);
    SparseComplexMatrix rhs = images[i] + cplx(s) * images[j];
    const double err = (lhs - rhs).norm();
    const double ref = 1.0 + images[i].norm() + std::abs(s) * images[j].norm();
    if (err > tol * ref) throw InvalidArgument("constraint map is not linear");
  }
}

/// Orthonormal basis (coefficient vectors) of the kernel of `map` restricted
/// to the span of `basis`. Null means singular value <= 1e-9 * largest.
inline std::vector<RealVector> map_nullspace(const SubspaceBasis& basis, const LinearMatrixMap& map) {
  auto images = map_images(basis, map);
  check_linearity(basis, map, images);
  return image_nullspace(images);
}

}  // namespace spectral_cutoff
