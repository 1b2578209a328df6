#pragma once

// Commutator seminorms ||[D, a]|| for the circle (compressed and full-algebra
// variants), the Lipschitz constant sup|f'| for the untruncated circle, and the
// Fock-space commutator of the Berezin geometry.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "geometry.hpp"
#include "matops.hpp"

namespace spectral_cutoff {

struct CommutatorResult {
  ComplexMatrix matrix;
  double norm = 0.0;
  /// Range of basis labels (circle modes or Fock levels) the matrix acts on.
  int window_lo = 0;
  int window_hi = 0;
  /// Fock geometries only: norm of the part touching the top two levels.
  double boundary_defect = 0.0;
};

/// Sparse map a -> [D_N, a]; entry (i, j) picks up scale * (i - j).
inline LinearMatrixMap circle_commutator_map(const TruncatedCircleGeometry& geom) {
  return [geom](const SparseComplexMatrix& a) {
    if (a.rows() != geom.dim() || a.cols() != geom.dim())
      throw InvalidArgument("circle commutator: element has wrong dimension");
    SparseComplexMatrix out = a;
    for (int k = 0; k < out.outerSize(); ++k)
      for (SparseComplexMatrix::InnerIterator it(out, k); it; ++it)
        it.valueRef() *= geom.dirac_scale * double(it.row() - it.col());
    out.prune(cplx(0.0), 0.0);
    return out;
  };
}

/// [D_N, a] for a Hermitian Toeplitz element of the compressed space.
inline CommutatorResult commutator_bi(const TruncatedCircleGeometry& geom, const HermitianMatrix& a) {
  const int n = geom.dim();
  if (a.dim() != n) throw InvalidArgument("commutator_bi: element has wrong dimension");
  const double scale = std::max(1.0, a.matrix().cwiseAbs().maxCoeff());
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j)
      if (std::abs(a(i, j) - a(i - 1, j - 1)) > 1e-12 * scale)
        throw InvalidArgument("commutator_bi: element is not Toeplitz");
  CommutatorResult r;
  r.matrix = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.matrix(i, j) = geom.dirac_scale * double(i - j) * a(i, j);
  r.norm = op_norm(r.matrix);
  r.window_lo = -geom.N;
  r.window_hi = geom.N;
  return r;
}

/// [D_N, pi(f)] with pi(f) the multiplication operator on all of L^2(S^1),
/// realized on modes |m| <= window (window >= N + band is exact: every other
/// entry vanishes identically).
inline SparseComplexMatrix truncated_dirac_full_image(const TruncatedCircleGeometry& geom,
                                                      const FourierSymbol& f, int window) {
  const int N = geom.N, M = f.band();
  if (window < N + M) throw InvalidArgument("commutator window smaller than N + band");
  const int n = 2 * window + 1;
  auto weight = [N](int m) { return std::abs(m) <= N ? double(m) : 0.0; };
  std::vector<Eigen::Triplet<cplx>> trips;
  for (int mp = -window; mp <= window; ++mp) {
    for (int k = -M; k <= M; ++k) {
      const int m = mp - k;
      if (m < -window || m > window) continue;
      const double w = weight(mp) - weight(m);
      const cplx v = f.coeff(k) * (geom.dirac_scale * w);
      if (v != cplx(0.0)) trips.emplace_back(mp + window, m + window, v);
    }
  }
  SparseComplexMatrix s(n, n);
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

inline CommutatorResult commutator_truncD_full(const TruncatedCircleGeometry& geom,
                                               const FourierSymbol& f, int window = -1) {
  if (!f.is_real()) throw InvalidArgument("commutator_truncD_full: symbol is not real-valued");
  if (window < 0) window = geom.N + f.band();
  CommutatorResult r;
  r.matrix = ComplexMatrix(truncated_dirac_full_image(geom, f, window));
  r.norm = op_norm(r.matrix);
  r.window_lo = -window;
  r.window_hi = window;
  return r;
}

/// sup_x |f'(x)|: grid of max(64 * band, 64) points, then golden-section
/// refinement around every grid maximum within 2% of the best.
inline double lip_full_circle(const FourierSymbol& f) {
  if (!f.is_real()) throw InvalidArgument("lip_full_circle: symbol is not real-valued");
  const int band = f.band();
  if (band == 0) return 0.0;
  const int grid = std::max(64 * band, 64);
  const double h = 2.0 * std::numbers::pi / grid;
  std::vector<double> g(static_cast<std::size_t>(grid));
  for (int j = 0; j < grid; ++j) g[j] = std::abs(f.derivative(j * h).real());
  const double gmax = *std::max_element(g.begin(), g.end());
  if (gmax == 0.0) return 0.0;
  double best = gmax;
  auto slope = [&f](double x) { return std::abs(f.derivative(x).real()); };
  for (int j = 0; j < grid; ++j) {
    const double left = g[(j + grid - 1) % grid], right = g[(j + 1) % grid];
    if (g[j] < 0.98 * gmax || g[j] < left || g[j] < right) continue;
    double a = (j - 1) * h, b = (j + 1) * h;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = slope(c), fd = slope(d);
    for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
      if (fc > fd) {
        b = d; d = c; fd = fc; c = b - phi * (b - a); fc = slope(c);
      } else {
        a = c; c = d; fc = fd; d = a + phi * (b - a); fd = slope(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

/// Sparse map a -> (2/sqrt(theta)) [lower, a]: the off-diagonal block that
/// determines ||[D_theta, a (x) 1_2]||.
inline LinearMatrixMap berezin_commutator_map(const BerezinGeometry& geom) {
  SparseComplexMatrix lower = geom.lower.sparseView();
  const double pref = geom.prefactor();
  const int n = geom.levels();
  return [lower, pref, n](const SparseComplexMatrix& a) {
    if (a.rows() != n || a.cols() != n)
      throw InvalidArgument("berezin commutator: element has wrong dimension");
    SparseComplexMatrix out = cplx(pref) * (SparseComplexMatrix(lower * a) - SparseComplexMatrix(a * lower));
    out.prune(cplx(0.0), 0.0);
    return out;
  };
}

/// The full commutator [D_theta, a (x) 1_2] = [[0, -X^*], [X, 0]] with
/// X = (2/sqrt(theta)) [lower, a]; its norm equals ||X||.
inline ComplexMatrix berezin_full_commutator(const BerezinGeometry& geom, const HermitianMatrix& a) {
  const int n = geom.levels();
  if (a.dim() != n) throw InvalidArgument("commutator_berezin: element has wrong dimension");
  const ComplexMatrix d = geom.dirac.matrix();
  ComplexMatrix lifted = ComplexMatrix::Zero(2 * n, 2 * n);
  lifted.topLeftCorner(n, n) = a.matrix();
  lifted.bottomRightCorner(n, n) = a.matrix();
  return d * lifted - lifted * d;
}

inline CommutatorResult commutator_berezin(const BerezinGeometry& geom, const HermitianMatrix& a) {
  const int n = geom.levels();
  if (a.dim() != n) throw InvalidArgument("commutator_berezin: element has wrong dimension");
  CommutatorResult r;
  r.matrix = geom.prefactor() * (geom.lower * a.matrix() - a.matrix() * geom.lower);
  r.norm = op_norm(r.matrix);
  r.window_lo = 0;
  r.window_hi = geom.K;
  ComplexMatrix edge = r.matrix;
  edge.topLeftCorner(n - 2, n - 2).setZero();
  r.boundary_defect = op_norm(edge);
  return r;
}

/// Norm of the commutator block seen by vectors supported on levels
/// 0..levels-1, i.e. of its leading principal block.
inline double interior_norm(const CommutatorResult& r, int levels) {
  if (levels <= 0 || levels > r.matrix.rows()) throw InvalidArgument("interior_norm: bad level count");
  return op_norm(ComplexMatrix(r.matrix.topLeftCorner(levels, levels)));
}

struct LipschitzReport {
  bool lipschitz = false;           ///< kernel is exactly span{identity}
  std::vector<RealVector> kernel;   ///< coefficient vectors in the basis
};

/// A seminorm L(a) = ||K(a)|| is Lipschitz when it vanishes only on multiples
/// of the identity.
inline LipschitzReport lipschitz_check(const SubspaceBasis& basis, const LinearMatrixMap& map) {
  LipschitzReport report;
  report.kernel = map_nullspace(basis, map);
  if (report.kernel.size() != 1) return report;
  const ComplexMatrix a = ComplexMatrix(basis.combine(report.kernel.front()));
  const cplx mean = a.trace() / double(basis.dim());
  const double dev = (a - mean * ComplexMatrix::Identity(basis.dim(), basis.dim())).norm();
  report.lipschitz = std::abs(mean) > 0.0 && dev <= 1e-9 * a.norm();
  return report;
}

}  // namespace spectral_cutoff
