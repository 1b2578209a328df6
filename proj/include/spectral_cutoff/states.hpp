#pragma once

// State functionals: density matrices on truncated spaces (Fejer states,
// coherent states, truncated normal states), point evaluations on symbols,
// and first-moment bookkeeping for normal states.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "extended.hpp"
#include "geometry.hpp"
#include "matops.hpp"

namespace spectral_cutoff {

/// Positive semidefinite, unit-trace density matrix.
class DensityState {
 public:
  static constexpr double kTolerance = 1e-10;

  DensityState() = default;

  explicit DensityState(HermitianMatrix rho) : rho_(std::move(rho)) {
    const double trace = rho_.matrix().trace().real();
    if (std::abs(trace - 1.0) > kTolerance)
      throw InvalidArgument("DensityState: trace must be 1 (got " + std::to_string(trace) + ")");
    const RealVector ev = hermitian_eigenvalues(rho_);
    if (ev(0) < -kTolerance) throw InvalidArgument("DensityState: matrix is not positive");
  }

  /// Vector state |v><v| of a unit vector.
  static DensityState pure(const ComplexVector& v) {
    if (std::abs(v.norm() - 1.0) > kTolerance)
      throw InvalidArgument("DensityState::pure: vector must have unit norm");
    return DensityState(HermitianMatrix(v * v.adjoint()));
  }

  int dim() const noexcept { return rho_.dim(); }
  const HermitianMatrix& rho() const noexcept { return rho_; }

  /// Re tr(rho a).
  double operator()(const ComplexMatrix& a) const {
    if (a.rows() != dim() || a.cols() != dim())
      throw InvalidArgument("DensityState: element has wrong dimension");
    return (rho_.matrix().transpose().cwiseProduct(a)).sum().real();
  }

  double operator()(const HermitianMatrix& a) const { return (*this)(a.matrix()); }

  double operator()(const SparseComplexMatrix& a) const {
    if (a.rows() != dim() || a.cols() != dim())
      throw InvalidArgument("DensityState: element has wrong dimension");
    double s = 0.0;
    for (int k = 0; k < a.outerSize(); ++k)
      for (SparseComplexMatrix::InnerIterator it(a, k); it; ++it)
        s += (it.value() * rho_.matrix()(it.col(), it.row())).real();
    return s;
  }

 private:
  HermitianMatrix rho_;
};

/// Point of the circle, reduced to [0, 2pi).
class PointFunctional {
 public:
  explicit PointFunctional(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    x_ = std::fmod(x, two_pi);
    if (x_ < 0.0) x_ += two_pi;
    if (x_ >= two_pi) x_ = 0.0;
  }

  double x() const noexcept { return x_; }

 private:
  double x_ = 0.0;
};

/// f(x) for a real symbol.
inline double eval_point(const PointFunctional& p, const FourierSymbol& f) {
  if (!f.is_real()) throw InvalidArgument("eval_point: symbol is not real-valued");
  return f.evaluate(p.x()).real();
}

/// Unit vector of the Fejer state at x: (N+1)^{-1/2} e^{-imx} on modes 0..N.
inline ComplexVector fejer_vector(double x, int N) {
  if (N < 1) throw InvalidArgument("fejer_state: N must be at least 1");
  ComplexVector v = ComplexVector::Zero(2 * N + 1);
  const double amp = 1.0 / std::sqrt(double(N + 1));
  for (int m = 0; m <= N; ++m) v(m + N) = std::polar(amp, -m * x);
  return v;
}

inline DensityState fejer_state(double x, int N) { return DensityState::pure(fejer_vector(x, N)); }

/// Closed-form Fejer mean sum_{|n|<=N} (1 - |n|/(N+1)) f_n e^{inx}.
inline double fejer_sum(const FourierSymbol& f, double x, int N) {
  cplx s = 0.0;
  for (int n = -N; n <= N; ++n)
    s += (1.0 - std::abs(n) / double(N + 1)) * f.coeff(n) * std::polar(1.0, n * x);
  return s.real();
}

/// Truncated coherent vector on Fock levels 0..K.
struct CoherentStateVec {
  cplx z;
  double theta = 1.0;
  int K = 0;
  ComplexVector amplitudes;  ///< unit norm
  double tail_mass = 0.0;    ///< weight beyond level K before renormalization
  bool tail_warning = false;  ///< tail_mass exceeds kCoherentTailWarning

  DensityState density() const { return DensityState::pure(amplitudes); }
};

inline constexpr double kCoherentTailWarning = 1e-8;

namespace detail {

/// sum_{n > K} e^{-lambda} lambda^n / n!, summed directly.
inline double poisson_upper_tail(double lambda, int K) {
  if (lambda <= 0.0) return 0.0;
  double total = 0.0;
  for (int n = K + 1;; ++n) {
    const double term = std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
    total += term;
    if (n > lambda && term <= 1e-18 * total) break;
    if (n > K + 100000) break;
  }
  return std::min(total, 1.0);
}

}  // namespace detail

/// c_n proportional to conj(z)^n / sqrt(theta^n n!), n = 0..K, renormalized.
inline CoherentStateVec coherent_state(cplx z, double theta, int K) {
  if (!(theta > 0.0)) throw InvalidArgument("coherent_state: theta must be positive");
  if (K < 2) throw InvalidArgument("coherent_state: cut-off K must be at least 2");
  CoherentStateVec out;
  out.z = z;
  out.theta = theta;
  out.K = K;
  out.amplitudes = ComplexVector::Zero(K + 1);
  const double r = std::abs(z);
  const double lambda = r * r / theta;
  if (r == 0.0) {
    out.amplitudes(0) = 1.0;
  } else {
    const double phase = -std::arg(z);
    const double log_step = std::log(r) - 0.5 * std::log(theta);
    for (int n = 0; n <= K; ++n) {
      const double log_mag = -0.5 * lambda + n * log_step - 0.5 * std::lgamma(n + 1.0);
      out.amplitudes(n) = std::polar(std::exp(log_mag), n * phase);
    }
    out.amplitudes /= out.amplitudes.norm();
  }
  out.tail_mass = detail::poisson_upper_tail(lambda, K);
  out.tail_warning = out.tail_mass > kCoherentTailWarning;
  return out;
}

/// <psi_z, a psi_z> with the truncated, renormalized coherent vector.
inline double berezin_transform(const BerezinGeometry& geom, const HermitianMatrix& a, cplx z) {
  if (a.dim() != geom.levels()) throw InvalidArgument("berezin_transform: element has wrong dimension");
  const ComplexVector c = coherent_state(z, geom.theta, geom.K).amplitudes;
  return c.dot(a.matrix() * c).real();
}

/// Orthogonal projection described by an orthonormal basis of its range.
class Projection {
 public:
  /// Coordinate projection onto the listed basis vectors, in the given order.
  static Projection coordinate(int ambient_dim, std::span<const int> indices) {
    ComplexMatrix range = ComplexMatrix::Zero(ambient_dim, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) {
      if (indices[c] < 0 || indices[c] >= ambient_dim)
        throw InvalidArgument("Projection: index out of range");
      range(indices[c], static_cast<Eigen::Index>(c)) = 1.0;
    }
    return Projection(std::move(range));
  }

  /// First `rank` basis vectors.
  static Projection leading(int ambient_dim, int rank) {
    std::vector<int> idx(static_cast<std::size_t>(rank));
    std::iota(idx.begin(), idx.end(), 0);
    return coordinate(ambient_dim, idx);
  }

  /// From a projection matrix; the range basis is taken from its eigenvectors.
  static Projection from_matrix(const ComplexMatrix& p) {
    const HermitianMatrix h(p);
    if ((h.matrix() * h.matrix() - h.matrix()).cwiseAbs().maxCoeff() > 1e-9)
      throw InvalidArgument("Projection: matrix is not idempotent");
    const auto eig = hermitian_eigen(h);
    int rank = 0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) rank += eig.values(i) > 0.5;
    return Projection(eig.vectors.rightCols(rank));
  }

  explicit Projection(ComplexMatrix range) : range_(std::move(range)) {
    const ComplexMatrix gram = range_.adjoint() * range_;
    if (range_.cols() == 0 ||
        (gram - ComplexMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-10)
      throw InvalidArgument("Projection: range basis must be orthonormal and nonempty");
  }

  int ambient_dim() const noexcept { return static_cast<int>(range_.rows()); }
  int rank() const noexcept { return static_cast<int>(range_.cols()); }
  const ComplexMatrix& range() const noexcept { return range_; }

 private:
  ComplexMatrix range_;
};

struct TruncatedNormal {
  DensityState state;  ///< on range(P), in the projection's range basis
  double Z = 0.0;      ///< tr(P R)
};

/// (1/Z) P R P restricted to range(P), with Z = tr(P R).
inline TruncatedNormal truncate_normal(const DensityState& state, const Projection& p,
                                       double tolerance = 1e-12) {
  if (p.ambient_dim() != state.dim())
    throw InvalidArgument("truncate_normal: projection and state dimensions differ");
  const ComplexMatrix compressed = p.range().adjoint() * state.rho().matrix() * p.range();
  const double z = compressed.trace().real();
  if (z <= tolerance) throw InvalidArgument("state orthogonal to truncation window");
  return {DensityState(HermitianMatrix(compressed / z)), z};
}

/// Pullback of a state on the truncated circle to symbols, f -> phi(P f P).
class SharpPullback {
 public:
  SharpPullback(DensityState state, TruncatedCircleGeometry geom)
      : state_(std::move(state)), geom_(geom) {
    if (state_.dim() != geom_.dim())
      throw InvalidArgument("sharp_pullback: state lives on the wrong space");
  }

  double operator()(const FourierSymbol& f) const { return state_(compress_symbol(geom_, f)); }

 private:
  DensityState state_;
  TruncatedCircleGeometry geom_;
};

inline SharpPullback sharp_pullback(const DensityState& state, const TruncatedCircleGeometry& geom) {
  return SharpPullback(state, geom);
}

/// Normal state together with the eigenbasis used to decompose it.
class NormalStateSpec {
 public:
  NormalStateSpec(DensityState rho, ComplexMatrix basis, RealVector weights)
      : rho_(std::move(rho)), basis_(std::move(basis)), weights_(std::move(weights)) {
    const int n = rho_.dim();
    if (basis_.rows() != n || basis_.cols() != n || weights_.size() != n)
      throw InvalidArgument("NormalStateSpec: dimension mismatch");
    if ((basis_.adjoint() * basis_ - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9)
      throw InvalidArgument("NormalStateSpec: basis is not unitary");
    if (weights_.minCoeff() < 0.0 || std::abs(weights_.sum() - 1.0) > 1e-10)
      throw InvalidArgument("NormalStateSpec: weights must be nonnegative and sum to 1");
    for (int k = 0; k < n; ++k) {
      const ComplexVector residual = rho_.rho().matrix() * basis_.col(k) - weights_(k) * basis_.col(k);
      if (residual.norm() > 1e-9)
        throw InvalidArgument("NormalStateSpec: basis vector is not an eigenvector with its weight");
    }
  }

  const DensityState& rho() const noexcept { return rho_; }
  const ComplexMatrix& basis() const noexcept { return basis_; }
  const RealVector& weights() const noexcept { return weights_; }
  int dim() const noexcept { return rho_.dim(); }

 private:
  DensityState rho_;
  ComplexMatrix basis_;
  RealVector weights_;
};

/// dists[k][n] = d(Psi_k, Psi_n); entries may be infinite.
using DistanceTable = std::vector<std::vector<Extended>>;

/// sum_n p_n d(Psi_k, Psi_n).
inline Extended moment1(const NormalStateSpec& spec, const DistanceTable& dists, int k) {
  const auto n = static_cast<std::size_t>(spec.dim());
  if (dists.size() != n) throw InvalidArgument("moment1: distance table dimension mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (dists[i].size() != n) throw InvalidArgument("moment1: distance table dimension mismatch");
    if (!(dists[i][i] == Extended(0.0))) throw InvalidArgument("moment1: nonzero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      if (dists[i][j].is_finite() && dists[i][j].value() < 0.0)
        throw InvalidArgument("moment1: negative distance");
      if (!(dists[i][j] == dists[j][i])) throw InvalidArgument("moment1: table is not symmetric");
    }
  }
  if (k < 0 || static_cast<std::size_t>(k) >= n) throw InvalidArgument("moment1: reference index out of range");
  Extended total(0.0);
  for (std::size_t j = 0; j < n; ++j)
    total = total + spec.weights()(static_cast<Eigen::Index>(j)) * dists[static_cast<std::size_t>(k)][j];
  return total;
}

struct WeightedPoint {
  double weight;
  double x;
};

/// sum_i w_i d_geo(x_i, x') for a finite mixture of circle points.
inline double moment1_commutative(std::span<const WeightedPoint> mixture, double reference) {
  double sum_w = 0.0, total = 0.0;
  for (const auto& [w, x] : mixture) {
    if (!(w > 0.0)) throw InvalidArgument("moment1_commutative: weights must be positive");
    sum_w += w;
    total += w * geodesic_circle(x, reference);
  }
  if (std::abs(sum_w - 1.0) > 1e-10) throw InvalidArgument("moment1_commutative: weights must sum to 1");
  return total;
}

}  // namespace spectral_cutoff
