#pragma once

// The two truncated geometries: the circle with its Dirac operator cut off to
// the Fourier modes -N..N, and the plane quantized on Fock space with the Dirac
// operator compressed to levels 0..K. Plus the spectral-action eigenvalue count.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "matops.hpp"

namespace spectral_cutoff {

/// Band-limited function on the circle, f(x) = sum_{|k| <= band} f_k e^{ikx}.
class FourierSymbol {
 public:
  FourierSymbol() : coeffs_(1, cplx(0.0)) {}

  /// `coeffs[k + band]` holds f_k.
  FourierSymbol(int band, std::vector<cplx> coeffs) : band_(band), coeffs_(std::move(coeffs)) {
    if (band < 0) throw InvalidArgument("FourierSymbol: negative band");
    if (static_cast<int>(coeffs_.size()) != 2 * band + 1)
      throw InvalidArgument("FourierSymbol: expected 2*band+1 coefficients");
  }

  static FourierSymbol constant(double c) { return FourierSymbol(0, {cplx(c)}); }

  /// amplitude * cos(kx)
  static FourierSymbol cosine(int k, double amplitude = 1.0) {
    FourierSymbol f = zero(std::abs(k));
    f.set_real_pair(std::abs(k), cplx(0.5 * amplitude));
    return f;
  }

  /// amplitude * sin(kx)
  static FourierSymbol sine(int k, double amplitude = 1.0) {
    FourierSymbol f = zero(std::abs(k));
    f.set_real_pair(std::abs(k), cplx(0.0, k >= 0 ? -0.5 * amplitude : 0.5 * amplitude));
    return f;
  }

  static FourierSymbol zero(int band) {
    return FourierSymbol(band, std::vector<cplx>(2 * static_cast<std::size_t>(band) + 1));
  }

  /// Real-valued symbol a0 + sum_k (a_k cos kx + b_k sin kx), k = 1..band.
  static FourierSymbol from_real(double a0, std::span<const double> cos_coeffs,
                                 std::span<const double> sin_coeffs) {
    if (cos_coeffs.size() != sin_coeffs.size())
      throw InvalidArgument("FourierSymbol::from_real: length mismatch");
    const int band = static_cast<int>(cos_coeffs.size());
    FourierSymbol f = zero(band);
    f.coeffs_[band] = cplx(a0);
    for (int k = 1; k <= band; ++k)
      f.set_real_pair(k, 0.5 * cplx(cos_coeffs[k - 1], -sin_coeffs[k - 1]));
    return f;
  }

  int band() const noexcept { return band_; }

  cplx coeff(int k) const noexcept {
    return std::abs(k) > band_ ? cplx(0.0) : coeffs_[static_cast<std::size_t>(k + band_)];
  }

  /// Exact Hermitian symmetry f_{-k} = conj(f_k).
  bool is_real() const noexcept {
    for (int k = 0; k <= band_; ++k)
      if (coeff(-k) != std::conj(coeff(k))) return false;
    return true;
  }

  cplx evaluate(double x) const {
    cplx s = 0.0;
    for (int k = -band_; k <= band_; ++k) s += coeff(k) * std::polar(1.0, k * x);
    return s;
  }

  cplx derivative(double x) const {
    cplx s = 0.0;
    for (int k = -band_; k <= band_; ++k) s += cplx(0.0, k) * coeff(k) * std::polar(1.0, k * x);
    return s;
  }

  friend FourierSymbol operator+(const FourierSymbol& a, const FourierSymbol& b) {
    const int band = std::max(a.band_, b.band_);
    FourierSymbol out = zero(band);
    for (int k = -band; k <= band; ++k) out.coeffs_[k + band] = a.coeff(k) + b.coeff(k);
    return out;
  }

  friend FourierSymbol operator*(double s, const FourierSymbol& f) {
    FourierSymbol out = f;
    for (auto& c : out.coeffs_) c *= s;
    return out;
  }

 private:
  void set_real_pair(int k, cplx value) {
    coeffs_[static_cast<std::size_t>(band_ + k)] = value;
    coeffs_[static_cast<std::size_t>(band_ - k)] = std::conj(value);
  }

  int band_ = 0;
  std::vector<cplx> coeffs_;
};

/// Circle with the Dirac operator D = -i d/dx cut off to modes m = -N..N.
///
/// The basis is stored in increasing mode order; mode m sits at index m + N.
/// `dirac_scale` multiplies D (used to test scaling covariance).
struct TruncatedCircleGeometry {
  int N = 1;
  double dirac_scale = 1.0;

  int dim() const noexcept { return 2 * N + 1; }
  int index_of_mode(int m) const noexcept { return m + N; }
  int mode_of_index(int i) const noexcept { return i - N; }

  HermitianMatrix dirac() const {
    ComplexMatrix d = ComplexMatrix::Zero(dim(), dim());
    for (int m = -N; m <= N; ++m) d(index_of_mode(m), index_of_mode(m)) = dirac_scale * m;
    return HermitianMatrix(d, 0.0);
  }
};

inline TruncatedCircleGeometry build_circle(int N, double dirac_scale = 1.0) {
  if (N < 1) throw InvalidArgument("build_circle: N must be at least 1");
  if (!(dirac_scale != 0.0) || !std::isfinite(dirac_scale))
    throw InvalidArgument("build_circle: Dirac scale must be finite and nonzero");
  return {N, dirac_scale};
}

/// Toeplitz compression P_N f P_N of a real symbol: diagonal k carries f_k for
/// |k| <= 2N; higher modes are cut away.
inline HermitianMatrix compress_symbol(const TruncatedCircleGeometry& geom, const FourierSymbol& f) {
  if (!f.is_real()) throw InvalidArgument("compress_symbol: symbol is not real-valued");
  std::vector<cplx> coeffs(static_cast<std::size_t>(geom.dim()));
  for (int k = 0; k < geom.dim(); ++k) coeffs[k] = f.coeff(k);
  coeffs[0] = cplx(coeffs[0].real());
  return toeplitz_hermitian(coeffs, geom.dim());
}

/// Real basis of the Hermitian Toeplitz matrices of size 2N+1: for k = 1..2N
/// the elements with diagonal k equal to 1 and to i (and the adjoint pattern
/// on diagonal -k). The identity (k = 0) comes first when requested.
inline SubspaceBasis toeplitz_basis(const TruncatedCircleGeometry& geom, bool include_identity) {
  const int n = geom.dim();
  std::vector<SparseComplexMatrix> elements;
  auto diagonal_element = [n](int k, cplx value) {
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int j = 0; j + k < n; ++j) {
      trips.emplace_back(j + k, j, value);
      if (k != 0) trips.emplace_back(j, j + k, std::conj(value));
    }
    SparseComplexMatrix s(n, n);
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
  };
  if (include_identity) elements.push_back(diagonal_element(0, 1.0));
  for (int k = 1; k < n; ++k) {
    elements.push_back(diagonal_element(k, cplx(1.0, 0.0)));
    elements.push_back(diagonal_element(k, cplx(0.0, 1.0)));
  }
  return SubspaceBasis(n, std::move(elements));
}

/// Fock-space truncation of the Berezin-quantized plane.
///
/// `lower` is the annihilator on levels 0..K with lower * h_n = sqrt(n) h_{n-1},
/// i.e. entry (n-1, n) = sqrt(n). The Dirac operator is
/// (2/sqrt(theta)) [[0, raise], [lower, 0]] on two copies of the levels.
struct BerezinGeometry {
  double theta = 1.0;
  int K = 2;
  ComplexMatrix lower;
  ComplexMatrix raise;
  HermitianMatrix dirac;

  int levels() const noexcept { return K + 1; }
  double prefactor() const { return 2.0 / std::sqrt(theta); }
};

inline BerezinGeometry build_berezin(double theta, int K) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw InvalidArgument("build_berezin: theta must be positive");
  if (K < 2) throw InvalidArgument("build_berezin: cut-off K must be at least 2");
  const int n = K + 1;
  BerezinGeometry g;
  g.theta = theta;
  g.K = K;
  g.lower = ComplexMatrix::Zero(n, n);
  for (int level = 1; level <= K; ++level) g.lower(level - 1, level) = std::sqrt(double(level));
  g.raise = g.lower.adjoint();
  ComplexMatrix d = ComplexMatrix::Zero(2 * n, 2 * n);
  d.topRightCorner(n, n) = g.prefactor() * g.raise;
  d.bottomLeftCorner(n, n) = g.prefactor() * g.lower;
  g.dirac = HermitianMatrix(d, 0.0);
  return g;
}

/// Geodesic (arc-length) distance between two points of the unit circle.
inline double geodesic_circle(double x, double y) {
  const double two_pi = 2.0 * std::numbers::pi;
  double d = std::fmod(std::abs(x - y), two_pi);
  return std::min(d, two_pi - d);
}

enum class SpectralActionConvention {
  symmetric,  ///< count |lambda| <= Lambda
  positive,   ///< count 0 <= lambda <= Lambda
};

/// Number of eigenvalues inside the cut-off window. A relative slack of 1e-12
/// absorbs eigensolver rounding for eigenvalues sitting on the cut-off.
inline std::size_t spectral_action_count(std::span<const double> eigenvalues, double cutoff,
                                         SpectralActionConvention convention =
                                             SpectralActionConvention::symmetric) {
  if (!(cutoff > 0.0)) throw InvalidArgument("spectral_action_count: cut-off must be positive");
  const double edge = cutoff * (1.0 + 1e-12);
  std::size_t count = 0;
  for (double lambda : eigenvalues) {
    if (convention == SpectralActionConvention::symmetric) {
      if (std::abs(lambda) <= edge) ++count;
    } else if (lambda >= -1e-12 * cutoff && lambda <= edge) {
      ++count;
    }
  }
  return count;
}

inline std::vector<double> circle_dirac_spectrum(const TruncatedCircleGeometry& geom) {
  std::vector<double> out;
  for (int m = -geom.N; m <= geom.N; ++m) out.push_back(geom.dirac_scale * m);
  return out;
}

inline std::vector<double> berezin_dirac_spectrum(const BerezinGeometry& geom) {
  const RealVector ev = hermitian_eigenvalues(geom.dirac);
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace spectral_cutoff
