#pragma once

// Spectral distances of the truncated geometries, each obtained as
//   sup { phi(a) - psi(a) : ||[D, a]|| <= 1 }
// over the appropriate space of elements:
//
//   distance_bi                 compressed Toeplitz elements, [D_N, .]
//   distance_truncated_flat     band-M symbols acting on all of L^2, [D_N, .]
//   distance_full_flat          band-M symbols, sup|f'| <= 1 (full Dirac)
//   distance_berezin_coherent   all Hermitian matrices on Fock levels 0..K
//   distance_lattice            diagonal elements on a path of sites
//
// Infinity is reported only through a kernel certificate from the solver;
// band-limited flat distances are lower bounds that grow monotonically in M.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "extended.hpp"
#include "geometry.hpp"
#include "seminorm.hpp"
#include "solver.hpp"
#include "states.hpp"

namespace spectral_cutoff {

struct DistanceResult {
  Extended value;
  SolveStatus status = SolveStatus::optimal;
  RealVector witness;
  double gap = 0.0;
  double feas_residual = 0.0;
  int iterations = 0;
  std::vector<std::pair<std::string, double>> meta;
};

namespace detail {

inline DistanceResult to_distance(const SolveReport& r,
                                  std::vector<std::pair<std::string, double>> meta) {
  DistanceResult d;
  d.value = r.value;
  d.status = r.status;
  d.witness = r.witness;
  d.gap = r.gap_estimate;
  d.feas_residual = r.feas_residual;
  d.iterations = r.iterations;
  d.meta = std::move(meta);
  return d;
}

inline RealVector state_difference(const SubspaceBasis& basis, const DensityState& a,
                                   const DensityState& b) {
  RealVector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    c(static_cast<Eigen::Index>(i)) = a(basis[i]) - b(basis[i]);
  return c;
}

/// Real symbol with coefficients (cos 1, sin 1, cos 2, sin 2, ...).
inline FourierSymbol symbol_from_coefficients(const RealVector& x) {
  const auto band = static_cast<int>(x.size() / 2);
  std::vector<double> cs(static_cast<std::size_t>(band)), ss(static_cast<std::size_t>(band));
  for (int k = 0; k < band; ++k) {
    cs[k] = x(2 * k);
    ss[k] = x(2 * k + 1);
  }
  return FourierSymbol::from_real(0.0, cs, ss);
}

}  // namespace detail

inline FourierSymbol witness_symbol(const RealVector& coefficients) {
  if (coefficients.size() % 2 != 0) throw InvalidArgument("witness_symbol: odd coefficient count");
  return detail::symbol_from_coefficients(coefficients);
}

// ---------------------------------------------------------------------------
// Bi-truncated distance on the circle.

/// Variables: Hermitian Toeplitz matrices with diagonals 1..2N (the identity
/// is objective- and constraint-neutral and left out).
inline ConvexProblem bi_problem(const TruncatedCircleGeometry& geom, const DensityState& a,
                                const DensityState& b) {
  if (a.dim() != geom.dim() || b.dim() != geom.dim())
    throw InvalidArgument("distance_bi: states must live on the 2N+1 mode space");
  const SubspaceBasis basis = toeplitz_basis(geom, false);
  return make_problem(basis, circle_commutator_map(geom), detail::state_difference(basis, a, b));
}

inline DistanceResult distance_bi(const TruncatedCircleGeometry& geom, const DensityState& a,
                                  const DensityState& b, const SolveOptions& opts = {}) {
  return detail::to_distance(maximize(bi_problem(geom, a, b), opts),
                             {{"N", geom.N}, {"dirac_scale", geom.dirac_scale}});
}

// ---------------------------------------------------------------------------
// Full algebra with truncated Dirac operator, band-limited realization.

inline ConvexProblem truncated_flat_problem(const TruncatedCircleGeometry& geom, double x, double y,
                                            int band) {
  if (band < 1) throw InvalidArgument("distance_truncated_flat: band must be at least 1");
  ConvexProblem p;
  const int window = geom.N + band;
  p.objective = RealVector(2 * band);
  for (int k = 1; k <= band; ++k) {
    const FourierSymbol c = FourierSymbol::cosine(k), s = FourierSymbol::sine(k);
    p.constraint_images.push_back(truncated_dirac_full_image(geom, c, window));
    p.constraint_images.push_back(truncated_dirac_full_image(geom, s, window));
    p.objective(2 * (k - 1)) = std::cos(k * x) - std::cos(k * y);
    p.objective(2 * (k - 1) + 1) = std::sin(k * x) - std::sin(k * y);
  }
  return p;
}

inline DistanceResult distance_truncated_flat(const TruncatedCircleGeometry& geom,
                                              const PointFunctional& x, const PointFunctional& y,
                                              int band, const SolveOptions& opts = {}) {
  return detail::to_distance(maximize(truncated_flat_problem(geom, x.x(), y.x(), band), opts),
                             {{"N", geom.N}, {"band", band}});
}

/// Values of the truncated-Dirac point distance over increasing band limits.
/// Feasible sets are nested, so the sequence is nondecreasing.
inline std::vector<std::pair<int, DistanceResult>> divergence_probe(
    const TruncatedCircleGeometry& geom, const PointFunctional& x, const PointFunctional& y,
    const std::vector<int>& bands, const SolveOptions& opts = {}) {
  for (std::size_t i = 1; i < bands.size(); ++i)
    if (bands[i] <= bands[i - 1]) throw InvalidArgument("divergence_probe: bands must increase");
  std::vector<std::pair<int, DistanceResult>> out;
  for (int band : bands) out.emplace_back(band, distance_truncated_flat(geom, x, y, band, opts));
  return out;
}

// ---------------------------------------------------------------------------
// Full Dirac operator on the circle, band-limited symbols.

/// Which functionals the flat distance compares.
struct FlatFunctionals {
  enum class Kind { points, fejer } kind = Kind::points;
  int fejer_N = 0;  ///< used when kind == fejer

  static FlatFunctionals points() { return {}; }
  static FlatFunctionals fejer(int N) { return {Kind::fejer, N}; }
};

inline int lipschitz_grid_size(int band) { return std::max(64 * band, 64); }

/// The constraint sup|f'| <= 1 is imposed on a grid of 64*band points as the
/// diagonal matrix diag(f'(x_j)).
inline ConvexProblem full_flat_problem(double x, double y, int band,
                                       FlatFunctionals functionals = FlatFunctionals::points()) {
  if (band < 1) throw InvalidArgument("distance_full_flat: band must be at least 1");
  if (functionals.kind == FlatFunctionals::Kind::fejer && functionals.fejer_N < 1)
    throw InvalidArgument("distance_full_flat: Fejer rank must be at least 1");
  const int grid = lipschitz_grid_size(band);
  const double h = 2.0 * std::numbers::pi / grid;
  ConvexProblem p;
  p.objective = RealVector(2 * band);
  for (int k = 1; k <= band; ++k) {
    SparseComplexMatrix dc(grid, grid), ds(grid, grid);
    dc.reserve(Eigen::VectorXi::Constant(grid, 1));
    ds.reserve(Eigen::VectorXi::Constant(grid, 1));
    for (int j = 0; j < grid; ++j) {
      dc.insert(j, j) = -k * std::sin(k * j * h);
      ds.insert(j, j) = k * std::cos(k * j * h);
    }
    dc.makeCompressed();
    ds.makeCompressed();
    p.constraint_images.push_back(std::move(dc));
    p.constraint_images.push_back(std::move(ds));
    double weight = 1.0;
    if (functionals.kind == FlatFunctionals::Kind::fejer)
      weight = k <= functionals.fejer_N ? 1.0 - k / double(functionals.fejer_N + 1) : 0.0;
    p.objective(2 * (k - 1)) = weight * (std::cos(k * x) - std::cos(k * y));
    p.objective(2 * (k - 1) + 1) = weight * (std::sin(k * x) - std::sin(k * y));
  }
  return p;
}

/// After solving on the grid the witness is divided by its exact Lipschitz
/// constant, so the reported value is attained by a truly 1-Lipschitz symbol.
inline DistanceResult distance_full_flat(const PointFunctional& x, const PointFunctional& y, int band,
                                         const SolveOptions& opts = {},
                                         FlatFunctionals functionals = FlatFunctionals::points()) {
  const ConvexProblem problem = full_flat_problem(x.x(), y.x(), band, functionals);
  const SolveReport r = maximize(problem, opts);
  DistanceResult d = detail::to_distance(
      r, {{"band", band},
          {"fejer_N", functionals.kind == FlatFunctionals::Kind::fejer ? functionals.fejer_N : 0}});
  if (d.value.is_finite() && d.witness.norm() > 0.0) {
    const double lip = lip_full_circle(witness_symbol(d.witness));
    if (lip > 1.0) {
      const double grid_value = d.value.value();
      d.witness /= lip;
      const Certificate cert = certify(problem, d.witness);
      d.value = std::max(0.0, cert.objective);
      d.feas_residual = cert.feas_residual;
      d.gap += grid_value - d.value.value();
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Berezin-quantized plane.

/// Coherent states are accepted inside |z| <= 0.5 sqrt(theta K); beyond that
/// the truncation at level K visibly distorts them.
inline void check_coherent_window(double theta, int K, cplx z) {
  const double limit = 0.5 * std::sqrt(theta * K);
  if (std::abs(z) > limit)
    throw InvalidArgument("coherent point |z| = " + std::to_string(std::abs(z)) +
                          " is outside the truncation-safe window |z| <= " + std::to_string(limit) +
                          "; increase K or move the points toward the origin");
}

/// Variables: every Hermitian matrix on levels 0..K. Constraint block
/// (2/sqrt(theta)) [lower, a].
inline ConvexProblem berezin_problem(double theta, int K, cplx z, cplx zp) {
  check_coherent_window(theta, K, z);
  check_coherent_window(theta, K, zp);
  const BerezinGeometry geom = build_berezin(theta, K);
  const SubspaceBasis basis = full_hermitian_basis(geom.levels());
  const DensityState a = coherent_state(z, theta, K).density();
  const DensityState b = coherent_state(zp, theta, K).density();
  return make_problem(basis, berezin_commutator_map(geom), detail::state_difference(basis, a, b));
}

inline DistanceResult distance_berezin_coherent(double theta, int K, cplx z, cplx zp,
                                                const SolveOptions& opts = {}) {
  return detail::to_distance(maximize(berezin_problem(theta, K, z, zp), opts),
                             {{"theta", theta}, {"K", K}});
}

/// Hermitian matrix of a witness returned by distance_berezin_coherent.
inline HermitianMatrix berezin_witness_element(int K, const RealVector& witness) {
  const SubspaceBasis basis = full_hermitian_basis(K + 1);
  return HermitianMatrix(ComplexMatrix(basis.combine(witness)));
}

/// (sqrt(theta)/2)(lower + raise): the quantized coordinate Re z.
inline HermitianMatrix berezin_position(const BerezinGeometry& geom) {
  return HermitianMatrix(0.5 * std::sqrt(geom.theta) * (geom.lower + geom.raise));
}

inline HermitianMatrix number_operator(const BerezinGeometry& geom) {
  ComplexMatrix n = ComplexMatrix::Zero(geom.levels(), geom.levels());
  for (int k = 0; k < geom.levels(); ++k) n(k, k) = double(k);
  return HermitianMatrix(n);
}

struct SandwichLine {
  std::string name;
  double state_gap = 0.0;       ///< Psi_z(f) - Psi_z'(f)
  double seminorm = 0.0;        ///< ||[D_theta, f]||
  double lower_bound = 0.0;     ///< |state_gap| / seminorm; 0 or +inf when seminorm = 0
  double interior_seminorm = 0.0;  ///< commutator norm away from the top two levels
  double interior_estimate = 0.0;  ///< |state_gap| / interior_seminorm
  bool holds = false;           ///< distance >= lower_bound - tolerance
};

struct SandwichReport {
  double distance = 0.0;
  std::vector<SandwichLine> lines;
  bool all_hold() const {
    for (const auto& l : lines)
      if (!l.holds) return false;
    return true;
  }
};

/// Checks that each test element f lower-bounds the coherent-state distance:
/// any element with finite seminorm is feasible after scaling.
inline SandwichReport sandwich_spotcheck(double theta, int K, cplx z, cplx zp,
                                         const std::vector<std::pair<std::string, HermitianMatrix>>& tests,
                                         double distance, double tolerance = 1e-6) {
  const BerezinGeometry geom = build_berezin(theta, K);
  const DensityState a = coherent_state(z, theta, K).density();
  const DensityState b = coherent_state(zp, theta, K).density();
  SandwichReport report;
  report.distance = distance;
  for (const auto& [name, f] : tests) {
    SandwichLine line;
    line.name = name;
    line.state_gap = a(f) - b(f);
    const CommutatorResult comm = commutator_berezin(geom, f);
    line.seminorm = comm.norm;
    if (comm.norm > 0.0)
      line.lower_bound = std::abs(line.state_gap) / comm.norm;
    else if (std::abs(line.state_gap) > 1e-12)
      line.lower_bound = std::numeric_limits<double>::infinity();  // kernel element separating the states
    line.interior_seminorm = interior_norm(comm, geom.levels() - 2);
    line.interior_estimate =
        line.interior_seminorm > 0.0 ? std::abs(line.state_gap) / line.interior_seminorm : 0.0;
    line.holds = distance >= line.lower_bound - tolerance;
    report.lines.push_back(std::move(line));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Path lattice: sites 0..n-1, unit edges. For diagonal a the edge Dirac
// operator gives ||[D, a]|| = max_i |a_{i+1} - a_i|, realized here as the
// diagonal matrix of edge differences.

inline LinearMatrixMap lattice_commutator_map(int sites) {
  return [sites](const SparseComplexMatrix& a) {
    if (a.rows() != sites || a.cols() != sites)
      throw InvalidArgument("lattice commutator: element has wrong dimension");
    SparseComplexMatrix out(sites - 1, sites - 1);
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int i = 0; i + 1 < sites; ++i) {
      const cplx d = a.coeff(i + 1, i + 1) - a.coeff(i, i);
      if (d != cplx(0.0)) trips.emplace_back(i, i, d);
    }
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  };
}

/// Step elements diag(1_{n >= j}), j = 1..sites-1 (constants are gauged out).
inline SubspaceBasis lattice_step_basis(int sites) {
  if (sites < 2) throw InvalidArgument("lattice: need at least two sites");
  std::vector<SparseComplexMatrix> elements;
  for (int j = 1; j < sites; ++j) {
    SparseComplexMatrix s(sites, sites);
    for (int n = j; n < sites; ++n) s.insert(n, n) = 1.0;
    s.makeCompressed();
    elements.push_back(std::move(s));
  }
  return SubspaceBasis(sites, std::move(elements));
}

inline ConvexProblem lattice_problem(const DensityState& a, const DensityState& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("distance_lattice: state dimensions differ");
  const SubspaceBasis basis = lattice_step_basis(a.dim());
  return make_problem(basis, lattice_commutator_map(a.dim()), detail::state_difference(basis, a, b));
}

inline DistanceResult distance_lattice(const DensityState& a, const DensityState& b,
                                       const SolveOptions& opts = {}) {
  return detail::to_distance(maximize(lattice_problem(a, b), opts), {{"sites", a.dim()}});
}

/// Lattice distances between the site states: |k - n|.
inline DistanceTable lattice_distance_table(int sites) {
  DistanceTable t(static_cast<std::size_t>(sites), std::vector<Extended>(static_cast<std::size_t>(sites)));
  for (int k = 0; k < sites; ++k)
    for (int n = 0; n < sites; ++n) t[k][n] = Extended(double(std::abs(k - n)));
  return t;
}

/// Diagonal state with weights proportional to ratio^n on `sites` levels.
inline DensityState geometric_state(int sites, double ratio) {
  if (sites < 1 || !(ratio > 0.0) || !(ratio < 1.0))
    throw InvalidArgument("geometric_state: need sites >= 1 and 0 < ratio < 1");
  RealVector p(sites);
  for (int n = 0; n < sites; ++n) p(n) = std::pow(ratio, n);
  p /= p.sum();
  return DensityState(HermitianMatrix(ComplexMatrix(p.cast<cplx>().asDiagonal())));
}

/// phi_N^sharp: the truncation of `state` to its first `rank` levels, as a
/// state on the ambient space (a -> phi_N(P a P)).
inline DensityState leading_truncation(const DensityState& state, int rank) {
  const Projection p = Projection::leading(state.dim(), rank);
  const TruncatedNormal t = truncate_normal(state, p);
  const ComplexMatrix lifted = p.range() * t.state.rho().matrix() * p.range().adjoint();
  return DensityState(HermitianMatrix(lifted));
}

}  // namespace spectral_cutoff
