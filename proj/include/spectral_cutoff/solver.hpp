#pragma once

// maximize <c, x>  subject to  || sum_i x_i K_i || <= 1,  x real.
//
// The norm ball is written as a linear matrix inequality and solved with a
// log-det barrier (path-following) method. Hermitian or anti-Hermitian images
// give the two-sided form -I <= G(x) <= I; anything else goes through the
// Hermitian dilation. Diagonal images reduce to a linear program.
//
// Directions in the kernel of x -> K(x) are detected before iterating: with a
// nonzero objective they prove the supremum infinite, otherwise they are
// objective-neutral and get pinned in the Newton system.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "extended.hpp"
#include "matops.hpp"

namespace spectral_cutoff {

enum class SolveStatus { optimal, max_iterations, unbounded_suspected, kernel_unbounded };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::unbounded_suspected: return "unbounded_suspected";
    case SolveStatus::kernel_unbounded: return "kernel_unbounded";
  }
  return "unknown";
}

/// Objective and constraint images K(b_i) of a basis b_i of the variable space.
struct ConvexProblem {
  std::vector<SparseComplexMatrix> constraint_images;
  RealVector objective;
  double gram_condition = 1.0;

  std::size_t size() const noexcept { return constraint_images.size(); }

  /// K(x) = sum_i x_i K_i.
  ComplexMatrix constraint_at(const RealVector& x) const {
    if (static_cast<std::size_t>(x.size()) != size())
      throw InvalidArgument("ConvexProblem: coefficient length mismatch");
    if (constraint_images.empty()) return ComplexMatrix();
    SparseComplexMatrix acc(constraint_images.front().rows(), constraint_images.front().cols());
    for (std::size_t i = 0; i < size(); ++i)
      if (x(static_cast<Eigen::Index>(i)) != 0.0)
        acc += cplx(x(static_cast<Eigen::Index>(i))) * constraint_images[i];
    return ComplexMatrix(acc);
  }
};

/// Problem over span(basis) with constraint map `map`; objective[i] = phi(b_i) - psi(b_i).
inline ConvexProblem make_problem(const SubspaceBasis& basis, const LinearMatrixMap& map,
                                  RealVector objective) {
  if (static_cast<std::size_t>(objective.size()) != basis.size())
    throw InvalidArgument("make_problem: objective length differs from basis size");
  ConvexProblem p;
  p.constraint_images = map_images(basis, map);
  check_linearity(basis, map, p.constraint_images);
  p.objective = std::move(objective);
  p.gram_condition = basis.gram_condition();
  return p;
}

struct SolveOptions {
  double gap_rel = 1e-5;          ///< stop when gap <= gap_rel * value + gap_abs
  double gap_abs = 1e-9;
  int max_iterations = 2000;      ///< Newton steps, all centering rounds together
  double value_cap = 1e4;         ///< values beyond this report unbounded_suspected
  double condition_limit = 1e12;  ///< Gram condition number accepted from the basis
  double barrier_growth = 50.0;
  double centering_tol = 1e-8;    ///< half squared Newton decrement
};

struct SolveReport {
  Extended value;
  RealVector witness;
  double feas_residual = 0.0;  ///< ||K(witness)|| - 1
  double gap_estimate = 0.0;
  SolveStatus status = SolveStatus::optimal;
  int iterations = 0;
};

struct Certificate {
  double objective = 0.0;
  double feas_residual = 0.0;
};

/// Recomputes <c, w> and ||K(w)|| - 1 from scratch.
inline Certificate certify(const ConvexProblem& problem, const RealVector& witness) {
  if (static_cast<std::size_t>(witness.size()) != problem.size())
    throw InvalidArgument("certify: witness dimension mismatch");
  return {problem.objective.dot(witness), op_norm(problem.constraint_at(witness)) - 1.0};
}

namespace detail {

struct LmiEntry {
  int row;
  int col;
  cplx value;
};

/// Constraint I - sign * G(x) >= 0 for each sign in `signs`, G_i given sparse.
struct LmiSystem {
  int dim = 0;
  std::vector<std::vector<LmiEntry>> g;  // per variable
  std::vector<double> signs;
  bool diagonal = false;
  RealMatrix diag_g;  // dim x m, used when diagonal

  int barrier_weight() const { return dim * static_cast<int>(signs.size()); }
};

inline bool is_hermitian_image(const SparseComplexMatrix& k, double sign) {
  if (k.rows() != k.cols()) return false;
  const SparseComplexMatrix adj = k.adjoint();
  return (k - cplx(sign) * adj).norm() <= 1e-13 * std::max(1.0, k.norm());
}

inline LmiSystem build_lmi(const std::vector<SparseComplexMatrix>& images) {
  LmiSystem sys;
  const auto rows = static_cast<int>(images.front().rows());
  const auto cols = static_cast<int>(images.front().cols());
  bool herm = rows == cols, anti = rows == cols;
  for (const auto& k : images) {
    if (k.rows() != rows || k.cols() != cols)
      throw InvalidArgument("maximize: constraint images have inconsistent shapes");
    if (herm) herm = is_hermitian_image(k, 1.0);
    if (anti) anti = is_hermitian_image(k, -1.0);
  }
  sys.g.resize(images.size());
  if (herm || anti) {
    const cplx factor = herm ? cplx(1.0) : cplx(0.0, 1.0);
    sys.dim = rows;
    sys.signs = {1.0, -1.0};
    for (std::size_t i = 0; i < images.size(); ++i)
      for (int c = 0; c < images[i].outerSize(); ++c)
        for (SparseComplexMatrix::InnerIterator it(images[i], c); it; ++it)
          sys.g[i].push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), factor * it.value()});
  } else {
    sys.dim = rows + cols;
    sys.signs = {1.0};
    for (std::size_t i = 0; i < images.size(); ++i)
      for (int c = 0; c < images[i].outerSize(); ++c)
        for (SparseComplexMatrix::InnerIterator it(images[i], c); it; ++it) {
          const int r = static_cast<int>(it.row()), col = static_cast<int>(it.col());
          sys.g[i].push_back({r, rows + col, it.value()});
          sys.g[i].push_back({rows + col, r, std::conj(it.value())});
        }
  }
  sys.diagonal = true;
  for (const auto& gi : sys.g)
    for (const auto& e : gi)
      if (e.row != e.col) sys.diagonal = false;
  if (sys.diagonal) {
    sys.diag_g = RealMatrix::Zero(sys.dim, static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < sys.g.size(); ++i)
      for (const auto& e : sys.g[i]) sys.diag_g(e.row, static_cast<Eigen::Index>(i)) += e.value.real();
  }
  return sys;
}

/// Barrier state at a point: slack factorizations and inverses.
class BarrierEvaluator {
 public:
  explicit BarrierEvaluator(const LmiSystem& sys) : sys_(sys) {}

  /// Fills slacks at x; returns false when x is not strictly feasible.
  bool load(const RealVector& x) {
    if (sys_.diagonal) {
      const RealVector gx = sys_.diag_g * x;
      slack_.clear();
      for (double s : sys_.signs) {
        RealVector sl = RealVector::Ones(sys_.dim) - s * gx;
        if (sl.minCoeff() <= 0.0) return false;
        slack_.push_back(std::move(sl));
      }
      return true;
    }
    ComplexMatrix gx = ComplexMatrix::Zero(sys_.dim, sys_.dim);
    for (std::size_t i = 0; i < sys_.g.size(); ++i) {
      const double xi = x(static_cast<Eigen::Index>(i));
      if (xi == 0.0) continue;
      for (const auto& e : sys_.g[i]) gx(e.row, e.col) += xi * e.value;
    }
    factor_.clear();
    for (double s : sys_.signs) {
      ComplexMatrix f = ComplexMatrix::Identity(sys_.dim, sys_.dim) - s * gx;
      Eigen::LLT<ComplexMatrix> llt(f);
      if (llt.info() != Eigen::Success) return false;
      const auto& l = llt.matrixLLT();
      for (int k = 0; k < sys_.dim; ++k)
        if (!(l(k, k).real() > 0.0)) return false;
      factor_.push_back(std::move(llt));
    }
    return true;
  }

  double log_det() const {
    double total = 0.0;
    if (sys_.diagonal) {
      for (const auto& sl : slack_) total += sl.array().log().sum();
      return total;
    }
    for (const auto& llt : factor_) {
      const auto& l = llt.matrixLLT();
      for (int k = 0; k < sys_.dim; ++k) total += 2.0 * std::log(l(k, k).real());
    }
    return total;
  }

  /// Gradient and Hessian of -sum log det(I - s G(x)) at the loaded point.
  void derivatives(RealVector& grad, RealMatrix& hess) const {
    const auto m = static_cast<Eigen::Index>(sys_.g.size());
    grad.setZero(m);
    hess.setZero(m, m);
    if (sys_.diagonal) {
      for (std::size_t b = 0; b < sys_.signs.size(); ++b) {
        const RealVector inv = slack_[b].cwiseInverse();
        grad += sys_.signs[b] * (sys_.diag_g.transpose() * inv);
        const RealMatrix weighted = inv.cwiseAbs2().asDiagonal() * sys_.diag_g;
        hess += sys_.diag_g.transpose() * weighted;
      }
      return;
    }
    const int d = sys_.dim;
    for (std::size_t b = 0; b < sys_.signs.size(); ++b) {
      const ComplexMatrix finv = factor_[b].solve(ComplexMatrix::Identity(d, d));
      const double s = sys_.signs[b];
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto& gi = sys_.g[static_cast<std::size_t>(i)];
        cplx tr = 0.0;
        for (const auto& e : gi) tr += e.value * finv(e.col, e.row);
        grad(i) += s * tr.real();

        // Z = Finv G_i Finv, built from the distinct rows of G_i.
        std::vector<int> rows;
        for (const auto& e : gi) rows.push_back(e.row);
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        if (rows.empty()) continue;
        const auto r = static_cast<Eigen::Index>(rows.size());
        ComplexMatrix left(d, r), right = ComplexMatrix::Zero(r, d);
        for (Eigen::Index k = 0; k < r; ++k) left.col(k) = finv.col(rows[k]);
        for (const auto& e : gi) {
          const auto k = std::lower_bound(rows.begin(), rows.end(), e.row) - rows.begin();
          right.row(k) += e.value * finv.row(e.col);
        }
        const ComplexMatrix z = left * right;
        for (Eigen::Index j = i; j < m; ++j) {
          cplx acc = 0.0;
          for (const auto& e : sys_.g[static_cast<std::size_t>(j)]) acc += e.value * z(e.col, e.row);
          hess(i, j) += acc.real();
        }
      }
    }
    hess.triangularView<Eigen::StrictlyLower>() = hess.transpose().triangularView<Eigen::StrictlyLower>();
  }

 private:
  const LmiSystem& sys_;
  std::vector<RealVector> slack_;
  std::vector<Eigen::LLT<ComplexMatrix>> factor_;
};

/// Solves h * step = rhs for symmetric positive (semi)definite h, factoring
/// in place. Only the lower triangle of h is overwritten, so a failed attempt
/// can be restored from the upper triangle and retried with a ridge.
inline RealVector solve_spd(RealMatrix& h, const RealVector& rhs) {
  const RealVector diag = h.diagonal();
  const double ridge0 = 1e-14 * std::max(1.0, diag.cwiseAbs().maxCoeff());
  double ridge = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    h.diagonal() = diag.array() + ridge;
    Eigen::LLT<Eigen::Ref<RealMatrix>> llt(h);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
    h.triangularView<Eigen::StrictlyLower>() = h.transpose().triangularView<Eigen::StrictlyLower>();
    ridge = ridge == 0.0 ? ridge0 : ridge * 100.0;
  }
  h.diagonal() = diag;
  return Eigen::LDLT<RealMatrix>(h).solve(rhs);
}

}  // namespace detail

/// Supremum of <c, x> over ||K(x)|| <= 1, with a certificate-carrying report.
///
/// The returned witness is rescaled onto the boundary ||K(x)|| = 1.
inline SolveReport maximize(const ConvexProblem& problem, const SolveOptions& opts = {}) {
  const std::size_t m = problem.size();
  if (m == 0) throw InvalidArgument("maximize: empty problem");
  if (static_cast<std::size_t>(problem.objective.size()) != m)
    throw InvalidArgument("maximize: objective length mismatch");
  if (!problem.objective.allFinite()) throw InvalidArgument("maximize: non-finite objective");
  if (!(problem.gram_condition <= opts.condition_limit))
    throw IllConditionedBasis(problem.gram_condition);

  const RealVector& c = problem.objective;
  const auto mi = static_cast<Eigen::Index>(m);
  SolveReport report;
  report.witness = RealVector::Zero(mi);

  const double cnorm = c.norm();
  if (cnorm == 0.0) {
    report.value = 0.0;
    report.feas_residual = -1.0;
    return report;
  }

  const std::vector<RealVector> kernel = image_nullspace(problem.constraint_images);
  for (const auto& v : kernel) {
    const double slope = c.dot(v);
    if (std::abs(slope) > 1e-8 * cnorm) {
      report.status = SolveStatus::kernel_unbounded;
      report.value = Extended::infinity();
      report.witness = slope > 0.0 ? v : RealVector(-v);
      report.feas_residual = op_norm(problem.constraint_at(report.witness)) - 1.0;
      return report;
    }
  }
  RealMatrix null_basis(mi, static_cast<Eigen::Index>(kernel.size()));
  for (std::size_t k = 0; k < kernel.size(); ++k) null_basis.col(static_cast<Eigen::Index>(k)) = kernel[k];
  RealVector c_free = c - null_basis * (null_basis.transpose() * c);

  const detail::LmiSystem sys = detail::build_lmi(problem.constraint_images);
  detail::BarrierEvaluator barrier(sys);
  const double weight = sys.barrier_weight();

  // Initial barrier parameter from the feasible lower bound c / ||K(c)||.
  const double kc = op_norm(problem.constraint_at(c_free));
  const double lower_bound = kc > 0.0 ? c_free.squaredNorm() / kc : cnorm;
  double t = weight / std::max(lower_bound, 1e-12);

  RealVector x = RealVector::Zero(mi);
  barrier.load(x);
  double phi = -t * c.dot(x) - barrier.log_det();
  RealVector grad;
  RealMatrix hess;
  int iterations = 0;
  bool capped = false;

  for (;;) {
    // Centering at the current t.
    for (;;) {
      if (iterations >= opts.max_iterations) {
        capped = true;
        break;
      }
      barrier.derivatives(grad, hess);
      grad -= t * c;
      if (!kernel.empty()) {
        grad -= null_basis * (null_basis.transpose() * grad);
        const double pin = std::max(1.0, hess.diagonal().mean());
        for (const auto& v : kernel) hess.noalias() += pin * v * v.transpose();
      }
      const RealVector step = detail::solve_spd(hess, -grad);
      const double decrement2 = -grad.dot(step);
      ++iterations;
      if (!(decrement2 > 2.0 * opts.centering_tol)) break;
      double s = 1.0;
      RealVector trial;
      double phi_trial = phi;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
        trial = x + s * step;
        if (!barrier.load(trial)) continue;
        phi_trial = -t * c.dot(trial) - barrier.log_det();
        if (phi_trial <= phi - 0.1 * s * decrement2) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        barrier.load(x);
        break;
      }
      x = trial;
      phi = phi_trial;
    }

    const double value = c.dot(x);
    const double gap = weight / t;
    if (value > opts.value_cap) {
      report.status = SolveStatus::unbounded_suspected;
      break;
    }
    if (gap <= opts.gap_rel * std::abs(value) + opts.gap_abs) {
      report.status = SolveStatus::optimal;
      break;
    }
    if (capped) {
      report.status = SolveStatus::max_iterations;
      break;
    }
    t *= opts.barrier_growth;
    barrier.load(x);
    phi = -t * c.dot(x) - barrier.log_det();
  }

  report.iterations = iterations;
  report.gap_estimate = weight / t;
  const double norm = op_norm(problem.constraint_at(x));
  RealVector w = norm > 0.0 ? RealVector(x / norm) : x;
  if (c.dot(w) < 0.0) w = -w;
  report.witness = w;
  const Certificate cert = certify(problem, w);
  report.value = std::max(0.0, cert.objective);
  report.feas_residual = cert.feas_residual;
  return report;
}

}  // namespace spectral_cutoff
