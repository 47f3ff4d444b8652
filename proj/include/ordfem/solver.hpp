#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "ordfem/assembly.hpp"

namespace ordfem {

struct Inertia {
  int n_pos = 0, n_neg = 0, n_zero = 0;
};

// Signs of the eigenvalues of a symmetric matrix, with |lambda| below
// rel_tol * max|lambda| counted as zero. Dense: refuses large systems.
inline Inertia dense_inertia(const SparseMatrix& M, double rel_tol = 1e-9) {
  if (M.rows() != M.cols()) throw std::invalid_argument("dense_inertia: non-square matrix");
  if (M.rows() > kDenseCap) throw SizeError("dense_inertia: system exceeds dense cap");
  Eigen::MatrixXd D(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DecompositionFailure("dense_inertia: eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cut = rel_tol * ev.cwiseAbs().maxCoeff();
  Inertia out;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] > cut)
      ++out.n_pos;
    else if (ev[i] < -cut)
      ++out.n_neg;
    else
      ++out.n_zero;
  }
  return out;
}

struct SolveReport {
  Eigen::VectorXd x;
  double rel_residual = 0.0;  // ||b - M x|| / ||b||, 0 when b = 0
  std::string method;
  int iterations = 0;                // iterative only
  std::optional<Inertia> inertia;    // direct (dense) only
};

inline double relative_residual(const SparseMatrix& M, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& b) {
  const double nb = b.norm();
  if (nb == 0.0) return (M * x).norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (b - M * x).norm() / nb;
}

inline SolveReport solve_direct(const SparseMatrix& M, const Eigen::VectorXd& rhs,
                                bool with_inertia = false) {
  if (M.rows() != M.cols() || M.rows() != rhs.size())
    throw std::invalid_argument("solve_direct: dimension mismatch");
  Eigen::SparseMatrix<double> A(M);  // LU wants column-major storage
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SingularSystemError("solve_direct: singular factorization");
  SolveReport rep;
  rep.method = "direct";
  rep.x = lu.solve(rhs);
  rep.rel_residual = relative_residual(M, rep.x, rhs);
  if (!std::isfinite(rep.rel_residual))
    throw SingularSystemError("solve_direct: non-finite solution");
  if (with_inertia) rep.inertia = dense_inertia(M);
  return rep;
}

inline SolveReport solve_direct(const BlockSystem& sys, const Eigen::VectorXd& rhs,
                                bool with_inertia = false) {
  return solve_direct(sys.M, rhs, with_inertia);
}

// Block-diagonal preconditioner built from the natural-norm Grams of the
// three spaces (Rusten-Winther style for the saddle-point system).
class BlockDiagPreconditioner {
 public:
  explicit BlockDiagPreconditioner(const BlockSystem& sys)
      : nR_(sys.dim_R()), nS_(sys.dim_S()), nY_(sys.dim_Y()) {
    factor(ldlt_R_, sys.G_R, "G_R");
    factor(ldlt_S_, sys.G_S, "G_S");
    factor(ldlt_Y_, sys.G_Y, "G_Y");
  }

  int size() const { return nR_ + nS_ + nY_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& r) const {
    if (r.size() != size())
      throw std::invalid_argument("BlockDiagPreconditioner: dimension mismatch");
    Eigen::VectorXd out(size());
    out.segment(0, nR_) = ldlt_R_.solve(r.segment(0, nR_));
    out.segment(nR_, nS_) = ldlt_S_.solve(r.segment(nR_, nS_));
    out.segment(nR_ + nS_, nY_) = ldlt_Y_.solve(r.segment(nR_ + nS_, nY_));
    return out;
  }

  // energy inner product x' diag(G) y of the preconditioner blocks
  double norm(const BlockSystem& sys, const Eigen::VectorXd& x) const {
    double v = x.segment(0, nR_).dot(sys.G_R * x.segment(0, nR_)) +
               x.segment(nR_, nS_).dot(sys.G_S * x.segment(nR_, nS_)) +
               x.segment(nR_ + nS_, nY_).dot(sys.G_Y * x.segment(nR_ + nS_, nY_));
    return std::sqrt(std::max(v, 0.0));
  }

 private:
  using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
  static void factor(Ldlt& ldlt, const SparseMatrix& G, const char* name) {
    Eigen::SparseMatrix<double> A(G);
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success)
      throw SingularSystemError(std::string("BlockDiagPreconditioner: Gram block ") + name +
                                " failed to factor");
  }
  int nR_, nS_, nY_;
  Ldlt ldlt_R_, ldlt_S_, ldlt_Y_;
};

using PrecondApply = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Preconditioned MINRES (Paige-Saunders recurrences). The preconditioner
// apply must be SPD; convergence is on the relative preconditioned residual.
inline SolveReport minres_core(const SparseMatrix& M, const Eigen::VectorXd& b,
                               const PrecondApply& apply_pinv, double tol, long max_iter) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || b.size() != n) throw std::invalid_argument("minres: dimension mismatch");
  SolveReport rep;
  rep.method = "minres";
  rep.x = Eigen::VectorXd::Zero(n);

  Eigen::VectorXd r1 = b;
  Eigen::VectorXd y = apply_pinv(r1);
  double beta1_sq = r1.dot(y);
  if (beta1_sq < 0.0) throw std::invalid_argument("minres: preconditioner not positive definite");
  if (beta1_sq == 0.0) {
    rep.rel_residual = relative_residual(M, rep.x, b);
    return rep;  // b = 0 -> x = 0, no iterations
  }
  const double beta1 = std::sqrt(beta1_sq);

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
  double phibar = beta1, cs = -1.0, sn = 0.0;
  Eigen::VectorXd r2 = r1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w2 = Eigen::VectorXd::Zero(n);

  for (long it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd v = y / beta;
    y = M * v;
    if (it >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = apply_pinv(r2);
    oldb = beta;
    const double beta_sq = r2.dot(y);
    if (beta_sq < 0.0)
      throw std::invalid_argument("minres: preconditioner not positive definite");
    beta = std::sqrt(beta_sq);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, std::numeric_limits<double>::epsilon());
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    Eigen::VectorXd w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    rep.x += phi * w;
    rep.iterations = static_cast<int>(it);

    if (phibar / beta1 <= tol) {
      rep.rel_residual = relative_residual(M, rep.x, b);
      return rep;
    }
  }
  throw IterationLimitError("minres: iteration cap reached without convergence");
}

inline SolveReport solve_minres(const BlockSystem& sys, const Eigen::VectorXd& rhs,
                                const BlockDiagPreconditioner& pc, double tol = 1e-10) {
  return minres_core(
      sys.M, rhs, [&pc](const Eigen::VectorXd& r) { return pc.solve(r); }, tol,
      10L * static_cast<long>(sys.total));
}

}  // namespace ordfem
