#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ordfem/solver.hpp"

namespace ordfem {

// ---------------------------------------------------------------------------
// Exact fields
// ---------------------------------------------------------------------------

struct ScalarField {
  std::function<double(const Vec3&)> value;
  std::function<Vec3(const Vec3&)> grad;
};

struct VectorField {
  std::function<Vec3(const Vec3&)> value;
  std::function<Mat3(const Vec3&)> jac;  // jac(i,j) = d field_i / d x_j
  std::function<Vec3(const Vec3&)> curl;
  std::function<double(const Vec3&)> div;
};

namespace detail {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// d-th derivative of p(t) = sin(pi t) (kind 0) or q(t) = sin^2(pi t) (kind 1),
// via the exact quarter-period shift pattern.
inline double pq_deriv(int kind, int d, double t) {
  if (kind == 0) {
    const double a = kPi * t;
    double f = 1.0;
    for (int i = 0; i < d; ++i) f *= kPi;
    switch (d % 4) {
      case 0: return f * std::sin(a);
      case 1: return f * std::cos(a);
      case 2: return -f * std::sin(a);
      default: return -f * std::cos(a);
    }
  }
  if (d == 0) {
    const double s = std::sin(kPi * t);
    return s * s;
  }
  const double a = 2.0 * kPi * t;
  double f = -0.5;
  for (int i = 0; i < d; ++i) f *= 2.0 * kPi;
  switch (d % 4) {
    case 0: return f * std::cos(a);
    case 1: return -f * std::sin(a);
    case 2: return -f * std::cos(a);
    default: return f * std::sin(a);
  }
}

// Sums of separable products c * F(x) G(y) H(z) with F,G,H in {p^(d), q^(d)}.
// Differentiation is exact, which gives closed-form data without a CAS.
struct SepTerm {
  double c = 1.0;
  std::array<int, 3> kind = {1, 1, 1};
  std::array<int, 3> ord = {0, 0, 0};
};

struct SepSum {
  std::vector<SepTerm> terms;
  double operator()(const Vec3& x) const {
    double v = 0.0;
    for (const SepTerm& t : terms) {
      double w = t.c;
      for (int a = 0; a < 3; ++a) w *= pq_deriv(t.kind[a], t.ord[a], x[a]);
      v += w;
    }
    return v;
  }
};

inline SepSum deriv(SepSum s, int axis) {
  for (SepTerm& t : s.terms) ++t.ord[axis];
  return s;
}

inline SepSum operator+(SepSum a, const SepSum& b) {
  a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
  return a;
}

inline SepSum operator*(double c, SepSum s) {
  for (SepTerm& t : s.terms) t.c *= c;
  return s;
}

inline SepSum operator-(SepSum a, const SepSum& b) { return a + (-1.0 * b); }

inline SepSum laplacian(const SepSum& s) {
  return deriv(deriv(s, 0), 0) + deriv(deriv(s, 1), 1) + deriv(deriv(s, 2), 2);
}

}  // namespace detail

struct Manufactured {
  ProblemKind kind = ProblemKind::BiLaplacian;
  ScalarField u;       // scalar solution (bi-Laplacian)
  VectorField u_vec;   // vector solution (fourth-order curl)
  VectorField phi;     // gradient resp. curl of the solution
  ProblemSpec spec;    // coefficients and loads filled in
};

// Smooth solutions on [0,1]^3 with homogeneous essential data, built from
// p(t) = sin(pi t) and q(t) = sin^2(pi t); loads are exact closed forms.
// coeff scales the constant coefficient (the solution is unchanged, the
// leading part of the load scales with it).
inline Manufactured manufactured_solution(ProblemKind kind, double coeff = 1.0) {
  using detail::SepSum;
  using detail::SepTerm;
  Manufactured mf;
  mf.kind = kind;
  if (kind == ProblemKind::BiLaplacian) {
    SepSum u{{SepTerm{1.0, {1, 1, 1}, {0, 0, 0}}}};
    std::array<SepSum, 3> g = {detail::deriv(u, 0), detail::deriv(u, 1), detail::deriv(u, 2)};
    std::array<std::array<SepSum, 3>, 3> hess;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) hess[i][j] = detail::deriv(g[i], j);
    SepSum f1 = coeff * detail::laplacian(detail::laplacian(u));

    mf.u.value = [u](const Vec3& x) { return u(x); };
    mf.u.grad = [g](const Vec3& x) { return Vec3(g[0](x), g[1](x), g[2](x)); };
    mf.phi.value = mf.u.grad;
    mf.phi.jac = [hess](const Vec3& x) {
      Mat3 J;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = hess[i][j](x);
      return J;
    };
    mf.phi.curl = [](const Vec3&) { return Vec3::Zero(); };

    mf.spec = bilaplacian_spec(coeff);
    mf.spec.f1_scalar = [f1](const Vec3& x) { return f1(x); };
  } else {
    std::array<SepSum, 3> u;
    u[0] = SepSum{{SepTerm{1.0, {0, 1, 1}, {0, 0, 0}}}};
    u[1] = SepSum{{SepTerm{1.0, {1, 0, 1}, {0, 0, 0}}}};
    u[2] = SepSum{{SepTerm{1.0, {1, 1, 0}, {0, 0, 0}}}};
    std::array<SepSum, 3> cu;
    cu[0] = detail::deriv(u[2], 1) - detail::deriv(u[1], 2);
    cu[1] = detail::deriv(u[0], 2) - detail::deriv(u[2], 0);
    cu[2] = detail::deriv(u[1], 0) - detail::deriv(u[0], 1);
    std::array<std::array<SepSum, 3>, 3> ju, jcu;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        ju[i][j] = detail::deriv(u[i], j);
        jcu[i][j] = detail::deriv(cu[i], j);
      }
    SepSum divu = detail::deriv(u[0], 0) + detail::deriv(u[1], 1) + detail::deriv(u[2], 2);
    // curl^4 u = lap^2 u - grad(lap div u) for smooth fields
    SepSum lapdiv = detail::laplacian(divu);
    std::array<SepSum, 3> f1;
    for (int i = 0; i < 3; ++i)
      f1[i] = coeff * (detail::laplacian(detail::laplacian(u[i])) - detail::deriv(lapdiv, i)) +
              u[i];

    mf.u_vec.value = [u](const Vec3& x) { return Vec3(u[0](x), u[1](x), u[2](x)); };
    mf.u_vec.jac = [ju](const Vec3& x) {
      Mat3 J;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = ju[i][j](x);
      return J;
    };
    mf.u_vec.curl = [cu](const Vec3& x) { return Vec3(cu[0](x), cu[1](x), cu[2](x)); };
    mf.u_vec.div = [divu](const Vec3& x) { return divu(x); };
    mf.phi.value = mf.u_vec.curl;
    mf.phi.jac = [jcu](const Vec3& x) {
      Mat3 J;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J(i, j) = jcu[i][j](x);
      return J;
    };
    mf.phi.div = [](const Vec3&) { return 0.0; };

    mf.spec = quadcurl_spec(coeff);
    mf.spec.f1_vector = [f1](const Vec3& x) { return Vec3(f1[0](x), f1[1](x), f1[2](x)); };
  }
  return mf;
}

// ---------------------------------------------------------------------------
// Finite-difference derivative oracles (fourth-order central stencils)
// ---------------------------------------------------------------------------

namespace fd {

template <class F>
double partial(F&& f, const Vec3& x, int axis, double h) {
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  return (-f(Vec3(x + 2 * h * e)) + 8.0 * f(Vec3(x + h * e)) - 8.0 * f(Vec3(x - h * e)) +
          f(Vec3(x - 2 * h * e))) /
         (12.0 * h);
}

template <class F>
double partial2(F&& f, const Vec3& x, int axis, double h) {
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  return (-f(Vec3(x + 2 * h * e)) + 16.0 * f(Vec3(x + h * e)) - 30.0 * f(x) +
          16.0 * f(Vec3(x - h * e)) - f(Vec3(x - 2 * h * e))) /
         (12.0 * h * h);
}

template <class F>
Vec3 gradient(F&& f, const Vec3& x, double h) {
  return Vec3(partial(f, x, 0, h), partial(f, x, 1, h), partial(f, x, 2, h));
}

template <class F>
double laplacian(F&& f, const Vec3& x, double h) {
  return partial2(f, x, 0, h) + partial2(f, x, 1, h) + partial2(f, x, 2, h);
}

template <class F>
Mat3 jacobian(F&& f, const Vec3& x, double h) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    Vec3 col = (-f(Vec3(x + 2 * h * Vec3::Unit(j))) + 8.0 * f(Vec3(x + h * Vec3::Unit(j))) -
                8.0 * f(Vec3(x - h * Vec3::Unit(j))) + f(Vec3(x - 2 * h * Vec3::Unit(j)))) /
               (12.0 * h);
    J.col(j) = col;
  }
  return J;
}

inline Vec3 curl_of(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h) {
  Mat3 J = jacobian(f, x, h);
  return Vec3(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
}

inline double divergence(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h) {
  return jacobian(f, x, h).trace();
}

// composed stencils for the fourth-order oracles; truncation is O(h^4) with
// large constants, so callers pick h around 0.02 and compare loosely
template <class F>
double bilaplacian(F&& f, const Vec3& x, double h) {
  auto lap = [&](const Vec3& y) { return laplacian(f, y, h); };
  return laplacian(lap, x, h);
}

inline Vec3 curl4(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h) {
  std::function<Vec3(const Vec3&)> c1 = [&f, h](const Vec3& y) { return curl_of(f, y, h); };
  std::function<Vec3(const Vec3&)> c2 = [c1, h](const Vec3& y) { return curl_of(c1, y, h); };
  std::function<Vec3(const Vec3&)> c3 = [c2, h](const Vec3& y) { return curl_of(c2, y, h); };
  return curl_of(c3, x, h);
}

}  // namespace fd

// ---------------------------------------------------------------------------
// Error norms
// ---------------------------------------------------------------------------

namespace detail {

inline void require_callbacks_scalar(const ScalarField& f, Norm norm) {
  if (!f.value) throw std::invalid_argument("error_norm: missing value callback");
  if (norm == Norm::H1 && !f.grad) throw std::invalid_argument("error_norm: missing grad callback");
  if (norm == Norm::Hcurl || norm == Norm::Hdiv)
    throw std::invalid_argument("error_norm: curl/div norms are for vector fields");
}

inline void require_callbacks_vector(const VectorField& f, Norm norm) {
  if (!f.value) throw std::invalid_argument("error_norm: missing value callback");
  if (norm == Norm::H1 && !f.jac) throw std::invalid_argument("error_norm: missing jac callback");
  if (norm == Norm::Hcurl && !f.curl)
    throw std::invalid_argument("error_norm: missing curl callback");
  if (norm == Norm::Hdiv && !f.div) throw std::invalid_argument("error_norm: missing div callback");
}

}  // namespace detail

inline double error_norm(const Mesh& mesh, const DofHandler& h, const Eigen::VectorXd& coeffs,
                         const ScalarField& exact, Norm norm, int degree = 8) {
  if (!is_scalar_kind(h.kind))
    throw std::invalid_argument("error_norm: scalar exact field against vector space");
  if (!norm_applicable(h.kind, norm))
    throw std::invalid_argument("error_norm: norm not applicable to space kind");
  detail::require_callbacks_scalar(exact, norm);
  QuadratureRule rule = quadrature_rule(degree);
  double acc = 0.0;
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(mesh, ci);
    const double scale = 6.0 * geom.volume;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      FieldEval fe = eval_field(h, coeffs, ci, geom, rule.points[q]);
      Vec3 x = barycentric_to_point(geom, rule.points[q]);
      double p = fe.s - exact.value(x);
      double val = p * p;
      if (norm == Norm::H1) val += (fe.grad - exact.grad(x)).squaredNorm();
      acc += rule.weights[q] * scale * val;
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

inline double error_norm(const Mesh& mesh, const DofHandler& h, const Eigen::VectorXd& coeffs,
                         const VectorField& exact, Norm norm, int degree = 8) {
  if (is_scalar_kind(h.kind))
    throw std::invalid_argument("error_norm: vector exact field against scalar space");
  if (!norm_applicable(h.kind, norm))
    throw std::invalid_argument("error_norm: norm not applicable to space kind");
  detail::require_callbacks_vector(exact, norm);
  QuadratureRule rule = quadrature_rule(degree);
  double acc = 0.0;
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(mesh, ci);
    const double scale = 6.0 * geom.volume;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      FieldEval fe = eval_field(h, coeffs, ci, geom, rule.points[q]);
      Vec3 x = barycentric_to_point(geom, rule.points[q]);
      double val = (fe.v - exact.value(x)).squaredNorm();
      if (norm == Norm::H1)
        val += (fe.jac - exact.jac(x)).squaredNorm();
      else if (norm == Norm::Hcurl)
        val += (fe.curl() - exact.curl(x)).squaredNorm();
      else if (norm == Norm::Hdiv) {
        double d = fe.div() - exact.div(x);
        val += d * d;
      }
      acc += rule.weights[q] * scale * val;
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

// Norm of the difference of two discrete fields living on different meshes of
// the unit cube; quadrature runs on the finer mesh and the coarse field is
// evaluated through point location (exact for nested structured meshes).
inline double diff_norm(const Mesh& fine_mesh, const DofHandler& fine_h,
                        const Eigen::VectorXd& fine_c, const Mesh& coarse_mesh,
                        const DofHandler& coarse_h, const Eigen::VectorXd& coarse_c, Norm norm,
                        int degree = 8) {
  if (is_scalar_kind(fine_h.kind) != is_scalar_kind(coarse_h.kind))
    throw std::invalid_argument("diff_norm: scalar/vector mismatch");
  if (!norm_applicable(fine_h.kind, norm) || !norm_applicable(coarse_h.kind, norm))
    throw std::invalid_argument("diff_norm: norm not applicable");
  QuadratureRule rule = quadrature_rule(degree);
  const bool scalar = is_scalar_kind(fine_h.kind);
  double acc = 0.0;
  std::vector<char> have_geom(coarse_mesh.n_cells(), 0);
  std::vector<CellGeometry> coarse_geom(coarse_mesh.n_cells());
  for (int ci = 0; ci < fine_mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(fine_mesh, ci);
    const double scale = 6.0 * geom.volume;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      FieldEval fa = eval_field(fine_h, fine_c, ci, geom, rule.points[q]);
      Vec3 x = barycentric_to_point(geom, rule.points[q]);
      LocatedPoint loc = locate_point(coarse_mesh, x);
      if (!have_geom[loc.cell]) {
        coarse_geom[loc.cell] = cell_geometry(coarse_mesh, loc.cell);
        have_geom[loc.cell] = 1;
      }
      FieldEval fb = eval_field(coarse_h, coarse_c, loc.cell, coarse_geom[loc.cell], loc.bary);
      double val;
      if (scalar) {
        double p = fa.s - fb.s;
        val = p * p;
        if (norm == Norm::H1) val += (fa.grad - fb.grad).squaredNorm();
      } else {
        val = (fa.v - fb.v).squaredNorm();
        if (norm == Norm::H1)
          val += (fa.jac - fb.jac).squaredNorm();
        else if (norm == Norm::Hcurl)
          val += (fa.curl() - fb.curl()).squaredNorm();
        else if (norm == Norm::Hdiv) {
          double d = fa.div() - fb.div();
          val += d * d;
        }
      }
      acc += rule.weights[q] * scale * val;
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

inline double fit_rate(const std::vector<double>& hs, const std::vector<double>& errs) {
  if (hs.size() != errs.size() || hs.size() < 2)
    throw std::invalid_argument("fit_rate: need at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(hs[i]);
    const double y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  int dof_u = 0, dof_phi = 0, dof_zeta = 0;
  double err_u = 0.0, err_phi = 0.0;
  double err_zeta_ref = std::numeric_limits<double>::quiet_NaN();  // vs next finer mesh
  double rate = std::numeric_limits<double>::quiet_NaN();          // incremental, leading error
};

struct ConvergenceReport {
  ProblemKind problem = ProblemKind::BiLaplacian;
  std::vector<ConvergenceRow> rows;
  double rate_u = std::numeric_limits<double>::quiet_NaN();
  double rate_phi = std::numeric_limits<double>::quiet_NaN();
  double rate_zeta = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> solver_residuals;
};

enum class SolverChoice { Direct, Minres };

// Solve on each mesh and measure errors: first component in its natural norm
// (H1 scalar resp. H(curl)), second in H1, third against the next finer
// solution since no closed form is available for it.
inline ConvergenceReport convergence_study(const Manufactured& mf, const std::vector<int>& ns,
                                           SolverChoice solver = SolverChoice::Direct) {
  if (ns.size() < 2) throw std::invalid_argument("convergence_study: need at least two meshes");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 2) throw std::invalid_argument("convergence_study: mesh sizes must be >= 2");
    if (i && ns[i] <= ns[i - 1])
      throw std::invalid_argument("convergence_study: mesh sizes must be ascending");
  }
  ConvergenceReport rep;
  rep.problem = mf.kind;
  const Norm norm_u = mf.kind == ProblemKind::BiLaplacian ? Norm::H1 : Norm::Hcurl;
  const Norm norm_zeta = mf.kind == ProblemKind::BiLaplacian ? Norm::Hcurl : Norm::Hdiv;
  const int err_degree = mf.spec.quad_degree + 2;  // error quadrature above assembly accuracy

  std::vector<Mesh> meshes;
  std::vector<BlockSystem> systems;
  std::vector<Eigen::VectorXd> solutions;
  meshes.reserve(ns.size());
  for (int n : ns) {
    meshes.push_back(build_structured_cube(n));
    const Mesh& mesh = meshes.back();
    systems.push_back(assemble_operator(mf.spec, mesh));
    BlockSystem& sys = systems.back();
    Eigen::VectorXd rhs = assemble_load(mf.spec, mesh, sys);
    SolveReport sol = solver == SolverChoice::Direct
                          ? solve_direct(sys, rhs)
                          : solve_minres(sys, rhs, BlockDiagPreconditioner(sys));
    rep.solver_residuals.push_back(sol.rel_residual);
    solutions.push_back(std::move(sol.x));

    ConvergenceRow row;
    row.n = n;
    double hmax = 0.0;
    for (int ci = 0; ci < mesh.n_cells(); ++ci) hmax = std::max(hmax, cell_diameter(mesh, ci));
    row.h = hmax;
    row.dof_u = sys.dim_R();
    row.dof_phi = sys.dim_S();
    row.dof_zeta = sys.dim_Y();
    const Eigen::VectorXd u_part = solutions.back().segment(sys.off_R, sys.dim_R());
    const Eigen::VectorXd phi_part = solutions.back().segment(sys.off_S, sys.dim_S());
    if (mf.kind == ProblemKind::BiLaplacian)
      row.err_u = error_norm(mesh, sys.R, u_part, mf.u, norm_u, err_degree);
    else
      row.err_u = error_norm(mesh, sys.R, u_part, mf.u_vec, norm_u, err_degree);
    row.err_phi = error_norm(mesh, sys.S, phi_part, mf.phi, Norm::H1, err_degree);
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    const BlockSystem& a = systems[i];
    const BlockSystem& b = systems[i + 1];
    rep.rows[i].err_zeta_ref =
        diff_norm(meshes[i + 1], b.Y,
                  Eigen::VectorXd(solutions[i + 1].segment(b.off_Y, b.dim_Y())), meshes[i], a.Y,
                  Eigen::VectorXd(solutions[i].segment(a.off_Y, a.dim_Y())), norm_zeta,
                  err_degree);
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    rep.rows[i].rate = std::log(rep.rows[i - 1].err_u / rep.rows[i].err_u) /
                       std::log(rep.rows[i - 1].h / rep.rows[i].h);

  std::vector<double> hs, eu, ep, hz, ez;
  for (const ConvergenceRow& r : rep.rows) {
    hs.push_back(r.h);
    eu.push_back(r.err_u);
    ep.push_back(r.err_phi);
    if (std::isfinite(r.err_zeta_ref)) {
      hz.push_back(r.h);
      ez.push_back(r.err_zeta_ref);
    }
  }
  rep.rate_u = fit_rate(hs, eu);
  rep.rate_phi = fit_rate(hs, ep);
  if (hz.size() >= 2) rep.rate_zeta = fit_rate(hz, ez);
  return rep;
}

// ---------------------------------------------------------------------------
// Inf-sup constants
// ---------------------------------------------------------------------------

struct InfSupResult {
  double beta = 0.0;
  int kernel_dim = 0;
};

// beta^2 = smallest nonzero eigenvalue of G_Y^{-1} B G_RS^{-1} B^T; the
// kernel (eigenvalues ~ 0 relative to the largest) is excluded.
inline InfSupResult infsup_constant(const SparseMatrix& B, const SparseMatrix& gram_RS,
                                    const SparseMatrix& gram_Y, double kernel_rel_tol = 1e-9) {
  const Eigen::Index nY = B.rows(), nRS = B.cols();
  if (gram_RS.rows() != nRS || gram_RS.cols() != nRS || gram_Y.rows() != nY ||
      gram_Y.cols() != nY)
    throw std::invalid_argument("infsup_constant: dimension mismatch");
  if (nY > kDenseCap || nRS > kDenseCap)
    throw SizeError("infsup_constant: system exceeds dense cap");
  Eigen::MatrixXd Bd(B), Gd(gram_RS), Yd(gram_Y);
  Eigen::LLT<Eigen::MatrixXd> llt(Gd);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("infsup_constant: gram_RS not positive definite");
  Eigen::MatrixXd S = Bd * llt.solve(Bd.transpose());
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Yd);
  if (es.info() != Eigen::Success)
    throw DecompositionFailure("infsup_constant: generalized eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double top = ev.size() ? std::max(ev[ev.size() - 1], 0.0) : 0.0;
  const double cut = kernel_rel_tol * top;
  InfSupResult out;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= cut) {
      ++out.kernel_dim;
    } else {
      out.beta = std::sqrt(ev[i]);
      break;
    }
  }
  return out;
}

enum class PairingKind { Curl, Div };

inline std::string pairing_name(PairingKind k) { return k == PairingKind::Curl ? "curl" : "div"; }

struct InfSupPairing {
  DofHandler S, Y;
  SparseMatrix B, G_RS, G_Y;
};

// The two interpolated pairings: b(psi, tau) = (curl Pi_N psi, tau) with tau
// in the face space (H(div) norm), and b(psi, q) = (div Pi_RT psi, q) with q
// piecewise constant (L2 norm). Test space norms on the enriched vector
// spaces are H1.
inline InfSupPairing build_infsup_pairing(const Mesh& mesh, PairingKind which, int degree = 6) {
  InfSupPairing out;
  if (which == PairingKind::Curl) {
    out.S = make_space(mesh, SpaceKind::P1VecPlusEdge, Bc::HomogeneousEssential);
    DofHandler ned = make_space(mesh, SpaceKind::Nedelec0, Bc::HomogeneousEssential);
    out.Y = make_space(mesh, SpaceKind::RT0, Bc::HomogeneousEssential);
    if (out.S.n_dofs == 0 || ned.n_dofs == 0 || out.Y.n_dofs == 0)
      throw DegenerateSystemError("build_infsup_pairing: empty space");
    SparseMatrix P = interpolation_matrix_nedelec(mesh, out.S, ned);
    SparseMatrix D = curl_incidence(mesh, ned, out.Y);
    SparseMatrix M = assemble_gram(mesh, out.Y, Norm::L2, degree);
    out.B = SparseMatrix(M * SparseMatrix(D * P));
    out.G_Y = assemble_gram(mesh, out.Y, Norm::Hdiv, degree);
  } else {
    out.S = make_space(mesh, SpaceKind::P1VecPlusFace, Bc::HomogeneousEssential);
    DofHandler rt = make_space(mesh, SpaceKind::RT0, Bc::HomogeneousEssential);
    out.Y = make_space(mesh, SpaceKind::P0, Bc::None);
    if (out.S.n_dofs == 0 || rt.n_dofs == 0 || out.Y.n_dofs == 0)
      throw DegenerateSystemError("build_infsup_pairing: empty space");
    SparseMatrix P = interpolation_matrix_rt(mesh, out.S, rt);
    SparseMatrix D = div_incidence(mesh, rt, out.Y);
    SparseMatrix M = assemble_gram(mesh, out.Y, Norm::L2, degree);
    out.B = SparseMatrix(M * SparseMatrix(D * P));
    out.G_Y = M;
  }
  out.G_RS = assemble_gram(mesh, out.S, Norm::H1, degree);
  return out;
}

// ---------------------------------------------------------------------------
// Kernel coercivity
// ---------------------------------------------------------------------------

struct CoercivityResult {
  double value = std::numeric_limits<double>::infinity();
  int kernel_dim = 0;
  bool empty_kernel = true;
};

// Smallest Rayleigh quotient of the leading block over the nullspace of the
// constraint rows, measured in the R x S natural Gram norm.
inline CoercivityResult kernel_coercivity(const BlockSystem& sys, double rank_rel_tol = 1e-10) {
  const int nR = sys.dim_R(), nS = sys.dim_S(), nY = sys.dim_Y();
  const int nRS = nR + nS;
  if (nRS > kDenseCap || nY > kDenseCap)
    throw SizeError("kernel_coercivity: system exceeds dense cap");
  Eigen::MatrixXd C(nY, nRS);
  C.leftCols(nR) = Eigen::MatrixXd(SparseMatrix(sys.C_RY.transpose()));
  C.rightCols(nS) = Eigen::MatrixXd(SparseMatrix(sys.C_SY.transpose()));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rank_rel_tol * smax) ++rank;
  const int kdim = nRS - rank;
  CoercivityResult out;
  out.kernel_dim = kdim;
  if (kdim == 0) return out;  // +inf sentinel
  out.empty_kernel = false;
  Eigen::MatrixXd N = svd.matrixV().rightCols(kdim);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nRS, nRS);
  A.topLeftCorner(nR, nR) = Eigen::MatrixXd(sys.A_RR);
  A.bottomRightCorner(nS, nS) = Eigen::MatrixXd(sys.A_SS);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nRS, nRS);
  G.topLeftCorner(nR, nR) = Eigen::MatrixXd(sys.G_R);
  G.bottomRightCorner(nS, nS) = Eigen::MatrixXd(sys.G_S);
  Eigen::MatrixXd Ak = N.transpose() * A * N;
  Eigen::MatrixXd Gk = N.transpose() * G * N;
  Ak = 0.5 * (Ak + Ak.transpose()).eval();
  Gk = 0.5 * (Gk + Gk.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ak, Gk);
  if (es.info() != Eigen::Success)
    throw DecompositionFailure("kernel_coercivity: generalized eigensolve failed");
  out.value = es.eigenvalues()[0];
  return out;
}

// ---------------------------------------------------------------------------
// Regular decomposition stability
// ---------------------------------------------------------------------------

enum class DecompKind { Curl, Div };

inline std::string decomp_name(DecompKind k) { return k == DecompKind::Curl ? "curl" : "div"; }

struct DecompositionReport {
  int samples = 0;
  double max_ratio = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double mean_ratio = 0.0;
  double max_constraint_residual = 0.0;
};

// For random unit targets in the edge (resp. face) space, split them as an
// exact gradient (resp. curl) part plus an interpolated enriched-space part
// of minimal combined norm; the constraint is enforced through a KKT system,
// and failure to reconstruct is a hard error.
inline DecompositionReport decomposition_stability(const Mesh& mesh, DecompKind which,
                                                   int n_samples = 100,
                                                   std::uint64_t seed = kDefaultSeed,
                                                   int degree = 6) {
  DofHandler W, S, Y;
  SparseMatrix K1, P, G_W, G_S, G_Y;
  if (which == DecompKind::Curl) {
    W = make_space(mesh, SpaceKind::P1, Bc::HomogeneousEssential);
    S = make_space(mesh, SpaceKind::P1VecPlusEdge, Bc::HomogeneousEssential);
    Y = make_space(mesh, SpaceKind::Nedelec0, Bc::HomogeneousEssential);
    if (W.n_dofs == 0 || S.n_dofs == 0 || Y.n_dofs == 0)
      throw DegenerateSystemError("decomposition_stability: empty space");
    K1 = gradient_incidence(mesh, W, Y);
    P = interpolation_matrix_nedelec(mesh, S, Y);
    G_W = assemble_gram(mesh, W, Norm::H1, degree);
    G_Y = assemble_gram(mesh, Y, Norm::Hcurl, degree);
  } else {
    W = make_space(mesh, SpaceKind::Nedelec0, Bc::HomogeneousEssential);
    S = make_space(mesh, SpaceKind::P1VecPlusFace, Bc::HomogeneousEssential);
    Y = make_space(mesh, SpaceKind::RT0, Bc::HomogeneousEssential);
    if (W.n_dofs == 0 || S.n_dofs == 0 || Y.n_dofs == 0)
      throw DegenerateSystemError("decomposition_stability: empty space");
    K1 = curl_incidence(mesh, W, Y);
    P = interpolation_matrix_rt(mesh, S, Y);
    G_W = assemble_gram(mesh, W, Norm::Hcurl, degree);
    G_Y = assemble_gram(mesh, Y, Norm::Hdiv, degree);
  }
  G_S = assemble_gram(mesh, S, Norm::H1, degree);

  const int nW = W.n_dofs, nS = S.n_dofs, nY = Y.n_dofs;
  const int nX = nW + nS;
  std::vector<Triplet> trips;
  detail::append_block(trips, G_W, 0, 0, false);
  detail::append_block(trips, G_S, nW, nW, false);
  detail::append_block(trips, K1, nX, 0, true);
  detail::append_block(trips, P, nX, nW, true);
  SparseMatrix kkt = from_triplets(nX + nY, nX + nY, trips);
  Eigen::SparseMatrix<double> kkt_cm(kkt);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(kkt_cm);
  if (lu.info() != Eigen::Success)
    throw DecompositionFailure("decomposition_stability: KKT factorization failed");

  Rng rng(seed);
  DecompositionReport rep;
  rep.samples = n_samples;
  double sum = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd eta = rng.normal_vector(nY);
    const double eta_norm = std::sqrt(eta.dot(G_Y * eta));
    eta /= eta_norm;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nX + nY);
    rhs.tail(nY) = eta;
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd w = sol.head(nW);
    Eigen::VectorXd phi = sol.segment(nW, nS);
    Eigen::VectorXd resid = K1 * w + P * phi - eta;
    const double res = std::sqrt(std::max(resid.dot(G_Y * resid), 0.0));
    rep.max_constraint_residual = std::max(rep.max_constraint_residual, res);
    if (res > 1e-8)
      throw DecompositionFailure("decomposition_stability: reconstruction infeasible");
    const double ratio =
        std::sqrt(std::max(w.dot(G_W * w), 0.0)) + std::sqrt(std::max(phi.dot(G_S * phi), 0.0));
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    sum += ratio;
  }
  rep.mean_ratio = sum / n_samples;
  return rep;
}

// ---------------------------------------------------------------------------
// Interpolation boundedness and enriched-space norm equivalence
// ---------------------------------------------------------------------------

// Observed bound sup ||Pi psi||_target / ||psi||_H1 over random coefficient
// fields in the enriched space.
inline double pi_boundedness(const Mesh& mesh, PairingKind which, int n_fields = 200,
                             std::uint64_t seed = kDefaultSeed, int degree = 6) {
  DofHandler S, T;
  SparseMatrix P, G_T;
  if (which == PairingKind::Curl) {
    S = make_space(mesh, SpaceKind::P1VecPlusEdge, Bc::HomogeneousEssential);
    T = make_space(mesh, SpaceKind::Nedelec0, Bc::HomogeneousEssential);
    if (S.n_dofs == 0 || T.n_dofs == 0)
      throw DegenerateSystemError("pi_boundedness: empty space");
    P = interpolation_matrix_nedelec(mesh, S, T);
    G_T = assemble_gram(mesh, T, Norm::Hcurl, degree);
  } else {
    S = make_space(mesh, SpaceKind::P1VecPlusFace, Bc::HomogeneousEssential);
    T = make_space(mesh, SpaceKind::RT0, Bc::HomogeneousEssential);
    if (S.n_dofs == 0 || T.n_dofs == 0)
      throw DegenerateSystemError("pi_boundedness: empty space");
    P = interpolation_matrix_rt(mesh, S, T);
    G_T = assemble_gram(mesh, T, Norm::Hdiv, degree);
  }
  SparseMatrix G_S = assemble_gram(mesh, S, Norm::H1, degree);
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n_fields; ++k) {
    Eigen::VectorXd c = rng.normal_vector(S.n_dofs);
    Eigen::VectorXd pc = P * c;
    const double num = std::sqrt(std::max(pc.dot(G_T * pc), 0.0));
    const double den = std::sqrt(std::max(c.dot(G_S * c), 0.0));
    worst = std::max(worst, num / den);
  }
  return worst;
}

struct SpectralInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Generalized spectrum of the H1 Gram of the edge-enriched space against the
// decoupled matrix diag(H1 Gram of the linear part, h^-2-weighted L2 Gram of
// the bubble part): the interval [lo, hi] expresses the equivalence of the
// two norms on the direct sum.
inline SpectralInterval plus_space_norm_equivalence(const Mesh& mesh, int degree = 6) {
  DofHandler plus = make_space(mesh, SpaceKind::P1VecPlusEdge, Bc::HomogeneousEssential);
  DofHandler lin = make_space(mesh, SpaceKind::P1Vec, Bc::HomogeneousEssential);
  DofHandler bub = make_space(mesh, SpaceKind::EdgeBubbleVec, Bc::HomogeneousEssential);
  if (plus.n_dofs == 0) throw DegenerateSystemError("plus_space_norm_equivalence: empty space");
  if (plus.n_dofs != lin.n_dofs + bub.n_dofs)
    throw std::logic_error("plus_space_norm_equivalence: block mismatch");
  if (plus.n_dofs > kDenseCap)
    throw SizeError("plus_space_norm_equivalence: system exceeds dense cap");
  SparseMatrix G_plus = assemble_gram(mesh, plus, Norm::H1, degree);
  SparseMatrix G_lin = assemble_gram(mesh, lin, Norm::H1, degree);
  std::vector<double> inv_h2(mesh.n_cells());
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    const double d = cell_diameter(mesh, ci);
    inv_h2[ci] = 1.0 / (d * d);
  }
  SparseMatrix G_bub = assemble_gram(mesh, bub, Norm::L2, degree,
                                     [&inv_h2](int ci) { return inv_h2[ci]; });
  Eigen::MatrixXd A(plus.n_dofs, plus.n_dofs);
  A = Eigen::MatrixXd(G_plus);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(plus.n_dofs, plus.n_dofs);
  B.topLeftCorner(lin.n_dofs, lin.n_dofs) = Eigen::MatrixXd(G_lin);
  B.bottomRightCorner(bub.n_dofs, bub.n_dofs) = Eigen::MatrixXd(G_bub);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  if (es.info() != Eigen::Success)
    throw DecompositionFailure("plus_space_norm_equivalence: generalized eigensolve failed");
  return {es.eigenvalues()[0], es.eigenvalues()[es.eigenvalues().size() - 1]};
}

// ---------------------------------------------------------------------------
// Dual norms
// ---------------------------------------------------------------------------

// sqrt(F' G^{-1} F): the discrete dual norm of the functional F against the
// norm realized by the SPD Gram G.
inline double dual_norm(const SparseMatrix& G, const Eigen::VectorXd& F) {
  if (G.rows() != G.cols() || G.rows() != F.size())
    throw std::invalid_argument("dual_norm: dimension mismatch");
  Eigen::SparseMatrix<double> A(G);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystemError("dual_norm: Gram factorization failed");
  return std::sqrt(std::max(F.dot(ldlt.solve(F)), 0.0));
}

// Lower bound on the dual norm by sampling the sup over random directions.
inline double dual_norm_sampled(const SparseMatrix& G, const Eigen::VectorXd& F, int n_samples,
                                std::uint64_t seed = kDefaultSeed) {
  if (G.rows() != G.cols() || G.rows() != F.size())
    throw std::invalid_argument("dual_norm_sampled: dimension mismatch");
  Rng rng(seed);
  double best = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    Eigen::VectorXd r = rng.normal_vector(F.size());
    const double den = std::sqrt(std::max(r.dot(G * r), 0.0));
    if (den > 0.0) best = std::max(best, std::abs(F.dot(r)) / den);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Aggregated studies (the CLI surfaces)
// ---------------------------------------------------------------------------

inline double max_consecutive_drift(const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    worst = std::max(worst, std::abs(v[i + 1] - v[i]) / std::abs(v[i]));
  return worst;
}

struct InfSupStudy {
  PairingKind pair = PairingKind::Curl;
  std::vector<int> ns;
  std::vector<double> betas;
  std::vector<int> kernel_dims;
  double drift = 0.0;
};

inline InfSupStudy infsup_study(PairingKind pair, const std::vector<int>& ns, int degree = 6) {
  InfSupStudy st;
  st.pair = pair;
  st.ns = ns;
  for (int n : ns) {
    Mesh mesh = build_structured_cube(n);
    InfSupPairing pr = build_infsup_pairing(mesh, pair, degree);
    InfSupResult r = infsup_constant(pr.B, pr.G_RS, pr.G_Y);
    st.betas.push_back(r.beta);
    st.kernel_dims.push_back(r.kernel_dim);
  }
  st.drift = max_consecutive_drift(st.betas);
  return st;
}

struct DecompStudy {
  DecompKind which = DecompKind::Curl;
  std::vector<int> ns;
  std::vector<DecompositionReport> reports;
  double drift = 0.0;
};

inline DecompStudy decomposition_study(DecompKind which, const std::vector<int>& ns,
                                       int n_samples = 100, std::uint64_t seed = kDefaultSeed) {
  DecompStudy st;
  st.which = which;
  st.ns = ns;
  std::vector<double> maxima;
  for (int n : ns) {
    Mesh mesh = build_structured_cube(n);
    st.reports.push_back(decomposition_stability(mesh, which, n_samples, seed));
    maxima.push_back(st.reports.back().max_ratio);
  }
  st.drift = max_consecutive_drift(maxima);
  return st;
}

struct HypothesesStudy {
  std::vector<int> ns;
  std::vector<double> pi_curl, pi_div;
  std::vector<double> coercivity_bilap, coercivity_quadcurl;
  std::vector<int> kernel_dim_bilap, kernel_dim_quadcurl;
  double drift_pi_curl = 0.0, drift_pi_div = 0.0;
  double drift_coercivity_bilap = 0.0, drift_coercivity_quadcurl = 0.0;
};

// The three hypotheses of the abstract framework, made observable:
// interpolation boundedness, kernel coercivity (per problem), and the
// inf-sup constants are covered by infsup_study.
inline HypothesesStudy hypotheses_study(const std::vector<int>& ns,
                                        std::uint64_t seed = kDefaultSeed,
                                        const ProblemSpec& bilap = bilaplacian_spec(),
                                        const ProblemSpec& quadcurl = quadcurl_spec()) {
  HypothesesStudy st;
  st.ns = ns;
  for (int n : ns) {
    Mesh mesh = build_structured_cube(n);
    st.pi_curl.push_back(pi_boundedness(mesh, PairingKind::Curl, 200, seed));
    st.pi_div.push_back(pi_boundedness(mesh, PairingKind::Div, 200, seed));
    BlockSystem bl = assemble_operator(bilap, mesh);
    CoercivityResult cb = kernel_coercivity(bl);
    st.coercivity_bilap.push_back(cb.value);
    st.kernel_dim_bilap.push_back(cb.kernel_dim);
    BlockSystem qc = assemble_operator(quadcurl, mesh);
    CoercivityResult cq = kernel_coercivity(qc);
    st.coercivity_quadcurl.push_back(cq.value);
    st.kernel_dim_quadcurl.push_back(cq.kernel_dim);
  }
  st.drift_pi_curl = max_consecutive_drift(st.pi_curl);
  st.drift_pi_div = max_consecutive_drift(st.pi_div);
  st.drift_coercivity_bilap = max_consecutive_drift(st.coercivity_bilap);
  st.drift_coercivity_quadcurl = max_consecutive_drift(st.coercivity_quadcurl);
  return st;
}

}  // namespace ordfem
