#pragma once

#include <functional>
#include <vector>

#include "ordfem/interp.hpp"
#include "ordfem/quadrature.hpp"
#include "ordfem/sparse.hpp"
#include "ordfem/spaces.hpp"

namespace ordfem {

enum class ProblemKind { BiLaplacian, QuadCurl };
enum class Norm { L2, H1, Hcurl, Hdiv };

inline std::string problem_name(ProblemKind k) {
  return k == ProblemKind::BiLaplacian ? "bilaplacian" : "quadcurl";
}

struct ProblemSpec {
  ProblemKind kind = ProblemKind::BiLaplacian;
  // scalar coefficient for the bi-Laplacian, matrix coefficient for the
  // fourth-order curl operator; both positive (definite) on [0,1]^3
  std::function<double(const Vec3&)> alpha;
  std::function<Mat3(const Vec3&)> curl_coeff;
  std::function<double(const Vec3&)> f1_scalar;
  std::function<Vec3(const Vec3&)> f1_vector;
  std::function<Vec3(const Vec3&)> f2;
  int quad_degree = 6;
};

inline ProblemSpec bilaplacian_spec(double alpha_const = 1.0) {
  ProblemSpec s;
  s.kind = ProblemKind::BiLaplacian;
  s.alpha = [alpha_const](const Vec3&) { return alpha_const; };
  s.f1_scalar = [](const Vec3&) { return 0.0; };
  s.f2 = [](const Vec3&) { return Vec3::Zero(); };
  return s;
}

inline ProblemSpec quadcurl_spec(double coeff_const = 1.0) {
  ProblemSpec s;
  s.kind = ProblemKind::QuadCurl;
  s.curl_coeff = [coeff_const](const Vec3&) { return Mat3(coeff_const * Mat3::Identity()); };
  s.f1_vector = [](const Vec3&) { return Vec3::Zero(); };
  s.f2 = [](const Vec3&) { return Vec3::Zero(); };
  return s;
}

inline bool norm_applicable(SpaceKind kind, Norm norm) {
  const bool affine_vec = kind == SpaceKind::P1Vec || kind == SpaceKind::EdgeBubbleVec ||
                          kind == SpaceKind::FaceBubbleVec || kind == SpaceKind::P1VecPlusEdge ||
                          kind == SpaceKind::P1VecPlusFace;
  switch (norm) {
    case Norm::L2: return true;
    case Norm::H1: return kind == SpaceKind::P1 || affine_vec;
    case Norm::Hcurl: return affine_vec || kind == SpaceKind::Nedelec0;
    case Norm::Hdiv: return affine_vec || kind == SpaceKind::RT0;
  }
  return false;
}

// Gram matrix of the given norm on the handler's space. The optional cell
// weight multiplies the whole integrand on each cell (used for the scaled
// h^-2 mass matrices).
inline SparseMatrix assemble_gram(const Mesh& mesh, const DofHandler& h, Norm norm,
                                  int degree = 6,
                                  const std::function<double(int)>& cell_weight = {}) {
  if (!norm_applicable(h.kind, norm))
    throw std::invalid_argument("assemble_gram: norm not applicable to space kind");
  QuadratureRule rule = quadrature_rule(degree);
  const int nl = h.dofs_per_cell;
  std::vector<Triplet> trips;
  Eigen::MatrixXd local(nl, nl);
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(mesh, ci);
    const double scale = 6.0 * geom.volume * (cell_weight ? cell_weight(ci) : 1.0);
    local.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisEval be = eval_basis(h.kind, geom, rule.points[q]);
      const double w = rule.weights[q] * scale;
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j <= i; ++j) {
          double p;
          if (be.scalar) {
            p = be.value_s[i] * be.value_s[j];
            if (norm == Norm::H1) p += be.grad_s[i].dot(be.grad_s[j]);
          } else {
            p = be.value_v[i].dot(be.value_v[j]);
            if (norm == Norm::H1)
              p += be.jac_v[i].cwiseProduct(be.jac_v[j]).sum();
            else if (norm == Norm::Hcurl)
              p += be.curl(i).dot(be.curl(j));
            else if (norm == Norm::Hdiv)
              p += be.div(i) * be.div(j);
          }
          local(i, j) += w * p;
        }
    }
    for (int i = 0; i < nl; ++i) {
      int gi = h.dof(ci, i);
      if (gi < 0) continue;
      for (int j = 0; j < nl; ++j) {
        int gj = h.dof(ci, j);
        if (gj < 0) continue;
        trips.emplace_back(gi, gj, j <= i ? local(i, j) : local(j, i));
      }
    }
  }
  return from_triplets(h.n_dofs, h.n_dofs, trips);
}

namespace detail {

// (a form(i,j)) assembler over two different spaces on the same mesh
template <class LocalForm>
inline SparseMatrix assemble_pairing(const Mesh& mesh, const DofHandler& row_h,
                                     const DofHandler& col_h, int degree, LocalForm&& form) {
  QuadratureRule rule = quadrature_rule(degree);
  const int nr = row_h.dofs_per_cell;
  const int nc = col_h.dofs_per_cell;
  std::vector<Triplet> trips;
  Eigen::MatrixXd local(nr, nc);
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(mesh, ci);
    const double scale = 6.0 * geom.volume;
    local.setZero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisEval br = eval_basis(row_h.kind, geom, rule.points[q]);
      BasisEval bc = eval_basis(col_h.kind, geom, rule.points[q]);
      Vec3 x = barycentric_to_point(geom, rule.points[q]);
      const double w = rule.weights[q] * scale;
      for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) local(i, j) += w * form(br, i, bc, j, x);
    }
    for (int i = 0; i < nr; ++i) {
      int gi = row_h.dof(ci, i);
      if (gi < 0) continue;
      for (int j = 0; j < nc; ++j) {
        int gj = col_h.dof(ci, j);
        if (gj < 0) continue;
        trips.emplace_back(gi, gj, local(i, j));
      }
    }
  }
  return from_triplets(row_h.n_dofs, col_h.n_dofs, trips);
}

}  // namespace detail

struct BlockSystem {
  ProblemKind problem = ProblemKind::BiLaplacian;
  DofHandler R, S, Y;
  SparseMatrix A_RR;  // zero block for the bi-Laplacian
  SparseMatrix A_SS, C_RY, C_SY;
  SparseMatrix P;    // interpolation S -> Y
  SparseMatrix G_Y;  // H(curl) resp. H(div) Gram on Y (the c(.,.) matrix)
  SparseMatrix G_R, G_S;  // natural-norm Grams of the first two spaces
  SparseMatrix M;    // monolithic
  int off_R = 0, off_S = 0, off_Y = 0, total = 0;
  double sym_defect = 0.0;

  int dim_R() const { return R.n_dofs; }
  int dim_S() const { return S.n_dofs; }
  int dim_Y() const { return Y.n_dofs; }
};

namespace detail {

inline void append_block(std::vector<Triplet>& trips, const SparseMatrix& B, int roff,
                         int coff, bool with_transpose) {
  for (int r = 0; r < B.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(B, r); it; ++it) {
      trips.emplace_back(roff + static_cast<int>(it.row()), coff + static_cast<int>(it.col()),
                         it.value());
      if (with_transpose)
        trips.emplace_back(coff + static_cast<int>(it.col()), roff + static_cast<int>(it.row()),
                           it.value());
    }
}

}  // namespace detail

inline BlockSystem assemble_operator(const ProblemSpec& spec, const Mesh& mesh) {
  BlockSystem sys;
  sys.problem = spec.kind;
  const int deg = spec.quad_degree;
  if (spec.kind == ProblemKind::BiLaplacian) {
    if (!spec.alpha) throw std::invalid_argument("assemble_operator: missing alpha coefficient");
    sys.R = make_space(mesh, SpaceKind::P1, Bc::HomogeneousEssential);
    sys.S = make_space(mesh, SpaceKind::P1VecPlusEdge, Bc::HomogeneousEssential);
    sys.Y = make_space(mesh, SpaceKind::Nedelec0, Bc::HomogeneousEssential);
  } else {
    if (!spec.curl_coeff)
      throw std::invalid_argument("assemble_operator: missing curl coefficient");
    sys.R = make_space(mesh, SpaceKind::Nedelec0, Bc::HomogeneousEssential);
    sys.S = make_space(mesh, SpaceKind::P1VecPlusFace, Bc::HomogeneousEssential);
    sys.Y = make_space(mesh, SpaceKind::RT0, Bc::HomogeneousEssential);
  }
  if (sys.R.n_dofs == 0 || sys.S.n_dofs == 0 || sys.Y.n_dofs == 0)
    throw DegenerateSystemError("assemble_operator: empty space (mesh too coarse)");

  if (spec.kind == ProblemKind::BiLaplacian) {
    sys.A_RR = SparseMatrix(sys.R.n_dofs, sys.R.n_dofs);
    sys.A_SS = detail::assemble_pairing(
        mesh, sys.S, sys.S, deg,
        [&](const BasisEval& a, int i, const BasisEval& b, int j, const Vec3& x) {
          return spec.alpha(x) * a.div(i) * b.div(j) + a.curl(i).dot(b.curl(j));
        });
    sys.C_RY = detail::assemble_pairing(
        mesh, sys.R, sys.Y, deg,
        [](const BasisEval& a, int i, const BasisEval& b, int j, const Vec3&) {
          return -a.grad_s[i].dot(b.value_v[j]);
        });
    sys.P = interpolation_matrix_nedelec(mesh, sys.S, sys.Y);
    sys.G_Y = assemble_gram(mesh, sys.Y, Norm::Hcurl, deg);
    sys.G_R = assemble_gram(mesh, sys.R, Norm::H1, deg);
  } else {
    sys.A_RR = assemble_gram(mesh, sys.R, Norm::L2, deg);
    sys.A_SS = detail::assemble_pairing(
        mesh, sys.S, sys.S, deg,
        [&](const BasisEval& a, int i, const BasisEval& b, int j, const Vec3& x) {
          return a.curl(i).dot(spec.curl_coeff(x) * b.curl(j)) + a.div(i) * b.div(j);
        });
    sys.C_RY = detail::assemble_pairing(
        mesh, sys.R, sys.Y, deg,
        [](const BasisEval& a, int i, const BasisEval& b, int j, const Vec3&) {
          return -a.curl(i).dot(b.value_v[j]);
        });
    sys.P = interpolation_matrix_rt(mesh, sys.S, sys.Y);
    sys.G_Y = assemble_gram(mesh, sys.Y, Norm::Hdiv, deg);
    sys.G_R = assemble_gram(mesh, sys.R, Norm::Hcurl, deg);
  }
  sys.G_S = assemble_gram(mesh, sys.S, Norm::H1, deg);
  sys.C_SY = SparseMatrix(sys.P.transpose() * sys.G_Y);

  sys.off_R = 0;
  sys.off_S = sys.R.n_dofs;
  sys.off_Y = sys.R.n_dofs + sys.S.n_dofs;
  sys.total = sys.off_Y + sys.Y.n_dofs;

  std::vector<Triplet> trips;
  detail::append_block(trips, sys.A_RR, sys.off_R, sys.off_R, false);
  detail::append_block(trips, sys.A_SS, sys.off_S, sys.off_S, false);
  detail::append_block(trips, sys.C_RY, sys.off_R, sys.off_Y, true);
  detail::append_block(trips, sys.C_SY, sys.off_S, sys.off_Y, true);
  sys.M = from_triplets(sys.total, sys.total, trips);
  sys.sym_defect = symmetry_defect(sys.M);
  if (sys.sym_defect > 1e-12)
    throw std::logic_error("assemble_operator: monolithic matrix not symmetric");
  return sys;
}

inline Eigen::VectorXd assemble_scalar_load(const Mesh& mesh, const DofHandler& h,
                                            const std::function<double(const Vec3&)>& f,
                                            int degree) {
  QuadratureRule rule = quadrature_rule(degree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(h.n_dofs);
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(mesh, ci);
    const double scale = 6.0 * geom.volume;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisEval be = eval_basis(h.kind, geom, rule.points[q]);
      const double fw = f(barycentric_to_point(geom, rule.points[q])) * rule.weights[q] * scale;
      for (int i = 0; i < be.count; ++i) {
        int gi = h.dof(ci, i);
        if (gi >= 0) out[gi] += fw * be.value_s[i];
      }
    }
  }
  return out;
}

inline Eigen::VectorXd assemble_vector_load(const Mesh& mesh, const DofHandler& h,
                                            const std::function<Vec3(const Vec3&)>& f,
                                            int degree) {
  QuadratureRule rule = quadrature_rule(degree);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(h.n_dofs);
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    CellGeometry geom = cell_geometry(mesh, ci);
    const double scale = 6.0 * geom.volume;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      BasisEval be = eval_basis(h.kind, geom, rule.points[q]);
      const Vec3 fw = f(barycentric_to_point(geom, rule.points[q])) * (rule.weights[q] * scale);
      for (int i = 0; i < be.count; ++i) {
        int gi = h.dof(ci, i);
        if (gi >= 0) out[gi] += fw.dot(be.value_v[i]);
      }
    }
  }
  return out;
}

// Right-hand side [f1 against R; f2 against S; 0].
inline Eigen::VectorXd assemble_load(const ProblemSpec& spec, const Mesh& mesh,
                                     const BlockSystem& sys) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.total);
  if (spec.kind == ProblemKind::BiLaplacian) {
    if (spec.f1_scalar)
      rhs.segment(sys.off_R, sys.dim_R()) =
          assemble_scalar_load(mesh, sys.R, spec.f1_scalar, spec.quad_degree);
  } else {
    if (spec.f1_vector)
      rhs.segment(sys.off_R, sys.dim_R()) =
          assemble_vector_load(mesh, sys.R, spec.f1_vector, spec.quad_degree);
  }
  if (spec.f2)
    rhs.segment(sys.off_S, sys.dim_S()) =
        assemble_vector_load(mesh, sys.S, spec.f2, spec.quad_degree);
  return rhs;
}

}  // namespace ordfem
