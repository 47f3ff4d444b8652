#pragma once

#include <array>
#include <string>
#include <vector>

#include "ordfem/core.hpp"
#include "ordfem/mesh.hpp"

namespace ordfem {

enum class SpaceKind {
  P1,
  P1Vec,
  EdgeBubbleVec,
  FaceBubbleVec,
  P1VecPlusEdge,
  P1VecPlusFace,
  Nedelec0,
  RT0,
  P0
};

enum class Bc { None, HomogeneousEssential };

inline bool is_scalar_kind(SpaceKind k) { return k == SpaceKind::P1 || k == SpaceKind::P0; }

inline int local_basis_count(SpaceKind k) {
  switch (k) {
    case SpaceKind::P1: return 4;
    case SpaceKind::P1Vec: return 12;
    case SpaceKind::EdgeBubbleVec: return 6;
    case SpaceKind::FaceBubbleVec: return 4;
    case SpaceKind::P1VecPlusEdge: return 18;
    case SpaceKind::P1VecPlusFace: return 16;
    case SpaceKind::Nedelec0: return 6;
    case SpaceKind::RT0: return 4;
    case SpaceKind::P0: return 1;
  }
  throw std::invalid_argument("local_basis_count: unknown space kind");
}

inline std::string space_kind_name(SpaceKind k) {
  switch (k) {
    case SpaceKind::P1: return "P1";
    case SpaceKind::P1Vec: return "P1Vec";
    case SpaceKind::EdgeBubbleVec: return "EdgeBubbleVec";
    case SpaceKind::FaceBubbleVec: return "FaceBubbleVec";
    case SpaceKind::P1VecPlusEdge: return "P1VecPlusEdge";
    case SpaceKind::P1VecPlusFace: return "P1VecPlusFace";
    case SpaceKind::Nedelec0: return "Nedelec0";
    case SpaceKind::RT0: return "RT0";
    case SpaceKind::P0: return "P0";
  }
  return "?";
}

// Global dof management for one space. Local ordering per cell:
//   P1:            local i -> vertex i
//   P1Vec:         local 3*lv+c -> vertex lv, component c
//   EdgeBubbleVec: local l -> edge l (kEdgeVerts order)
//   FaceBubbleVec: local m -> face m (opposite vertex m)
//   Nedelec0/RT0:  same entity order as the bubbles
//   Plus kinds:    P1Vec block first, then the bubble block
// Globally, dofs are blocked by entity type and ranked in entity-id order;
// under homogeneous-essential bc, boundary entities own no dofs.
struct DofHandler {
  SpaceKind kind = SpaceKind::P1;
  Bc bc = Bc::None;
  int n_dofs = 0;
  int dofs_per_cell = 0;
  std::vector<int> cell_to_global;                       // -1 = eliminated
  std::vector<int> vertex_dofs, edge_dofs, face_dofs, cell_dofs;  // -1 = not owned
  int vertex_block_size = 0;
  int edge_block_offset = 0;  // composite kinds: start of the bubble block

  int dof(int cell, int local) const { return cell_to_global[cell * dofs_per_cell + local]; }
};

inline DofHandler make_space(const Mesh& mesh, SpaceKind kind, Bc bc) {
  if (!mesh.derived) throw std::invalid_argument("make_space: mesh entities not derived");
  DofHandler h;
  h.kind = kind;
  h.bc = bc;
  h.dofs_per_cell = local_basis_count(kind);
  const bool essential = bc == Bc::HomogeneousEssential;

  auto rank_entities = [&](const std::vector<std::uint8_t>& boundary, int count,
                           std::vector<int>& out) {
    out.assign(count, -1);
    int r = 0;
    for (int i = 0; i < count; ++i)
      if (!(essential && boundary[i])) out[i] = r++;
    return r;
  };

  const bool use_vertices = kind == SpaceKind::P1 || kind == SpaceKind::P1Vec ||
                            kind == SpaceKind::P1VecPlusEdge || kind == SpaceKind::P1VecPlusFace;
  const bool use_edges = kind == SpaceKind::EdgeBubbleVec || kind == SpaceKind::Nedelec0 ||
                         kind == SpaceKind::P1VecPlusEdge;
  const bool use_faces = kind == SpaceKind::FaceBubbleVec || kind == SpaceKind::RT0 ||
                         kind == SpaceKind::P1VecPlusFace;
  const bool use_cells = kind == SpaceKind::P0;

  int nv = 0, ne = 0, nf = 0, ncl = 0;
  if (use_vertices) {
    nv = rank_entities(mesh.vertex_boundary, mesh.n_vertices(), h.vertex_dofs);
    h.vertex_block_size = kind == SpaceKind::P1 ? 1 : 3;
  }
  if (use_edges) ne = rank_entities(mesh.edge_boundary, mesh.n_edges(), h.edge_dofs);
  if (use_faces) nf = rank_entities(mesh.face_boundary, mesh.n_faces(), h.face_dofs);
  if (use_cells) {
    h.cell_dofs.resize(mesh.n_cells());
    for (int i = 0; i < mesh.n_cells(); ++i) h.cell_dofs[i] = i;
    ncl = mesh.n_cells();
  }

  const int vertex_total = nv * h.vertex_block_size;
  h.edge_block_offset = vertex_total;
  if (use_edges)
    for (auto& d : h.edge_dofs)
      if (d >= 0) d += vertex_total;
  if (use_faces)
    for (auto& d : h.face_dofs)
      if (d >= 0) d += vertex_total;
  h.n_dofs = vertex_total + ne + nf + ncl;

  h.cell_to_global.assign(static_cast<std::size_t>(mesh.n_cells()) * h.dofs_per_cell, -1);
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    int* row = h.cell_to_global.data() + static_cast<std::size_t>(ci) * h.dofs_per_cell;
    int pos = 0;
    if (use_vertices && h.vertex_block_size == 1) {
      for (int lv = 0; lv < 4; ++lv) row[pos++] = h.vertex_dofs[mesh.cells[ci][lv]];
    } else if (use_vertices) {
      for (int lv = 0; lv < 4; ++lv) {
        int r = h.vertex_dofs[mesh.cells[ci][lv]];
        for (int c = 0; c < 3; ++c) row[pos++] = r < 0 ? -1 : 3 * r + c;
      }
    }
    if (use_edges)
      for (int l = 0; l < 6; ++l) row[pos++] = h.edge_dofs[mesh.cell_edges[ci][l]];
    if (use_faces)
      for (int m = 0; m < 4; ++m) row[pos++] = h.face_dofs[mesh.cell_faces[ci][m]];
    if (use_cells) row[pos++] = h.cell_dofs[ci];
  }
  return h;
}

// Values and derivatives of every local basis function at one point.
// For vector functions jac(r,c) = d(value_r)/dx_c; curl and div derive from it.
struct BasisEval {
  int count = 0;
  bool scalar = false;
  std::array<double, 18> value_s{};
  std::array<Vec3, 18> grad_s{};
  std::array<Vec3, 18> value_v{};
  std::array<Mat3, 18> jac_v{};

  Vec3 curl(int i) const {
    const Mat3& J = jac_v[i];
    return Vec3(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
  }
  double div(int i) const { return jac_v[i].trace(); }
};

namespace detail {

inline Mat3 outer(const Vec3& u, const Vec3& v) { return u * v.transpose(); }

// local edge endpoints ordered so the global id increases
inline std::array<int, 2> oriented_local_edge(const CellGeometry& g, int l) {
  int p = kEdgeVerts[l][0], q = kEdgeVerts[l][1];
  if (g.vertex_ids[p] > g.vertex_ids[q]) std::swap(p, q);
  return {p, q};
}

// local face vertices sorted by global id
inline std::array<int, 3> sorted_local_face(const CellGeometry& g, int m) {
  std::array<int, 3> f = {kFaceVerts[m][0], kFaceVerts[m][1], kFaceVerts[m][2]};
  std::sort(f.begin(), f.end(),
            [&](int a, int b) { return g.vertex_ids[a] < g.vertex_ids[b]; });
  return f;
}

inline void eval_p1vec(const CellGeometry& geom, const std::array<double, 4>& lam,
                       BasisEval& out, int& pos) {
  for (int lv = 0; lv < 4; ++lv)
    for (int c = 0; c < 3; ++c) {
      out.value_v[pos] = Vec3::Zero();
      out.value_v[pos][c] = lam[lv];
      out.jac_v[pos] = Mat3::Zero();
      out.jac_v[pos].row(c) = geom.grad_lambda[lv].transpose();
      ++pos;
    }
}

inline void eval_edge_bubbles(const CellGeometry& geom, const std::array<double, 4>& lam,
                              BasisEval& out, int& pos) {
  for (int l = 0; l < 6; ++l) {
    auto [p, q] = oriented_local_edge(geom, l);
    Vec3 t = geom.vertex_coords[q] - geom.vertex_coords[p];
    t /= t.norm();
    double b = lam[p] * lam[q];
    Vec3 gb = lam[q] * geom.grad_lambda[p] + lam[p] * geom.grad_lambda[q];
    out.value_v[pos] = b * t;
    out.jac_v[pos] = outer(t, gb);
    ++pos;
  }
}

inline void eval_face_bubbles(const CellGeometry& geom, const std::array<double, 4>& lam,
                              BasisEval& out, int& pos) {
  for (int m = 0; m < 4; ++m) {
    auto f = sorted_local_face(geom, m);
    Vec3 u = geom.vertex_coords[f[1]] - geom.vertex_coords[f[0]];
    Vec3 v = geom.vertex_coords[f[2]] - geom.vertex_coords[f[0]];
    Vec3 nrm = u.cross(v);
    nrm /= nrm.norm();
    double b = lam[f[0]] * lam[f[1]] * lam[f[2]];
    Vec3 gb = lam[f[1]] * lam[f[2]] * geom.grad_lambda[f[0]] +
              lam[f[0]] * lam[f[2]] * geom.grad_lambda[f[1]] +
              lam[f[0]] * lam[f[1]] * geom.grad_lambda[f[2]];
    out.value_v[pos] = b * nrm;
    out.jac_v[pos] = outer(nrm, gb);
    ++pos;
  }
}

}  // namespace detail

inline BasisEval eval_basis(SpaceKind kind, const CellGeometry& geom,
                            const std::array<double, 4>& lam) {
  double sum = 0.0;
  for (double l : lam) {
    if (l < -1e-12) throw std::invalid_argument("eval_basis: point outside simplex");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("eval_basis: barycentric coordinates must sum to 1");

  BasisEval out;
  out.count = local_basis_count(kind);
  out.scalar = is_scalar_kind(kind);
  int pos = 0;
  switch (kind) {
    case SpaceKind::P1:
      for (int lv = 0; lv < 4; ++lv) {
        out.value_s[lv] = lam[lv];
        out.grad_s[lv] = geom.grad_lambda[lv];
      }
      break;
    case SpaceKind::P0:
      out.value_s[0] = 1.0;
      out.grad_s[0] = Vec3::Zero();
      break;
    case SpaceKind::P1Vec:
      detail::eval_p1vec(geom, lam, out, pos);
      break;
    case SpaceKind::EdgeBubbleVec:
      detail::eval_edge_bubbles(geom, lam, out, pos);
      break;
    case SpaceKind::FaceBubbleVec:
      detail::eval_face_bubbles(geom, lam, out, pos);
      break;
    case SpaceKind::P1VecPlusEdge:
      detail::eval_p1vec(geom, lam, out, pos);
      detail::eval_edge_bubbles(geom, lam, out, pos);
      break;
    case SpaceKind::P1VecPlusFace:
      detail::eval_p1vec(geom, lam, out, pos);
      detail::eval_face_bubbles(geom, lam, out, pos);
      break;
    case SpaceKind::Nedelec0:
      for (int l = 0; l < 6; ++l) {
        auto [p, q] = detail::oriented_local_edge(geom, l);
        const Vec3& gp = geom.grad_lambda[p];
        const Vec3& gq = geom.grad_lambda[q];
        out.value_v[l] = lam[p] * gq - lam[q] * gp;
        out.jac_v[l] = detail::outer(gq, gp) - detail::outer(gp, gq);
      }
      break;
    case SpaceKind::RT0:
      for (int m = 0; m < 4; ++m) {
        auto f = detail::sorted_local_face(geom, m);
        const Vec3& gp = geom.grad_lambda[f[0]];
        const Vec3& gq = geom.grad_lambda[f[1]];
        const Vec3& gr = geom.grad_lambda[f[2]];
        Vec3 cqr = gq.cross(gr), crp = gr.cross(gp), cpq = gp.cross(gq);
        out.value_v[m] = 2.0 * (lam[f[0]] * cqr + lam[f[1]] * crp + lam[f[2]] * cpq);
        out.jac_v[m] =
            2.0 * (detail::outer(cqr, gp) + detail::outer(crp, gq) + detail::outer(cpq, gr));
      }
      break;
  }
  return out;
}

}  // namespace ordfem
