#pragma once

#include <map>
#include <vector>

#include "ordfem/quadrature.hpp"
#include "ordfem/sparse.hpp"
#include "ordfem/spaces.hpp"

namespace ordfem {

struct FieldCoeffs {
  SpaceKind kind = SpaceKind::P1;
  Eigen::VectorXd coeffs;
};

struct FieldEval {
  bool scalar = false;
  double s = 0.0;
  Vec3 grad = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Mat3 jac = Mat3::Zero();

  Vec3 curl() const { return Vec3(jac(2, 1) - jac(1, 2), jac(0, 2) - jac(2, 0), jac(1, 0) - jac(0, 1)); }
  double div() const { return jac.trace(); }
};

inline FieldEval eval_field(const DofHandler& h, const Eigen::VectorXd& coeffs, int cell,
                            const CellGeometry& geom, const std::array<double, 4>& lam) {
  if (coeffs.size() != h.n_dofs) throw std::invalid_argument("eval_field: coefficient size mismatch");
  BasisEval be = eval_basis(h.kind, geom, lam);
  FieldEval out;
  out.scalar = be.scalar;
  for (int i = 0; i < be.count; ++i) {
    int d = h.dof(cell, i);
    if (d < 0) continue;
    double c = coeffs[d];
    if (be.scalar) {
      out.s += c * be.value_s[i];
      out.grad += c * be.grad_s[i];
    } else {
      out.v += c * be.value_v[i];
      out.jac += c * be.jac_v[i];
    }
  }
  return out;
}

inline int find_edge(const Mesh& mesh, int a, int b) {
  if (a > b) std::swap(a, b);
  std::array<int, 2> key = {a, b};
  auto it = std::lower_bound(mesh.edges.begin(), mesh.edges.end(), key);
  if (it == mesh.edges.end() || *it != key) throw TopologyError("find_edge: no such edge");
  return static_cast<int>(it - mesh.edges.begin());
}

inline int find_face(const Mesh& mesh, std::array<int, 3> f) {
  std::sort(f.begin(), f.end());
  auto it = std::lower_bound(mesh.faces.begin(), mesh.faces.end(), f);
  if (it == mesh.faces.end() || *it != f) throw TopologyError("find_face: no such face");
  return static_cast<int>(it - mesh.faces.begin());
}

namespace detail {

inline int local_vertex_index(const Mesh& mesh, int cell, int gid) {
  for (int lv = 0; lv < 4; ++lv)
    if (mesh.cells[cell][lv] == gid) return lv;
  throw TopologyError("local_vertex_index: vertex not in cell");
}

// Per-local-basis-function tangential edge moments, computed within one cell.
// Moments are well defined for any tangentially continuous source.
inline void edge_moment_row(const Mesh& mesh, const DofHandler& src, int edge_id, int cell,
                            std::map<int, double>& row) {
  const auto& e = mesh.edges[edge_id];
  const Vec3 t = unit_tangent(mesh, e[0], e[1]);
  const double len = edge_length(mesh, edge_id);
  const int la = local_vertex_index(mesh, cell, e[0]);
  const int lb = local_vertex_index(mesh, cell, e[1]);
  CellGeometry geom = cell_geometry(mesh, cell);
  Gauss1D rule = edge_moment_rule();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    std::array<double, 4> lam = {0, 0, 0, 0};
    lam[la] = 1.0 - rule.points[q];
    lam[lb] = rule.points[q];
    BasisEval be = eval_basis(src.kind, geom, lam);
    for (int j = 0; j < be.count; ++j) {
      int d = src.dof(cell, j);
      if (d < 0) continue;
      double contrib = rule.weights[q] * len * be.value_v[j].dot(t);
      if (contrib != 0.0) row[d] += contrib;
    }
  }
}

// Per-local-basis-function normal face moments within one cell.
inline void face_moment_row(const Mesh& mesh, const DofHandler& src, int face_id, int cell,
                            std::map<int, double>& row) {
  const auto& f = mesh.faces[face_id];
  const Vec3 nrm = face_unit_normal(mesh, f[0], f[1], f[2]);
  const double area = face_area(mesh, face_id);
  const int l0 = local_vertex_index(mesh, cell, f[0]);
  const int l1 = local_vertex_index(mesh, cell, f[1]);
  const int l2 = local_vertex_index(mesh, cell, f[2]);
  CellGeometry geom = cell_geometry(mesh, cell);
  TriangleRule rule = triangle_moment_rule();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    std::array<double, 4> lam = {0, 0, 0, 0};
    lam[l0] = rule.points[q][0];
    lam[l1] = rule.points[q][1];
    lam[l2] = rule.points[q][2];
    BasisEval be = eval_basis(src.kind, geom, lam);
    for (int j = 0; j < be.count; ++j) {
      int d = src.dof(cell, j);
      if (d < 0) continue;
      double contrib = rule.weights[q] * area * be.value_v[j].dot(nrm);
      if (contrib != 0.0) row[d] += contrib;
    }
  }
}

inline void check_row_agreement(const std::map<int, double>& r0, const std::map<int, double>& r1,
                                const char* what) {
  double scale = 1.0;
  for (const auto& [d, v] : r0) scale = std::max(scale, std::abs(v));
  auto get = [](const std::map<int, double>& r, int d) {
    auto it = r.find(d);
    return it == r.end() ? 0.0 : it->second;
  };
  for (const auto& [d, v] : r0)
    if (std::abs(v - get(r1, d)) > 1e-12 * scale) throw std::invalid_argument(what);
  for (const auto& [d, v] : r1)
    if (std::abs(v - get(r0, d)) > 1e-12 * scale) throw std::invalid_argument(what);
}

}  // namespace detail

// Sparse matrix of edge tangential moments: row = Nedelec dof of an owned edge,
// column = source dof. Each moment is computed from one incident cell and
// cross-checked against the other (conformity of the source space).
inline SparseMatrix interpolation_matrix_nedelec(const Mesh& mesh, const DofHandler& src,
                                                 const DofHandler& ned) {
  if (ned.kind != SpaceKind::Nedelec0 || is_scalar_kind(src.kind))
    throw std::invalid_argument("interpolation_matrix_nedelec: bad space kinds");
  std::vector<Triplet> trips;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    int row = ned.edge_dofs[e];
    if (row < 0) continue;
    int c0 = mesh.edge_cell_ids[mesh.edge_cell_offsets[e]];
    std::map<int, double> r0;
    detail::edge_moment_row(mesh, src, e, c0, r0);
    if (mesh.edge_cell_offsets[e + 1] - mesh.edge_cell_offsets[e] > 1) {
      int c1 = mesh.edge_cell_ids[mesh.edge_cell_offsets[e] + 1];
      std::map<int, double> r1;
      detail::edge_moment_row(mesh, src, e, c1, r1);
      detail::check_row_agreement(r0, r1,
                                  "interpolation_matrix_nedelec: source not tangentially continuous");
    }
    for (const auto& [d, v] : r0) trips.emplace_back(row, d, v);
  }
  return from_triplets(ned.n_dofs, src.n_dofs, trips);
}

inline SparseMatrix interpolation_matrix_rt(const Mesh& mesh, const DofHandler& src,
                                            const DofHandler& rt) {
  if (rt.kind != SpaceKind::RT0 || is_scalar_kind(src.kind))
    throw std::invalid_argument("interpolation_matrix_rt: bad space kinds");
  std::vector<Triplet> trips;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    int row = rt.face_dofs[f];
    if (row < 0) continue;
    int c0 = mesh.face_cells[f][0];
    std::map<int, double> r0;
    detail::face_moment_row(mesh, src, f, c0, r0);
    if (mesh.face_cells[f][1] >= 0) {
      std::map<int, double> r1;
      detail::face_moment_row(mesh, src, f, mesh.face_cells[f][1], r1);
      detail::check_row_agreement(r0, r1,
                                  "interpolation_matrix_rt: source not normally continuous");
    }
    for (const auto& [d, v] : r0) trips.emplace_back(row, d, v);
  }
  return from_triplets(rt.n_dofs, src.n_dofs, trips);
}

inline FieldCoeffs interp_nedelec(const Mesh& mesh, const DofHandler& src,
                                  const FieldCoeffs& field, const DofHandler& ned) {
  if (field.kind != src.kind || field.coeffs.size() != src.n_dofs)
    throw std::invalid_argument("interp_nedelec: field does not match source handler");
  SparseMatrix P = interpolation_matrix_nedelec(mesh, src, ned);
  return {SpaceKind::Nedelec0, P * field.coeffs};
}

inline FieldCoeffs interp_rt(const Mesh& mesh, const DofHandler& src, const FieldCoeffs& field,
                             const DofHandler& rt) {
  if (field.kind != src.kind || field.coeffs.size() != src.n_dofs)
    throw std::invalid_argument("interp_rt: field does not match source handler");
  SparseMatrix P = interpolation_matrix_rt(mesh, src, rt);
  return {SpaceKind::RT0, P * field.coeffs};
}

// Discrete gradient: P1 coefficients -> Nedelec edge coefficients
// (moment of grad p over edge (a,b) is p(b) - p(a)).
inline SparseMatrix gradient_incidence(const Mesh& mesh, const DofHandler& p1,
                                       const DofHandler& ned) {
  if (p1.kind != SpaceKind::P1 || ned.kind != SpaceKind::Nedelec0)
    throw std::invalid_argument("gradient_incidence: bad space kinds");
  std::vector<Triplet> trips;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    int row = ned.edge_dofs[e];
    if (row < 0) continue;
    int da = p1.vertex_dofs[mesh.edges[e][0]];
    int db = p1.vertex_dofs[mesh.edges[e][1]];
    if (da >= 0) trips.emplace_back(row, da, -1.0);
    if (db >= 0) trips.emplace_back(row, db, 1.0);
  }
  return from_triplets(ned.n_dofs, p1.n_dofs, trips);
}

// Discrete curl: Nedelec edge coefficients -> RT face coefficients
// (flux of curl over face (a<b<c) is the oriented boundary circulation).
inline SparseMatrix curl_incidence(const Mesh& mesh, const DofHandler& ned,
                                   const DofHandler& rt) {
  if (ned.kind != SpaceKind::Nedelec0 || rt.kind != SpaceKind::RT0)
    throw std::invalid_argument("curl_incidence: bad space kinds");
  std::vector<Triplet> trips;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    int row = rt.face_dofs[f];
    if (row < 0) continue;
    const auto& fv = mesh.faces[f];
    const int eab = find_edge(mesh, fv[0], fv[1]);
    const int ebc = find_edge(mesh, fv[1], fv[2]);
    const int eac = find_edge(mesh, fv[0], fv[2]);
    if (ned.edge_dofs[eab] >= 0) trips.emplace_back(row, ned.edge_dofs[eab], 1.0);
    if (ned.edge_dofs[ebc] >= 0) trips.emplace_back(row, ned.edge_dofs[ebc], 1.0);
    if (ned.edge_dofs[eac] >= 0) trips.emplace_back(row, ned.edge_dofs[eac], -1.0);
  }
  return from_triplets(rt.n_dofs, ned.n_dofs, trips);
}

// Discrete divergence: RT face coefficients -> P0 cell values
// (div v restricted to K equals the net outward flux over volume).
inline SparseMatrix div_incidence(const Mesh& mesh, const DofHandler& rt,
                                  const DofHandler& p0) {
  if (rt.kind != SpaceKind::RT0 || p0.kind != SpaceKind::P0)
    throw std::invalid_argument("div_incidence: bad space kinds");
  std::vector<Triplet> trips;
  for (int ci = 0; ci < mesh.n_cells(); ++ci) {
    int row = p0.cell_dofs[ci];
    double vol = cell_geometry(mesh, ci).volume;
    for (int m = 0; m < 4; ++m) {
      int col = rt.face_dofs[mesh.cell_faces[ci][m]];
      if (col < 0) continue;
      trips.emplace_back(row, col, mesh.cell_face_signs[ci][m] / vol);
    }
  }
  return from_triplets(p0.n_dofs, rt.n_dofs, trips);
}

}  // namespace ordfem
