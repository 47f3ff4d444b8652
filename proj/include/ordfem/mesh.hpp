#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "ordfem/core.hpp"

namespace ordfem {

// Local entity numbering on a tetrahedron (vertices 0..3):
//   edge l connects EDGE_VERTS[l], faces are opposite their index
//   (face m is the triangle omitting vertex m).
inline constexpr int kEdgeVerts[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
inline constexpr int kFaceVerts[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

// The six axis permutations of the Kuhn split, in the fixed order used for
// cell ids; kKuhnNegative marks odd permutations (their path tetrahedron has
// negative volume and gets its last two vertices swapped).
inline constexpr int kKuhnPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
inline constexpr bool kKuhnNegative[6] = {false, true, true, false, false, true};

// Tetrahedral complex with globally oriented entities.
//
// Orientation conventions (global, stateless):
//   - edge tangent runs from the lower to the higher global vertex id;
//   - face normal is the right-hand normal of the sorted vertex triple.
// Per-cell signs record how the cell relates to those global orientations:
//   - cell_edge_signs: +1 iff the local edge (as listed in kEdgeVerts) runs in
//     the direction of the global tangent;
//   - cell_face_signs: +1 iff the global face normal points out of the cell.
struct Mesh {
  int n = 0;  // structured grid parameter; 0 for hand-built meshes
  std::vector<Point3> vertices;
  std::vector<std::array<int, 4>> cells;

  // filled by derive_entities
  std::vector<std::array<int, 2>> edges;  // sorted vertex pairs, lexicographic order
  std::vector<std::array<int, 3>> faces;  // sorted vertex triples, lexicographic order
  std::vector<std::array<int, 6>> cell_edges;
  std::vector<std::array<std::int8_t, 6>> cell_edge_signs;
  std::vector<std::array<int, 4>> cell_faces;
  std::vector<std::array<std::int8_t, 4>> cell_face_signs;
  std::vector<std::array<int, 2>> face_cells;  // second entry -1 on boundary
  std::vector<int> edge_cell_offsets, edge_cell_ids;
  std::vector<std::uint8_t> vertex_boundary, edge_boundary, face_boundary;
  bool derived = false;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
};

struct CellGeometry {
  double volume = 0.0;
  std::array<Vec3, 4> grad_lambda;
  std::array<Point3, 4> vertex_coords;
  std::array<int, 4> vertex_ids;
};

inline Vec3 unit_tangent(const Mesh& mesh, int a, int b) {
  // a, b are global vertex ids with a < b
  Vec3 t = mesh.vertices[b] - mesh.vertices[a];
  return t / t.norm();
}

inline Vec3 face_unit_normal(const Mesh& mesh, int a, int b, int c) {
  // a < b < c; right-hand rule on the sorted triple
  Vec3 u = mesh.vertices[b] - mesh.vertices[a];
  Vec3 v = mesh.vertices[c] - mesh.vertices[a];
  Vec3 n = u.cross(v);
  return n / n.norm();
}

inline double edge_length(const Mesh& mesh, int edge_id) {
  const auto& e = mesh.edges[edge_id];
  return (mesh.vertices[e[1]] - mesh.vertices[e[0]]).norm();
}

inline double face_area(const Mesh& mesh, int face_id) {
  const auto& f = mesh.faces[face_id];
  Vec3 u = mesh.vertices[f[1]] - mesh.vertices[f[0]];
  Vec3 v = mesh.vertices[f[2]] - mesh.vertices[f[0]];
  return 0.5 * u.cross(v).norm();
}

inline CellGeometry cell_geometry(const Mesh& mesh, int cell_id) {
  if (cell_id < 0 || cell_id >= mesh.n_cells())
    throw std::invalid_argument("cell_geometry: cell id out of range");
  const auto& c = mesh.cells[cell_id];
  CellGeometry g;
  for (int i = 0; i < 4; ++i) {
    g.vertex_ids[i] = c[i];
    g.vertex_coords[i] = mesh.vertices[c[i]];
  }
  Mat3 E;
  for (int i = 0; i < 3; ++i) E.col(i) = g.vertex_coords[i + 1] - g.vertex_coords[0];
  double det = E.determinant();
  if (!(det > 1e-14)) throw GeometryError("cell_geometry: degenerate cell");
  g.volume = det / 6.0;
  Mat3 Einv = E.inverse();
  g.grad_lambda[0].setZero();
  for (int i = 1; i < 4; ++i) {
    g.grad_lambda[i] = Einv.row(i - 1).transpose();
    g.grad_lambda[0] -= g.grad_lambda[i];
  }
  return g;
}

inline Point3 barycentric_to_point(const CellGeometry& g, const std::array<double, 4>& lam) {
  Point3 x = Point3::Zero();
  for (int i = 0; i < 4; ++i) x += lam[i] * g.vertex_coords[i];
  return x;
}

inline double cell_diameter(const Mesh& mesh, int cell_id) {
  const auto& c = mesh.cells[cell_id];
  double h = 0.0;
  for (const auto& ev : kEdgeVerts)
    h = std::max(h, (mesh.vertices[c[ev[0]]] - mesh.vertices[c[ev[1]]]).norm());
  return h;
}

inline Mesh derive_entities(Mesh mesh) {
  const int nc = mesh.n_cells();
  if (nc == 0 || mesh.vertices.empty())
    throw std::invalid_argument("derive_entities: mesh has no cells or vertices");

  auto edge_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };

  std::vector<std::uint64_t> ekeys;
  std::vector<std::array<int, 3>> fkeys;
  ekeys.reserve(6 * nc);
  fkeys.reserve(4 * nc);
  for (const auto& c : mesh.cells) {
    for (const auto& ev : kEdgeVerts) ekeys.push_back(edge_key(c[ev[0]], c[ev[1]]));
    for (const auto& fv : kFaceVerts) {
      std::array<int, 3> f = {c[fv[0]], c[fv[1]], c[fv[2]]};
      std::sort(f.begin(), f.end());
      fkeys.push_back(f);
    }
  }
  std::sort(ekeys.begin(), ekeys.end());
  ekeys.erase(std::unique(ekeys.begin(), ekeys.end()), ekeys.end());
  std::sort(fkeys.begin(), fkeys.end());
  fkeys.erase(std::unique(fkeys.begin(), fkeys.end()), fkeys.end());

  mesh.edges.clear();
  mesh.edges.reserve(ekeys.size());
  for (auto k : ekeys)
    mesh.edges.push_back({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)});
  mesh.faces = fkeys;

  auto edge_index = [&](int a, int b) {
    auto it = std::lower_bound(ekeys.begin(), ekeys.end(), edge_key(a, b));
    return static_cast<int>(it - ekeys.begin());
  };
  auto face_index = [&](std::array<int, 3> f) {
    std::sort(f.begin(), f.end());
    auto it = std::lower_bound(fkeys.begin(), fkeys.end(), f);
    return static_cast<int>(it - fkeys.begin());
  };

  const int ne = static_cast<int>(mesh.edges.size());
  const int nf = static_cast<int>(mesh.faces.size());
  mesh.cell_edges.assign(nc, {});
  mesh.cell_edge_signs.assign(nc, {});
  mesh.cell_faces.assign(nc, {});
  mesh.cell_face_signs.assign(nc, {});
  mesh.face_cells.assign(nf, {-1, -1});

  for (int ci = 0; ci < nc; ++ci) {
    const auto& c = mesh.cells[ci];
    for (int l = 0; l < 6; ++l) {
      int p = c[kEdgeVerts[l][0]], q = c[kEdgeVerts[l][1]];
      mesh.cell_edges[ci][l] = edge_index(p, q);
      mesh.cell_edge_signs[ci][l] = static_cast<std::int8_t>(p < q ? 1 : -1);
    }
    for (int m = 0; m < 4; ++m) {
      std::array<int, 3> f = {c[kFaceVerts[m][0]], c[kFaceVerts[m][1]], c[kFaceVerts[m][2]]};
      int fi = face_index(f);
      mesh.cell_faces[ci][m] = fi;
      auto& fc = mesh.face_cells[fi];
      if (fc[0] < 0)
        fc[0] = ci;
      else if (fc[1] < 0)
        fc[1] = ci;
      else
        throw TopologyError("derive_entities: face shared by more than two cells");
      // sign: does the global (sorted-triple right-hand) normal point out of this cell?
      const auto& sf = mesh.faces[fi];
      Vec3 nrm = face_unit_normal(mesh, sf[0], sf[1], sf[2]);
      Point3 fc3 = (mesh.vertices[sf[0]] + mesh.vertices[sf[1]] + mesh.vertices[sf[2]]) / 3.0;
      Point3 opp = mesh.vertices[c[m]];
      mesh.cell_face_signs[ci][m] = static_cast<std::int8_t>(nrm.dot(fc3 - opp) > 0 ? 1 : -1);
    }
  }

  mesh.face_boundary.assign(nf, 0);
  for (int fi = 0; fi < nf; ++fi) mesh.face_boundary[fi] = mesh.face_cells[fi][1] < 0 ? 1 : 0;

  mesh.vertex_boundary.assign(mesh.n_vertices(), 0);
  mesh.edge_boundary.assign(ne, 0);
  for (int fi = 0; fi < nf; ++fi) {
    if (!mesh.face_boundary[fi]) continue;
    const auto& f = mesh.faces[fi];
    for (int v : f) mesh.vertex_boundary[v] = 1;
    mesh.edge_boundary[edge_index(f[0], f[1])] = 1;
    mesh.edge_boundary[edge_index(f[0], f[2])] = 1;
    mesh.edge_boundary[edge_index(f[1], f[2])] = 1;
  }

  // edge -> incident cells adjacency (CSR)
  mesh.edge_cell_offsets.assign(ne + 1, 0);
  for (int ci = 0; ci < nc; ++ci)
    for (int l = 0; l < 6; ++l) ++mesh.edge_cell_offsets[mesh.cell_edges[ci][l] + 1];
  for (int e = 0; e < ne; ++e) mesh.edge_cell_offsets[e + 1] += mesh.edge_cell_offsets[e];
  mesh.edge_cell_ids.assign(mesh.edge_cell_offsets.back(), -1);
  std::vector<int> cursor(mesh.edge_cell_offsets.begin(), mesh.edge_cell_offsets.end() - 1);
  for (int ci = 0; ci < nc; ++ci)
    for (int l = 0; l < 6; ++l) mesh.edge_cell_ids[cursor[mesh.cell_edges[ci][l]]++] = ci;

  mesh.derived = true;
  return mesh;
}

inline Mesh build_structured_cube(int n) {
  if (n < 1) throw std::invalid_argument("build_structured_cube: n must be >= 1");
  Mesh mesh;
  mesh.n = n;
  const int nv1 = n + 1;
  mesh.vertices.reserve(static_cast<std::size_t>(nv1) * nv1 * nv1);
  for (int k = 0; k < nv1; ++k)
    for (int j = 0; j < nv1; ++j)
      for (int i = 0; i < nv1; ++i)
        mesh.vertices.push_back(Point3(double(i) / n, double(j) / n, double(k) / n));

  auto vid = [&](int i, int j, int k) { return i + nv1 * (j + nv1 * k); };

  mesh.cells.reserve(static_cast<std::size_t>(6) * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < 6; ++p) {
          std::array<int, 3> at = {i, j, k};
          std::array<int, 4> cell;
          cell[0] = vid(at[0], at[1], at[2]);
          for (int s = 0; s < 3; ++s) {
            at[kKuhnPerms[p][s]] += 1;
            cell[s + 1] = vid(at[0], at[1], at[2]);
          }
          if (kKuhnNegative[p]) std::swap(cell[2], cell[3]);
          mesh.cells.push_back(cell);
        }
  return derive_entities(std::move(mesh));
}

struct LocatedPoint {
  int cell = -1;
  std::array<double, 4> bary = {0, 0, 0, 0};
};

// Locate a point of [0,1]^3 in a structured mesh; exact up to floating-point
// ties on cell interfaces, where any containing cell is a correct answer.
inline LocatedPoint locate_point(const Mesh& mesh, const Point3& x) {
  if (mesh.n < 1) throw std::invalid_argument("locate_point: mesh is not structured");
  const int n = mesh.n;
  std::array<int, 3> sub;
  std::array<double, 3> xi;
  for (int d = 0; d < 3; ++d) {
    double s = std::min(std::max(x[d], 0.0), 1.0) * n;
    sub[d] = std::min(static_cast<int>(s), n - 1);
    xi[d] = s - sub[d];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return xi[a] > xi[b]; });
  int perm = 0;
  for (; perm < 6; ++perm)
    if (kKuhnPerms[perm][0] == order[0] && kKuhnPerms[perm][1] == order[1] &&
        kKuhnPerms[perm][2] == order[2])
      break;
  LocatedPoint loc;
  loc.cell = 6 * (sub[0] + n * (sub[1] + n * sub[2])) + perm;
  loc.bary[0] = 1.0 - xi[order[0]];
  loc.bary[1] = xi[order[0]] - xi[order[1]];
  loc.bary[2] = xi[order[1]] - xi[order[2]];
  loc.bary[3] = xi[order[2]];
  if (kKuhnNegative[perm]) std::swap(loc.bary[2], loc.bary[3]);
  return loc;
}

inline void write_mesh_dump(std::ostream& os, const Mesh& mesh) {
  os << "tetmesh " << mesh.n_vertices() << ' ' << mesh.n_edges() << ' ' << mesh.n_faces()
     << ' ' << mesh.n_cells() << '\n';
  for (const auto& v : mesh.vertices)
    os << fmt_double(v[0]) << ' ' << fmt_double(v[1]) << ' ' << fmt_double(v[2]) << '\n';
  for (const auto& e : mesh.edges) os << e[0] << ' ' << e[1] << '\n';
  for (const auto& f : mesh.faces) os << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  for (const auto& c : mesh.cells) os << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
}

}  // namespace ordfem
