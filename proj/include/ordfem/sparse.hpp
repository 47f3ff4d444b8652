#pragma once

#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "ordfem/core.hpp"

namespace ordfem {

// Compressed sparse row storage; rows are the outer dimension, column ids are
// sorted within each row and duplicates are summed at construction.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

inline SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

inline std::span<const SparseMatrix::StorageIndex> csr_row_offsets(const SparseMatrix& m) {
  return {m.outerIndexPtr(), static_cast<std::size_t>(m.rows() + 1)};
}

inline std::span<const SparseMatrix::StorageIndex> csr_column_ids(const SparseMatrix& m) {
  return {m.innerIndexPtr(), static_cast<std::size_t>(m.nonZeros())};
}

inline std::span<const double> csr_values(const SparseMatrix& m) {
  return {m.valuePtr(), static_cast<std::size_t>(m.nonZeros())};
}

// max |M - M^T| over max |M| (0 for an empty matrix)
inline double symmetry_defect(const SparseMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("symmetry_defect: matrix not square");
  SparseMatrix t = SparseMatrix(m.transpose());
  SparseMatrix d = m - t;
  double maxabs = 0.0, maxdiff = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      maxabs = std::max(maxabs, std::abs(it.value()));
  for (int k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it)
      maxdiff = std::max(maxdiff, std::abs(it.value()));
  if (maxabs == 0.0) return 0.0;
  return maxdiff / maxabs;
}

// MatrixMarket coordinate format, 1-based indices. With symmetric=true only
// the lower triangle is emitted (caller asserts symmetry).
inline void write_matrix_market(std::ostream& os, const SparseMatrix& m, bool symmetric) {
  os << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general")
     << '\n';
  std::size_t nnz = 0;
  if (symmetric) {
    for (int r = 0; r < m.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(m, r); it; ++it)
        if (it.col() <= it.row()) ++nnz;
  } else {
    nnz = static_cast<std::size_t>(m.nonZeros());
  }
  os << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (symmetric && it.col() > it.row()) continue;
      os << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << fmt_double(it.value()) << '\n';
    }
}

}  // namespace ordfem
