#include "aggbuf/tensor/csr.hpp"

#include <algorithm>

#include "aggbuf/common/error.hpp"

namespace aggbuf {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                     std::vector<std::uint32_t> indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  validate();
}

void CsrMatrix::validate() const {
  if (offsets_.size() != rows_ + 1) throw DimensionError("csr: offsets length != rows + 1");
  if (offsets_.front() != 0 || offsets_.back() != indices_.size())
    throw DimensionError("csr: offsets do not span the index list");
  if (indices_.size() != values_.size()) throw DimensionError("csr: indices/values length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) {
    if (offsets_[r] > offsets_[r + 1]) throw DimensionError("csr: offsets not monotone");
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (indices_[k] >= cols_) throw DimensionError("csr: column index out of bounds");
      if (k > offsets_[r] && indices_[k] <= indices_[k - 1])
        throw DimensionError("csr: column indices not strictly increasing");
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t) {
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  indices.reserve(t.size());
  values.reserve(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k].row >= rows || t[k].col >= cols) throw DimensionError("csr: triplet out of bounds");
    if (!indices.empty() && k > 0 && t[k].row == t[k - 1].row && t[k].col == t[k - 1].col) {
      values.back() += t[k].value;
      continue;
    }
    indices.push_back(t[k].col);
    values.push_back(t[k].value);
    ++offsets[t[k].row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return CsrMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
}

CsrMatrix CsrMatrix::from_dense(const Matrix& m) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0)
        t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), m(i, j)});
  return from_triplets(m.rows(), m.cols(), std::move(t));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::uint32_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    indices[i] = static_cast<std::uint32_t>(i);
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(indices), std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<std::size_t> offsets(cols_ + 1, 0);
  for (auto c : indices_) ++offsets[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) offsets[c + 1] += offsets[c];
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<std::uint32_t> indices(nnz());
  std::vector<double> values(nnz());
  // Rows are visited in increasing order, so each transposed row stays sorted.
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      const std::size_t dst = cursor[indices_[k]]++;
      indices[dst] = static_cast<std::uint32_t>(r);
      values[dst] = values_[k];
    }
  }
  return CsrMatrix(cols_, rows_, std::move(offsets), std::move(indices), std::move(values));
}

Matrix CsrMatrix::to_dense() const {
  Matrix m(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) m(r, indices_[k]) = values_[k];
  return m;
}

}  // namespace aggbuf
