#include "aggbuf/tensor/kernels.hpp"

#include <omp.h>

#include <cstdint>

#include "aggbuf/common/error.hpp"

namespace aggbuf::kernels {
namespace {

void check_inner(std::size_t lhs, std::size_t rhs, const char* op, const Matrix& a, const Matrix& b) {
  if (lhs != rhs) {
    throw DimensionError(std::string(op) + ": inner dimension mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

// Small products are not worth a parallel region.
constexpr std::size_t kParallelWork = 1 << 14;

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  const auto n = static_cast<std::int64_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t width = b.cols();
  const bool par = a.rows() * inner * width >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < n; ++i) {
    double* out = c.row(static_cast<std::size_t>(i)).data();
    const double* ar = a.row(static_cast<std::size_t>(i)).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = ar[k];
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < width; ++j) out[j] += av * br[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn", a, b);
  return matmul(a.transposed(), b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt", a, b);
  return matmul(a, b.transposed());
}

Matrix spmm(const CsrMatrix& s, const Matrix& d) {
  if (s.cols() != d.rows()) {
    throw DimensionError("spmm: sparse " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                         " vs dense " + shape_string(d));
  }
  Matrix out(s.rows(), d.cols());
  const auto n = static_cast<std::int64_t>(s.rows());
  const std::size_t width = d.cols();
  const auto offsets = s.offsets();
  const auto indices = s.indices();
  const auto values = s.values();
  const bool par = s.nnz() * width >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < n; ++i) {
    double* o = out.row(static_cast<std::size_t>(i)).data();
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      const double v = values[k];
      const double* dr = d.row(indices[k]).data();
      for (std::size_t j = 0; j < width; ++j) o[j] += v * dr[j];
    }
  }
  return out;
}

void set_max_threads(int n) {
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
}

namespace reference {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Matrix spmm(const CsrMatrix& s, const Matrix& d) {
  if (s.cols() != d.rows()) throw DimensionError("spmm: shape mismatch");
  Matrix out(s.rows(), d.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto idx = s.row_indices(i);
    const auto val = s.row_values(i);
    for (std::size_t j = 0; j < d.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) acc += val[k] * d(idx[k], j);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace reference
}  // namespace aggbuf::kernels
