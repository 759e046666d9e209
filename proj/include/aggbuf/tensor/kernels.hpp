#pragma once

#include "aggbuf/tensor/csr.hpp"
#include "aggbuf/tensor/matrix.hpp"

// Dense and sparse-dense products.
//
// `kernels::` is the OpenMP version used by the library; every output row is
// owned by exactly one thread and accumulated in ascending inner index order,
// so results are bitwise identical to the serial `kernels::reference::`
// versions for any thread count.
namespace aggbuf::kernels {

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix spmm(const CsrMatrix& s, const Matrix& d);    // s * d

namespace reference {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const CsrMatrix& s, const Matrix& d);

}  // namespace reference

// Caps the OpenMP team size; 0 restores the runtime default.
void set_max_threads(int n);

}  // namespace aggbuf::kernels
