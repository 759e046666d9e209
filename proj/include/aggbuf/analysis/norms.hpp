#pragma once

#include <cstddef>
#include <span>

#include "aggbuf/tensor/csr.hpp"
#include "aggbuf/tensor/tape.hpp"

namespace aggbuf {

double lipschitz_constant(ActivationKind kind);

// Power iteration on M^T M. Stops when two successive estimates differ by
// less than tol * estimate; ConvergenceError carries the last estimate.
double spectral_norm(const Matrix& m, double tol = 1e-13, std::size_t max_iter = 100000);

// Largest singular value from a dense SVD.
double dense_spectral_norm(const Matrix& m);
double dense_spectral_norm(const CsrMatrix& m);

// L_sigma^k * prod ||W_i||_2 over the k given weights.
double mlp_cascade_bound(std::span<const Matrix> weights, ActivationKind kind);

}  // namespace aggbuf
