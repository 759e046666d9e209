#include "aggbuf/analysis/norms.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "aggbuf/common/error.hpp"
#include "aggbuf/tensor/kernels.hpp"

namespace aggbuf {

double lipschitz_constant(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::ReLU: return 1.0;
    case ActivationKind::Sigmoid: return 0.25;
    case ActivationKind::GELU: return 1.13;
    case ActivationKind::Tanh: return 1.0;
    case ActivationKind::ELU: return 1.0;
  }
  throw ContractError("unsupported activation");
}

double spectral_norm(const Matrix& m, double tol, std::size_t max_iter) {
  if (!m.all_finite()) throw NumericError("spectral_norm: non-finite entries");
  if (m.empty()) return 0.0;
  const std::size_t n = m.cols();
  // Fixed, non-symmetric start so no singular direction is missed by construction.
  Matrix v(n, 1);
  for (std::size_t i = 0; i < n; ++i) v(i, 0) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  double est = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double vn = v.frobenius_norm();
    if (vn == 0.0) return 0.0;
    for (double& x : v.data()) x /= vn;
    const Matrix mv = kernels::matmul(m, v);
    const double next = mv.frobenius_norm();
    if (next == 0.0) return 0.0;
    if (it > 0 && std::abs(next - est) < tol * next) return next;
    est = next;
    v = kernels::matmul_tn(m, mv);
  }
  throw ConvergenceError("spectral_norm did not converge in " + std::to_string(max_iter) + " iterations", est);
}

double dense_spectral_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> e(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                               static_cast<Eigen::Index>(m.cols()));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(e);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double dense_spectral_norm(const CsrMatrix& m) { return dense_spectral_norm(m.to_dense()); }

double mlp_cascade_bound(std::span<const Matrix> weights, ActivationKind kind) {
  const double l = lipschitz_constant(kind);
  double c = 1.0;
  for (const auto& w : weights) c *= l * dense_spectral_norm(w);
  return c;
}

}  // namespace aggbuf
