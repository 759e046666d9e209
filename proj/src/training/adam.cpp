#include "aggbuf/training/adam.hpp"

#include <cmath>

#include "aggbuf/common/error.hpp"

namespace aggbuf {

void Adam::step(std::span<const ParamRef> params, std::span<const Matrix* const> grads) {
  if (params.size() != grads.size()) throw ContractError("adam: one gradient slot per parameter");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].frozen && grads[i] != nullptr)
      throw ContractError("adam: frozen parameter '" + params[i].name + "' received a gradient");
    if (!params[i].frozen && grads[i] == nullptr)
      throw ContractError("adam: no gradient for parameter '" + params[i].name + "'");
    if (grads[i]) require_same_shape(*params[i].value, *grads[i], "adam step");
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value->rows(), p.value->cols());
      v_.emplace_back(p.value->rows(), p.value->cols());
    }
  } else if (m_.size() != params.size()) {
    throw ContractError("adam: parameter list changed between steps");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].frozen) continue;
    auto w = params[i].value->data();
    auto g = grads[i]->data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k] + cfg_.weight_decay * w[k];
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      w[k] -= cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
    }
  }
}

}  // namespace aggbuf
