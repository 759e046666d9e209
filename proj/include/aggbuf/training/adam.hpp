#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aggbuf/tensor/matrix.hpp"

namespace aggbuf {

struct AdamConfig {
  double lr = 1e-2;
  double weight_decay = 0.0;  // classic L2, added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  bool frozen = false;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // grads[i] belongs to params[i]. Unfrozen parameters need a gradient;
  // a gradient for a frozen one is a contract error.
  void step(std::span<const ParamRef> params, std::span<const Matrix* const> grads);

  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace aggbuf
