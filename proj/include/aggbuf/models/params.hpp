#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aggbuf/models/config.hpp"
#include "aggbuf/tensor/tape.hpp"

namespace aggbuf {

struct NamedTensor {
  std::string name;
  Matrix value;
  bool operator==(const NamedTensor&) const = default;
};

struct ModelParams {
  ModelConfig config;
  std::vector<NamedTensor> tensors;
  bool frozen = false;

  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  bool operator==(const ModelParams& o) const { return tensors == o.tensors && frozen == o.frozen; }
};

// Glorot-uniform weights, zero biases, GIN eps = 0.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// Tape handles for a parameter set, in the same order as the tensors.
// Frozen sets are recorded as constants so they never collect gradients.
struct BoundParams {
  std::vector<std::string> names;
  std::vector<Var> vars;

  Var at(const std::string& name) const;
};

BoundParams bind(Tape& tape, const ModelParams& params);
// Every tensor as a constant, whatever the frozen flag says.
BoundParams bind_constant(Tape& tape, const ModelParams& params);

}  // namespace aggbuf
