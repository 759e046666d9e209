#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggbuf/graph/graph.hpp"
#include "aggbuf/tensor/tape.hpp"

namespace aggbuf {

enum class Arch { MLP, GCN, SGC, SAGE, GIN };

const char* to_string(Arch arch);
Arch arch_from_string(const std::string& name);

struct ModelConfig {
  Arch arch = Arch::GCN;
  // Number of layers L. For SGC this is the propagation depth K.
  std::size_t layers = 2;
  // d_0..d_L; SGC uses {d_0, C} since propagation keeps the width.
  std::vector<std::size_t> dims;
  ActivationKind activation = ActivationKind::ReLU;
  double dropout = 0.0;
  NormScheme norm;
  std::size_t gin_hidden = 64;

  void validate() const;
  std::size_t num_classes() const { return dims.back(); }
  std::size_t input_dim() const { return dims.front(); }
  // Width of H^(l), l = 0..L.
  std::size_t hidden_width(std::size_t l) const;
  // Width of the aggregate a buffer is added to at layer l (1-based); 0 for
  // MLP, which has no aggregation.
  std::size_t aggregate_width(std::size_t l) const;
  bool has_aggregation() const { return arch != Arch::MLP; }
  // Scheme actually used for the layer adjacency: SAGE is random-walk, GIN
  // uses the bare adjacency.
  NormScheme effective_norm() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Convenience for the common "d0, hidden..., classes" layout.
ModelConfig make_config(Arch arch, std::size_t in_dim, std::size_t hidden, std::size_t classes,
                        std::size_t layers = 2);

}  // namespace aggbuf
