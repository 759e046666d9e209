#include "aggbuf/models/params.hpp"

#include <cmath>
#include <random>

#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix w(fan_in, fan_out);
  for (double& x : w.data()) x = u(rng);
  return w;
}

std::string layer_name(std::size_t l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

}  // namespace

const Matrix& ModelParams::at(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw ContractError("no parameter named '" + name + "'");
}

Matrix& ModelParams::at(const std::string& name) {
  return const_cast<Matrix&>(static_cast<const ModelParams&>(*this).at(name));
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParams p;
  p.config = cfg;
  auto add = [&p](std::string name, Matrix m) { p.tensors.push_back({std::move(name), std::move(m)}); };
  switch (cfg.arch) {
    case Arch::MLP:
    case Arch::GCN:
      for (std::size_t l = 1; l <= cfg.layers; ++l) {
        add(layer_name(l, "weight"), glorot(cfg.dims[l - 1], cfg.dims[l], rng));
        add(layer_name(l, "bias"), Matrix(1, cfg.dims[l]));
      }
      break;
    case Arch::SAGE:
      for (std::size_t l = 1; l <= cfg.layers; ++l) {
        add(layer_name(l, "weight_neigh"), glorot(cfg.dims[l - 1], cfg.dims[l], rng));
        add(layer_name(l, "weight_self"), glorot(cfg.dims[l - 1], cfg.dims[l], rng));
        add(layer_name(l, "bias"), Matrix(1, cfg.dims[l]));
      }
      break;
    case Arch::GIN:
      for (std::size_t l = 1; l <= cfg.layers; ++l) {
        add(layer_name(l, "mlp0.weight"), glorot(cfg.dims[l - 1], cfg.gin_hidden, rng));
        add(layer_name(l, "mlp0.bias"), Matrix(1, cfg.gin_hidden));
        add(layer_name(l, "mlp1.weight"), glorot(cfg.gin_hidden, cfg.dims[l], rng));
        add(layer_name(l, "mlp1.bias"), Matrix(1, cfg.dims[l]));
        add(layer_name(l, "eps"), Matrix(1, 1));
      }
      break;
    case Arch::SGC:
      add("classifier.weight", glorot(cfg.dims[0], cfg.dims[1], rng));
      add("classifier.bias", Matrix(1, cfg.dims[1]));
      break;
  }
  return p;
}

Var BoundParams::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return vars[i];
  throw ContractError("no bound parameter named '" + name + "'");
}

BoundParams bind(Tape& tape, const ModelParams& params) {
  BoundParams b;
  for (const auto& t : params.tensors) {
    b.names.push_back(t.name);
    b.vars.push_back(params.frozen ? tape.constant(t.value) : tape.parameter(t.value));
  }
  return b;
}

BoundParams bind_constant(Tape& tape, const ModelParams& params) {
  BoundParams b;
  for (const auto& t : params.tensors) {
    b.names.push_back(t.name);
    b.vars.push_back(tape.constant(t.value));
  }
  return b;
}

}  // namespace aggbuf
