#include "aggbuf/models/config.hpp"

#include "aggbuf/common/error.hpp"

namespace aggbuf {

const char* to_string(Arch arch) {
  switch (arch) {
    case Arch::MLP: return "mlp";
    case Arch::GCN: return "gcn";
    case Arch::SGC: return "sgc";
    case Arch::SAGE: return "sage";
    case Arch::GIN: return "gin";
  }
  return "?";
}

Arch arch_from_string(const std::string& name) {
  for (auto a : {Arch::MLP, Arch::GCN, Arch::SGC, Arch::SAGE, Arch::GIN})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown architecture '" + name + "' (expected mlp|gcn|sgc|sage|gin)");
}

void ModelConfig::validate() const {
  if (layers < 1) throw ConfigError("model needs at least one layer");
  const std::size_t want = arch == Arch::SGC ? 2 : layers + 1;
  if (dims.size() != want)
    throw ConfigError(std::string(to_string(arch)) + " with " + std::to_string(layers) + " layers needs " +
                      std::to_string(want) + " dims, got " + std::to_string(dims.size()));
  for (auto d : dims)
    if (d == 0) throw ConfigError("layer widths must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (arch == Arch::GIN && gin_hidden == 0) throw ConfigError("gin_hidden must be positive");
}

std::size_t ModelConfig::hidden_width(std::size_t l) const {
  if (l > layers) throw ContractError("layer index out of range");
  return arch == Arch::SGC ? dims[0] : dims[l];
}

std::size_t ModelConfig::aggregate_width(std::size_t l) const {
  if (l < 1 || l > layers) throw ContractError("layer index out of range");
  switch (arch) {
    case Arch::MLP: return 0;
    case Arch::GCN:
    case Arch::SAGE: return dims[l];
    case Arch::GIN: return dims[l - 1];
    case Arch::SGC: return dims[0];
  }
  return 0;
}

NormScheme ModelConfig::effective_norm() const {
  switch (arch) {
    case Arch::SAGE: return {NormKind::RandomWalk, norm.add_self_loops};
    case Arch::GIN: return {NormKind::Regular, false};
    default: return norm;
  }
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"arch", to_string(cfg.arch)},
          {"layers", cfg.layers},
          {"dims", cfg.dims},
          {"activation", to_string(cfg.activation)},
          {"dropout", cfg.dropout},
          {"norm", to_string(cfg.norm.kind)},
          {"self_loops", cfg.norm.add_self_loops},
          {"gin_hidden", cfg.gin_hidden}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    cfg.arch = arch_from_string(j.at("arch").get<std::string>());
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.dims = j.at("dims").get<std::vector<std::size_t>>();
    cfg.activation = activation_from_string(j.at("activation").get<std::string>());
    cfg.dropout = j.at("dropout").get<double>();
    cfg.norm.kind = norm_kind_from_string(j.at("norm").get<std::string>());
    cfg.norm.add_self_loops = j.at("self_loops").get<bool>();
    cfg.gin_hidden = j.at("gin_hidden").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ModelConfig make_config(Arch arch, std::size_t in_dim, std::size_t hidden, std::size_t classes,
                        std::size_t layers) {
  ModelConfig cfg;
  cfg.arch = arch;
  cfg.layers = layers;
  if (arch == Arch::SGC) {
    cfg.dims = {in_dim, classes};
  } else {
    cfg.dims.push_back(in_dim);
    for (std::size_t l = 1; l < layers; ++l) cfg.dims.push_back(hidden);
    cfg.dims.push_back(classes);
  }
  cfg.gin_hidden = hidden;
  cfg.validate();
  return cfg;
}

}  // namespace aggbuf
