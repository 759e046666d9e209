#include "aggbuf/graph/sbm.hpp"

#include <random>
#include <string>

#include "aggbuf/common/error.hpp"

namespace aggbuf {

void SbmConfig::validate() const {
  if (n == 0) throw ConfigError("sbm: n must be positive");
  if (classes == 0 || classes > n) throw ConfigError("sbm: classes must lie in [1, n]");
  if (classes > 0xffff) throw ConfigError("sbm: too many classes for uint16 labels");
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
    throw ConfigError("sbm: need 0 <= p_out <= p_in <= 1");
  if (!(sigma > 0.0)) throw ConfigError("sbm: sigma must be positive");
  if (feature_dim < classes) throw ConfigError("sbm: feature_dim must be at least the class count");
}

DatasetBundle generate_sbm(const SbmConfig& cfg) {
  cfg.validate();
  DatasetBundle b;
  b.name = "sbm";
  b.num_classes = cfg.classes;
  b.labels.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) b.labels[i] = static_cast<std::uint32_t>(i * cfg.classes / cfg.n);

  Rng edge_rng = make_rng(cfg.seed, {0});
  std::bernoulli_distribution in_edge(cfg.p_in), out_edge(cfg.p_out);
  std::vector<Edge> edges;
  for (std::uint32_t u = 0; u < cfg.n; ++u)
    for (std::uint32_t v = u + 1; v < cfg.n; ++v) {
      const bool hit = b.labels[u] == b.labels[v] ? in_edge(edge_rng) : out_edge(edge_rng);
      if (hit) edges.push_back({u, v});
    }
  b.graph = Graph::from_edges(cfg.n, edges);

  Rng feat_rng = make_rng(cfg.seed, {1});
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  b.features = Matrix(cfg.n, cfg.feature_dim);
  for (std::size_t i = 0; i < cfg.n; ++i)
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
      const double mean = j == b.labels[i] ? cfg.mu : 0.0;
      b.features(i, j) = static_cast<double>(static_cast<float>(mean + noise(feat_rng)));
    }

  for (std::size_t k = 0; k < cfg.num_splits; ++k) {
    Rng split_rng = make_rng(cfg.seed, {2, k});
    b.splits.push_back(random_split(cfg.n, 0.1, 0.1, split_rng, "split_" + std::to_string(k)));
  }
  return b;
}

}  // namespace aggbuf
