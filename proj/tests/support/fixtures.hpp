#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "aggbuf/graph/graph.hpp"
#include "aggbuf/graph/sbm.hpp"

namespace aggbuf::testing {

// Erdos-Renyi graph; each pair present with probability `density`.
inline Graph random_graph(std::size_t n, double density, Rng& rng) {
  std::bernoulli_distribution coin(density);
  std::vector<Edge> edges;
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v = u + 1; v < n; ++v)
      if (coin(rng)) edges.push_back({u, v});
  return Graph::from_edges(n, edges);
}

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Graph::from_edges(n, edges);
}

inline DatasetBundle tiny_sbm(std::uint64_t seed, std::size_t n = 120, std::size_t classes = 3) {
  SbmConfig c;
  c.n = n;
  c.classes = classes;
  c.p_in = 0.15;
  c.p_out = 0.01;
  c.feature_dim = 8;
  c.mu = 1.5;
  c.seed = seed;
  c.num_splits = 2;
  return generate_sbm(c);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("aggbuf_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace aggbuf::testing
