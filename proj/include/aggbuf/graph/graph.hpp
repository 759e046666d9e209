#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aggbuf/common/rng.hpp"
#include "aggbuf/tensor/csr.hpp"

namespace aggbuf {

struct Edge {
  std::uint32_t u;
  std::uint32_t v;
  auto operator<=>(const Edge&) const = default;
};

// Undirected simple graph. Edges are kept once as canonical (u < v) pairs in
// sorted order; the adjacency is the symmetric 0/1 CSR of the same set.
class Graph {
 public:
  Graph() = default;

  // Raw pairs in any orientation; duplicates and self-loops are dropped.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> raw);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const CsrMatrix& adjacency() const noexcept { return adjacency_; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const { return adjacency_.row_indices(i); }
  std::size_t degree(std::size_t i) const { return neighbors(i).size(); }

  bool operator==(const Graph& o) const { return num_nodes_ == o.num_nodes_ && edges_ == o.edges_; }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  CsrMatrix adjacency_;
};

enum class NormKind { Regular, RandomWalk, Symmetric };

struct NormScheme {
  NormKind kind = NormKind::Symmetric;
  bool add_self_loops = true;
};

const char* to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& name);

// What normalize() does with a degree-0 node when self-loops are off.
enum class IsolatedPolicy { Throw, ZeroRow };

// Regular: A, RandomWalk: D^-1 A, Symmetric: D^-1/2 A D^-1/2, all on A + I
// when self-loops are requested.
CsrMatrix normalize(const Graph& g, NormScheme scheme, IsolatedPolicy isolated = IsolatedPolicy::Throw);

// One keep flag per canonical undirected edge, shared by both directions.
struct EdgeMask {
  std::vector<std::uint8_t> keep;
  double rate = 0.0;

  std::size_t kept() const;
  Graph apply(const Graph& g) const;
};

struct DropResult {
  EdgeMask mask;
  Graph graph;
};

DropResult drop_edges(const Graph& g, double p, Rng& rng);

// Neighbour counts, self-loops excluded.
std::vector<double> node_degrees(const Graph& g);

// Fraction of neighbours sharing the node's label; nullopt for isolated nodes.
std::vector<std::optional<double>> node_homophily(const Graph& g, std::span<const std::uint32_t> labels);

}  // namespace aggbuf
