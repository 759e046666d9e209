#include "aggbuf/graph/graph.hpp"

#include <algorithm>
#include <cmath>

#include "aggbuf/common/error.hpp"

namespace aggbuf {

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> raw) {
  Graph g;
  g.num_nodes_ = num_nodes;
  g.edges_.reserve(raw.size());
  for (const Edge& e : raw) {
    if (e.u >= num_nodes || e.v >= num_nodes) {
      throw DimensionError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                           ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (e.u == e.v) continue;
    g.edges_.push_back(e.u < e.v ? e : Edge{e.v, e.u});
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

  std::vector<std::size_t> offsets(num_nodes + 1, 0);
  for (const Edge& e : g.edges_) {
    ++offsets[e.u + 1];
    ++offsets[e.v + 1];
  }
  for (std::size_t i = 0; i < num_nodes; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::uint32_t> indices(offsets.back());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const Edge& e : g.edges_) {
    indices[cursor[e.u]++] = e.v;
    indices[cursor[e.v]++] = e.u;
  }
  for (std::size_t i = 0; i < num_nodes; ++i)
    std::sort(indices.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              indices.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
  std::vector<double> values(indices.size(), 1.0);
  g.adjacency_ = CsrMatrix(num_nodes, num_nodes, std::move(offsets), std::move(indices), std::move(values));
  return g;
}

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::Regular: return "regular";
    case NormKind::RandomWalk: return "rw";
    case NormKind::Symmetric: return "sym";
  }
  return "?";
}

NormKind norm_kind_from_string(const std::string& name) {
  for (auto k : {NormKind::Regular, NormKind::RandomWalk, NormKind::Symmetric})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown normalization '" + name + "' (expected regular|rw|sym)");
}

CsrMatrix normalize(const Graph& g, NormScheme scheme, IsolatedPolicy isolated) {
  const std::size_t n = g.num_nodes();
  const double loop = scheme.add_self_loops ? 1.0 : 0.0;
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = static_cast<double>(g.degree(i)) + loop;
    if (scheme.kind != NormKind::Regular && deg[i] == 0.0 && isolated == IsolatedPolicy::Throw) {
      throw DegreeZeroError("node " + std::to_string(i) + " has degree 0 and self-loops are disabled");
    }
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  indices.reserve(2 * g.num_edges() + (scheme.add_self_loops ? n : 0));
  values.reserve(indices.capacity());
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = !scheme.add_self_loops;
    auto emit = [&](std::uint32_t j) {
      double w = 1.0;
      switch (scheme.kind) {
        case NormKind::Regular: break;
        case NormKind::RandomWalk: w = 1.0 / deg[i]; break;
        case NormKind::Symmetric: w = 1.0 / std::sqrt(deg[i] * deg[j]); break;
      }
      indices.push_back(j);
      values.push_back(w);
    };
    for (auto j : g.neighbors(i)) {
      if (!diag_done && j > i) {
        emit(static_cast<std::uint32_t>(i));
        diag_done = true;
      }
      emit(j);
    }
    if (!diag_done) emit(static_cast<std::uint32_t>(i));
    offsets[i + 1] = indices.size();
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(indices), std::move(values));
}

std::size_t EdgeMask::kept() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

Graph EdgeMask::apply(const Graph& g) const {
  if (keep.size() != g.num_edges()) throw DimensionError("edge mask does not match graph edge count");
  std::vector<Edge> kept_edges;
  kept_edges.reserve(g.num_edges());
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (keep[k]) kept_edges.push_back(g.edges()[k]);
  return Graph::from_edges(g.num_nodes(), kept_edges);
}

DropResult drop_edges(const Graph& g, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidRateError("drop rate must lie in [0, 1], got " + std::to_string(p));
  EdgeMask mask;
  mask.rate = p;
  mask.keep.assign(g.num_edges(), 1);
  if (p > 0.0) {
    std::bernoulli_distribution drop(p);
    for (auto& k : mask.keep) k = drop(rng) ? 0 : 1;
  }
  Graph reduced = p == 0.0 ? g : mask.apply(g);
  return {std::move(mask), std::move(reduced)};
}

std::vector<double> node_degrees(const Graph& g) {
  std::vector<double> d(g.num_nodes());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(g.degree(i));
  return d;
}

std::vector<std::optional<double>> node_homophily(const Graph& g, std::span<const std::uint32_t> labels) {
  if (labels.size() != g.num_nodes()) throw DimensionError("node_homophily: one label per node required");
  std::vector<std::optional<double>> h(g.num_nodes());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto nb = g.neighbors(i);
    if (nb.empty()) continue;
    std::size_t same = 0;
    for (auto j : nb) same += labels[j] == labels[i] ? 1 : 0;
    h[i] = static_cast<double>(same) / static_cast<double>(nb.size());
  }
  return h;
}

}  // namespace aggbuf
