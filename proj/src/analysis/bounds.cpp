#include "aggbuf/analysis/bounds.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "aggbuf/analysis/norms.hpp"
#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

std::string pname(std::size_t l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

Matrix diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "diff");
  Matrix d = a;
  auto dd = d.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < dd.size(); ++i) dd[i] -= bd[i];
  return d;
}

Matrix diff(const CsrMatrix& a, const CsrMatrix& b) { return diff(a.to_dense(), b.to_dense()); }

Matrix gaussian(std::size_t r, std::size_t c, double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& x : m.data()) x = n(rng);
  return m;
}

// Enforces ||H||_2 <= |V|.
void cap_norm(Matrix& h, double limit) {
  const double s = dense_spectral_norm(h);
  if (s > limit)
    for (double& x : h.data()) x *= limit / s;
}

// A mask that removes at least one edge; g must have edges.
Graph reduced_graph(const Graph& g, double p, Rng& rng, std::size_t* removed) {
  auto res = drop_edges(g, p, rng);
  if (res.graph.num_edges() == g.num_edges()) {
    std::uniform_int_distribution<std::size_t> pick(0, g.num_edges() - 1);
    res.mask.keep.assign(g.num_edges(), 1);
    res.mask.keep[pick(rng)] = 0;
    res.graph = res.mask.apply(g);
  }
  if (removed) *removed = g.num_edges() - res.graph.num_edges();
  return res.graph;
}

Graph random_graph(std::size_t n, double density, Rng& rng) {
  std::bernoulli_distribution e(density);
  for (;;) {
    std::vector<Edge> edges;
    for (std::uint32_t u = 0; u < n; ++u)
      for (std::uint32_t v = u + 1; v < n; ++v)
        if (e(rng)) edges.push_back({u, v});
    if (!edges.empty()) return Graph::from_edges(n, edges);
  }
}

Propagation buffer_propagation(const Graph& g) {
  return {normalize(g, {NormKind::Symmetric, true}), g.adjacency(), node_degrees(g)};
}

}  // namespace

LayerBound gnn_layer_bound(const ModelParams& params, std::size_t l, const CsrMatrix& a1, const CsrMatrix& a2,
                           std::size_t num_nodes) {
  const ModelConfig& cfg = params.config;
  if (l < 1 || l > cfg.layers) throw ContractError("layer index out of range");
  const double ls = lipschitz_constant(cfg.activation);
  const double n = static_cast<double>(num_nodes);
  auto gap = [&] { return dense_spectral_norm(diff(a1, a2)); };
  switch (cfg.arch) {
    case Arch::MLP: return {ls * dense_spectral_norm(params.at(pname(l, "weight"))), 0.0};
    case Arch::GCN: {
      const double w = dense_spectral_norm(params.at(pname(l, "weight")));
      switch (cfg.effective_norm().kind) {
        case NormKind::Symmetric: {
          const double c1 = ls * w;
          return {c1, c1 * n * gap()};
        }
        // ||D^-1 A||_2 may exceed 1, so the row-normalized case keeps the
        // adjacency norm in C1 like the bare one.
        case NormKind::RandomWalk:
        case NormKind::Regular: return {ls * dense_spectral_norm(a1) * w, ls * n * w * gap()};
      }
      break;
    }
    case Arch::SAGE: {
      const double w1 = dense_spectral_norm(params.at(pname(l, "weight_neigh")));
      const double w2 = dense_spectral_norm(params.at(pname(l, "weight_self")));
      return {ls * (dense_spectral_norm(a1) * w1 + w2), ls * n * w1 * gap()};
    }
    case Arch::GIN: {
      const Matrix ws[] = {params.at(pname(l, "mlp0.weight")), params.at(pname(l, "mlp1.weight"))};
      const double c = mlp_cascade_bound(ws, cfg.activation);
      const double eps = params.at(pname(l, "eps")).item();
      return {c * (dense_spectral_norm(a1) + std::abs(1.0 + eps)), c * n * gap()};
    }
    case Arch::SGC: break;
  }
  throw ContractError(std::string("no layer bound for architecture ") + to_string(cfg.arch));
}

nlohmann::json to_json(const BoundReport& r) {
  return {{"arch", r.arch},       {"scheme", r.scheme},         {"layer", r.layer},
          {"c1", r.c1},           {"c2", r.c2},                 {"trials", r.trials},
          {"max_ratio", r.max_ratio}, {"violations", r.violations}, {"slack", r.slack}};
}

BoundReport verify_bound(const ModelParams& params, std::size_t layer, const Graph& g, double p, std::size_t trials,
                         Rng& rng, std::size_t cap) {
  const ModelConfig& cfg = params.config;
  const std::size_t n = g.num_nodes();
  if (n > cap) throw ContractError("verify_bound: graph has " + std::to_string(n) + " nodes, cap is " + std::to_string(cap));
  if (layer < 1 || layer > cfg.layers) throw ContractError("layer index out of range");
  BoundReport rep;
  rep.arch = to_string(cfg.arch);
  rep.scheme = to_string(cfg.effective_norm().kind);
  rep.layer = layer;
  rep.trials = trials;
  const std::uint64_t base = rng();
  const Propagation clean = make_propagation(g, cfg);
  const std::size_t width = cfg.hidden_width(layer - 1);
  const double limit = static_cast<double>(n);

  double mlp_c1 = 0.0;
  if (cfg.arch == Arch::MLP) {
    std::vector<Matrix> ws;
    for (std::size_t l = layer; l <= cfg.layers; ++l) ws.push_back(params.at(pname(l, "weight")));
    mlp_c1 = mlp_cascade_bound(ws, cfg.activation);
  }

  std::vector<double> ratio(trials), c1s(trials), c2s(trials);
  std::vector<char> bad(trials);
  std::vector<std::string> errors(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < trials; ++t) {
    try {
      Rng tr(derive_seed(base, {t}));
      std::uniform_real_distribution<double> amp(0.1, 3.0), u(0.0, 1.0);
      Matrix h1 = gaussian(n, width, amp(tr), tr);
      Matrix h2 = h1;
      if (u(tr) > 0.2) {
        const Matrix noise = gaussian(n, width, amp(tr) * u(tr), tr);
        for (std::size_t i = 0; i < h2.size(); ++i) h2.data()[i] += noise.data()[i];
      }
      cap_norm(h1, limit);
      cap_norm(h2, limit);
      Matrix o1, o2;
      LayerBound b;
      if (cfg.arch == Arch::MLP) {
        o1 = h1;
        o2 = h2;
        for (std::size_t l = layer; l <= cfg.layers; ++l) {
          o1 = apply_layer(params, l, o1, clean.norm, true);
          o2 = apply_layer(params, l, o2, clean.norm, true);
        }
        b = {mlp_c1, 0.0};
      } else {
        const Propagation red = make_propagation(drop_edges(g, p, tr).graph, cfg, IsolatedPolicy::ZeroRow);
        o1 = apply_layer(params, layer, h1, clean.norm, true);
        o2 = apply_layer(params, layer, h2, red.norm, true);
        b = gnn_layer_bound(params, layer, clean.norm, red.norm, n);
      }
      const double lhs = dense_spectral_norm(diff(o1, o2));
      const double rhs = b.c1 * dense_spectral_norm(diff(h1, h2)) + b.c2;
      bad[t] = lhs > rhs + kBoundSlack;
      ratio[t] = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      c1s[t] = b.c1;
      c2s[t] = b.c2;
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error("verify_bound: " + e);
  for (std::size_t t = 0; t < trials; ++t) {
    rep.violations += bad[t] ? 1 : 0;
    rep.max_ratio = std::max(rep.max_ratio, ratio[t]);
  }
  if (trials) {
    rep.c1 = c1s.back();
    rep.c2 = c2s.back();
  }
  return rep;
}

Witness find_discrepancy_witness(const ModelParams& params, const Graph& g, Rng& rng, std::size_t max_attempts,
                          double threshold) {
  if (g.num_edges() == 0) throw SearchExhaustedError("graph has no edge to drop");
  const ModelConfig& cfg = params.config;
  const Propagation clean = make_propagation(g, cfg);
  const std::size_t width = cfg.hidden_width(0);
  for (std::size_t a = 1; a <= max_attempts; ++a) {
    Witness w;
    w.attempt = a;
    const Graph red = reduced_graph(g, 0.5, rng, &w.edges_removed);
    const Propagation rp = make_propagation(red, cfg, IsolatedPolicy::ZeroRow);
    const Matrix h = gaussian(g.num_nodes(), width, 1.0, rng);
    const Matrix o1 = apply_layer(params, 1, h, clean.norm, true);
    const Matrix o2 = apply_layer(params, 1, h, rp.norm, true);
    w.output_discrepancy = dense_spectral_norm(diff(o1, o2));
    if (w.output_discrepancy > threshold) return w;
  }
  throw SearchExhaustedError("no witness after " + std::to_string(max_attempts) + " attempts");
}

nlohmann::json to_json(const ConditionReport& r) {
  return {{"variant", to_string(r.variant)}, {"trials", r.trials},     {"c1_pass", r.c1_pass},
          {"c2_pass", r.c2_pass},            {"c2_equal", r.c2_equal}};
}

ConditionReport check_buffer_conditions(BufferVariant v, std::size_t trials, Rng& rng, bool zero_weight) {
  if (trials == 0) throw ContractError("check_buffer_conditions needs at least one trial");
  ConditionReport rep;
  rep.variant = v;
  rep.trials = trials;
  std::uniform_int_distribution<std::size_t> nodes(4, 12), width(1, 5);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = nodes(rng);
    const Graph g = random_graph(n, 0.4, rng);
    const Graph red = reduced_graph(g, 0.5, rng, nullptr);
    std::vector<Matrix> prefix;
    const std::size_t depth = 2;
    std::size_t in_width = 0;
    for (std::size_t l = 0; l < depth; ++l) {
      prefix.push_back(gaussian(n, width(rng), 1.0, rng));
      if (uses_full_prefix(v) || l + 1 == depth) in_width += prefix.back().cols();
    }
    Matrix w = zero_weight ? Matrix(in_width, 3) : gaussian(in_width, 3, 1.0, rng);
    const Matrix o1 = buffer_forward(v, prefix, buffer_propagation(g), w);
    const Matrix o2 = buffer_forward(v, prefix, buffer_propagation(red), w);
    rep.c1_pass += max_abs_diff(o1, o2) > 0.0 ? 1 : 0;
    const double f1 = o1.frobenius_norm(), f2 = o2.frobenius_norm();
    rep.c2_pass += f1 < f2 ? 1 : 0;
    rep.c2_equal += f1 == f2 ? 1 : 0;
  }
  return rep;
}

std::vector<double> empirical_discrepancy(const ModelParams& params, const Matrix& x, const Propagation& p1,
                                          const Propagation& p2) {
  Tape tape;
  const BoundParams b = bind_constant(tape, params);
  const Var xv = tape.constant(x);
  const auto t1 = forward(tape, params.config, b, xv, p1, Mode::Eval, nullptr);
  const auto t2 = forward(tape, params.config, b, xv, p2, Mode::Eval, nullptr);
  std::vector<double> out;
  for (std::size_t l = 1; l < t1.hidden.size(); ++l)
    out.push_back(dense_spectral_norm(diff(t1.hidden[l].value(), t2.hidden[l].value())));
  return out;
}

}  // namespace aggbuf
