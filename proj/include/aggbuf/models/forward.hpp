#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aggbuf/graph/graph.hpp"
#include "aggbuf/models/params.hpp"

namespace aggbuf {

// Everything a forward pass needs to know about one graph.
struct Propagation {
  CsrMatrix norm;               // layer adjacency for the model's scheme
  CsrMatrix raw;                // bare 0/1 adjacency
  std::vector<double> degrees;  // neighbour counts of `raw`
};

Propagation make_propagation(const Graph& g, const ModelConfig& cfg,
                             IsolatedPolicy isolated = IsolatedPolicy::Throw);

enum class Mode { Train, Eval };

// Called for each aggregating layer l = 1..L with the trace prefix
// H^(0)..H^(l-1). A returned value is added to that layer's aggregate.
using AggregateHook =
    std::function<std::optional<Var>(std::size_t layer, std::span<const Var> prefix, const Propagation& prop)>;

struct ForwardTrace {
  std::vector<Var> hidden;      // H^(0)..H^(L)
  std::vector<Var> aggregates;  // H_N^(l) at index l-1; empty for MLP
  Var logits;
  Var log_probs;
};

// `rng` is required in train mode when the config has a nonzero dropout.
ForwardTrace forward(Tape& tape, const ModelConfig& cfg, const BoundParams& params, Var x,
                     const Propagation& prop, Mode mode, Rng* rng, const AggregateHook& hook = {});

// Eval-mode log-probabilities.
Matrix predict(const ModelParams& params, const Matrix& x, const Propagation& prop);

// Layer l (1-based) on a plain matrix, eval mode, no buffer. `activate`
// controls the outer activation; SGC has no per-layer weights so its layer
// is a single propagation step. `adjacency` is whatever the layer aggregates
// with (normalized for GCN/SGC/SAGE, bare for GIN).
Matrix apply_layer(const ModelParams& params, std::size_t l, const Matrix& h, const CsrMatrix& adjacency,
                   bool activate);

}  // namespace aggbuf
