#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggbuf/buffer/buffer.hpp"
#include "aggbuf/models/forward.hpp"

namespace aggbuf {

inline constexpr double kBoundSlack = 1e-9;

struct LayerBound {
  double c1 = 0.0;
  double c2 = 0.0;
};

// (C1, C2) for layer l of `params` comparing adjacency a1 against a2 (each
// already in the form the layer consumes). MLP layers give C2 = 0.
LayerBound gnn_layer_bound(const ModelParams& params, std::size_t layer, const CsrMatrix& a1, const CsrMatrix& a2,
                           std::size_t num_nodes);

struct BoundReport {
  std::string arch;
  std::string scheme;
  std::size_t layer = 0;
  double c1 = 0.0;  // last trial's constants; they vary with the mask
  double c2 = 0.0;
  std::size_t trials = 0;
  double max_ratio = 0.0;  // max LHS / RHS
  std::size_t violations = 0;
  double slack = kBoundSlack;
};

nlohmann::json to_json(const BoundReport& r);

// Monte-Carlo check of ||H1' - H2'|| <= C1 ||H1 - H2|| + C2 at layer l with
// an outer activation. MLP checks the cascade from layer l through L with
// C1 = mlp_cascade_bound and no graph term. Graphs above `cap` nodes are
// rejected since the norms are dense.
BoundReport verify_bound(const ModelParams& params, std::size_t layer, const Graph& g, double p, std::size_t trials,
                         Rng& rng, std::size_t cap = 256);

struct Witness {
  std::size_t attempt = 0;
  double input_discrepancy = 0.0;
  double output_discrepancy = 0.0;
  std::size_t edges_removed = 0;
};

// Searches for H and two adjacencies with zero input discrepancy but a
// positive output discrepancy at layer 1. SearchExhaustedError when none
// is found in `max_attempts`.
Witness find_discrepancy_witness(const ModelParams& params, const Graph& g, Rng& rng, std::size_t max_attempts = 100,
                          double threshold = 1e-6);

struct ConditionReport {
  BufferVariant variant = BufferVariant::Full;
  std::size_t trials = 0;
  std::size_t c1_pass = 0;  // outputs differ under A and the reduced graph
  std::size_t c2_pass = 0;  // ||g(A)||_F < ||g(A~)||_F strictly
  std::size_t c2_equal = 0; // norms equal
};

nlohmann::json to_json(const ConditionReport& r);

// Random graphs, features and nonzero weights; every trial removes at least
// one edge. `zero_weight` forces W = 0 (the equality case).
ConditionReport check_buffer_conditions(BufferVariant v, std::size_t trials, Rng& rng, bool zero_weight = false);

// ||H1^(l) - H2^(l)||_2 for l = 1..L, eval mode, two adjacencies.
std::vector<double> empirical_discrepancy(const ModelParams& params, const Matrix& x, const Propagation& p1,
                                          const Propagation& p2);

}  // namespace aggbuf
