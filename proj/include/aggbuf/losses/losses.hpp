#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aggbuf/graph/graph.hpp"
#include "aggbuf/tensor/tape.hpp"

namespace aggbuf {

enum class ObjectiveKind { RC, RCTrainOnly, CrossEntropy, PseudoLabel, SelfDistill };

const char* to_string(ObjectiveKind k);
ObjectiveKind objective_from_string(const std::string& name);

struct LossReport {
  double bias = 0.0;
  double robust = 0.0;
  double lambda = 0.0;
  double total = 0.0;
  std::size_t bias_nodes = 0;
  std::size_t robust_nodes = 0;
};

std::vector<std::uint32_t> all_nodes(std::size_t n);

// Mean over `rows` of KL(exp(logp) || exp(logq)).
Var kl_rows(Var logp, Var logq, std::span<const std::uint32_t> rows);
double kl_rows(const Matrix& logp, const Matrix& logq, std::span<const std::uint32_t> rows);

Var cross_entropy(Var logq, std::span<const std::uint32_t> labels, std::span<const std::uint32_t> rows);
double cross_entropy(const Matrix& logq, std::span<const std::uint32_t> labels, std::span<const std::uint32_t> rows);

// KL(frozen || buffered) on the clean graph; the frozen side is a constant.
Var l_bias(const Matrix& frozen_clean, Var buffered_clean, std::span<const std::uint32_t> train);

// KL(clean || dropped) for the buffered model. With `stop_gradient_clean`
// the clean branch is treated as a constant target.
Var l_robust(Var buffered_clean, Var buffered_dropped, std::span<const std::uint32_t> nodes,
             bool stop_gradient_clean = false);

LossReport l_rc(double bias, double robust, double lambda);

// Reporting-only view of a trained model: log-probabilities for a graph.
using Predictor = std::function<Matrix(const Graph&)>;

struct Decomposition {
  double bias_term = 0.0;    // KL against one-hot labels, i.e. cross-entropy
  double robust_term = 0.0;  // KL(Q(G) || Q(G~)) averaged over mask draws
};

Decomposition monitor_decomposition(const Predictor& predict, const Graph& g, std::span<const std::uint32_t> labels,
                                    std::span<const std::uint32_t> test, double p, Rng& rng,
                                    std::size_t draws = 10);

// Mean over `nodes` of log Q(y|G) - log Q(y|G~) at the true class. Signed.
double label_proxy_robustness(const Matrix& clean, const Matrix& dropped, std::span<const std::uint32_t> labels,
                              std::span<const std::uint32_t> nodes);

struct AblationContext {
  Var buffered_clean;
  Var buffered_dropped;
  Matrix frozen_clean;
  std::span<const std::uint32_t> labels;
  std::span<const std::uint32_t> train;
};

// PseudoLabel: CE of the dropped forward against argmax of the frozen model
// on all nodes. SelfDistill: KL(frozen || buffered) on all nodes, clean
// graph. CrossEntropy: supervised CE of the dropped forward on train nodes.
Var ablation_objective(ObjectiveKind kind, const AblationContext& ctx);

}  // namespace aggbuf
