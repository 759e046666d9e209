#include "aggbuf/losses/losses.hpp"

#include <numeric>

#include "aggbuf/common/error.hpp"

namespace aggbuf {

const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::RC: return "rc";
    case ObjectiveKind::RCTrainOnly: return "rc_train";
    case ObjectiveKind::CrossEntropy: return "ce";
    case ObjectiveKind::PseudoLabel: return "pseudo";
    case ObjectiveKind::SelfDistill: return "distill";
  }
  return "?";
}

ObjectiveKind objective_from_string(const std::string& name) {
  for (auto k : {ObjectiveKind::RC, ObjectiveKind::RCTrainOnly, ObjectiveKind::CrossEntropy,
                 ObjectiveKind::PseudoLabel, ObjectiveKind::SelfDistill})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown objective '" + name + "' (expected rc|rc_train|ce|pseudo|distill)");
}

std::vector<std::uint32_t> all_nodes(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

Var kl_rows(Var logp, Var logq, std::span<const std::uint32_t> rows) { return ops::kl_rows(logp, logq, rows); }

double kl_rows(const Matrix& logp, const Matrix& logq, std::span<const std::uint32_t> rows) {
  Tape t;
  return ops::kl_rows(t.constant(logp), t.constant(logq), rows).value().item();
}

Var cross_entropy(Var logq, std::span<const std::uint32_t> labels, std::span<const std::uint32_t> rows) {
  return ops::nll(logq, labels, rows);
}

double cross_entropy(const Matrix& logq, std::span<const std::uint32_t> labels, std::span<const std::uint32_t> rows) {
  Tape t;
  return ops::nll(t.constant(logq), labels, rows).value().item();
}

Var l_bias(const Matrix& frozen_clean, Var buffered_clean, std::span<const std::uint32_t> train) {
  return ops::kl_rows(buffered_clean.tape().constant(frozen_clean), buffered_clean, train);
}

Var l_robust(Var buffered_clean, Var buffered_dropped, std::span<const std::uint32_t> nodes,
             bool stop_gradient_clean) {
  Var clean = stop_gradient_clean ? ops::detach(buffered_clean) : buffered_clean;
  return ops::kl_rows(clean, buffered_dropped, nodes);
}

LossReport l_rc(double bias, double robust, double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("lambda must be non-negative");
  LossReport r;
  r.bias = bias;
  r.robust = robust;
  r.lambda = lambda;
  r.total = bias + lambda * robust;
  return r;
}

Decomposition monitor_decomposition(const Predictor& predict, const Graph& g, std::span<const std::uint32_t> labels,
                                    std::span<const std::uint32_t> test, double p, Rng& rng, std::size_t draws) {
  if (draws == 0) throw ContractError("monitor needs at least one mask draw");
  const Matrix clean = predict(g);
  Decomposition d;
  d.bias_term = cross_entropy(clean, labels, test);
  for (std::size_t k = 0; k < draws; ++k) {
    const auto dropped = drop_edges(g, p, rng);
    d.robust_term += kl_rows(clean, predict(dropped.graph), test);
  }
  d.robust_term /= static_cast<double>(draws);
  return d;
}

double label_proxy_robustness(const Matrix& clean, const Matrix& dropped, std::span<const std::uint32_t> labels,
                              std::span<const std::uint32_t> nodes) {
  require_same_shape(clean, dropped, "label_proxy_robustness");
  if (nodes.empty()) throw ContractError("label_proxy_robustness: empty node set");
  double s = 0.0;
  for (auto i : nodes) {
    if (i >= clean.rows() || labels[i] >= clean.cols()) throw ContractError("node or label out of range");
    s += clean(i, labels[i]) - dropped(i, labels[i]);
  }
  return s / static_cast<double>(nodes.size());
}

Var ablation_objective(ObjectiveKind kind, const AblationContext& ctx) {
  Tape& tape = ctx.buffered_clean.tape();
  switch (kind) {
    case ObjectiveKind::PseudoLabel: {
      const Matrix& q = ctx.frozen_clean;
      std::vector<std::uint32_t> pseudo(q.rows());
      for (std::size_t i = 0; i < q.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < q.cols(); ++c)
          if (q(i, c) > q(i, best)) best = c;
        pseudo[i] = static_cast<std::uint32_t>(best);
      }
      return ops::nll(ctx.buffered_dropped, pseudo, all_nodes(q.rows()));
    }
    case ObjectiveKind::SelfDistill:
      return ops::kl_rows(tape.constant(ctx.frozen_clean), ctx.buffered_clean, all_nodes(ctx.frozen_clean.rows()));
    case ObjectiveKind::CrossEntropy:
      return ops::nll(ctx.buffered_dropped, ctx.labels, ctx.train);
    default:
      throw ConfigError(std::string("'") + to_string(kind) + "' is not an ablation objective");
  }
}

}  // namespace aggbuf
