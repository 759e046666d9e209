#include "aggbuf/models/forward.hpp"

#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

std::string pname(std::size_t l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

Var maybe_add(Var a, const std::optional<Var>& b) { return b ? ops::add(a, *b) : a; }

// Aggregate and update of one layer. Returns H^(l); the pre-update aggregate
// is stored in `aggregate` when the architecture has one.
Var layer(const ModelConfig& cfg, const BoundParams& p, std::size_t l, Var h, const CsrMatrix& adj,
          const std::optional<Var>& agg_b, bool activate, Var* aggregate) {
  auto act = [&](Var v) { return activate ? ops::activation(v, cfg.activation) : v; };
  switch (cfg.arch) {
    case Arch::MLP:
      return act(ops::add_row(ops::matmul(h, p.at(pname(l, "weight"))), p.at(pname(l, "bias"))));
    case Arch::GCN: {
      Var n = maybe_add(ops::spmm(adj, ops::matmul(h, p.at(pname(l, "weight")))), agg_b);
      if (aggregate) *aggregate = n;
      return act(ops::add_row(n, p.at(pname(l, "bias"))));
    }
    case Arch::SAGE: {
      Var n = maybe_add(ops::spmm(adj, ops::matmul(h, p.at(pname(l, "weight_neigh")))), agg_b);
      if (aggregate) *aggregate = n;
      Var self = ops::matmul(h, p.at(pname(l, "weight_self")));
      return act(ops::add_row(ops::add(n, self), p.at(pname(l, "bias"))));
    }
    case Arch::GIN: {
      Var n = maybe_add(ops::spmm(adj, h), agg_b);
      if (aggregate) *aggregate = n;
      Var one_eps = ops::add(p.at(pname(l, "eps")), h.tape().constant(Matrix::scalar(1.0)));
      Var pre = ops::add(n, ops::scale_by(h, one_eps));
      Var z = ops::activation(ops::add_row(ops::matmul(pre, p.at(pname(l, "mlp0.weight"))), p.at(pname(l, "mlp0.bias"))),
                              cfg.activation);
      return act(ops::add_row(ops::matmul(z, p.at(pname(l, "mlp1.weight"))), p.at(pname(l, "mlp1.bias"))));
    }
    case Arch::SGC: {
      Var n = maybe_add(ops::spmm(adj, h), agg_b);
      if (aggregate) *aggregate = n;
      return n;
    }
  }
  throw ContractError("unsupported architecture");
}

}  // namespace

Propagation make_propagation(const Graph& g, const ModelConfig& cfg, IsolatedPolicy isolated) {
  Propagation p;
  p.raw = g.adjacency();
  p.degrees = node_degrees(g);
  const NormScheme s = cfg.effective_norm();
  p.norm = (s.kind == NormKind::Regular && !s.add_self_loops) ? p.raw : normalize(g, s, isolated);
  return p;
}

ForwardTrace forward(Tape& tape, const ModelConfig& cfg, const BoundParams& params, Var x,
                     const Propagation& prop, Mode mode, Rng* rng, const AggregateHook& hook) {
  if (x.cols() != cfg.input_dim())
    throw DimensionError("features have " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(cfg.input_dim()));
  if (cfg.has_aggregation() && prop.norm.rows() != x.rows())
    throw DimensionError("adjacency has " + std::to_string(prop.norm.rows()) + " rows, features " +
                         std::to_string(x.rows()));
  const bool drop = mode == Mode::Train && cfg.dropout > 0.0;
  if (drop && rng == nullptr) throw ContractError("train-mode dropout needs a generator");
  auto input = [&](Var h) { return drop ? ops::dropout(h, cfg.dropout, *rng) : h; };

  ForwardTrace t;
  t.hidden.push_back(x);
  for (std::size_t l = 1; l <= cfg.layers; ++l) {
    std::optional<Var> agg_b;
    if (hook && cfg.has_aggregation()) agg_b = hook(l, std::span<const Var>(t.hidden), prop);
    Var aggregate;
    // SGC only drops before its classifier.
    Var h_in = cfg.arch == Arch::SGC ? t.hidden.back() : input(t.hidden.back());
    const bool last = l == cfg.layers;
    Var h = layer(cfg, params, l, h_in, prop.norm, agg_b, !last, &aggregate);
    t.hidden.push_back(h);
    if (cfg.has_aggregation()) t.aggregates.push_back(aggregate);
  }
  if (cfg.arch == Arch::SGC) {
    t.logits = ops::add_row(ops::matmul(input(t.hidden.back()), params.at("classifier.weight")),
                            params.at("classifier.bias"));
  } else {
    t.logits = t.hidden.back();
  }
  t.log_probs = ops::log_softmax_rows(t.logits);
  return t;
}

Matrix predict(const ModelParams& params, const Matrix& x, const Propagation& prop) {
  Tape tape;
  const BoundParams b = bind_constant(tape, params);
  return forward(tape, params.config, b, tape.constant(x), prop, Mode::Eval, nullptr).log_probs.value();
}

Matrix apply_layer(const ModelParams& params, std::size_t l, const Matrix& h, const CsrMatrix& adjacency,
                   bool activate) {
  const ModelConfig& cfg = params.config;
  if (l < 1 || l > cfg.layers) throw ContractError("layer index out of range");
  Tape tape;
  const BoundParams b = bind_constant(tape, params);
  return layer(cfg, b, l, tape.constant(h), adjacency, std::nullopt, activate, nullptr).value();
}

}  // namespace aggbuf
