#include "aggbuf/training/pipeline.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "aggbuf/common/error.hpp"
#include "aggbuf/eval/metrics.hpp"
#include "aggbuf/training/adam.hpp"

namespace aggbuf {
namespace {

struct StepLoss {
  Var total;
  double bias = 0.0;
  double robust = 0.0;
};

struct Loop {
  std::function<StepLoss(Tape&)> forward;
  std::function<double()> validate;
  std::function<void(Tape&)> step;
  std::function<void()> snapshot;
};

History run(const TrainConfig& tc, const Loop& loop) {
  History h;
  for (std::size_t k = 0;; ++k) {
    Tape tape;
    StepLoss loss;
    try {
      loss = loop.forward(tape);
    } catch (const NumericError& e) {
      throw TrainingError(std::string("training diverged: ") + e.what(), k);
    }
    const double val = loop.validate();
    h.epochs.push_back({k, loss.total.value().item(), loss.bias, loss.robust, val});
    if (k == 0 || val > h.best_val) {
      h.best_val = val;
      h.best_epoch = k;
      loop.snapshot();
    } else if (k - h.best_epoch >= tc.patience) {
      break;
    }
    if (k == tc.max_epochs) break;
    tape.backward(loss.total);
    loop.step(tape);
  }
  return h;
}

std::vector<const Matrix*> grads_of(const Tape& tape, const std::vector<Var>& vars) {
  std::vector<const Matrix*> g;
  for (const Var& v : vars) g.push_back(tape.grad(v));
  return g;
}

Propagation dropped_propagation(const Graph& g, const ModelConfig& cfg, double p, Rng& rng) {
  return make_propagation(drop_edges(g, p, rng).graph, cfg, IsolatedPolicy::ZeroRow);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (patience > max_epochs) throw ConfigError("patience must not exceed max epochs");
  if (!(drop_edge >= 0.0 && drop_edge <= 1.0)) throw ConfigError("drop-edge rate must lie in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
}

std::string History::to_jsonl() const {
  std::ostringstream out;
  for (const auto& e : epochs)
    out << nlohmann::json{{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"bias_term", e.bias_term},
                          {"robust_term", e.robust_term},
                          {"val_acc", e.val_acc}}
               .dump()
        << '\n';
  return out.str();
}

void History::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_jsonl();
}

void History::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_loss,bias_term,robust_term,val_acc\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.train_loss << ',' << e.bias_term << ',' << e.robust_term << ',' << e.val_acc << '\n';
}

PretrainResult pretrain(const ModelConfig& cfg, const TrainConfig& tc, const DatasetBundle& data, const Split& split) {
  tc.validate();
  ModelConfig mc = cfg;
  mc.dropout = tc.dropout;
  PretrainResult res;
  ModelParams params = init_params(mc, derive_seed(tc.seed, {0}));
  Rng rng = make_rng(tc.seed, {1});
  const Propagation clean = make_propagation(data.graph, mc);
  Adam adam({tc.lr, tc.weight_decay});
  Propagation dropped;
  BoundParams bound;

  Loop loop;
  loop.forward = [&](Tape& tape) {
    bound = bind(tape, params);
    const Propagation* prop = &clean;
    if (tc.drop_edge > 0.0) {
      dropped = dropped_propagation(data.graph, mc, tc.drop_edge, rng);
      prop = &dropped;
    }
    auto t = forward(tape, mc, bound, tape.constant(data.features), *prop, Mode::Train, &rng);
    Var ce = cross_entropy(t.log_probs, data.labels, split.train);
    return StepLoss{ce, ce.value().item(), 0.0};
  };
  loop.validate = [&] { return accuracy(predict(params, data.features, clean), data.labels, split.val); };
  loop.step = [&](Tape& tape) {
    std::vector<ParamRef> refs;
    for (auto& t : params.tensors) refs.push_back({t.name, &t.value, false});
    adam.step(refs, grads_of(tape, bound.vars));
  };
  loop.snapshot = [&] { res.params = params; };
  res.history = run(tc, loop);
  return res;
}

TuneResult tune_buffer(BufferedModel bm, const TrainConfig& tc, const DatasetBundle& data, const Split& split) {
  tc.validate();
  if (!bm.base.frozen) throw ContractError("tune_buffer expects an attached (frozen) base");
  for (const auto& w : bm.buffers.weights)
    for (double v : w.value.data())
      if (v != 0.0) throw ContractError("tune_buffer expects zero-initialized buffers");
  bm.dropout = tc.dropout;
  const ModelConfig& cfg = bm.base.config;
  TuneResult res;
  res.base_hash = content_hash(bm.base.tensors);
  Rng rng = make_rng(tc.seed, {2});
  const Propagation clean = make_propagation(data.graph, cfg);
  const Matrix frozen_clean = predict(bm.base, data.features, clean);
  const auto nodes = all_nodes(data.graph.num_nodes());
  const std::span<const std::uint32_t> robust_nodes =
      tc.objective == ObjectiveKind::RCTrainOnly ? std::span<const std::uint32_t>(split.train) : nodes;
  Adam adam({tc.lr, tc.weight_decay});
  Propagation dropped;
  std::vector<Var> wvars;

  Loop loop;
  loop.forward = [&](Tape& tape) {
    const BoundParams base = bind(tape, bm.base);
    wvars = bind_buffers(tape, bm.buffers, true);
    dropped = dropped_propagation(data.graph, cfg, tc.drop_edge, rng);
    Var x = tape.constant(data.features);
    Var qc = buffered_forward(tape, bm, base, wvars, x, clean, Mode::Train, &rng).log_probs;
    Var qd = buffered_forward(tape, bm, base, wvars, x, dropped, Mode::Train, &rng).log_probs;
    if (tc.objective == ObjectiveKind::RC || tc.objective == ObjectiveKind::RCTrainOnly) {
      Var b = l_bias(frozen_clean, qc, split.train);
      Var r = l_robust(qc, qd, robust_nodes, tc.stop_gradient_clean);
      Var total = tc.lambda == 0.0 ? b : ops::add(b, ops::scale(r, tc.lambda));
      return StepLoss{total, b.value().item(), r.value().item()};
    }
    Var obj = ablation_objective(tc.objective, {qc, qd, frozen_clean, data.labels, split.train});
    return StepLoss{obj, obj.value().item(), 0.0};
  };
  loop.validate = [&] { return accuracy(buffered_predict(bm, data.features, clean), data.labels, split.val); };
  loop.step = [&](Tape& tape) {
    std::vector<ParamRef> refs;
    for (auto& w : bm.buffers.weights) refs.push_back({w.name, &w.value, false});
    adam.step(refs, grads_of(tape, wvars));
  };
  loop.snapshot = [&] { res.model = bm; };
  res.history = run(tc, loop);
  if (content_hash(res.model.base.tensors) != res.base_hash || content_hash(bm.base.tensors) != res.base_hash)
    throw IntegrityError("base parameters changed during buffer tuning");
  return res;
}

TuneResult train_joint(const ModelConfig& cfg, BufferVariant variant, const TrainConfig& tc,
                       const DatasetBundle& data, const Split& split) {
  tc.validate();
  BufferedModel bm = attach(init_params(cfg, derive_seed(tc.seed, {0})), variant);
  bm.base.frozen = false;
  bm.dropout = tc.dropout;
  TuneResult res;
  Rng rng = make_rng(tc.seed, {3});
  const Propagation clean = make_propagation(data.graph, cfg);
  const auto nodes = all_nodes(data.graph.num_nodes());
  Adam adam({tc.lr, tc.weight_decay});
  Propagation dropped;
  BoundParams base;
  std::vector<Var> wvars;

  Loop loop;
  loop.forward = [&](Tape& tape) {
    base = bind(tape, bm.base);
    wvars = bind_buffers(tape, bm.buffers, true);
    dropped = dropped_propagation(data.graph, cfg, tc.drop_edge, rng);
    Var x = tape.constant(data.features);
    Var qc = buffered_forward(tape, bm, base, wvars, x, clean, Mode::Train, &rng).log_probs;
    Var qd = buffered_forward(tape, bm, base, wvars, x, dropped, Mode::Train, &rng).log_probs;
    Var ce = cross_entropy(qc, data.labels, split.train);
    Var r = l_robust(qc, qd, nodes, tc.stop_gradient_clean);
    return StepLoss{ops::add(ce, ops::scale(r, tc.lambda)), ce.value().item(), r.value().item()};
  };
  loop.validate = [&] { return accuracy(buffered_predict(bm, data.features, clean), data.labels, split.val); };
  loop.step = [&](Tape& tape) {
    std::vector<ParamRef> refs;
    std::vector<Var> vars = base.vars;
    for (auto& t : bm.base.tensors) refs.push_back({t.name, &t.value, false});
    for (auto& w : bm.buffers.weights) refs.push_back({w.name, &w.value, false});
    vars.insert(vars.end(), wvars.begin(), wvars.end());
    adam.step(refs, grads_of(tape, vars));
  };
  loop.snapshot = [&] { res.model = bm; };
  res.history = run(tc, loop);
  res.model.base.frozen = true;
  res.base_hash = content_hash(res.model.base.tensors);
  return res;
}

}  // namespace aggbuf
