#include "aggbuf/buffer/buffer.hpp"

#include "aggbuf/common/error.hpp"

namespace aggbuf {

const char* to_string(BufferVariant v) {
  switch (v) {
    case BufferVariant::Full: return "full";
    case BufferVariant::SingleLayer: return "single";
    case BufferVariant::JKNetStyle: return "jknet";
    case BufferVariant::ResidualStyle: return "residual";
    case BufferVariant::PlainAgg: return "agg";
  }
  return "?";
}

BufferVariant buffer_variant_from_string(const std::string& name) {
  for (auto v : {BufferVariant::Full, BufferVariant::SingleLayer, BufferVariant::JKNetStyle,
                 BufferVariant::ResidualStyle, BufferVariant::PlainAgg})
    if (name == to_string(v)) return v;
  throw ConfigError("unknown buffer variant '" + name + "' (expected full|single|jknet|residual|agg)");
}

bool uses_full_prefix(BufferVariant v) { return v == BufferVariant::Full || v == BufferVariant::JKNetStyle; }

std::size_t buffer_input_width(const ModelConfig& cfg, BufferVariant v, std::size_t layer) {
  if (layer < 1 || layer > cfg.layers) throw ContractError("layer index out of range");
  if (!uses_full_prefix(v)) return cfg.hidden_width(layer - 1);
  std::size_t w = 0;
  for (std::size_t i = 0; i < layer; ++i) w += cfg.hidden_width(i);
  return w;
}

BufferedModel attach(ModelParams base, BufferVariant variant) {
  BufferedModel bm;
  bm.base_was_frozen = base.frozen;
  bm.buffers.variant = variant;
  const ModelConfig& cfg = base.config;
  if (cfg.has_aggregation())
    for (std::size_t l = 1; l <= cfg.layers; ++l)
      bm.buffers.weights.push_back({"buffer" + std::to_string(l) + ".weight",
                                    Matrix(buffer_input_width(cfg, variant, l), cfg.aggregate_width(l))});
  bm.base = std::move(base);
  bm.base.frozen = true;
  return bm;
}

ModelParams detach(const BufferedModel& bm) {
  ModelParams p = bm.base;
  p.frozen = bm.base_was_frozen;
  return p;
}

Var buffer_forward(BufferVariant v, std::span<const Var> prefix, const Propagation& prop, Var weight) {
  if (prefix.empty()) throw ContractError("buffer needs at least H^(0)");
  Var in = uses_full_prefix(v) ? (prefix.size() == 1 ? prefix[0] : ops::concat_cols(prefix)) : prefix.back();
  if (in.rows() != prop.degrees.size())
    throw DimensionError("buffer input has " + std::to_string(in.rows()) + " rows, graph has " +
                         std::to_string(prop.degrees.size()) + " nodes");
  switch (v) {
    case BufferVariant::Full:
    case BufferVariant::SingleLayer: {
      std::vector<double> inv(prop.degrees.size());
      for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / (prop.degrees[i] + 1.0);
      in = ops::scale_rows(in, std::move(inv));
      break;
    }
    case BufferVariant::PlainAgg: in = ops::spmm(prop.norm, in); break;
    case BufferVariant::JKNetStyle:
    case BufferVariant::ResidualStyle: break;
  }
  return ops::matmul(in, weight);
}

Matrix buffer_forward(BufferVariant v, std::span<const Matrix> prefix, const Propagation& prop, const Matrix& weight) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& m : prefix) vars.push_back(tape.constant(m));
  return buffer_forward(v, vars, prop, tape.constant(weight)).value();
}

std::vector<Var> bind_buffers(Tape& tape, const BufferParams& b, bool trainable) {
  std::vector<Var> out;
  for (const auto& w : b.weights) out.push_back(trainable ? tape.parameter(w.value) : tape.constant(w.value));
  return out;
}

AggregateHook buffer_hook(BufferVariant v, std::span<const Var> weights, double dropout, Rng* rng) {
  std::vector<Var> w(weights.begin(), weights.end());
  return [v, w, dropout, rng](std::size_t layer, std::span<const Var> prefix,
                              const Propagation& prop) -> std::optional<Var> {
    if (layer > w.size()) throw ContractError("no buffer for layer " + std::to_string(layer));
    if (rng == nullptr || dropout == 0.0) return buffer_forward(v, prefix, prop, w[layer - 1]);
    std::vector<Var> dropped;
    for (Var h : prefix) dropped.push_back(ops::dropout(h, dropout, *rng));
    return buffer_forward(v, dropped, prop, w[layer - 1]);
  };
}

ForwardTrace buffered_forward(Tape& tape, const BufferedModel& bm, const BoundParams& base,
                              std::span<const Var> weights, Var x, const Propagation& prop, Mode mode, Rng* rng) {
  if (mode == Mode::Train && bm.dropout > 0.0 && rng == nullptr)
    throw ContractError("train-mode buffer dropout needs a generator");
  auto hook = buffer_hook(bm.buffers.variant, weights, bm.dropout, mode == Mode::Train ? rng : nullptr);
  return forward(tape, bm.base.config, base, x, prop, Mode::Eval, nullptr, hook);
}

Matrix buffered_predict(const BufferedModel& bm, const Matrix& x, const Propagation& prop) {
  Tape tape;
  const BoundParams base = bind_constant(tape, bm.base);
  const auto w = bind_buffers(tape, bm.buffers, false);
  return buffered_forward(tape, bm, base, w, tape.constant(x), prop, Mode::Eval, nullptr).log_probs.value();
}

void save_buffer(const BufferedModel& bm, const std::filesystem::path& path, const std::string& base_path) {
  Container c;
  c.header = {{"kind", "buffer"},
              {"variant", to_string(bm.buffers.variant)},
              {"base_hash", content_hash(bm.base.tensors)},
              {"base_path", base_path},
              {"dropout", bm.dropout}};
  c.tensors = bm.buffers.weights;
  write_container(c, path);
}

BufferedModel load_buffer(const std::filesystem::path& path, const ModelParams& base) {
  Container c = read_container(path);
  if (c.header.value("kind", "") != "buffer") throw LoadError(path.string() + " is not a buffer checkpoint");
  const std::string want = c.header.value("base_hash", "");
  if (want != content_hash(base.tensors))
    throw IntegrityError("buffer checkpoint was trained on a different base model");
  BufferedModel bm = attach(base, buffer_variant_from_string(c.header.value("variant", "")));
  bm.dropout = c.header.value("dropout", 0.0);
  if (c.tensors.size() != bm.buffers.weights.size()) throw LoadError("buffer tensor count does not match the base");
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    const auto& w = bm.buffers.weights[i];
    if (c.tensors[i].name != w.name || c.tensors[i].value.rows() != w.value.rows() ||
        c.tensors[i].value.cols() != w.value.cols())
      throw LoadError("buffer tensor '" + c.tensors[i].name + "' does not match the base");
  }
  bm.buffers.weights = std::move(c.tensors);
  return bm;
}

std::string buffer_base_path(const std::filesystem::path& path) {
  return read_container(path).header.value("base_path", "");
}

}  // namespace aggbuf
