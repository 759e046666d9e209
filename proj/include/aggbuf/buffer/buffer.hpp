#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aggbuf/models/checkpoint.hpp"
#include "aggbuf/models/forward.hpp"

namespace aggbuf {

// Full:          (D+I)^-1 H^(0:l-1) W
// SingleLayer:   (D+I)^-1 H^(l-1) W
// JKNetStyle:    H^(0:l-1) W
// ResidualStyle: H^(l-1) W
// PlainAgg:      Â H^(l-1) W
enum class BufferVariant { Full, SingleLayer, JKNetStyle, ResidualStyle, PlainAgg };

const char* to_string(BufferVariant v);
BufferVariant buffer_variant_from_string(const std::string& name);

// True for the variants whose input is the whole prefix H^(0:l-1).
bool uses_full_prefix(BufferVariant v);

struct BufferParams {
  BufferVariant variant = BufferVariant::Full;
  // One "bufferL.weight" per aggregating layer; empty for MLP.
  std::vector<NamedTensor> weights;
  bool operator==(const BufferParams&) const = default;
};

std::size_t buffer_input_width(const ModelConfig& cfg, BufferVariant v, std::size_t layer);

struct BufferedModel {
  ModelParams base;
  BufferParams buffers;
  // Dropout on buffer inputs during tuning; the base itself runs in eval mode.
  double dropout = 0.0;
  bool base_was_frozen = false;
};

// Zero buffers, base frozen.
BufferedModel attach(ModelParams base, BufferVariant variant);
// The base as it was handed to attach().
ModelParams detach(const BufferedModel& bm);

// Buffer output for one layer. `prefix` is H^(0)..H^(l-1), `prop` the graph
// actually in use (its degrees drive the (D+I)^-1 factor).
Var buffer_forward(BufferVariant v, std::span<const Var> prefix, const Propagation& prop, Var weight);
Matrix buffer_forward(BufferVariant v, std::span<const Matrix> prefix, const Propagation& prop, const Matrix& weight);

std::vector<Var> bind_buffers(Tape& tape, const BufferParams& b, bool trainable);

// Hook that adds the buffer output to each layer's aggregate. Dropout with
// rate `dropout` is applied to the buffer input when `rng` is non-null.
AggregateHook buffer_hook(BufferVariant v, std::span<const Var> weights, double dropout, Rng* rng);

// Base always runs in eval mode; `mode` only controls buffer-input dropout.
ForwardTrace buffered_forward(Tape& tape, const BufferedModel& bm, const BoundParams& base,
                              std::span<const Var> weights, Var x, const Propagation& prop, Mode mode, Rng* rng);

Matrix buffered_predict(const BufferedModel& bm, const Matrix& x, const Propagation& prop);

// The buffer checkpoint records the base's content hash; loading checks it.
void save_buffer(const BufferedModel& bm, const std::filesystem::path& path, const std::string& base_path);
BufferedModel load_buffer(const std::filesystem::path& path, const ModelParams& base);
// Reads only the base path recorded in a buffer checkpoint.
std::string buffer_base_path(const std::filesystem::path& path);

}  // namespace aggbuf
