#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aggbuf/buffer/buffer.hpp"
#include "aggbuf/graph/dataset.hpp"
#include "aggbuf/losses/losses.hpp"

namespace aggbuf {

struct TrainConfig {
  double lr = 1e-2;
  double weight_decay = 0.0;
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;
  std::uint64_t seed = 0;
  double drop_edge = 0.0;
  double lambda = 1.0;
  double dropout = 0.0;
  ObjectiveKind objective = ObjectiveKind::RC;
  // Treat the clean branch of the robustness term as a constant target.
  bool stop_gradient_clean = false;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double bias_term = 0.0;
  double robust_term = 0.0;
  double val_acc = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

// Epoch k is the state after k optimizer steps; epoch 0 is the starting point.
struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;

  std::string to_jsonl() const;
  void write_jsonl(const std::filesystem::path& path) const;
  void write_csv(const std::filesystem::path& path) const;
  bool operator==(const History&) const = default;
};

struct PretrainResult {
  ModelParams params;
  History history;
};

// Cross-entropy on the train nodes with early stopping on validation
// accuracy. drop_edge > 0 gives the DropEdge baseline.
PretrainResult pretrain(const ModelConfig& cfg, const TrainConfig& tc, const DatasetBundle& data, const Split& split);

struct TuneResult {
  BufferedModel model;
  History history;
  std::string base_hash;
};

// Only the buffer weights move; the base content hash is checked at the end.
TuneResult tune_buffer(BufferedModel bm, const TrainConfig& tc, const DatasetBundle& data, const Split& split);

// Base and buffer trained together from a fresh init with cross-entropy on
// the train nodes plus lambda times the robustness term. Ablation only.
TuneResult train_joint(const ModelConfig& cfg, BufferVariant variant, const TrainConfig& tc,
                       const DatasetBundle& data, const Split& split);

}  // namespace aggbuf
