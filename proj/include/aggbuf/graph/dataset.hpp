#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aggbuf/graph/graph.hpp"
#include "aggbuf/tensor/matrix.hpp"

namespace aggbuf {

struct Split {
  std::string name;
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
  bool operator==(const Split&) const = default;
};

struct DatasetBundle {
  std::string name;
  Graph graph;
  Matrix features;
  std::vector<std::uint32_t> labels;
  std::size_t num_classes = 0;
  std::vector<Split> splits;

  const Split& split(std::size_t k) const;
  // Throws LoadError when the bundle violates its invariants.
  void validate() const;
  bool operator==(const DatasetBundle&) const = default;
};

// Directory layout: meta.json, edges.bin (u32 pairs), features.bin (f32,
// row-major), labels.bin (u16), splits.json. All binaries little-endian.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

// Random train/val/test partition with round(n*train_frac), round(n*val_frac)
// and the remainder as test.
Split random_split(std::size_t n, double train_frac, double val_frac, Rng& rng, std::string name);

}  // namespace aggbuf
