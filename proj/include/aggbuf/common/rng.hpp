#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace aggbuf {

using Rng = std::mt19937_64;

// Deterministic child seed from a master seed and an index path, e.g.
// derive_seed(master, {config_index, run}). Order of the path matters.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  for (auto v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t halves[2];
  seq.generate(halves, halves + 2);
  return (static_cast<std::uint64_t>(halves[1]) << 32) | halves[0];
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(path.size() == 0 ? master : derive_seed(master, path));
}

}  // namespace aggbuf
