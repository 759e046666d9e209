#pragma once

#include <cstddef>
#include <cstdint>

#include "aggbuf/graph/dataset.hpp"

namespace aggbuf {

struct SbmConfig {
  std::size_t n = 1000;
  std::size_t classes = 4;
  double p_in = 0.01;
  double p_out = 0.001;
  std::size_t feature_dim = 32;
  // Class c has mean mu on feature c and 0 elsewhere.
  double mu = 1.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::size_t num_splits = 10;

  // Throws ConfigError on an invalid combination.
  void validate() const;
};

// Labels are contiguous blocks of size ~n/C. Features are rounded to float32
// so a saved bundle loads back identical. Splits are 10/10/80.
DatasetBundle generate_sbm(const SbmConfig& cfg);

}  // namespace aggbuf
