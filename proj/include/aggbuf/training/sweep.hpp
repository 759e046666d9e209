#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace aggbuf {

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepPoint {
  std::vector<std::pair<std::string, double>> values;

  double at(const std::string& name) const;
  // "name=value,..." in axis order.
  std::string key() const;
};

// Cartesian product, first axis varying slowest.
std::vector<SweepPoint> expand(const std::vector<SweepAxis>& axes);

// Returns a validation accuracy for one (point, run seed). Must be safe to
// call concurrently.
using Evaluator = std::function<double(const SweepPoint&, std::uint64_t seed)>;

struct SweepEntry {
  std::size_t index = 0;
  SweepPoint point;
  std::vector<double> scores;
  double mean = 0.0;
};

// Every point runs `runs` times with seeds derived from (master, index,
// run). Sorted by mean score, ties by index.
std::vector<SweepEntry> grid_sweep(const std::vector<SweepAxis>& axes, const Evaluator& eval, std::uint64_t master,
                                   std::size_t runs = 5);

}  // namespace aggbuf
