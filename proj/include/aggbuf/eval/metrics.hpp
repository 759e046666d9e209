#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aggbuf/graph/dataset.hpp"
#include "aggbuf/losses/losses.hpp"

namespace aggbuf {

// Argmax ties resolve to the lowest class index.
std::size_t argmax_row(const Matrix& m, std::size_t row);
double accuracy(const Matrix& logq, std::span<const std::uint32_t> labels, std::span<const std::uint32_t> nodes);

struct NodeGroups {
  std::vector<std::uint32_t> low;   // tail / heterophilous third
  std::vector<std::uint32_t> high;  // head / homophilous third
};

// Sorted by (degree, id); tail = first n/3, head = last n/3.
NodeGroups degree_groups(const Graph& g, std::span<const std::uint32_t> test);
// Same ranking on node homophily; degree-0 nodes are left out first.
NodeGroups homophily_groups(const Graph& g, std::span<const std::uint32_t> labels,
                            std::span<const std::uint32_t> test);

struct RemovalPoint {
  double ratio = 1.0;  // fraction of edges kept
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> per_seed;
};

// Test accuracy with only `ratio` of the edges kept, one mask per seed.
std::vector<RemovalPoint> edge_removal_sweep(const Predictor& predict, const DatasetBundle& data,
                                             std::span<const std::uint32_t> test, std::span<const double> ratios,
                                             std::span<const std::uint64_t> seeds);

struct MetricsReport {
  std::string model;
  std::uint64_t seed = 0;
  std::string split;
  double overall = 0.0;
  double head = 0.0;
  double tail = 0.0;
  double homophilous = 0.0;
  double heterophilous = 0.0;
  std::size_t n_test = 0;
  std::size_t n_head = 0;
  std::size_t n_tail = 0;
  std::size_t n_homophilous = 0;
  std::size_t n_heterophilous = 0;
  std::vector<RemovalPoint> removal;
};

MetricsReport evaluate(const Predictor& predict, const DatasetBundle& data, const Split& split,
                       std::span<const double> removal_ratios, std::span<const std::uint64_t> removal_seeds,
                       std::string model, std::uint64_t seed);

double mean(std::span<const double> xs);
// Unbiased (n-1); 0 for fewer than two values.
double sample_std(std::span<const double> xs);

}  // namespace aggbuf
