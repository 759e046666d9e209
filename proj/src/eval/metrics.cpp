#include "aggbuf/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

NodeGroups thirds(std::vector<std::pair<double, std::uint32_t>> ranked) {
  std::sort(ranked.begin(), ranked.end());
  const std::size_t k = ranked.size() / 3;
  NodeGroups g;
  for (std::size_t i = 0; i < k; ++i) g.low.push_back(ranked[i].second);
  for (std::size_t i = ranked.size() - k; i < ranked.size(); ++i) g.high.push_back(ranked[i].second);
  return g;
}

double accuracy_or_zero(const Matrix& logq, std::span<const std::uint32_t> labels,
                        std::span<const std::uint32_t> nodes) {
  return nodes.empty() ? 0.0 : accuracy(logq, labels, nodes);
}

}  // namespace

std::size_t argmax_row(const Matrix& m, std::size_t row) {
  const auto r = m.row(row);
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

double accuracy(const Matrix& logq, std::span<const std::uint32_t> labels, std::span<const std::uint32_t> nodes) {
  if (nodes.empty()) throw ContractError("accuracy: empty node set");
  std::size_t hit = 0;
  for (auto i : nodes) {
    if (i >= logq.rows() || i >= labels.size()) throw DimensionError("accuracy: node id out of range");
    hit += argmax_row(logq, i) == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

NodeGroups degree_groups(const Graph& g, std::span<const std::uint32_t> test) {
  if (test.empty()) throw ContractError("degree_groups: empty test set");
  std::vector<std::pair<double, std::uint32_t>> ranked;
  for (auto i : test) ranked.emplace_back(static_cast<double>(g.degree(i)), i);
  return thirds(std::move(ranked));
}

NodeGroups homophily_groups(const Graph& g, std::span<const std::uint32_t> labels,
                            std::span<const std::uint32_t> test) {
  if (test.empty()) throw ContractError("homophily_groups: empty test set");
  const auto h = node_homophily(g, labels);
  std::vector<std::pair<double, std::uint32_t>> ranked;
  for (auto i : test)
    if (h[i]) ranked.emplace_back(*h[i], i);
  return thirds(std::move(ranked));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::vector<RemovalPoint> edge_removal_sweep(const Predictor& predict, const DatasetBundle& data,
                                             std::span<const std::uint32_t> test, std::span<const double> ratios,
                                             std::span<const std::uint64_t> seeds) {
  for (double r : ratios)
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidRateError("removal ratio must lie in [0, 1]");
  if (seeds.empty()) throw ContractError("edge_removal_sweep needs at least one seed");
  const std::size_t cells = ratios.size() * seeds.size();
  std::vector<double> acc(cells);
  std::vector<std::string> errors(cells);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < cells; ++c) {
    try {
      const double ratio = ratios[c / seeds.size()];
      Rng rng(seeds[c % seeds.size()]);
      const auto kept = drop_edges(data.graph, 1.0 - ratio, rng);
      acc[c] = accuracy(predict(kept.graph), data.labels, test);
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error("edge removal sweep: " + e);
  std::vector<RemovalPoint> out;
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    RemovalPoint p;
    p.ratio = ratios[r];
    p.per_seed.assign(acc.begin() + static_cast<std::ptrdiff_t>(r * seeds.size()),
                      acc.begin() + static_cast<std::ptrdiff_t>((r + 1) * seeds.size()));
    p.mean = mean(p.per_seed);
    p.std = sample_std(p.per_seed);
    out.push_back(std::move(p));
  }
  return out;
}

MetricsReport evaluate(const Predictor& predict, const DatasetBundle& data, const Split& split,
                       std::span<const double> removal_ratios, std::span<const std::uint64_t> removal_seeds,
                       std::string model, std::uint64_t seed) {
  const Matrix logq = predict(data.graph);
  MetricsReport r;
  r.model = std::move(model);
  r.seed = seed;
  r.split = split.name;
  r.overall = accuracy(logq, data.labels, split.test);
  r.n_test = split.test.size();
  const auto deg = degree_groups(data.graph, split.test);
  r.head = accuracy_or_zero(logq, data.labels, deg.high);
  r.tail = accuracy_or_zero(logq, data.labels, deg.low);
  r.n_head = deg.high.size();
  r.n_tail = deg.low.size();
  const auto hom = homophily_groups(data.graph, data.labels, split.test);
  r.homophilous = accuracy_or_zero(logq, data.labels, hom.high);
  r.heterophilous = accuracy_or_zero(logq, data.labels, hom.low);
  r.n_homophilous = hom.high.size();
  r.n_heterophilous = hom.low.size();
  if (!removal_ratios.empty()) r.removal = edge_removal_sweep(predict, data, split.test, removal_ratios, removal_seeds);
  return r;
}

}  // namespace aggbuf
