#include "aggbuf/training/sweep.hpp"

#include <algorithm>
#include <sstream>

#include "aggbuf/common/error.hpp"
#include "aggbuf/common/rng.hpp"

namespace aggbuf {

double SweepPoint::at(const std::string& name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw ContractError("sweep point has no axis '" + name + "'");
}

std::string SweepPoint::key() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i].first << '=' << values[i].second;
  return out.str();
}

std::vector<SweepPoint> expand(const std::vector<SweepAxis>& axes) {
  std::vector<SweepPoint> pts(1);
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.name + "' has no values");
    std::vector<SweepPoint> next;
    for (const auto& p : pts)
      for (double v : axis.values) {
        SweepPoint q = p;
        q.values.emplace_back(axis.name, v);
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

std::vector<SweepEntry> grid_sweep(const std::vector<SweepAxis>& axes, const Evaluator& eval, std::uint64_t master,
                                   std::size_t runs) {
  if (runs == 0) throw ConfigError("sweep needs at least one run per point");
  const auto pts = expand(axes);
  std::vector<SweepEntry> entries(pts.size());
  std::vector<std::string> errors(pts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pts.size(); ++i) {
    try {
      SweepEntry& e = entries[i];
      e.index = i;
      e.point = pts[i];
      for (std::size_t r = 0; r < runs; ++r) e.scores.push_back(eval(pts[i], derive_seed(master, {i, r})));
      double s = 0.0;
      for (double x : e.scores) s += x;
      e.mean = s / static_cast<double>(runs);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("sweep point " + pts[i].key() + ": " + errors[i]);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const SweepEntry& a, const SweepEntry& b) { return a.mean > b.mean; });
  return entries;
}

}  // namespace aggbuf
