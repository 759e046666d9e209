#include "aggbuf/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

std::string removal_key(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "removal_%g", ratio);
  return buf;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json removal = nlohmann::json::array();
  for (const auto& p : r.removal)
    removal.push_back({{"ratio", p.ratio}, {"mean", p.mean}, {"std", p.std}, {"per_seed", p.per_seed}});
  return {{"model", r.model},
          {"seed", r.seed},
          {"split", r.split},
          {"overall", r.overall},
          {"head", r.head},
          {"tail", r.tail},
          {"homophilous", r.homophilous},
          {"heterophilous", r.heterophilous},
          {"group_sizes",
           {{"test", r.n_test},
            {"head", r.n_head},
            {"tail", r.n_tail},
            {"homophilous", r.n_homophilous},
            {"heterophilous", r.n_heterophilous}}},
          {"removal", removal}};
}

nlohmann::json report_json(std::span<const MetricsReport> runs) {
  std::map<std::string, std::vector<double>> metrics;
  nlohmann::json out;
  out["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    out["runs"].push_back(to_json(r));
    metrics["overall"].push_back(r.overall);
    metrics["head"].push_back(r.head);
    metrics["tail"].push_back(r.tail);
    metrics["homophilous"].push_back(r.homophilous);
    metrics["heterophilous"].push_back(r.heterophilous);
    for (const auto& p : r.removal) metrics[removal_key(p.ratio)].push_back(p.mean);
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [name, xs] : metrics) agg[name] = {{"mean", mean(xs)}, {"std", sample_std(xs)}};
  out["aggregate"] = agg;
  return out;
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

void emit_report(std::span<const MetricsReport> runs, const std::filesystem::path& path) {
  write_json_file(report_json(runs), path);
}

}  // namespace aggbuf
