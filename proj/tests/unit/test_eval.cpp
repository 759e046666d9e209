#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "aggbuf/common/error.hpp"
#include "aggbuf/eval/metrics.hpp"
#include "aggbuf/eval/report.hpp"
#include "aggbuf/models/forward.hpp"
#include "aggbuf/models/params.hpp"
#include "fixtures.hpp"

using namespace aggbuf;

namespace {

Predictor gcn_predictor(const ModelParams& p, const Matrix& x) {
  return [&p, &x](const Graph& g) { return predict(p, x, make_propagation(g, p.config, IsolatedPolicy::ZeroRow)); };
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Accuracy, HandCases) {
  Matrix m = Matrix::from_rows({{0.1, 0.9}, {0.8, 0.2}, {0.5, 0.5}, {0.0, 1.0}});
  std::vector<std::uint32_t> labels{1, 0, 1, 1};
  std::vector<std::uint32_t> all{0, 1, 2, 3};
  // Row 2 is a tie and resolves to class 0.
  EXPECT_DOUBLE_EQ(accuracy(m, labels, all), 0.75);
  EXPECT_EQ(argmax_row(m, 2), 0u);
  std::vector<std::uint32_t> sub{0, 3};
  EXPECT_DOUBLE_EQ(accuracy(m, labels, sub), 1.0);
  EXPECT_THROW(accuracy(m, labels, std::vector<std::uint32_t>{}), ContractError);
  EXPECT_THROW(accuracy(m, labels, std::vector<std::uint32_t>{9}), DimensionError);
}

TEST(Groups, DegreeThirds) {
  // Star on 0..4 plus a path 5-6-7, node 8 isolated.
  Graph g = Graph::from_edges(9, std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {5, 6}, {6, 7}});
  std::vector<std::uint32_t> test{0, 1, 2, 3, 4, 5, 6, 7, 8};
  NodeGroups grp = degree_groups(g, test);
  ASSERT_EQ(grp.low.size(), 3u);
  ASSERT_EQ(grp.high.size(), 3u);
  EXPECT_EQ(grp.low, (std::vector<std::uint32_t>{8, 1, 2}));
  // Degree-1 ties break by id, so 6 (deg 2) and then the center.
  EXPECT_EQ(grp.high, (std::vector<std::uint32_t>{7, 6, 0}));
  EXPECT_THROW(degree_groups(g, std::vector<std::uint32_t>{}), ContractError);
}

TEST(Groups, HomophilySkipsIsolated) {
  Graph g = Graph::from_edges(8, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  std::vector<std::uint32_t> labels{0, 0, 0, 1, 1, 1, 0, 0};
  std::vector<std::uint32_t> test{0, 1, 2, 3, 4, 5, 6, 7};
  NodeGroups grp = homophily_groups(g, labels, test);
  // Six nodes have edges: h = 1, 1, .5, .5, 1, 1.
  ASSERT_EQ(grp.low.size(), 2u);
  EXPECT_EQ(grp.low, (std::vector<std::uint32_t>{2, 3}));
  EXPECT_EQ(grp.high, (std::vector<std::uint32_t>{4, 5}));
  for (auto i : grp.low) EXPECT_LT(i, 6u);
}

TEST(Stats, MeanAndStd) {
  std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(xs), 2.5);
  EXPECT_NEAR(sample_std(xs), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(sample_std(std::vector<double>{7}), 0.0);
}

TEST(Removal, EndpointsMatchDirectForward) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(3);
  ModelParams gcn = init_params(make_config(Arch::GCN, 8, 16, 3), 3);
  Predictor pg = gcn_predictor(gcn, d.features);
  const auto& test = d.splits[0].test;
  std::vector<double> ratios{1.0, 0.5, 0.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  auto pts = edge_removal_sweep(pg, d, test, ratios, seeds);
  ASSERT_EQ(pts.size(), 3u);
  const double full = accuracy(pg(d.graph), d.labels, test);
  for (double a : pts[0].per_seed) EXPECT_EQ(a, full);
  EXPECT_EQ(pts[0].std, 0.0);
  const double edgeless = accuracy(pg(Graph::from_edges(d.graph.num_nodes(), std::vector<Edge>{})), d.labels, test);
  for (double a : pts[2].per_seed) EXPECT_EQ(a, edgeless);

  ModelParams mlp = init_params(make_config(Arch::MLP, 8, 16, 3), 3);
  Predictor pm = gcn_predictor(mlp, d.features);
  auto mp = edge_removal_sweep(pm, d, test, ratios, seeds);
  for (const auto& p : mp)
    for (double a : p.per_seed) EXPECT_EQ(a, mp[0].per_seed[0]);
  EXPECT_THROW(edge_removal_sweep(pg, d, test, std::vector<double>{1.5}, seeds), InvalidRateError);
}

TEST(Removal, SeedsControlMasks) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(4);
  ModelParams gcn = init_params(make_config(Arch::GCN, 8, 16, 3), 4);
  Predictor pg = gcn_predictor(gcn, d.features);
  std::vector<double> ratios{0.3};
  std::vector<std::uint64_t> seeds{5, 6};
  auto a = edge_removal_sweep(pg, d, d.splits[0].test, ratios, seeds);
  auto b = edge_removal_sweep(pg, d, d.splits[0].test, ratios, seeds);
  EXPECT_EQ(a[0].per_seed, b[0].per_seed);
}

TEST(Report, AggregateAndBytes) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(5);
  std::vector<MetricsReport> runs;
  std::vector<double> ratios{1.0, 0.5};
  std::vector<std::uint64_t> seeds{1, 2};
  std::vector<ModelParams> models;
  for (std::uint64_t s = 0; s < 3; ++s) models.push_back(init_params(make_config(Arch::GCN, 8, 16, 3), s));
  for (std::uint64_t s = 0; s < 3; ++s)
    runs.push_back(evaluate(gcn_predictor(models[s], d.features), d, d.splits[0], ratios, seeds, "gcn", s));

  auto single = report_json(std::span(runs).first(1));
  EXPECT_EQ(single["aggregate"]["overall"]["std"].get<double>(), 0.0);
  EXPECT_EQ(single["aggregate"]["overall"]["mean"].get<double>(), runs[0].overall);

  auto j = report_json(runs);
  std::vector<double> xs{runs[0].overall, runs[1].overall, runs[2].overall};
  EXPECT_DOUBLE_EQ(j["aggregate"]["overall"]["mean"].get<double>(), mean(xs));
  EXPECT_DOUBLE_EQ(j["aggregate"]["overall"]["std"].get<double>(), sample_std(xs));
  EXPECT_TRUE(j["aggregate"].contains("removal_0.5"));
  EXPECT_EQ(j["runs"].size(), 3u);
  EXPECT_EQ(j["runs"][1]["group_sizes"]["test"].get<std::size_t>(), d.splits[0].test.size());
  EXPECT_EQ(nlohmann::json::parse(j.dump()), j);

  aggbuf::testing::TempDir dir("report");
  emit_report(runs, dir.path() / "a.json");
  emit_report(runs, dir.path() / "b.json");
  EXPECT_EQ(slurp(dir.path() / "a.json"), slurp(dir.path() / "b.json"));
}

TEST(Report, GroupSizesAreThirds) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(6);
  ModelParams p = init_params(make_config(Arch::GCN, 8, 16, 3), 6);
  auto r = evaluate(gcn_predictor(p, d.features), d, d.splits[0], {}, {}, "gcn", 6);
  EXPECT_EQ(r.n_head, r.n_test / 3);
  EXPECT_EQ(r.n_tail, r.n_test / 3);
  EXPECT_LE(r.n_homophilous, r.n_test / 3);
  EXPECT_TRUE(r.removal.empty());
}
