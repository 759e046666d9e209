#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "aggbuf/analysis/norms.hpp"
#include "aggbuf/common/error.hpp"
#include "aggbuf/graph/dataset.hpp"
#include "aggbuf/graph/graph.hpp"
#include "aggbuf/graph/sbm.hpp"
#include "fixtures.hpp"

using namespace aggbuf;
using aggbuf::testing::TempDir;

namespace {

Graph triangle() { return Graph::from_edges(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}}); }

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Graph, CanonicalizesEdges) {
  Graph g = Graph::from_edges(4, std::vector<Edge>{{1, 0}, {0, 1}, {2, 2}, {3, 2}});
  ASSERT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
  EXPECT_EQ(g.edges()[1], (Edge{2, 3}));
  EXPECT_EQ(g.adjacency().to_dense(), g.adjacency().transposed().to_dense());
  EXPECT_EQ(g.degree(2), 1u);
  EXPECT_THROW(Graph::from_edges(2, std::vector<Edge>{{0, 5}}), DimensionError);
}

TEST(Normalize, TriangleSymmetricWithLoops) {
  CsrMatrix a = normalize(triangle(), {NormKind::Symmetric, true});
  EXPECT_EQ(a.nnz(), 9u);
  for (double v : a.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Normalize, RandomWalkRowsSumToOne) {
  Rng rng(1);
  Graph g = aggbuf::testing::random_graph(40, 0.1, rng);
  for (bool loops : {true, false}) {
    CsrMatrix a = normalize(g, {NormKind::RandomWalk, loops}, IsolatedPolicy::ZeroRow);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (!loops && g.degree(i) == 0) continue;
      double s = 0;
      for (double v : a.row_values(i)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Normalize, SymmetricSpectralNormIsOne) {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    Graph g = aggbuf::testing::random_graph(30, 0.2, rng);
    Matrix a = normalize(g, {NormKind::Symmetric, true}).to_dense();
    EXPECT_NEAR(spectral_norm(a), 1.0, 1e-9);
  }
}

TEST(Normalize, RegularIsBareAdjacency) {
  Graph g = triangle();
  EXPECT_EQ(normalize(g, {NormKind::Regular, false}).to_dense(), g.adjacency().to_dense());
  Matrix with_loops = normalize(g, {NormKind::Regular, true}).to_dense();
  EXPECT_EQ(with_loops, Matrix(3, 3, 1.0));
}

TEST(Normalize, IsolatedNodePolicy) {
  Graph g = Graph::from_edges(3, std::vector<Edge>{{0, 1}});
  EXPECT_THROW(normalize(g, {NormKind::Symmetric, false}), DegreeZeroError);
  EXPECT_NO_THROW(normalize(g, {NormKind::Regular, false}));
  CsrMatrix z = normalize(g, {NormKind::RandomWalk, false}, IsolatedPolicy::ZeroRow);
  EXPECT_TRUE(z.row_indices(2).empty());
}

TEST(DropEdges, ExtremeRates) {
  Rng rng(3), r2(4);
  Graph g = aggbuf::testing::random_graph(30, 0.3, rng);
  EXPECT_EQ(drop_edges(g, 0.0, r2).graph, g);
  EXPECT_EQ(drop_edges(g, 1.0, r2).graph.num_edges(), 0u);
  EXPECT_THROW(drop_edges(g, 1.5, r2), InvalidRateError);
}

TEST(DropEdges, SubgraphAndSymmetric) {
  Rng rng(5);
  Graph g = aggbuf::testing::random_graph(40, 0.2, rng);
  for (double p : {0.1, 0.5, 0.9}) {
    DropResult d = drop_edges(g, p, rng);
    EXPECT_EQ(d.mask.kept(), d.graph.num_edges());
    for (const Edge& e : d.graph.edges()) EXPECT_TRUE(std::binary_search(g.edges().begin(), g.edges().end(), e));
    EXPECT_EQ(d.graph.adjacency().to_dense(), d.graph.adjacency().transposed().to_dense());
  }
}

TEST(DropEdges, SeedReproducible) {
  Rng g0(6);
  Graph g = aggbuf::testing::random_graph(40, 0.2, g0);
  Rng a(9), b(9);
  EXPECT_EQ(drop_edges(g, 0.5, a).mask.keep, drop_edges(g, 0.5, b).mask.keep);
}

TEST(DropEdges, KeptCountIsBinomial) {
  // 10 000 edges: a path of 10 001 nodes.
  Graph g = aggbuf::testing::path_graph(10001);
  ASSERT_EQ(g.num_edges(), 10000u);
  const double sd = std::sqrt(10000 * 0.25);
  double total = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    const double kept = static_cast<double>(drop_edges(g, 0.5, rng).mask.kept());
    EXPECT_LT(std::abs(kept - 5000.0), 3 * sd + 1) << "seed " << s;
    total += kept;
  }
  EXPECT_LT(std::abs(total / 100 - 5000.0), 3 * sd / 10);
}

TEST(Degrees, PathAndEdgeless) {
  EXPECT_EQ(node_degrees(aggbuf::testing::path_graph(3)), (std::vector<double>{1, 2, 1}));
  EXPECT_EQ(node_degrees(Graph::from_edges(3, std::vector<Edge>{})), (std::vector<double>{0, 0, 0}));
}

TEST(Homophily, SimpleCases) {
  Graph p = aggbuf::testing::path_graph(4);
  std::vector<std::uint32_t> same{2, 2, 2, 2}, alt{0, 1, 0, 1};
  for (auto h : node_homophily(p, same)) EXPECT_EQ(*h, 1.0);
  for (auto h : node_homophily(p, alt)) EXPECT_EQ(*h, 0.0);
}

TEST(Homophily, HandBuiltGraph) {
  // 0-1, 0-2, 0-3, 3-4; node 5 isolated.
  Graph g = Graph::from_edges(6, std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {3, 4}});
  std::vector<std::uint32_t> y{0, 0, 1, 0, 1, 1};
  auto h = node_homophily(g, y);
  EXPECT_DOUBLE_EQ(*h[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*h[1], 1.0);
  EXPECT_DOUBLE_EQ(*h[2], 0.0);
  EXPECT_DOUBLE_EQ(*h[3], 0.5);
  EXPECT_DOUBLE_EQ(*h[4], 0.0);
  EXPECT_FALSE(h[5].has_value());
}

TEST(Sbm, Deterministic) {
  EXPECT_EQ(aggbuf::testing::tiny_sbm(3), aggbuf::testing::tiny_sbm(3));
  EXPECT_FALSE(aggbuf::testing::tiny_sbm(3) == aggbuf::testing::tiny_sbm(4));
}

TEST(Sbm, NoInterClassEdgesWhenPoutZero) {
  SbmConfig c;
  c.n = 200;
  c.classes = 2;
  c.p_in = 0.05;
  c.p_out = 0.0;
  DatasetBundle b = generate_sbm(c);
  EXPECT_GT(b.graph.num_edges(), 0u);
  for (const Edge& e : b.graph.edges()) EXPECT_EQ(b.labels[e.u], b.labels[e.v]);
}

TEST(Sbm, IntraClassCountIsBinomial) {
  SbmConfig c;
  c.n = 200;
  c.classes = 2;
  c.p_in = 0.05;
  c.p_out = 0.01;
  // Two blocks of 100: 2 * C(100, 2) intra pairs.
  const double pairs = 2 * 100.0 * 99.0 / 2.0;
  const double mu = pairs * c.p_in, sd = std::sqrt(pairs * c.p_in * (1 - c.p_in));
  double total = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    c.seed = s;
    DatasetBundle b = generate_sbm(c);
    double intra = 0;
    for (const Edge& e : b.graph.edges()) intra += b.labels[e.u] == b.labels[e.v] ? 1 : 0;
    EXPECT_LT(std::abs(intra - mu), 3 * sd + 1) << "seed " << s;
    total += intra;
  }
  EXPECT_LT(std::abs(total / 50 - mu), 3 * sd / std::sqrt(50.0));
}

TEST(Sbm, SplitsAreTenTenEighty) {
  DatasetBundle b = aggbuf::testing::tiny_sbm(1, 200);
  ASSERT_EQ(b.splits.size(), 2u);
  for (const Split& s : b.splits) {
    EXPECT_EQ(s.train.size(), 20u);
    EXPECT_EQ(s.val.size(), 20u);
    EXPECT_EQ(s.test.size(), 160u);
  }
  EXPECT_NE(b.splits[0].train, b.splits[1].train);
  EXPECT_NO_THROW(b.validate());
}

TEST(Sbm, RejectsBadConfig) {
  SbmConfig c;
  c.p_out = 0.5;
  c.p_in = 0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SbmConfig{};
  c.sigma = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Dataset, RoundTripIsExact) {
  TempDir dir("ds");
  DatasetBundle b = aggbuf::testing::tiny_sbm(5);
  save_dataset(b, dir.path() / "a");
  DatasetBundle back = load_dataset(dir.path() / "a");
  EXPECT_EQ(back, b);
  save_dataset(back, dir.path() / "b");
  for (const char* f : {"meta.json", "edges.bin", "features.bin", "labels.bin", "splits.json"})
    EXPECT_EQ(file_bytes(dir.path() / "a" / f), file_bytes(dir.path() / "b" / f)) << f;
}

TEST(Dataset, LoaderDedupsAndStripsLoops) {
  TempDir dir("dedup");
  DatasetBundle b = aggbuf::testing::tiny_sbm(6, 30);
  save_dataset(b, dir.path());
  // Append reversed duplicates and a self-loop.
  {
    std::ofstream out(dir.path() / "edges.bin", std::ios::binary | std::ios::app);
    const Edge& e = b.graph.edges().front();
    std::uint32_t extra[] = {e.v, e.u, 4, 4};
    out.write(reinterpret_cast<const char*>(extra), sizeof extra);
  }
  EXPECT_EQ(load_dataset(dir.path()).graph, b.graph);
}

TEST(Dataset, DescriptiveLoadErrors) {
  TempDir dir("bad");
  DatasetBundle b = aggbuf::testing::tiny_sbm(7, 30);
  save_dataset(b, dir.path());
  std::filesystem::resize_file(dir.path() / "features.bin", 12);
  EXPECT_THROW(load_dataset(dir.path()), LoadError);

  save_dataset(b, dir.path());
  {
    std::ofstream out(dir.path() / "labels.bin", std::ios::binary | std::ios::trunc);
    std::vector<std::uint16_t> bad(30, 9);
    out.write(reinterpret_cast<const char*>(bad.data()), 60);
  }
  EXPECT_THROW(load_dataset(dir.path()), LoadError);

  save_dataset(b, dir.path());
  { std::ofstream(dir.path() / "meta.json") << "{\"name\": 1}"; }
  EXPECT_THROW(load_dataset(dir.path()), LoadError);

  EXPECT_THROW(load_dataset(dir.path() / "missing"), LoadError);
}

TEST(Dataset, OverlappingSplitsRejected) {
  DatasetBundle b = aggbuf::testing::tiny_sbm(8, 30);
  b.splits[0].val.push_back(b.splits[0].train.front());
  EXPECT_THROW(b.validate(), LoadError);
  EXPECT_THROW(b.split(5), ConfigError);
}
