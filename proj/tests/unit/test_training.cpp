#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "aggbuf/common/error.hpp"
#include "aggbuf/eval/metrics.hpp"
#include "aggbuf/training/adam.hpp"
#include "aggbuf/training/pipeline.hpp"
#include "aggbuf/training/sweep.hpp"
#include "fixtures.hpp"

using namespace aggbuf;

namespace {

TrainConfig quick(std::uint64_t seed, std::size_t epochs = 30) {
  TrainConfig tc;
  tc.seed = seed;
  tc.max_epochs = epochs;
  tc.patience = epochs;
  return tc;
}

ModelConfig gcn_for(const DatasetBundle& d, std::size_t hidden = 8) {
  return make_config(Arch::GCN, d.features.cols(), hidden, d.num_classes);
}

}  // namespace

TEST(Adam, FirstStepClosedForm) {
  Matrix w(1, 1, 0.5), g(1, 1, -0.2);
  Adam adam({0.01});
  ParamRef ref{"w", &w, false};
  const Matrix* gp = &g;
  adam.step(std::span(&ref, 1), std::span(&gp, 1));
  EXPECT_NEAR(w.item(), 0.5 + 0.01 * 0.2 / (0.2 + 1e-8), 1e-15);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Matrix w = Matrix::from_rows({{1, -2}}), g(1, 2);
  Adam adam({0.1});
  ParamRef ref{"w", &w, false};
  const Matrix* gp = &g;
  for (int i = 0; i < 3; ++i) adam.step(std::span(&ref, 1), std::span(&gp, 1));
  EXPECT_EQ(w, Matrix::from_rows({{1, -2}}));
}

TEST(Adam, MatchesScriptedOracleOnQuadratic) {
  // f(w) = 0.5 * sum (w - t)^2, plus L2 weight decay.
  Matrix w = Matrix::from_rows({{1.0, -3.0, 0.25}});
  const double target[] = {0.5, 2.0, -1.0};
  AdamConfig cfg{0.05, 0.01, 0.9, 0.999, 1e-8};
  Adam adam(cfg);
  double ow[] = {1.0, -3.0, 0.25}, m[3] = {}, v[3] = {};
  for (int t = 1; t <= 5; ++t) {
    Matrix g(1, 3);
    for (int k = 0; k < 3; ++k) g(0, k) = w(0, k) - target[k];
    ParamRef ref{"w", &w, false};
    const Matrix* gp = &g;
    adam.step(std::span(&ref, 1), std::span(&gp, 1));
    for (int k = 0; k < 3; ++k) {
      const double gk = (ow[k] - target[k]) + 0.01 * ow[k];
      m[k] = 0.9 * m[k] + 0.1 * gk;
      v[k] = 0.999 * v[k] + 0.001 * gk * gk;
      const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
      ow[k] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(w(0, k), ow[k], 1e-12);
}

TEST(Adam, FreezeContract) {
  Matrix w(1, 1, 1.0), f(1, 1, 2.0), g(1, 1, 0.3);
  Adam adam({0.1});
  ParamRef refs[] = {{"w", &w, false}, {"f", &f, true}};
  const Matrix* both[] = {&g, &g};
  EXPECT_THROW(adam.step(refs, both), ContractError);
  const Matrix* missing[] = {nullptr, nullptr};
  EXPECT_THROW(adam.step(refs, missing), ContractError);
  const Matrix* ok[] = {&g, nullptr};
  adam.step(refs, ok);
  EXPECT_EQ(f.item(), 2.0);
  EXPECT_NE(w.item(), 1.0);
}

TEST(TrainConfig, Validation) {
  TrainConfig tc;
  tc.patience = 3000;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.dropout = 1.0;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.drop_edge = 1.2;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.lambda = -1;
  EXPECT_THROW(tc.validate(), ConfigError);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(Pretrain, Deterministic) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(1);
  TrainConfig tc = quick(3);
  tc.dropout = 0.5;
  tc.drop_edge = 0.3;
  PretrainResult a = pretrain(gcn_for(d), tc, d, d.split(0));
  PretrainResult b = pretrain(gcn_for(d), tc, d, d.split(0));
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.history.to_jsonl(), b.history.to_jsonl());
}

TEST(Pretrain, EarlyStopOnFlatValidation) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(2);
  TrainConfig tc;
  tc.lr = 1e-15;  // predictions cannot move, so validation accuracy is flat
  tc.patience = 5;
  tc.max_epochs = 100;
  PretrainResult r = pretrain(gcn_for(d), tc, d, d.split(0));
  EXPECT_EQ(r.history.best_epoch, 0u);
  EXPECT_EQ(r.history.epochs.size(), 6u);
}

TEST(Pretrain, BestCheckpointIsEarliestMaximum) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(3);
  PretrainResult r = pretrain(gcn_for(d), quick(4, 60), d, d.split(0));
  double best = -1;
  std::size_t at = 0;
  for (const auto& e : r.history.epochs)
    if (e.val_acc > best) {
      best = e.val_acc;
      at = e.epoch;
    }
  EXPECT_EQ(r.history.best_epoch, at);
  EXPECT_EQ(r.history.best_val, best);
  Matrix lq = predict(r.params, d.features, make_propagation(d.graph, r.params.config));
  EXPECT_EQ(accuracy(lq, d.labels, d.split(0).val), best);
}

TEST(Pretrain, DivergenceReportsEpoch) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(4);
  TrainConfig tc = quick(1, 50);
  tc.lr = 1e300;
  try {
    pretrain(gcn_for(d), tc, d, d.split(0));
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_GT(e.epoch(), 0u);
  }
}

TEST(Tune, EpochZeroEqualsPretrainedAndBaseUntouched) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(5);
  PretrainResult pre = pretrain(gcn_for(d), quick(5, 40), d, d.split(0));
  TrainConfig tc = quick(5, 25);
  tc.drop_edge = 0.5;
  TuneResult r = tune_buffer(attach(pre.params, BufferVariant::Full), tc, d, d.split(0));
  Matrix base_pred = predict(pre.params, d.features, make_propagation(d.graph, pre.params.config));
  EXPECT_EQ(r.history.epochs[0].val_acc, accuracy(base_pred, d.labels, d.split(0).val));
  EXPECT_EQ(r.history.epochs[0].bias_term, 0.0);
  EXPECT_EQ(r.base_hash, content_hash(pre.params.tensors));
  EXPECT_EQ(detach(r.model), pre.params);
}

TEST(Tune, RobustTermFallsOnHomophilousSbm) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(6, 200);
  PretrainResult pre = pretrain(gcn_for(d, 16), quick(6, 100), d, d.split(0));
  TrainConfig tc = quick(6, 150);
  tc.drop_edge = 0.5;
  TuneResult r = tune_buffer(attach(pre.params, BufferVariant::Full), tc, d, d.split(0));
  double tail = 0;
  for (std::size_t k = 140; k <= 150; ++k) tail += r.history.epochs[k].robust_term;
  EXPECT_LT(tail / 11, r.history.epochs[0].robust_term);
}

TEST(Tune, Preconditions) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(7);
  ModelParams base = init_params(gcn_for(d), 1);
  BufferedModel bm = attach(base, BufferVariant::Full);
  bm.buffers.weights[0].value(0, 0) = 1.0;
  EXPECT_THROW(tune_buffer(bm, quick(1, 2), d, d.split(0)), ContractError);
  BufferedModel loose = attach(base, BufferVariant::Full);
  loose.base.frozen = false;
  EXPECT_THROW(tune_buffer(loose, quick(1, 2), d, d.split(0)), ContractError);
}

TEST(Tune, DeterministicEveryObjective) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(8);
  PretrainResult pre = pretrain(gcn_for(d), quick(8, 20), d, d.split(0));
  for (auto k : {ObjectiveKind::RC, ObjectiveKind::RCTrainOnly, ObjectiveKind::CrossEntropy, ObjectiveKind::PseudoLabel,
                 ObjectiveKind::SelfDistill}) {
    TrainConfig tc = quick(8, 10);
    tc.drop_edge = 0.5;
    tc.dropout = 0.2;
    tc.objective = k;
    TuneResult a = tune_buffer(attach(pre.params, BufferVariant::SingleLayer), tc, d, d.split(0));
    TuneResult b = tune_buffer(attach(pre.params, BufferVariant::SingleLayer), tc, d, d.split(0));
    EXPECT_EQ(a.model.buffers, b.model.buffers) << to_string(k);
    EXPECT_EQ(a.history, b.history) << to_string(k);
  }
}

TEST(Joint, DiffersFromPretrainedAtStart) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(9);
  TrainConfig tc = quick(9, 15);
  tc.drop_edge = 0.5;
  TuneResult j = train_joint(gcn_for(d), BufferVariant::Full, tc, d, d.split(0));
  PretrainResult pre = pretrain(gcn_for(d), quick(9, 15), d, d.split(0));
  EXPECT_FALSE(j.model.base == pre.params);
  EXPECT_TRUE(j.model.base.frozen);
  EXPECT_EQ(j.history, train_joint(gcn_for(d), BufferVariant::Full, tc, d, d.split(0)).history);
}

TEST(History, CsvAndJsonl) {
  History h;
  h.epochs.push_back({0, 1.5, 0.0, 0.25, 0.5});
  h.epochs.push_back({1, 1.25, 0.125, 0.2, 0.75});
  EXPECT_EQ(h.to_jsonl(),
            "{\"bias_term\":0.0,\"epoch\":0,\"robust_term\":0.25,\"train_loss\":1.5,\"val_acc\":0.5}\n"
            "{\"bias_term\":0.125,\"epoch\":1,\"robust_term\":0.2,\"train_loss\":1.25,\"val_acc\":0.75}\n");
  aggbuf::testing::TempDir dir("hist");
  h.write_csv(dir.path() / "h.csv");
  std::ifstream in(dir.path() / "h.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "epoch,train_loss,bias_term,robust_term,val_acc");
}

TEST(Sweep, ExpandOrderAndKeys) {
  auto pts = expand({{"a", {1, 2}}, {"b", {0.5, 0.25, 0.125}}});
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0].key(), "a=1,b=0.5");
  EXPECT_EQ(pts[5].key(), "a=2,b=0.125");
  EXPECT_EQ(pts[4].at("b"), 0.25);
  EXPECT_THROW(expand({{"a", {}}}), ConfigError);
}

TEST(Sweep, SinglePointAndDominance) {
  auto one = grid_sweep({{"x", {3}}}, [](const SweepPoint& p, std::uint64_t) { return p.at("x"); }, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].mean, 3.0);
  EXPECT_EQ(one[0].scores.size(), 5u);
  auto two = grid_sweep({{"x", {0.1, 0.9}}}, [](const SweepPoint& p, std::uint64_t) { return p.at("x"); }, 1);
  EXPECT_EQ(two[0].point.at("x"), 0.9);
  // Ties keep serialization order.
  auto tie = grid_sweep({{"x", {1, 2, 3}}}, [](const SweepPoint&, std::uint64_t) { return 0.5; }, 1, 2);
  EXPECT_EQ(tie[0].index, 0u);
  EXPECT_EQ(tie[2].index, 2u);
}

TEST(Sweep, BufferSpaceOnTinySbm) {
  DatasetBundle d = aggbuf::testing::tiny_sbm(10, 60);
  PretrainResult pre = pretrain(gcn_for(d), quick(10, 20), d, d.split(0));
  Evaluator eval = [&](const SweepPoint& p, std::uint64_t seed) {
    TrainConfig tc = quick(seed, 3);
    tc.lambda = p.at("lambda");
    tc.drop_edge = p.at("drop_edge");
    tc.dropout = p.at("dropout");
    return tune_buffer(attach(pre.params, BufferVariant::Full), tc, d, d.split(0)).history.best_val;
  };
  std::vector<SweepAxis> axes{{"lambda", {1, 0.5, 0.1}}, {"drop_edge", {0.2, 0.5, 0.7, 1.0}}, {"dropout", {0, 0.2, 0.5, 0.7}}};
  auto a = grid_sweep(axes, eval, 77, 2);
  auto b = grid_sweep(axes, eval, 77, 2);
  ASSERT_EQ(a.size(), 48u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_EQ(a[i].scores, b[i].scores);
    if (i > 0) EXPECT_GE(a[i - 1].mean, a[i].mean);
  }
}
