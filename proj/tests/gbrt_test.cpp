// Copyright 2026 The RankForge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankforge/gbrt.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

namespace rankforge {
namespace {

Dataset one_feature(const std::vector<double>& x, const std::vector<double>& y) {
  QueryGroup g;
  g.query_id = "1";
  g.num_features = 1;
  for (std::size_t i = 0; i < x.size(); ++i) g.add_document(std::span(&x[i], 1), y[i]);
  return Dataset({g}, 1);
}

TreeConfig small_tree(std::size_t leaves) {
  TreeConfig c;
  c.num_leaves = leaves;
  c.min_data_in_leaf = 1;
  return c;
}

std::string model_bytes(const Ensemble& e) {
  std::ostringstream out;
  save_model(out, e);
  return out.str();
}

TEST(BinTest, ConstantFeatureHasOneBin) {
  const auto data = one_feature({2, 2, 2, 2}, {0, 1, 0, 1});
  const auto binned = bin_features(data, 255);
  EXPECT_EQ(binned.bins.num_bins(0), 1u);
}

TEST(BinTest, EachDistinctValueGetsItsOwnBin) {
  std::vector<double> x(255), y(255, 0.0);
  for (std::size_t i = 0; i < 255; ++i) x[i] = static_cast<double>(i) * 0.5;
  const auto binned = bin_features(one_feature(x, y), 255);
  ASSERT_EQ(binned.bins.num_bins(0), 255u);
  for (std::size_t i = 0; i < 255; ++i) EXPECT_EQ(binned.matrix.at(i, 0), i);
}

TEST(BinTest, AtMostMaxBinAndMonotoneEdges) {
  const auto data = synth_dataset(20, 30, 3, 4);
  const auto binned = bin_features(data, 16);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_LE(binned.bins.num_bins(k), 16u);
    const auto& e = binned.bins.edges[k];
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i - 1], e[i]);
  }
}

TEST(FitTreeTest, SingleDocumentIsNewtonStep) {
  const auto binned = bin_features(one_feature({1.0}, {0}), 255);
  const std::vector<double> g = {0.6}, h = {0.2};
  const auto tree = fit_tree(binned.matrix, binned.bins, g, h, small_tree(8));
  ASSERT_EQ(tree.num_leaves(), 1u);
  EXPECT_DOUBLE_EQ(tree.leaf_values()[0], -3.0);
}

TEST(FitTreeTest, SeparableTwoLeafClosedForm) {
  // Pseudo-residual targets 1 on x < 0.5 and 3 on x > 0.5, with h = 1:
  // gradients -target give leaf values equal to the group means.
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
  const std::vector<double> g = {-1, -1.2, -0.8, -3, -2.9, -3.1};
  const std::vector<double> h(6, 1.0);
  const auto binned = bin_features(one_feature(x, std::vector<double>(6, 0)), 255);
  const auto tree = fit_tree(binned.matrix, binned.bins, g, h, small_tree(2));
  ASSERT_EQ(tree.num_leaves(), 2u);
  const double lo = 0.1;
  const double hi = 0.9;
  EXPECT_NEAR(tree.predict(std::span(&lo, 1)), 1.0, 1e-12);
  EXPECT_NEAR(tree.predict(std::span(&hi, 1)), 3.0, 1e-12);
}

TEST(FitTreeTest, LeafBudgetRespected) {
  const auto data = synth_dataset(10, 20, 4, 8);
  const auto binned = bin_features(data, 255);
  Rng rng(1);
  std::vector<double> g(200), h(200, 1.0);
  for (auto& v : g) v = rng.normal();
  for (std::size_t leaves : {2u, 3u, 7u, 31u}) {
    const auto tree = fit_tree(binned.matrix, binned.bins, g, h, small_tree(leaves));
    EXPECT_LE(tree.num_leaves(), leaves);
    EXPECT_EQ(tree.nodes().size() + 1, tree.num_leaves());
  }
}

TEST(FitTreeTest, MinDataInLeafRespected) {
  const auto data = synth_dataset(10, 20, 4, 8);
  const auto binned = bin_features(data, 255);
  Rng rng(2);
  std::vector<double> g(200), h(200, 1.0);
  for (auto& v : g) v = rng.normal();
  TreeConfig c;
  c.num_leaves = 50;
  c.min_data_in_leaf = 30;
  const auto tree = fit_tree(binned.matrix, binned.bins, g, h, c);
  std::vector<std::size_t> count(tree.num_leaves(), 0);
  for (std::size_t r = 0; r < 200; ++r) ++count[tree.leaf_index(binned.matrix, r)];
  for (auto n : count) EXPECT_GE(n, 30u);
}

TEST(FitTreeTest, AllZeroHessiansUseUnitWeights) {
  const auto binned = bin_features(one_feature({1, 2}, {0, 0}), 255);
  const std::vector<double> g = {0.5, 0.5}, h = {0.0, 0.0};
  const auto tree = fit_tree(binned.matrix, binned.bins, g, h, small_tree(2));
  const double x = 1.0;
  EXPECT_DOUBLE_EQ(tree.predict(std::span(&x, 1)), -0.5);
}

TEST(FitTreeTest, LengthMismatchRejected) {
  const auto binned = bin_features(one_feature({1, 2}, {0, 0}), 255);
  const std::vector<double> g = {0.5}, h = {1.0};
  EXPECT_THROW(fit_tree(binned.matrix, binned.bins, g, h, small_tree(2)), ValidationError);
}

// Exact-split oracle: best single split over raw thresholds between distinct values.
struct ExactSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = -1.0;
};

ExactSplit exact_best_split(const Dataset& data, const std::vector<double>& g,
                            const std::vector<double>& h) {
  ExactSplit best;
  const auto& grp = data[0];
  double gt = 0.0, ht = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gt += g[i];
    ht += h[i];
  }
  for (std::size_t k = 0; k < data.num_features(); ++k) {
    std::vector<double> values;
    for (std::size_t i = 0; i < grp.size(); ++i) values.push_back(grp.feature(i, k));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i < grp.size(); ++i) {
        if (grp.feature(i, k) <= values[v]) {
          gl += g[i];
          hl += h[i];
        }
      }
      const double gr = gt - gl, hr = ht - hl;
      const double gain = gl * gl / hl + gr * gr / hr - gt * gt / ht;
      if (gain > best.gain) best = {k, (values[v] + values[v + 1]) / 2.0, gain};
    }
  }
  return best;
}

TEST(FitTreeTest, BinnedSplitMatchesExactSplit) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    QueryGroup grp;
    grp.query_id = "q";
    grp.num_features = 3;
    const std::size_t n = 10 + rng.below(40);
    std::vector<double> g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> x = {static_cast<double>(rng.below(12)), rng.uniform(),
                                     static_cast<double>(rng.below(3))};
      grp.add_document(x, 0.0);
      g[i] = rng.normal();
      h[i] = 0.1 + rng.uniform();
    }
    const Dataset data({grp}, 3);
    const auto binned = bin_features(data, 255);
    const auto tree = fit_tree(binned.matrix, binned.bins, g, h, small_tree(2));
    const auto oracle = exact_best_split(data, g, h);
    ASSERT_EQ(tree.nodes().size(), 1u);
    EXPECT_EQ(tree.nodes()[0].feature, oracle.feature);
    EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, oracle.threshold);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(tree.leaf_index(grp.row(i)), tree.leaf_index(binned.matrix, i));
    }
  }
}

TEST(PredictTest, EmptyEnsembleGivesZeros) {
  Ensemble e;
  e.num_features = 2;
  e.learning_rate = 0.1;
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(predict(e, x, 2), (std::vector<double>{0, 0}));
}

TEST(PredictTest, OneLeafTreeIsConstant) {
  Ensemble e;
  e.num_features = 1;
  e.learning_rate = 0.5;
  e.trees.emplace_back(std::vector<TreeNode>{}, std::vector<double>{3.0});
  const std::vector<double> x = {1, -7};
  EXPECT_EQ(predict(e, x, 1), (std::vector<double>{1.5, 1.5}));
}

TEST(PredictTest, DimensionMismatchRejected) {
  Ensemble e;
  e.num_features = 3;
  const std::vector<double> x = {1, 2};
  EXPECT_THROW(predict(e, x, 2), ValidationError);
}

TrainConfig quick_config(Objective objective) {
  TrainConfig c;
  c.objective = objective;
  c.tree.num_leaves = 15;
  c.tree.min_data_in_leaf = 10;
  c.learning_rate = 0.1;
  c.max_trees = 30;
  c.early_stopping_rounds = 10;
  c.seed = 3;
  return c;
}

struct Splits {
  Dataset train, valid;
};

Splits quick_data() {
  const auto data = synth_dataset(60, 15, 6, 10);
  auto parts = split(data, 10);
  return {parts.train, filter_no_relevant(parts.valid).dataset};
}

TEST(TrainTest, PredictMatchesInternalScores) {
  const auto [tr, va] = quick_data();
  for (auto obj : {Objective::kXeNdcg, Objective::kListNet, Objective::kLambdaMart}) {
    const auto result = train(tr, va, quick_config(obj));
    const auto scores = predict(result.ensemble, tr);
    for (std::size_t g = 0; g < tr.size(); ++g) {
      for (std::size_t i = 0; i < tr[g].size(); ++i) {
        EXPECT_NEAR(scores[g][i], result.train_scores[g][i], 1e-12);
      }
    }
  }
}

TEST(TrainTest, DeterministicModelBytesAndLog) {
  const auto [tr, va] = quick_data();
  const auto a = train(tr, va, quick_config(Objective::kXeNdcg));
  const auto b = train(tr, va, quick_config(Objective::kXeNdcg));
  EXPECT_EQ(model_bytes(a.ensemble), model_bytes(b.ensemble));
  EXPECT_EQ(a.log, b.log);
}

TEST(TrainTest, EarlyStoppingTruncatesAtBestIteration) {
  const auto [tr, va] = quick_data();
  auto c = quick_config(Objective::kLambdaMart);
  c.max_trees = 200;
  c.early_stopping_rounds = 5;
  const auto result = train(tr, va, c);
  EXPECT_EQ(result.ensemble.trees.size(), result.best_iteration + 1);
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    if (result.log[i].valid_ndcg > result.log[argmax].valid_ndcg) argmax = i;
  }
  EXPECT_EQ(result.best_iteration, argmax);
  EXPECT_LE(result.log.size(), result.best_iteration + 1 + 5);
}

TEST(TrainTest, ZeroLearningRateIsTieBaseline) {
  const auto [tr, va] = quick_data();
  auto c = quick_config(Objective::kXeNdcg);
  c.learning_rate = 0.0;
  c.max_trees = 3;
  const auto result = train(tr, va, c);
  std::vector<std::vector<double>> zeros(va.size());
  for (std::size_t g = 0; g < va.size(); ++g) zeros[g].assign(va[g].size(), 0.0);
  const double baseline = mean_ndcg(va, zeros, 5, derive_seed(c.seed, 0x7a11dULL));
  for (const auto& rec : result.log) EXPECT_EQ(rec.valid_ndcg, baseline);
  for (const auto& s : predict(result.ensemble, va)) {
    for (double v : s) EXPECT_EQ(v, 0.0);
  }
}

TEST(TrainTest, FrozenGammaLossNonincreasing) {
  const auto [tr, va] = quick_data();
  for (auto obj : {Objective::kXeNdcg, Objective::kListNet}) {
    auto c = quick_config(obj);
    c.resample_gamma = false;
    c.max_trees = 100;
    c.early_stopping_rounds = 0;
    const auto result = train(tr, Dataset(), c);
    std::size_t regressions = 0;
    for (std::size_t i = 1; i < result.log.size(); ++i) {
      if (result.log[i].train_loss > result.log[i - 1].train_loss) ++regressions;
    }
    EXPECT_LE(regressions, result.log.size() / 100) << to_string(obj);
    EXPECT_LT(result.log.back().train_loss, result.log.front().train_loss);
  }
}

TEST(TrainTest, FullNewtonModeTrains) {
  const auto [tr, va] = quick_data();
  auto c = quick_config(Objective::kXeNdcg);
  c.newton_mode = NewtonMode::kFull;
  const auto result = train(tr, va, c);
  EXPECT_GT(result.log.back().valid_ndcg, 0.0);
  c.objective = Objective::kLambdaMart;
  EXPECT_THROW(train(tr, va, c), ConfigError);
}

TEST(TrainTest, Errors) {
  const auto [tr, va] = quick_data();
  EXPECT_THROW(train(Dataset(), va, quick_config(Objective::kXeNdcg)), EmptyDatasetError);
  const auto no_rel = parse_letor("0 qid:1 1:1\n0 qid:1 1:2\n");
  EXPECT_THROW(train(tr, no_rel, quick_config(Objective::kXeNdcg)), ValidationError);
  auto c = quick_config(Objective::kXeNdcg);
  c.max_bin = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick_config(Objective::kXeNdcg);
  c.tree.num_leaves = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = quick_config(Objective::kXeNdcg);
  c.max_trees = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TrainTest, LearnsOnSeparableData) {
  const auto data = synth_dataset(100, 20, 10, 5);
  const auto parts = split(data, 5);
  const auto valid = filter_no_relevant(parts.valid).dataset;
  auto c = quick_config(Objective::kXeNdcg);
  c.max_trees = 60;
  const auto result = train(parts.train, valid, c);
  Rng rng(99);
  std::vector<std::vector<double>> random(valid.size());
  for (std::size_t g = 0; g < valid.size(); ++g) {
    for (std::size_t i = 0; i < valid[g].size(); ++i) random[g].push_back(rng.normal());
  }
  const double baseline = mean_ndcg(valid, random, 5, 0);
  EXPECT_GT(result.log[result.best_iteration].valid_ndcg, baseline + 0.1);
}

TEST(ModelFileTest, RoundTripIsBitExact) {
  const auto [tr, va] = quick_data();
  const auto result = train(tr, va, quick_config(Objective::kListNet));
  std::stringstream buffer(model_bytes(result.ensemble));
  const auto loaded = load_model(buffer);
  EXPECT_EQ(loaded, result.ensemble);
  EXPECT_EQ(model_bytes(loaded), model_bytes(result.ensemble));
  const auto a = predict(result.ensemble, va);
  const auto b = predict(loaded, va);
  EXPECT_EQ(a, b);
}

TEST(ModelFileTest, VersionMismatchRejected) {
  std::stringstream in("rankforge-model 2\nobjective xe_ndcg\n");
  EXPECT_THROW(load_model(in), Error);
}

TEST(ModelFileTest, TruncatedFileRejected) {
  const auto [tr, va] = quick_data();
  auto bytes = model_bytes(train(tr, va, quick_config(Objective::kXeNdcg)).ensemble);
  bytes.resize(bytes.size() / 2);
  std::stringstream in(bytes);
  EXPECT_THROW(load_model(in), ParseError);
}

TEST(ConfigTest, Presets) {
  EXPECT_EQ(TrainConfig::web30k().tree.num_leaves, 400u);
  EXPECT_EQ(TrainConfig::web30k().max_bin, 255u);
  EXPECT_EQ(TrainConfig::web30k().learning_rate, 0.02);
  EXPECT_EQ(TrainConfig::yahoo().tree.num_leaves, 200u);
  EXPECT_EQ(TrainConfig::yahoo().tree.min_data_in_leaf, 100u);
  EXPECT_EQ(parse_newton_mode("full"), NewtonMode::kFull);
  EXPECT_THROW(parse_newton_mode("half"), ConfigError);
}

}  // namespace
}  // namespace rankforge
