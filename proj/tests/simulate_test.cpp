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

#include "rankforge/simulate.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace rankforge {
namespace {

// Groups whose feature values encode (group, document), so provenance is auditable.
Dataset tagged(std::size_t n, std::size_t m) {
  std::vector<QueryGroup> groups(n);
  for (std::size_t g = 0; g < n; ++g) {
    groups[g].query_id = std::to_string(g);
    groups[g].num_features = 2;
    for (std::size_t i = 0; i < m; ++i) {
      const std::vector<double> x = {static_cast<double>(g), static_cast<double>(i)};
      groups[g].add_document(x, static_cast<double>((g + i) % 5));
    }
  }
  return Dataset(std::move(groups), 2);
}

TEST(AugmentTest, ZeroPercentIsIdentity) {
  const auto data = tagged(4, 6);
  Rng rng(1);
  EXPECT_EQ(augment_negatives(data, 0.0, rng), data);
}

TEST(AugmentTest, FortyPercentOfTen) {
  const auto data = tagged(3, 10);
  Rng rng(2);
  const auto out = augment_negatives(data, 0.4, rng);
  for (std::size_t g = 0; g < out.size(); ++g) {
    ASSERT_EQ(out[g].size(), 14u);
    for (std::size_t i = 10; i < 14; ++i) EXPECT_EQ(out[g].labels[i], 0.0);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(out[g].labels[i], data[g].labels[i]);
  }
}

TEST(AugmentTest, NeverSamplesOwnGroup) {
  const auto data = tagged(5, 8);
  Rng rng(3);
  const auto out = augment_negatives(data, 3.0, rng);
  std::set<double> sources;
  for (std::size_t g = 0; g < out.size(); ++g) {
    for (std::size_t i = 8; i < out[g].size(); ++i) {
      EXPECT_NE(out[g].feature(i, 0), static_cast<double>(g));
      sources.insert(out[g].feature(i, 0));
    }
  }
  EXPECT_EQ(sources.size(), 5u);
}

TEST(AugmentTest, SingleGroupRejected) {
  Rng rng(4);
  EXPECT_THROW(augment_negatives(tagged(1, 5), 0.4, rng), ValidationError);
  EXPECT_THROW(augment_negatives(tagged(2, 5), -0.1, rng), ConfigError);
}

TEST(PerturbTest, ZeroFractionIsIdentity) {
  const auto data = tagged(4, 6);
  Rng rng(5);
  EXPECT_EQ(perturb_labels(data, PerturbSpec{0.0, {0.5, 0.2, 0.15, 0.1, 0.05}}, rng), data);
}

TEST(PerturbTest, DegenerateDistributionZeroesEverything) {
  const auto data = tagged(4, 6);
  Rng rng(6);
  const auto out = perturb_labels(data, PerturbSpec{1.0, {1, 0, 0, 0, 0}}, rng);
  for (const auto& g : out.groups()) {
    for (double y : g.labels) EXPECT_EQ(y, 0.0);
  }
  EXPECT_EQ(out[0].features, data[0].features);
}

TEST(PerturbTest, RedrawnHistogramMatches) {
  // All original labels are 4, so a redrawn label differs from 4 unless it was drawn as 4.
  std::vector<QueryGroup> groups(100);
  for (std::size_t g = 0; g < 100; ++g) {
    groups[g].query_id = std::to_string(g);
    groups[g].num_features = 1;
    for (int i = 0; i < 100; ++i) groups[g].add_document(std::vector<double>{0.0}, 4.0);
  }
  const Dataset data(std::move(groups), 1);
  Rng rng(7);
  const PerturbSpec spec;
  const auto out = perturb_labels(data, PerturbSpec{0.5, spec.grade_dist}, rng);
  std::array<double, 5> hist{};
  for (const auto& g : out.groups()) {
    for (double y : g.labels) hist[static_cast<std::size_t>(y)] += 1.0;
  }
  // Expected: 5000 redrawn with p, 5000 kept at grade 4.
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(hist[k] / 5000.0, spec.grade_dist[k], 0.02) << "grade " << k;
  }
  EXPECT_NEAR((hist[4] - 5000.0) / 5000.0, spec.grade_dist[4], 0.02);
}

TEST(PerturbTest, InvalidSpecRejected) {
  Rng rng(8);
  EXPECT_THROW(perturb_labels(tagged(2, 2), PerturbSpec{0.5, {0.5, 0.5, 0.5, 0, 0}}, rng),
               ConfigError);
  EXPECT_THROW(perturb_labels(tagged(2, 2), PerturbSpec{1.5, {1, 0, 0, 0, 0}}, rng),
               ConfigError);
}

TEST(ClicksTest, AlwaysClickGivesSingleDocuments) {
  Rng rng(9);
  const auto sim = cascade_clicks(tagged(3, 7), ClickModel{{1, 1, 1, 1, 1}, 10}, rng);
  EXPECT_EQ(sim.dataset.size(), 30u);
  EXPECT_EQ(sim.dropped, 0u);
  for (const auto& g : sim.dataset.groups()) {
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g.labels[0], 1.0);
  }
}

TEST(ClicksTest, NeverClickGivesEmptyDataset) {
  Rng rng(10);
  const auto sim = cascade_clicks(tagged(3, 7), ClickModel{{0, 0, 0, 0, 0}, 10}, rng);
  EXPECT_TRUE(sim.dataset.empty());
  EXPECT_EQ(sim.impressions, 30u);
  EXPECT_DOUBLE_EQ(sim.drop_rate(), 1.0);
}

TEST(ClicksTest, OneClickAtTheEnd) {
  Rng rng(11);
  const auto sim = cascade_clicks(tagged(10, 12), ClickModel{}, rng);
  for (const auto& g : sim.dataset.groups()) {
    double clicks = 0.0;
    for (double y : g.labels) {
      EXPECT_TRUE(y == 0.0 || y == 1.0);
      clicks += y;
    }
    EXPECT_EQ(clicks, 1.0);
    EXPECT_EQ(g.labels.back(), 1.0);
    EXPECT_NE(g.query_id.find('_'), std::string::npos);
  }
}

TEST(ClicksTest, TopGradeClickRate) {
  // 10^4 impressions of a single grade-4 document at position 1.
  std::vector<QueryGroup> groups(1000);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].query_id = std::to_string(g);
    groups[g].num_features = 1;
    groups[g].add_document(std::vector<double>{0.0}, 4.0);
  }
  Rng rng(12);
  const auto sim = cascade_clicks(Dataset(std::move(groups), 1), ClickModel{}, rng);
  EXPECT_EQ(sim.impressions, 10000u);
  EXPECT_NEAR(static_cast<double>(sim.dataset.size()) / 1e4, 0.95, 0.01);
}

TEST(ClicksTest, Deterministic) {
  Rng a(13), b(13);
  EXPECT_EQ(cascade_clicks(tagged(5, 9), ClickModel{}, a).dataset,
            cascade_clicks(tagged(5, 9), ClickModel{}, b).dataset);
}

TEST(PairedTTest, KnownValue) {
  // Differences (1, 2, 3): mean 2, sd 1, t = 2 sqrt(3), two-sided p with 2 dof.
  const auto s = paired_t_test({2, 4, 6}, {1, 2, 3});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
  ASSERT_TRUE(s.t_statistic.has_value());
  EXPECT_NEAR(*s.t_statistic, 2.0 * std::sqrt(3.0), 1e-12);
  // p = 1 - t / sqrt(t^2 + 2) for 2 degrees of freedom.
  const double t = 2.0 * std::sqrt(3.0);
  EXPECT_NEAR(*s.p_value, 1.0 - t / std::sqrt(t * t + 2.0), 1e-12);
}

TEST(PairedTTest, SingleSampleHasNoPValue) {
  const auto s = paired_t_test({0.5}, {0.4});
  EXPECT_FALSE(s.p_value.has_value());
}

ExperimentConfig tiny_experiment(Protocol protocol, std::vector<double> sweep,
                                 std::size_t trials) {
  ExperimentConfig c;
  c.protocol = protocol;
  c.sweep = std::move(sweep);
  c.trials = trials;
  c.base.tree.num_leaves = 7;
  c.base.tree.min_data_in_leaf = 5;
  c.base.learning_rate = 0.1;
  c.base.max_trees = 10;
  c.base.early_stopping_rounds = 5;
  c.seed = 21;
  return c;
}

TEST(ExperimentTest, DegenerateSweepShape) {
  const auto data = synth_dataset(30, 10, 5, 1);
  const auto r = run_experiment(data, tiny_experiment(Protocol::kPerturb, {0.0}, 1));
  EXPECT_EQ(r.rows.size(), 2u);
  ASSERT_EQ(r.summary.size(), 1u);
  EXPECT_FALSE(r.summary[0].difference.p_value.has_value());
}

TEST(ExperimentTest, RowCountAndDeterminism) {
  const auto data = synth_dataset(30, 10, 5, 1);
  for (auto protocol : {Protocol::kAugment, Protocol::kPerturb, Protocol::kClicks}) {
    const std::vector<double> sweep =
        protocol == Protocol::kAugment ? std::vector<double>{0, 0.2, 0.4}
                                       : std::vector<double>{0.05, 0.1, 0.15};
    const auto a = run_experiment(data, tiny_experiment(protocol, sweep, 2));
    const auto b = run_experiment(data, tiny_experiment(protocol, sweep, 2));
    EXPECT_EQ(a.rows.size(), 3u * 2u * 2u);
    std::ostringstream ta, tb;
    write_results_tsv(ta, a);
    write_results_tsv(tb, b);
    EXPECT_EQ(ta.str(), tb.str());
    ASSERT_EQ(a.summary.size(), 3u);
    EXPECT_TRUE(a.summary[0].difference.p_value.has_value());
    EXPECT_EQ(a.summary[0].xe_degradation, 0.0);
  }
}

TEST(ExperimentTest, ReportHeaders) {
  const auto data = synth_dataset(30, 10, 5, 1);
  const auto r = run_experiment(data, tiny_experiment(Protocol::kPerturb, {0.0, 0.5}, 2));
  std::ostringstream results, summary, plot;
  write_results_tsv(results, r);
  write_summary_tsv(summary, r);
  write_plot_tsv(plot, r);
  EXPECT_EQ(results.str().substr(0, results.str().find('\n')),
            "protocol\tsweep_value\ttrial\tmodel\tndcg_at_5");
  EXPECT_NE(summary.str().find("diff_p"), std::string::npos);
  EXPECT_EQ(plot.str().substr(0, plot.str().find('\n')), "x\tlambdamart\txe_ndcg\tdifference");
}

TEST(ExperimentTest, Errors) {
  const auto data = synth_dataset(30, 10, 5, 1);
  EXPECT_THROW(run_experiment(data, tiny_experiment(Protocol::kPerturb, {0.0}, 0)), ConfigError);
  EXPECT_THROW(run_experiment(data, tiny_experiment(Protocol::kPerturb, {}, 1)), ConfigError);
  EXPECT_THROW(run_experiment(data, tiny_experiment(Protocol::kPerturb, {1.5}, 1)), ConfigError);
  EXPECT_THROW(parse_protocol("dropout"), ConfigError);
}

}  // namespace
}  // namespace rankforge
