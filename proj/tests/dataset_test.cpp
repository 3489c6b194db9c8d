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

#include "rankforge/dataset.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include "rankforge/metrics.hpp"

namespace rankforge {
namespace {

TEST(ParseLetorTest, SingleLineWithSparseFeatures) {
  const auto data = parse_letor("2 qid:1 1:0.5 3:1.0\n");
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data.num_features(), 3u);
  const auto& g = data[0];
  EXPECT_EQ(g.query_id, "1");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.labels[0], 2.0);
  EXPECT_EQ(g.feature(0, 0), 0.5);
  EXPECT_EQ(g.feature(0, 1), 0.0);
  EXPECT_EQ(g.feature(0, 2), 1.0);
}

TEST(ParseLetorTest, TwoQueriesMakeTwoGroups) {
  const auto data = parse_letor("1 qid:1 1:1\n0 qid:2 1:2\n");
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].size(), 1u);
  EXPECT_EQ(data[1].size(), 1u);
}

TEST(ParseLetorTest, MalformedLabelReportsLine) {
  try {
    parse_letor("a qid:1 1:0.5\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse_letor("1 qid:1 1:0.5\n0 qid:1 x:1\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseLetorTest, RejectsBadInput) {
  EXPECT_THROW(parse_letor("-1 qid:1 1:0.5\n"), ValidationError);
  EXPECT_THROW(parse_letor(""), EmptyDatasetError);
  EXPECT_THROW(parse_letor("# only a comment\n\n"), EmptyDatasetError);
  EXPECT_THROW(parse_letor("1 1:0.5\n"), ParseError);
  EXPECT_THROW(parse_letor("1 qid:1 0:0.5\n"), ParseError);
  EXPECT_THROW(parse_letor("1 qid:1 2:abc\n"), ParseError);
}

TEST(ParseLetorTest, CommentsCrlfAndGrowingDimension) {
  const auto data = parse_letor(
      "1 qid:7 1:1.5 # docid = 3\r\n"
      "0 qid:7 4:2\r\n"
      "\r\n"
      "3 qid:8 2:-1e-3\n");
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data.num_features(), 4u);
  EXPECT_EQ(data[0].size(), 2u);
  EXPECT_EQ(data[0].feature(1, 3), 2.0);
  EXPECT_EQ(data[0].feature(0, 3), 0.0);
  EXPECT_EQ(data[1].feature(0, 1), -1e-3);
  EXPECT_EQ(data[1].labels[0], 3.0);
}

TEST(ParseLetorTest, NonContiguousQidStartsNewGroup) {
  const auto data = parse_letor("1 qid:1 1:1\n0 qid:2 1:1\n2 qid:1 1:1\n");
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[0].query_id, "1");
  EXPECT_EQ(data[2].query_id, "1");
}

TEST(ParseLetorTest, RoundTripIsIdentity) {
  // Property: write then parse reproduces the dataset, on random datasets.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto data = synth_dataset(1 + rng.below(5), 1 + rng.below(6), 1 + rng.below(7), seed);
    std::stringstream buffer;
    write_letor(buffer, data);
    EXPECT_EQ(parse_letor(buffer), data) << "seed " << seed;
  }
}

TEST(SplitTest, SixtyTwentyTwenty) {
  const auto data = synth_dataset(10, 2, 2, 1);
  const auto parts = split(data, 42);
  EXPECT_EQ(parts.train.size(), 6u);
  EXPECT_EQ(parts.valid.size(), 2u);
  EXPECT_EQ(parts.test.size(), 2u);
}

TEST(SplitTest, DeterministicPerSeed) {
  const auto data = synth_dataset(30, 3, 2, 1);
  const auto a = split(data, 7);
  const auto b = split(data, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(split(data, 8).train, a.train);
}

TEST(SplitTest, DegenerateFractions) {
  const auto data = synth_dataset(100, 1, 1, 3);
  const auto parts = split(data, {1.0, 0.0, 0.0}, 5);
  EXPECT_EQ(parts.train.size(), 100u);
  EXPECT_TRUE(parts.valid.empty());
  EXPECT_TRUE(parts.test.empty());
}

TEST(SplitTest, RoundingPutsRemainderInTest) {
  const auto data = synth_dataset(7, 1, 1, 3);
  const auto parts = split(data, 1);
  EXPECT_EQ(parts.train.size(), 5u);  // ceil(4.2)
  EXPECT_EQ(parts.valid.size(), 1u);  // round(1.4)
  EXPECT_EQ(parts.test.size(), 1u);
}

TEST(SplitTest, Errors) {
  const auto data = synth_dataset(5, 1, 1, 3);
  EXPECT_THROW(split(data, {0.5, 0.2, 0.2}, 1), ConfigError);
  EXPECT_THROW(split(Dataset(), 1), EmptyDatasetError);
}

TEST(SplitTest, IsAPartition) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = synth_dataset(23, 2, 1, seed);
    const auto parts = split(data, seed);
    std::multiset<std::string> ids;
    for (const auto* part : {&parts.train, &parts.valid, &parts.test}) {
      for (const auto& g : part->groups()) ids.insert(g.query_id);
    }
    std::multiset<std::string> expected;
    for (const auto& g : data.groups()) expected.insert(g.query_id);
    EXPECT_EQ(ids, expected);
  }
}

TEST(FilterNoRelevantTest, RemovesAllZeroGroups) {
  const auto data = parse_letor(
      "0 qid:1 1:1\n0 qid:1 1:2\n0 qid:1 1:3\n"
      "0 qid:2 1:1\n1 qid:2 1:2\n");
  const auto result = filter_no_relevant(data);
  EXPECT_EQ(result.removed, 1u);
  ASSERT_EQ(result.dataset.size(), 1u);
  EXPECT_EQ(result.dataset[0].query_id, "2");
  for (const auto& g : result.dataset.groups()) EXPECT_GT(ideal_dcg(g.labels), 0.0);
}

TEST(SynthDatasetTest, SingleDocumentHasValidGrade) {
  const auto data = synth_dataset(1, 1, 1, 9);
  ASSERT_EQ(data.size(), 1u);
  const double y = data[0].labels[0];
  EXPECT_GE(y, 0.0);
  EXPECT_LE(y, 4.0);
  EXPECT_EQ(y, std::floor(y));
}

TEST(SynthDatasetTest, DeterministicBytes) {
  std::stringstream a, b;
  write_letor(a, synth_dataset(20, 5, 4, 123));
  write_letor(b, synth_dataset(20, 5, 4, 123));
  EXPECT_EQ(a.str(), b.str());
}

TEST(SynthDatasetTest, GradeHistogramDecreases) {
  const auto data = synth_dataset(200, 20, 10, 2024);
  std::array<std::size_t, 5> hist{};
  for (const auto& g : data.groups()) {
    for (double y : g.labels) ++hist[static_cast<std::size_t>(y)];
  }
  // 4000 documents at shares (.45, .25, .15, .10, .05).
  EXPECT_EQ(hist[0], 1800u);
  EXPECT_EQ(hist[1], 1000u);
  EXPECT_EQ(hist[2], 600u);
  EXPECT_EQ(hist[3], 400u);
  EXPECT_EQ(hist[4], 200u);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_LE(hist[k], hist[k - 1]);
}

TEST(DatasetTest, ValidatesGroups) {
  QueryGroup empty;
  empty.query_id = "e";
  EXPECT_THROW(Dataset({empty}, 0), ValidationError);
  QueryGroup bad;
  bad.query_id = "b";
  bad.num_features = 2;
  bad.features = {1.0};
  bad.labels = {1.0};
  EXPECT_THROW(Dataset({bad}, 2), ValidationError);
}

}  // namespace
}  // namespace rankforge
