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

#ifndef RANKFORGE_METRICS_HPP_
#define RANKFORGE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "rankforge/common.hpp"
#include "rankforge/dataset.hpp"

namespace rankforge {

/// Rank cutoff; kNoCutoff evaluates the whole list.
inline constexpr std::size_t kNoCutoff = std::numeric_limits<std::size_t>::max();

/// ranks[i] is the 1-based rank of document i.
struct RankPermutation {
  std::vector<std::size_t> ranks;

  std::size_t size() const noexcept { return ranks.size(); }

  bool is_bijection() const {
    std::vector<char> seen(ranks.size(), 0);
    for (std::size_t r : ranks) {
      if (r < 1 || r > ranks.size() || seen[r - 1]) return false;
      seen[r - 1] = 1;
    }
    return true;
  }

  friend bool operator==(const RankPermutation&, const RankPermutation&) = default;
};

/// Orders documents by descending score; tied documents are ordered by a
/// random key drawn from tie_seed.
inline RankPermutation ranks_from_scores(std::span<const double> scores,
                                         std::uint64_t tie_seed) {
  for (double s : scores) {
    if (std::isnan(s)) throw ValidationError("NaN score");
  }
  const std::size_t m = scores.size();
  Rng rng(tie_seed);
  std::vector<std::uint64_t> key(m);
  for (auto& k : key) k = rng();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (key[a] != key[b]) return key[a] < key[b];
    return a < b;
  });
  RankPermutation perm;
  perm.ranks.resize(m);
  for (std::size_t r = 0; r < m; ++r) perm.ranks[order[r]] = r + 1;
  return perm;
}

/// Label-sorted permutation. Tie order among equal labels does not affect DCG.
inline RankPermutation ideal_ranks(std::span<const double> labels) {
  const std::size_t m = labels.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labels[a] > labels[b];
  });
  RankPermutation perm;
  perm.ranks.resize(m);
  for (std::size_t r = 0; r < m; ++r) perm.ranks[order[r]] = r + 1;
  return perm;
}

inline double gain(double label) noexcept { return std::exp2(label) - 1.0; }

inline double discount(std::size_t rank) noexcept {
  return 1.0 / std::log2(1.0 + static_cast<double>(rank));
}

inline double dcg(const RankPermutation& perm, std::span<const double> labels,
                  std::size_t cutoff = kNoCutoff) {
  if (perm.size() != labels.size()) {
    throw ValidationError("dcg: permutation and label lengths differ");
  }
  if (cutoff == 0) throw ConfigError("dcg: cutoff must be >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (perm.ranks[i] <= cutoff) total += gain(labels[i]) * discount(perm.ranks[i]);
  }
  return total;
}

inline double ideal_dcg(std::span<const double> labels,
                        std::size_t cutoff = kNoCutoff) {
  return dcg(ideal_ranks(labels), labels, cutoff);
}

inline double ndcg(std::span<const double> scores, std::span<const double> labels,
                   std::size_t cutoff, std::uint64_t tie_seed) {
  if (scores.size() != labels.size()) {
    throw ValidationError("ndcg: score and label lengths differ");
  }
  const double ideal = ideal_dcg(labels, cutoff);
  if (!(ideal > 0.0)) throw DegenerateError("ndcg undefined: ideal DCG is 0");
  return dcg(ranks_from_scores(scores, tie_seed), labels, cutoff) / ideal;
}

/// Mean NDCG over groups. Group g breaks ties with derive_seed(tie_seed, g).
inline double mean_ndcg(const Dataset& data,
                        const std::vector<std::vector<double>>& scores_per_group,
                        std::size_t cutoff, std::uint64_t tie_seed) {
  if (data.empty()) throw EmptyDatasetError("mean NDCG of an empty dataset");
  if (scores_per_group.size() != data.size()) {
    throw ValidationError("mean_ndcg: one score vector per group required");
  }
  double total = 0.0;
  for (std::size_t g = 0; g < data.size(); ++g) {
    total += ndcg(scores_per_group[g], data[g].labels, cutoff,
                  derive_seed(tie_seed, g));
  }
  return total / static_cast<double>(data.size());
}

/// |NDCG change| when documents i and j exchange ranks, untruncated.
inline double delta_ndcg(const RankPermutation& perm, std::span<const double> labels,
                         std::size_t i, std::size_t j, double ideal) {
  return std::abs(std::exp2(labels[i]) - std::exp2(labels[j])) *
         std::abs(discount(perm.ranks[i]) - discount(perm.ranks[j])) / ideal;
}

inline double delta_ndcg(const RankPermutation& perm, std::span<const double> labels,
                         std::size_t i, std::size_t j) {
  if (i == j || i >= labels.size() || j >= labels.size()) {
    throw ValidationError("delta_ndcg requires two distinct valid indices");
  }
  const double ideal = ideal_dcg(labels);
  if (!(ideal > 0.0)) throw DegenerateError("delta NDCG undefined: ideal DCG is 0");
  return delta_ndcg(perm, labels, i, j, ideal);
}

}  // namespace rankforge

#endif  // RANKFORGE_METRICS_HPP_
