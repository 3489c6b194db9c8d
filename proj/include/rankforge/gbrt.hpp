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

#ifndef RANKFORGE_GBRT_HPP_
#define RANKFORGE_GBRT_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/common.hpp"
#include "rankforge/dataset.hpp"
#include "rankforge/losses.hpp"
#include "rankforge/metrics.hpp"

namespace rankforge {

/// diagonal: trees fit (gradient, diag Hessian) pairs.
/// full: trees fit the Neumann Newton step with unit weights.
enum class NewtonMode { kDiagonal, kFull };

inline std::string to_string(NewtonMode m) {
  return m == NewtonMode::kDiagonal ? "diagonal" : "full";
}

inline NewtonMode parse_newton_mode(std::string_view name) {
  if (name == "diagonal") return NewtonMode::kDiagonal;
  if (name == "full") return NewtonMode::kFull;
  throw ConfigError("unknown newton mode '" + std::string(name) + "'");
}

struct TreeConfig {
  std::size_t num_leaves = 400;
  std::size_t min_data_in_leaf = 50;
  double min_sum_hessian_in_leaf = 0.0;
  double lambda_l2 = 0.0;
};

struct TrainConfig {
  std::size_t max_bin = 255;
  TreeConfig tree;
  double learning_rate = 0.02;
  double sigma = 1.0;
  std::size_t max_trees = 500;
  std::size_t early_stopping_rounds = 50;
  std::size_t eval_cutoff = 5;
  Objective objective = Objective::kXeNdcg;
  NewtonMode newton_mode = NewtonMode::kDiagonal;
  double epsilon = kDefaultEpsilon;
  // When false, each query keeps the gamma drawn at iteration 0.
  bool resample_gamma = true;
  std::uint64_t seed = 0;

  /// Web30K setup.
  static TrainConfig web30k() { return TrainConfig{}; }

  /// Yahoo! setup: smaller trees, larger leaves.
  static TrainConfig yahoo() {
    TrainConfig c;
    c.tree.num_leaves = 200;
    c.tree.min_data_in_leaf = 100;
    return c;
  }

  void validate() const {
    if (max_bin < 2 || max_bin > 65535) throw ConfigError("max_bin must be in [2, 65535]");
    if (tree.num_leaves < 2) throw ConfigError("num_leaves must be >= 2");
    if (tree.min_data_in_leaf < 1) throw ConfigError("min_data_in_leaf must be >= 1");
    if (!(tree.min_sum_hessian_in_leaf >= 0.0)) {
      throw ConfigError("min_sum_hessian_in_leaf must be >= 0");
    }
    if (!(tree.lambda_l2 >= 0.0)) throw ConfigError("lambda_l2 must be >= 0");
    // A zero learning rate is accepted: it yields the constant-score baseline.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be >= 0");
    }
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (max_trees < 1) throw ConfigError("max_trees must be >= 1");
    if (eval_cutoff < 1) throw ConfigError("eval_cutoff must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (objective == Objective::kLambdaMart && newton_mode == NewtonMode::kFull) {
      throw ConfigError("full Newton mode is only defined for xe_ndcg and listnet");
    }
  }
};

// ---------------------------------------------------------------------------
// Feature binning.

/// Per-feature bin upper edges. A value v falls in the first bin b with
/// v <= edges[b]; values above every edge fall in the last bin. A feature
/// with no edges has a single bin.
struct FeatureBins {
  std::vector<std::vector<double>> edges;

  std::size_t num_features() const noexcept { return edges.size(); }
  std::size_t num_bins(std::size_t k) const noexcept { return edges[k].size() + 1; }

  std::uint16_t bin_of(std::size_t k, double v) const noexcept {
    const auto& e = edges[k];
    return static_cast<std::uint16_t>(std::lower_bound(e.begin(), e.end(), v) - e.begin());
  }

  friend bool operator==(const FeatureBins&, const FeatureBins&) = default;
};

/// Column-major bin indices: bins[k * num_rows + row].
struct BinnedMatrix {
  std::size_t num_rows = 0;
  std::size_t num_features = 0;
  std::vector<std::uint16_t> bins;

  std::uint16_t at(std::size_t row, std::size_t k) const noexcept {
    return bins[k * num_rows + row];
  }
};

namespace detail {

/// Greedy quantile edges over the sorted distinct values. Every distinct
/// value gets its own bin when there are at most max_bin of them; edges sit
/// halfway between neighbouring distinct values.
inline std::vector<double> quantile_edges(std::vector<double> values, std::size_t max_bin) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : values) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(1);
    } else {
      ++counts.back();
    }
  }
  std::vector<double> edges;
  if (distinct.size() <= 1) return edges;
  auto midpoint = [&](std::size_t i) { return distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0; };
  if (distinct.size() <= max_bin) {
    edges.reserve(distinct.size() - 1);
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) edges.push_back(midpoint(i));
    return edges;
  }
  const double per_bin = static_cast<double>(values.size()) / static_cast<double>(max_bin);
  double filled = 0.0;
  for (std::size_t i = 0; i + 1 < distinct.size() && edges.size() + 1 < max_bin; ++i) {
    filled += static_cast<double>(counts[i]);
    if (filled >= per_bin * static_cast<double>(edges.size() + 1)) edges.push_back(midpoint(i));
  }
  return edges;
}

}  // namespace detail

inline FeatureBins compute_bins(const Dataset& data, std::size_t max_bin) {
  if (data.empty()) throw EmptyDatasetError("cannot bin an empty dataset");
  if (max_bin < 2) throw ConfigError("max_bin must be >= 2");
  const std::size_t d = data.num_features();
  FeatureBins bins;
  bins.edges.resize(d);
  parallel_for(d, [&](std::size_t k) {
    std::vector<double> column;
    column.reserve(data.num_documents());
    for (const auto& g : data.groups()) {
      for (std::size_t i = 0; i < g.size(); ++i) column.push_back(g.feature(i, k));
    }
    bins.edges[k] = detail::quantile_edges(std::move(column), max_bin);
  });
  return bins;
}

inline BinnedMatrix apply_bins(const Dataset& data, const FeatureBins& bins) {
  BinnedMatrix out;
  out.num_rows = data.num_documents();
  out.num_features = data.num_features();
  out.bins.resize(out.num_rows * out.num_features);
  parallel_for(out.num_features, [&](std::size_t k) {
    std::size_t row = 0;
    for (const auto& g : data.groups()) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        out.bins[k * out.num_rows + row++] = bins.bin_of(k, g.feature(i, k));
      }
    }
  });
  return out;
}

struct BinnedData {
  FeatureBins bins;
  BinnedMatrix matrix;
};

inline BinnedData bin_features(const Dataset& data, std::size_t max_bin) {
  BinnedData out;
  out.bins = compute_bins(data, max_bin);
  out.matrix = apply_bins(data, out.bins);
  return out;
}

// ---------------------------------------------------------------------------
// Regression trees.

struct TreeNode {
  std::size_t feature = 0;
  std::uint16_t bin_threshold = 0;  // go left when bin <= bin_threshold
  double threshold = 0.0;           // go left when value <= threshold
  // Child references: >= 0 is a node index, < 0 is leaf ~child.
  int left = -1;
  int right = -1;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() : leaf_values_{0.0} {}
  RegressionTree(std::vector<TreeNode> nodes, std::vector<double> leaf_values)
      : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& leaf_values() const noexcept { return leaf_values_; }
  std::size_t num_leaves() const noexcept { return leaf_values_.size(); }

  std::size_t leaf_index(std::span<const double> x) const noexcept {
    if (nodes_.empty()) return 0;
    int node = 0;
    while (node >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(node)];
      node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return static_cast<std::size_t>(~node);
  }

  std::size_t leaf_index(const BinnedMatrix& m, std::size_t row) const noexcept {
    if (nodes_.empty()) return 0;
    int node = 0;
    while (node >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(node)];
      node = m.at(row, n.feature) <= n.bin_threshold ? n.left : n.right;
    }
    return static_cast<std::size_t>(~node);
  }

  double predict(std::span<const double> x) const noexcept {
    return leaf_values_[leaf_index(x)];
  }
  double predict(const BinnedMatrix& m, std::size_t row) const noexcept {
    return leaf_values_[leaf_index(m, row)];
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_values_;
};

namespace detail {

struct HistBin {
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  std::size_t feature = 0;
  std::uint16_t bin = 0;
  bool valid = false;
};

// Splits whose gain does not clear this are treated as noise.
inline constexpr double kGainTolerance = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& matrix, const FeatureBins& bins,
              std::span<const double> grad, std::span<const double> hess,
              const TreeConfig& config)
      : matrix_(matrix), bins_(bins), grad_(grad), hess_(hess), config_(config) {
    offsets_.resize(matrix.num_features + 1, 0);
    for (std::size_t k = 0; k < matrix.num_features; ++k) {
      offsets_[k + 1] = offsets_[k] + bins.num_bins(k);
    }
  }

  RegressionTree build() {
    Leaf root;
    root.rows.resize(matrix_.num_rows);
    for (std::size_t i = 0; i < matrix_.num_rows; ++i) root.rows[i] = i;
    for (std::size_t r : root.rows) {
      root.grad += grad_[r];
      root.hess += hess_[r];
    }
    root.hist = histogram(root.rows);
    root.best = best_split(root);
    leaves_.push_back(std::move(root));

    while (leaves_.size() < config_.num_leaves) {
      std::size_t pick = leaves_.size();
      for (std::size_t i = 0; i < leaves_.size(); ++i) {
        if (!leaves_[i].best.valid) continue;
        if (pick == leaves_.size() || leaves_[i].best.gain > leaves_[pick].best.gain) pick = i;
      }
      if (pick == leaves_.size()) break;
      split(pick);
    }

    std::vector<double> values(leaves_.size());
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
      const double denom = leaves_[i].hess + config_.lambda_l2;
      values[i] = denom > 0.0 ? -leaves_[i].grad / denom : 0.0;
    }
    return RegressionTree(std::move(nodes_), std::move(values));
  }

 private:
  struct Leaf {
    std::vector<std::size_t> rows;
    double grad = 0.0;
    double hess = 0.0;
    std::vector<HistBin> hist;
    SplitCandidate best;
    // Where this leaf hangs: parent node index and side; -1 for the root.
    int parent = -1;
    bool is_left = false;
  };

  std::vector<HistBin> histogram(const std::vector<std::size_t>& rows) const {
    std::vector<HistBin> hist(offsets_.back());
    const auto build_feature = [&](std::size_t k) {
      const std::uint16_t* column = matrix_.bins.data() + k * matrix_.num_rows;
      HistBin* h = hist.data() + offsets_[k];
      for (std::size_t r : rows) {
        HistBin& b = h[column[r]];
        b.grad += grad_[r];
        b.hess += hess_[r];
        ++b.count;
      }
    };
    if (rows.size() * matrix_.num_features >= (1u << 18)) {
      parallel_for(matrix_.num_features, build_feature);
    } else {
      for (std::size_t k = 0; k < matrix_.num_features; ++k) build_feature(k);
    }
    return hist;
  }

  double leaf_score(double g, double h) const noexcept {
    return g * g / (h + config_.lambda_l2);
  }

  bool admissible(std::size_t count, double hess) const noexcept {
    return count >= config_.min_data_in_leaf && hess >= config_.min_sum_hessian_in_leaf &&
           hess + config_.lambda_l2 > 0.0;
  }

  SplitCandidate best_split(const Leaf& leaf) const {
    SplitCandidate best;
    if (leaf.rows.size() < 2 * config_.min_data_in_leaf) return best;
    const double parent = leaf_score(leaf.grad, leaf.hess);
    const std::size_t n = leaf.rows.size();
    for (std::size_t k = 0; k < matrix_.num_features; ++k) {
      const std::size_t nb = bins_.num_bins(k);
      const HistBin* h = leaf.hist.data() + offsets_[k];
      double gl = 0.0, hl = 0.0;
      std::size_t cl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += h[b].grad;
        hl += h[b].hess;
        cl += h[b].count;
        if (cl == 0) continue;
        if (cl == n) break;
        const double gr = leaf.grad - gl;
        const double hr = leaf.hess - hl;
        if (!admissible(cl, hl) || !admissible(n - cl, hr)) continue;
        const double gain = leaf_score(gl, hl) + leaf_score(gr, hr) - parent;
        if (gain > kGainTolerance && (!best.valid || gain > best.gain)) {
          best = {gain, k, static_cast<std::uint16_t>(b), true};
        }
      }
    }
    return best;
  }

  void split(std::size_t index) {
    Leaf& leaf = leaves_[index];
    const SplitCandidate s = leaf.best;

    TreeNode node;
    node.feature = s.feature;
    node.bin_threshold = s.bin;
    node.threshold = bins_.edges[s.feature][s.bin];
    const int node_index = static_cast<int>(nodes_.size());
    if (leaf.parent >= 0) {
      auto& p = nodes_[static_cast<std::size_t>(leaf.parent)];
      (leaf.is_left ? p.left : p.right) = node_index;
    }

    Leaf left, right;
    for (std::size_t r : leaf.rows) {
      const bool go_left = matrix_.at(r, s.feature) <= s.bin;
      Leaf& child = go_left ? left : right;
      child.rows.push_back(r);
      child.grad += grad_[r];
      child.hess += hess_[r];
    }
    // Histogram the smaller child; its sibling is parent minus child.
    Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
    Leaf& large = &small == &left ? right : left;
    small.hist = histogram(small.rows);
    large.hist = std::move(leaf.hist);
    for (std::size_t b = 0; b < large.hist.size(); ++b) {
      large.hist[b].grad -= small.hist[b].grad;
      large.hist[b].hess -= small.hist[b].hess;
      large.hist[b].count -= small.hist[b].count;
    }
    left.best = best_split(left);
    right.best = best_split(right);
    left.parent = right.parent = node_index;
    left.is_left = true;

    // The left child reuses the parent's leaf slot; the right child is new.
    const std::size_t right_index = leaves_.size();
    node.left = ~static_cast<int>(index);
    node.right = ~static_cast<int>(right_index);
    nodes_.push_back(node);
    leaves_[index] = std::move(left);
    leaves_.push_back(std::move(right));
  }

  const BinnedMatrix& matrix_;
  const FeatureBins& bins_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const TreeConfig& config_;
  std::vector<std::size_t> offsets_;
  std::vector<Leaf> leaves_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Leaf-wise best-first growth on histogram split candidates. The split gain
/// is G_L^2/H_L + G_R^2/H_R - G^2/H (H includes lambda_l2) and leaf values
/// are -G/H. If every hessian is zero, unit hessians are used.
inline RegressionTree fit_tree(const BinnedMatrix& matrix, const FeatureBins& bins,
                               std::span<const double> gradients,
                               std::span<const double> hessians, const TreeConfig& config) {
  if (gradients.size() != matrix.num_rows || hessians.size() != matrix.num_rows) {
    throw ValidationError("fit_tree: gradient/hessian length must equal row count");
  }
  if (matrix.num_rows == 0) return RegressionTree();
  if (config.num_leaves < 2) throw ConfigError("num_leaves must be >= 2");
  const bool all_zero =
      std::all_of(hessians.begin(), hessians.end(), [](double h) { return h == 0.0; });
  if (all_zero) {
    const std::vector<double> unit(hessians.size(), 1.0);
    return detail::TreeBuilder(matrix, bins, gradients, unit, config).build();
  }
  return detail::TreeBuilder(matrix, bins, gradients, hessians, config).build();
}

// ---------------------------------------------------------------------------
// Ensembles.

struct Ensemble {
  Objective objective = Objective::kXeNdcg;
  double learning_rate = 0.0;
  std::size_t num_features = 0;
  FeatureBins bins;
  std::vector<RegressionTree> trees;

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

/// Scores a row-major document matrix with d = ensemble.num_features columns.
inline std::vector<double> predict(const Ensemble& model, std::span<const double> features,
                                   std::size_t num_features) {
  if (num_features != model.num_features) {
    throw ValidationError("feature dimension " + std::to_string(num_features) +
                          " does not match model dimension " +
                          std::to_string(model.num_features));
  }
  const std::size_t m = num_features == 0 ? 0 : features.size() / num_features;
  std::vector<double> scores(m, 0.0);
  for (const auto& tree : model.trees) {
    for (std::size_t i = 0; i < m; ++i) {
      scores[i] += model.learning_rate * tree.predict(features.subspan(i * num_features, num_features));
    }
  }
  return scores;
}

inline std::vector<double> predict(const Ensemble& model, const QueryGroup& group) {
  return predict(model, group.features, group.num_features);
}

inline std::vector<std::vector<double>> predict(const Ensemble& model, const Dataset& data) {
  std::vector<std::vector<double>> out(data.size());
  parallel_for(data.size(), [&](std::size_t g) { out[g] = predict(model, data[g]); });
  return out;
}

// ---------------------------------------------------------------------------
// Training.

struct IterationRecord {
  std::size_t iteration = 0;
  double train_loss = 0.0;  // mean per-query loss before this iteration's tree
  double valid_ndcg = 0.0;  // validation NDCG@cutoff after adding the tree

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct TrainResult {
  Ensemble ensemble;
  std::vector<IterationRecord> log;
  std::size_t best_iteration = 0;
  // Training scores of the returned (truncated) ensemble, per group.
  std::vector<std::vector<double>> train_scores;
};

namespace detail {

/// Loss state for one query under the configured objective. Scores are
/// shifted by their maximum first, which makes epsilon relative to the
/// largest e^f.
inline LossState objective_state(const TrainConfig& config, const QueryGroup& group,
                                 std::span<const double> raw_scores, std::size_t iteration,
                                 std::size_t group_index) {
  const std::size_t m = group.size();
  switch (config.objective) {
    case Objective::kLambdaMart: {
      if (!group.has_relevant()) {
        LossState empty;
        empty.gradient.assign(m, 0.0);
        empty.hessian_diag.assign(m, 0.0);
        return empty;
      }
      const auto perm = ranks_from_scores(
          raw_scores, derive_seed(config.seed, 0x1a3bdaULL, iteration, group_index));
      return lambdamart_state(group.labels, raw_scores, config.sigma, perm);
    }
    case Objective::kListNet:
    case Objective::kXeNdcg: {
      std::vector<double> shifted(raw_scores.begin(), raw_scores.end());
      const double top = *std::max_element(shifted.begin(), shifted.end());
      for (double& s : shifted) s -= top;
      const bool newton = config.newton_mode == NewtonMode::kFull;
      if (config.objective == Objective::kListNet) {
        return listnet_state(group.labels, shifted, config.epsilon, newton);
      }
      const std::size_t draw_iteration = config.resample_gamma ? iteration : 0;
      // Resample until the label distribution has positive mass.
      for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(config.seed, 0x6a33aULL, draw_iteration, group_index, attempt));
        const auto gamma = sample_gamma(m, rng);
        try {
          return xe_state(group.labels, shifted, gamma, config.epsilon, newton);
        } catch (const DegenerateError&) {
          if (attempt > 1000) throw;
        }
      }
    }
  }
  throw ConfigError("unknown objective");
}

}  // namespace detail

/// Boosting with NDCG early stopping on the validation set. The returned
/// ensemble is truncated at the iteration with the best validation NDCG.
inline TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                         const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw EmptyDatasetError("training set is empty");
  for (const auto& g : valid_set.groups()) {
    if (!g.has_relevant()) {
      throw ValidationError("validation group '" + g.query_id +
                            "' has no relevant documents; filter it first");
    }
  }
  const Dataset valid = valid_set.num_features() < train_set.num_features() && !valid_set.empty()
                            ? valid_set.with_num_features(train_set.num_features())
                            : valid_set;
  if (!valid.empty() && valid.num_features() != train_set.num_features()) {
    throw ValidationError("validation set has more features than the training set");
  }

  const auto binned = bin_features(train_set, config.max_bin);
  const std::size_t n_groups = train_set.size();
  std::vector<std::size_t> offset(n_groups + 1, 0);
  for (std::size_t g = 0; g < n_groups; ++g) offset[g + 1] = offset[g] + train_set[g].size();
  const std::size_t n_docs = offset.back();

  TrainResult result;
  result.ensemble.objective = config.objective;
  result.ensemble.learning_rate = config.learning_rate;
  result.ensemble.num_features = train_set.num_features();
  result.ensemble.bins = binned.bins;

  std::vector<double> scores(n_docs, 0.0);
  std::vector<double> best_scores = scores;
  std::vector<std::vector<double>> valid_scores(valid.size());
  for (std::size_t g = 0; g < valid.size(); ++g) valid_scores[g].assign(valid[g].size(), 0.0);

  std::vector<double> grad(n_docs), hess(n_docs), losses(n_groups);
  const std::uint64_t valid_tie_seed = derive_seed(config.seed, 0x7a11dULL);
  double best_ndcg = -std::numeric_limits<double>::infinity();

  for (std::size_t it = 0; it < config.max_trees; ++it) {
    parallel_for(n_groups, [&](std::size_t g) {
      const std::span<const double> group_scores(scores.data() + offset[g], train_set[g].size());
      auto state = detail::objective_state(config, train_set[g], group_scores, it, g);
      losses[g] = state.value;
      const bool full = config.newton_mode == NewtonMode::kFull && state.newton_step;
      for (std::size_t i = 0; i < train_set[g].size(); ++i) {
        grad[offset[g] + i] = full ? (*state.newton_step)[i] : state.gradient[i];
        hess[offset[g] + i] = full ? 1.0 : state.hessian_diag[i];
      }
    });
    IterationRecord rec;
    rec.iteration = it;
    rec.train_loss = ordered_sum(losses) / static_cast<double>(n_groups);

    RegressionTree tree = fit_tree(binned.matrix, binned.bins, grad, hess, config.tree);
    for (std::size_t r = 0; r < n_docs; ++r) {
      scores[r] += config.learning_rate * tree.predict(binned.matrix, r);
    }
    for (std::size_t g = 0; g < valid.size(); ++g) {
      const auto& group = valid[g];
      for (std::size_t i = 0; i < group.size(); ++i) {
        valid_scores[g][i] += config.learning_rate * tree.predict(group.row(i));
      }
    }
    result.ensemble.trees.push_back(std::move(tree));

    rec.valid_ndcg = valid.empty() ? 0.0
                                   : mean_ndcg(valid, valid_scores, config.eval_cutoff,
                                               valid_tie_seed);
    result.log.push_back(rec);

    if (valid.empty() || rec.valid_ndcg > best_ndcg) {
      best_ndcg = rec.valid_ndcg;
      result.best_iteration = it;
      best_scores = scores;
    } else if (config.early_stopping_rounds > 0 &&
               it - result.best_iteration >= config.early_stopping_rounds) {
      break;
    }
  }

  result.ensemble.trees.resize(result.best_iteration + 1);
  result.train_scores.resize(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    result.train_scores[g].assign(best_scores.begin() + static_cast<std::ptrdiff_t>(offset[g]),
                                  best_scores.begin() + static_cast<std::ptrdiff_t>(offset[g + 1]));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model files.
//
//   rankforge-model 1
//   objective <name>
//   learning_rate <real>
//   num_features <d>
//   bin_edges <feature> <count> <edge>...      (one line per feature)
//   num_trees <T>
//   tree <index> <num_nodes> <num_leaves>
//   node <feature> <bin_threshold> <threshold> <left> <right>
//   leaves <value>...
//   end
//
// Reals are written with 17 significant digits, so reloading is bit-exact.

inline constexpr int kModelVersion = 1;

namespace detail {

inline std::string real17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next(std::string_view expected_tag) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> tokens;
      std::istringstream ss(line);
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (tokens.front() != expected_tag) {
        throw ParseError(line_no_, "expected '" + std::string(expected_tag) + "', found '" +
                                       tokens.front() + "'");
      }
      return tokens;
    }
    throw ParseError(line_no_, "unexpected end of model file, expected '" +
                                   std::string(expected_tag) + "'");
  }

  double real(const std::string& token) const {
    double v = 0.0;
    if (!parse_double(token, v)) throw ParseError(line_no_, "bad number '" + token + "'");
    return v;
  }

  template <typename Int>
  Int integer(const std::string& token) const {
    Int v{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError(line_no_, "bad integer '" + token + "'");
    }
    return v;
  }

  std::size_t line() const noexcept { return line_no_; }

  void expect_count(const std::vector<std::string>& tokens, std::size_t n) const {
    if (tokens.size() != n) throw ParseError(line_no_, "wrong number of fields");
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace detail

inline void save_model(std::ostream& out, const Ensemble& model) {
  out << "rankforge-model " << kModelVersion << '\n';
  out << "objective " << to_string(model.objective) << '\n';
  out << "learning_rate " << detail::real17(model.learning_rate) << '\n';
  out << "num_features " << model.num_features << '\n';
  for (std::size_t k = 0; k < model.bins.num_features(); ++k) {
    out << "bin_edges " << k << ' ' << model.bins.edges[k].size();
    for (double e : model.bins.edges[k]) out << ' ' << detail::real17(e);
    out << '\n';
  }
  out << "num_trees " << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& tree = model.trees[t];
    out << "tree " << t << ' ' << tree.nodes().size() << ' ' << tree.num_leaves() << '\n';
    for (const auto& n : tree.nodes()) {
      out << "node " << n.feature << ' ' << n.bin_threshold << ' ' << detail::real17(n.threshold)
          << ' ' << n.left << ' ' << n.right << '\n';
    }
    out << "leaves";
    for (double v : tree.leaf_values()) out << ' ' << detail::real17(v);
    out << '\n';
  }
  out << "end\n";
}

inline Ensemble load_model(std::istream& in) {
  detail::LineReader reader(in);
  Ensemble model;
  auto header = reader.next("rankforge-model");
  reader.expect_count(header, 2);
  if (reader.integer<int>(header[1]) != kModelVersion) {
    throw Error("unsupported model version " + header[1] + " (this build reads version " +
                std::to_string(kModelVersion) + ")");
  }
  auto obj = reader.next("objective");
  reader.expect_count(obj, 2);
  model.objective = parse_objective(obj[1]);
  auto lr = reader.next("learning_rate");
  reader.expect_count(lr, 2);
  model.learning_rate = reader.real(lr[1]);
  auto nf = reader.next("num_features");
  reader.expect_count(nf, 2);
  model.num_features = reader.integer<std::size_t>(nf[1]);
  model.bins.edges.resize(model.num_features);
  for (std::size_t k = 0; k < model.num_features; ++k) {
    auto e = reader.next("bin_edges");
    if (e.size() < 3 || reader.integer<std::size_t>(e[1]) != k) {
      throw ParseError(reader.line(), "malformed bin_edges record for feature " + std::to_string(k));
    }
    const auto count = reader.integer<std::size_t>(e[2]);
    reader.expect_count(e, 3 + count);
    for (std::size_t i = 0; i < count; ++i) model.bins.edges[k].push_back(reader.real(e[3 + i]));
  }
  auto nt = reader.next("num_trees");
  reader.expect_count(nt, 2);
  const auto n_trees = reader.integer<std::size_t>(nt[1]);
  for (std::size_t t = 0; t < n_trees; ++t) {
    auto th = reader.next("tree");
    reader.expect_count(th, 4);
    const auto n_nodes = reader.integer<std::size_t>(th[2]);
    const auto n_leaves = reader.integer<std::size_t>(th[3]);
    std::vector<TreeNode> nodes(n_nodes);
    for (auto& n : nodes) {
      auto f = reader.next("node");
      reader.expect_count(f, 6);
      n.feature = reader.integer<std::size_t>(f[1]);
      n.bin_threshold = reader.integer<std::uint16_t>(f[2]);
      n.threshold = reader.real(f[3]);
      n.left = reader.integer<int>(f[4]);
      n.right = reader.integer<int>(f[5]);
      if (n.feature >= model.num_features) throw ParseError(reader.line(), "node feature out of range");
    }
    auto lv = reader.next("leaves");
    reader.expect_count(lv, 1 + n_leaves);
    std::vector<double> values(n_leaves);
    for (std::size_t i = 0; i < n_leaves; ++i) values[i] = reader.real(lv[1 + i]);
    if (n_leaves != n_nodes + 1) throw ParseError(reader.line(), "tree leaf count must be node count + 1");
    model.trees.emplace_back(std::move(nodes), std::move(values));
  }
  reader.next("end");
  return model;
}

inline void save_model(const std::string& path, const Ensemble& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  save_model(out, model);
  if (!out) throw Error("write failed for '" + path + "'");
}

inline Ensemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace rankforge

#endif  // RANKFORGE_GBRT_HPP_
