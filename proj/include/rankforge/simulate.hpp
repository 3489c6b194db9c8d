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

#ifndef RANKFORGE_SIMULATE_HPP_
#define RANKFORGE_SIMULATE_HPP_

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/common.hpp"
#include "rankforge/dataset.hpp"
#include "rankforge/gbrt.hpp"
#include "rankforge/metrics.hpp"

namespace rankforge {

/// Cascade click model: the user scans top-down and clicks a document of
/// grade g with probability click_prob[g], stopping at the first click.
struct ClickModel {
  std::array<double, 5> click_prob = {0.05, 0.3, 0.5, 0.7, 0.95};
  std::size_t impressions_per_query = 10;

  void validate() const {
    for (double p : click_prob) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("click probabilities must lie in [0, 1]");
    }
    if (impressions_per_query < 1) throw ConfigError("impressions_per_query must be >= 1");
  }
};

/// Label noise: each document is selected with probability `fraction` and
/// its label redrawn from grade_dist over grades 0..4.
struct PerturbSpec {
  double fraction = 0.0;
  std::array<double, 5> grade_dist = {0.5, 0.2, 0.15, 0.1, 0.05};

  void validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in [0, 1]");
    double total = 0.0;
    for (double p : grade_dist) {
      if (!(p >= 0.0)) throw ConfigError("grade probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("grade probabilities must sum to 1");
  }
};

inline int grade_of(double label) noexcept {
  return static_cast<int>(std::clamp<long long>(std::llround(label), 0, 4));
}

/// Appends ceil(percent * m) documents per group, drawn uniformly from the
/// documents of all other groups, with label 0. percent is a fraction
/// (0.4 means 40% more documents).
inline Dataset augment_negatives(const Dataset& train, double percent, Rng& rng) {
  if (!(percent >= 0.0) || !std::isfinite(percent)) {
    throw ConfigError("augmentation percent must be >= 0");
  }
  if (train.size() < 2) {
    throw ValidationError("augmentation needs at least two query groups");
  }
  std::vector<std::size_t> offset(train.size() + 1, 0);
  for (std::size_t g = 0; g < train.size(); ++g) offset[g + 1] = offset[g] + train[g].size();
  const std::size_t total = offset.back();
  const auto locate = [&](std::size_t doc) {
    const auto it = std::upper_bound(offset.begin(), offset.end(), doc);
    const auto g = static_cast<std::size_t>(it - offset.begin()) - 1;
    return std::pair{g, doc - offset[g]};
  };

  std::vector<QueryGroup> out = train.groups();
  for (std::size_t g = 0; g < train.size(); ++g) {
    const std::size_t m = train[g].size();
    const auto extra =
        static_cast<std::size_t>(std::ceil(percent * static_cast<double>(m) - 1e-9));
    const std::size_t pool = total - m;
    for (std::size_t k = 0; k < extra; ++k) {
      // Index into the pool with group g's block removed.
      std::size_t doc = rng.below(pool);
      if (doc >= offset[g]) doc += m;
      const auto [src, i] = locate(doc);
      out[g].add_document(train[src].row(i), 0.0);
    }
  }
  return Dataset(std::move(out), train.num_features());
}

inline Dataset perturb_labels(const Dataset& train, const PerturbSpec& spec, Rng& rng) {
  spec.validate();
  const std::vector<double> weights(spec.grade_dist.begin(), spec.grade_dist.end());
  std::vector<QueryGroup> out = train.groups();
  for (auto& g : out) {
    for (double& y : g.labels) {
      if (rng.bernoulli(spec.fraction)) y = static_cast<double>(rng.categorical(weights));
    }
  }
  return Dataset(std::move(out), train.num_features());
}

struct Impression {
  std::vector<std::size_t> order;  // shuffled document indices
  std::optional<std::size_t> click_position;
};

/// One cascade scan over a random shuffle of the documents.
inline Impression simulate_impression(std::span<const double> labels, const ClickModel& model,
                                      Rng& rng) {
  Impression imp;
  imp.order.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) imp.order[i] = i;
  rng.shuffle(imp.order);
  for (std::size_t pos = 0; pos < imp.order.size(); ++pos) {
    if (rng.bernoulli(model.click_prob[grade_of(labels[imp.order[pos]])])) {
      imp.click_position = pos;
      break;
    }
  }
  return imp;
}

struct ClickSimulation {
  Dataset dataset;
  std::size_t impressions = 0;
  std::size_t dropped = 0;  // impressions without a click

  double drop_rate() const {
    return impressions == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(impressions);
  }
};

/// Turns each group into impressions_per_query click impressions. Each
/// impression reshuffles the group, keeps the scanned prefix up to the first
/// click, and labels the clicked document 1 and the rest 0. Impressions with
/// no click are dropped. Query ids are "<source qid>_<impression>".
inline ClickSimulation cascade_clicks(const Dataset& train, const ClickModel& model, Rng& rng) {
  model.validate();
  ClickSimulation sim;
  std::vector<QueryGroup> out;
  for (const auto& g : train.groups()) {
    for (std::size_t k = 0; k < model.impressions_per_query; ++k) {
      ++sim.impressions;
      const auto imp = simulate_impression(g.labels, model, rng);
      if (!imp.click_position) {
        ++sim.dropped;
        continue;
      }
      QueryGroup q;
      q.query_id = g.query_id + "_" + std::to_string(k);
      q.num_features = g.num_features;
      for (std::size_t pos = 0; pos <= *imp.click_position; ++pos) {
        q.add_document(g.row(imp.order[pos]), pos == *imp.click_position ? 1.0 : 0.0);
      }
      out.push_back(std::move(q));
    }
  }
  sim.dataset = Dataset(std::move(out), train.num_features());
  return sim;
}

// ---------------------------------------------------------------------------
// Robustness experiments.

enum class Protocol { kAugment, kPerturb, kClicks };

inline std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::kAugment: return "augment";
    case Protocol::kPerturb: return "perturb";
    case Protocol::kClicks: return "clicks";
  }
  return "unknown";
}

inline Protocol parse_protocol(std::string_view name) {
  if (name == "augment") return Protocol::kAugment;
  if (name == "perturb") return Protocol::kPerturb;
  if (name == "clicks") return Protocol::kClicks;
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

/// Sweep values are: augment -> fraction of extra documents per group;
/// perturb -> fraction of labels redrawn; clicks -> click probability of
/// grade-0 documents.
struct ExperimentConfig {
  Protocol protocol = Protocol::kPerturb;
  std::vector<double> sweep;
  std::size_t trials = 1;
  TrainConfig base;
  std::uint64_t seed = 0;
  std::array<double, 3> split_fractions = {0.6, 0.2, 0.2};
  PerturbSpec perturb;
  ClickModel clicks;
  std::size_t eval_cutoff = 5;
};

struct ExperimentRow {
  Protocol protocol = Protocol::kPerturb;
  double sweep_value = 0.0;
  std::size_t trial = 0;
  Objective model = Objective::kXeNdcg;
  double ndcg = 0.0;
};

struct PairedStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> t_statistic;
  std::optional<double> p_value;  // two-sided; needs n >= 2
};

/// Paired t-test on x - y. With zero variance the statistic is undefined and
/// the p-value is 1 for identical samples and 0 otherwise.
inline PairedStats paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("paired samples differ in length");
  PairedStats s;
  s.n = x.size();
  if (s.n == 0) return s;
  std::vector<double> d(s.n);
  for (std::size_t i = 0; i < s.n; ++i) d[i] = x[i] - y[i];
  s.mean = ordered_sum(d) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : d) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  if (s.stddev == 0.0) {
    s.p_value = s.mean == 0.0 ? 1.0 : 0.0;
    return s;
  }
  const double t = s.mean / (s.stddev / std::sqrt(static_cast<double>(s.n)));
  s.t_statistic = t;
  const boost::math::students_t dist(static_cast<double>(s.n - 1));
  s.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return s;
}

struct SweepSummary {
  double sweep_value = 0.0;
  double xe_mean = 0.0, xe_stddev = 0.0;
  double lambdamart_mean = 0.0, lambdamart_stddev = 0.0;
  PairedStats difference;   // XE_NDCG minus LambdaMART, paired by trial
  PairedStats degradation;  // drop from the first sweep value, XE minus LambdaMART
  double xe_degradation = 0.0;
  double lambdamart_degradation = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<SweepSummary> summary;
};

namespace detail {

inline double sample_stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// For each trial: a fresh seeded 60/20/20 split; the noise protocol is
/// applied to the training set (and, for clicks, to the validation set);
/// LambdaMART and XE_NDCG are trained with identical seeds and scored by
/// NDCG@cutoff on the untouched test set.
inline ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config) {
  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  if (config.sweep.empty()) throw ConfigError("sweep must contain at least one value");
  config.base.validate();
  config.perturb.validate();
  config.clicks.validate();
  for (double v : config.sweep) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("sweep values must be >= 0");
    if (config.protocol != Protocol::kAugment && v > 1.0) {
      throw ConfigError("perturb and click sweep values must lie in [0, 1]");
    }
  }

  const std::size_t n_sweep = config.sweep.size();
  constexpr Objective kModels[] = {Objective::kLambdaMart, Objective::kXeNdcg};
  // ndcg[trial][sweep][model]
  std::vector<std::vector<std::array<double, 2>>> ndcg(
      config.trials, std::vector<std::array<double, 2>>(n_sweep));

  parallel_for(config.trials, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, 0xe8e7ULL, t);
    const auto parts = split(data, config.split_fractions, trial_seed);
    const Dataset valid = filter_no_relevant(parts.valid).dataset;
    const Dataset test = filter_no_relevant(parts.test).dataset;
    if (test.empty()) throw EmptyDatasetError("test split has no relevant documents");
    for (std::size_t s = 0; s < n_sweep; ++s) {
      const double value = config.sweep[s];
      Rng rng(derive_seed(trial_seed, 0x401eULL, s));
      Dataset noisy_train;
      Dataset noisy_valid = valid;
      switch (config.protocol) {
        case Protocol::kAugment:
          noisy_train = augment_negatives(parts.train, value, rng);
          break;
        case Protocol::kPerturb: {
          PerturbSpec spec = config.perturb;
          spec.fraction = value;
          noisy_train = perturb_labels(parts.train, spec, rng);
          break;
        }
        case Protocol::kClicks: {
          ClickModel model = config.clicks;
          model.click_prob[0] = value;
          noisy_train = cascade_clicks(parts.train, model, rng).dataset;
          noisy_valid = cascade_clicks(valid, model, rng).dataset;
          break;
        }
      }
      if (noisy_train.empty()) throw EmptyDatasetError("noisy training set is empty");
      for (std::size_t k = 0; k < 2; ++k) {
        TrainConfig cfg = config.base;
        cfg.objective = kModels[k];
        cfg.seed = trial_seed;
        const auto trained = train(noisy_train, noisy_valid, cfg);
        ndcg[t][s][k] = mean_ndcg(test, predict(trained.ensemble, test), config.eval_cutoff,
                                  derive_seed(trial_seed, 0x7e57ULL));
      }
    }
  });

  ExperimentResult result;
  for (std::size_t s = 0; s < n_sweep; ++s) {
    for (std::size_t t = 0; t < config.trials; ++t) {
      for (std::size_t k = 0; k < 2; ++k) {
        result.rows.push_back({config.protocol, config.sweep[s], t, kModels[k], ndcg[t][s][k]});
      }
    }
  }
  for (std::size_t s = 0; s < n_sweep; ++s) {
    std::vector<double> lm(config.trials), xe(config.trials), lm_drop(config.trials),
        xe_drop(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t) {
      lm[t] = ndcg[t][s][0];
      xe[t] = ndcg[t][s][1];
      lm_drop[t] = ndcg[t][0][0] - ndcg[t][s][0];
      xe_drop[t] = ndcg[t][0][1] - ndcg[t][s][1];
    }
    SweepSummary sum;
    sum.sweep_value = config.sweep[s];
    sum.xe_mean = ordered_sum(xe) / static_cast<double>(config.trials);
    sum.lambdamart_mean = ordered_sum(lm) / static_cast<double>(config.trials);
    sum.xe_stddev = detail::sample_stddev(xe, sum.xe_mean);
    sum.lambdamart_stddev = detail::sample_stddev(lm, sum.lambdamart_mean);
    sum.difference = paired_t_test(xe, lm);
    sum.degradation = paired_t_test(xe_drop, lm_drop);
    sum.xe_degradation = ordered_sum(xe_drop) / static_cast<double>(config.trials);
    sum.lambdamart_degradation = ordered_sum(lm_drop) / static_cast<double>(config.trials);
    result.summary.push_back(sum);
  }
  return result;
}

// Tab-separated reports.

namespace detail {
inline std::string optional_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string("NA");
}
}  // namespace detail

inline void write_results_tsv(std::ostream& out, const ExperimentResult& r) {
  out << "protocol\tsweep_value\ttrial\tmodel\tndcg_at_5\n";
  for (const auto& row : r.rows) {
    out << to_string(row.protocol) << '\t' << detail::format_real(row.sweep_value) << '\t'
        << row.trial << '\t' << to_string(row.model) << '\t' << detail::format_real(row.ndcg)
        << '\n';
  }
}

inline void write_summary_tsv(std::ostream& out, const ExperimentResult& r) {
  out << "sweep_value\txe_ndcg_mean\txe_ndcg_sd\tlambdamart_mean\tlambdamart_sd"
         "\tdiff_mean\tdiff_sd\tdiff_t\tdiff_p\txe_ndcg_degradation"
         "\tlambdamart_degradation\tdegradation_diff_t\tdegradation_diff_p\n";
  for (const auto& s : r.summary) {
    using detail::format_real;
    out << format_real(s.sweep_value) << '\t' << format_real(s.xe_mean) << '\t'
        << format_real(s.xe_stddev) << '\t' << format_real(s.lambdamart_mean) << '\t'
        << format_real(s.lambdamart_stddev) << '\t' << format_real(s.difference.mean) << '\t'
        << format_real(s.difference.stddev) << '\t'
        << detail::optional_real(s.difference.t_statistic) << '\t'
        << detail::optional_real(s.difference.p_value) << '\t' << format_real(s.xe_degradation)
        << '\t' << format_real(s.lambdamart_degradation) << '\t'
        << detail::optional_real(s.degradation.t_statistic) << '\t'
        << detail::optional_real(s.degradation.p_value) << '\n';
  }
}

/// Figure data: x, mean NDCG per model, and their difference.
inline void write_plot_tsv(std::ostream& out, const ExperimentResult& r) {
  out << "x\tlambdamart\txe_ndcg\tdifference\n";
  for (const auto& s : r.summary) {
    out << detail::format_real(s.sweep_value) << '\t' << detail::format_real(s.lambdamart_mean)
        << '\t' << detail::format_real(s.xe_mean) << '\t'
        << detail::format_real(s.xe_mean - s.lambdamart_mean) << '\n';
  }
}

}  // namespace rankforge

#endif  // RANKFORGE_SIMULATE_HPP_
