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

#ifndef RANKFORGE_DATASET_HPP_
#define RANKFORGE_DATASET_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rankforge/common.hpp"

namespace rankforge {

/// One training example: m documents with d features each and graded labels.
/// Features are stored row-major (document-major).
struct QueryGroup {
  std::string query_id;
  std::size_t num_features = 0;
  std::vector<double> features;
  std::vector<double> labels;

  std::size_t size() const noexcept { return labels.size(); }

  std::span<const double> row(std::size_t doc) const noexcept {
    return {features.data() + doc * num_features, num_features};
  }
  std::span<double> row(std::size_t doc) noexcept {
    return {features.data() + doc * num_features, num_features};
  }

  double feature(std::size_t doc, std::size_t k) const noexcept {
    return features[doc * num_features + k];
  }

  bool has_relevant() const noexcept {
    return std::any_of(labels.begin(), labels.end(),
                       [](double y) { return y > 0.0; });
  }

  /// Appends a document; the row must have num_features entries.
  void add_document(std::span<const double> x, double label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }

  friend bool operator==(const QueryGroup&, const QueryGroup&) = default;
};

/// Ordered collection of query groups sharing one feature dimensionality.
/// Immutable once constructed.
class Dataset {
 public:
  Dataset() = default;

  /// Validates every group. Groups with fewer than num_features columns are
  /// zero-padded (sparse inputs omit trailing zeros); more columns is an error.
  Dataset(std::vector<QueryGroup> groups, std::size_t num_features)
      : groups_(std::move(groups)), num_features_(num_features) {
    for (auto& g : groups_) {
      if (g.labels.empty()) {
        throw ValidationError("query group '" + g.query_id + "' is empty");
      }
      if (g.num_features > num_features_) {
        throw ValidationError("query group '" + g.query_id + "' has " +
                              std::to_string(g.num_features) +
                              " features, dataset has " +
                              std::to_string(num_features_));
      }
      if (g.features.size() != g.labels.size() * g.num_features) {
        throw ValidationError("query group '" + g.query_id +
                              "': feature rows do not match label count");
      }
      for (double y : g.labels) {
        if (!(y >= 0.0) || !std::isfinite(y)) {
          throw ValidationError("query group '" + g.query_id +
                                "' has a negative or non-finite label");
        }
      }
      if (g.num_features < num_features_) pad(g, num_features_);
    }
  }

  const std::vector<QueryGroup>& groups() const noexcept { return groups_; }
  const QueryGroup& operator[](std::size_t i) const noexcept { return groups_[i]; }
  std::size_t size() const noexcept { return groups_.size(); }
  bool empty() const noexcept { return groups_.empty(); }
  std::size_t num_features() const noexcept { return num_features_; }

  std::size_t num_documents() const noexcept {
    std::size_t total = 0;
    for (const auto& g : groups_) total += g.size();
    return total;
  }

  /// Copy with feature dimensionality widened to d (zero-filled).
  Dataset with_num_features(std::size_t d) const {
    if (d < num_features_) {
      throw ValidationError("cannot narrow dataset from " +
                            std::to_string(num_features_) + " to " +
                            std::to_string(d) + " features");
    }
    return Dataset(groups_, d);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  static void pad(QueryGroup& g, std::size_t d) {
    std::vector<double> wide(g.size() * d, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::copy_n(g.features.begin() + i * g.num_features, g.num_features,
                  wide.begin() + i * d);
    }
    g.features = std::move(wide);
    g.num_features = d;
  }

  std::vector<QueryGroup> groups_;
  std::size_t num_features_ = 0;
};

// ---------------------------------------------------------------------------
// LETOR / SVMLight text format:
//   <label> qid:<id> <fid>:<value> ... [# comment]

namespace detail {

inline bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  // std::from_chars does not accept a leading '+'.
  if (token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

struct SparseDoc {
  double label;
  std::vector<std::pair<std::size_t, double>> entries;  // 0-based ids
};

}  // namespace detail

/// Parses a LETOR stream. Contiguous lines sharing a qid form one group; a
/// qid that reappears after a different one starts a new group.
inline Dataset parse_letor(std::istream& in) {
  struct PendingGroup {
    std::string qid;
    std::vector<detail::SparseDoc> docs;
  };
  std::vector<PendingGroup> pending;
  std::size_t max_feature = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    const auto tokens = detail::split_whitespace(view);
    if (tokens.empty()) continue;

    detail::SparseDoc doc;
    if (!detail::parse_double(tokens[0], doc.label) || !std::isfinite(doc.label)) {
      throw ParseError(line_no, "malformed label '" + std::string(tokens[0]) + "'");
    }
    if (doc.label < 0.0) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": negative label " + std::string(tokens[0]));
    }
    if (tokens.size() < 2 || tokens[1].substr(0, 4) != "qid:" ||
        tokens[1].size() == 4) {
      throw ParseError(line_no, "expected qid:<id> after the label");
    }
    std::string qid(tokens[1].substr(4));

    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0) {
        throw ParseError(line_no, "malformed feature '" + std::string(tok) + "'");
      }
      std::size_t fid = 0;
      const auto fid_str = tok.substr(0, colon);
      const auto [ptr, ec] =
          std::from_chars(fid_str.data(), fid_str.data() + fid_str.size(), fid);
      if (ec != std::errc() || ptr != fid_str.data() + fid_str.size() || fid == 0) {
        throw ParseError(line_no, "feature id must be a positive integer in '" +
                                      std::string(tok) + "'");
      }
      double value = 0.0;
      if (!detail::parse_double(tok.substr(colon + 1), value) || !std::isfinite(value)) {
        throw ParseError(line_no, "malformed feature value in '" + std::string(tok) + "'");
      }
      doc.entries.emplace_back(fid - 1, value);
      max_feature = std::max(max_feature, fid);
    }

    if (pending.empty() || pending.back().qid != qid) {
      pending.push_back({std::move(qid), {}});
    }
    pending.back().docs.push_back(std::move(doc));
  }
  if (pending.empty()) throw EmptyDatasetError("input contains no documents");

  std::vector<QueryGroup> groups;
  groups.reserve(pending.size());
  for (auto& p : pending) {
    QueryGroup g;
    g.query_id = std::move(p.qid);
    g.num_features = max_feature;
    g.features.assign(p.docs.size() * max_feature, 0.0);
    g.labels.reserve(p.docs.size());
    for (std::size_t i = 0; i < p.docs.size(); ++i) {
      for (const auto& [k, v] : p.docs[i].entries) {
        g.features[i * max_feature + k] = v;
      }
      g.labels.push_back(p.docs[i].label);
    }
    groups.push_back(std::move(g));
  }
  return Dataset(std::move(groups), max_feature);
}

inline Dataset parse_letor(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_letor(in);
}

inline Dataset load_letor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_letor(in);
}

namespace detail {
inline std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace detail

/// Writes every feature explicitly so that d survives a round trip. Values use
/// shortest round-trip formatting.
inline void write_letor(std::ostream& out, const Dataset& data) {
  for (const auto& g : data.groups()) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      out << detail::format_real(g.labels[i]) << " qid:" << g.query_id;
      for (std::size_t k = 0; k < g.num_features; ++k) {
        out << ' ' << (k + 1) << ':' << detail::format_real(g.feature(i, k));
      }
      out << '\n';
    }
  }
}

inline void save_letor(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_letor(out, data);
  if (!out) throw Error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting and filtering.

struct Split {
  Dataset train;
  Dataset valid;
  Dataset test;
};

/// Partitions whole query groups by a seeded shuffle. The train count is
/// rounded up, valid is rounded to nearest, and test takes the remainder.
inline Split split(const Dataset& data, std::array<double, 3> fractions,
                   std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  if (data.empty()) throw EmptyDatasetError("cannot split an empty dataset");

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5b117ULL));
  rng.shuffle(order);

  const auto n_train = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(fractions[0] * n - 1e-9)));
  const auto n_valid = std::min<std::size_t>(
      n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));

  std::vector<QueryGroup> parts[3];
  for (std::size_t i = 0; i < n; ++i) {
    const int which = i < n_train ? 0 : (i < n_train + n_valid ? 1 : 2);
    parts[which].push_back(data[order[i]]);
  }
  const std::size_t d = data.num_features();
  return {Dataset(std::move(parts[0]), d), Dataset(std::move(parts[1]), d),
          Dataset(std::move(parts[2]), d)};
}

inline Split split(const Dataset& data, std::uint64_t seed) {
  return split(data, {0.6, 0.2, 0.2}, seed);
}

struct FilterResult {
  Dataset dataset;
  std::size_t removed = 0;
};

/// Drops groups without any positive label (their NDCG is undefined).
inline FilterResult filter_no_relevant(const Dataset& data) {
  std::vector<QueryGroup> kept;
  std::size_t removed = 0;
  for (const auto& g : data.groups()) {
    if (g.has_relevant()) {
      kept.push_back(g);
    } else {
      ++removed;
    }
  }
  return {Dataset(std::move(kept), data.num_features()), removed};
}

// ---------------------------------------------------------------------------
// Synthetic data.

/// Grade frequencies used by synth_dataset, from grade 0 to grade 4.
inline constexpr std::array<double, 5> kSynthGradeShares = {0.45, 0.25, 0.15,
                                                            0.10, 0.05};

/// Desk-scale stand-in for the benchmark collections. Features are uniform on
/// [0,1]; a latent utility is a fixed linear function of the first min(5, d)
/// features plus Gaussian noise; labels quantize the utility at the
/// empirical quantiles given by kSynthGradeShares, so grade frequencies
/// decrease from 0 to 4.
inline Dataset synth_dataset(std::size_t n, std::size_t m, std::size_t d,
                             std::uint64_t seed, double noise = 0.25) {
  if (n == 0 || m == 0 || d == 0) {
    throw ConfigError("synth_dataset requires n, m, d >= 1");
  }
  constexpr std::array<double, 5> weights = {1.0, 0.8, 0.6, 0.4, 0.2};
  const std::size_t informative = std::min<std::size_t>(5, d);

  Rng rng(derive_seed(seed, 0x5e7dULL));
  std::vector<QueryGroup> groups(n);
  std::vector<double> utility;
  utility.reserve(n * m);
  for (std::size_t q = 0; q < n; ++q) {
    auto& g = groups[q];
    g.query_id = std::to_string(q + 1);
    g.num_features = d;
    g.features.resize(m * d);
    g.labels.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double u = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double x = rng.uniform();
        g.features[i * d + k] = x;
        if (k < informative) u += weights[k] * x;
      }
      utility.push_back(u + noise * rng.normal());
    }
  }

  // Rank all utilities; grade boundaries sit at cumulative share positions.
  const std::size_t total = utility.size();
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return utility[a] < utility[b];
  });
  std::vector<int> grade(total, 0);
  double cumulative = 0.0;
  std::size_t start = 0;
  for (int gr = 0; gr < 5; ++gr) {
    cumulative += kSynthGradeShares[gr];
    const std::size_t end =
        gr == 4 ? total
                : std::min(total, static_cast<std::size_t>(
                                      std::llround(cumulative * total)));
    for (std::size_t r = start; r < end; ++r) grade[order[r]] = gr;
    start = std::max(start, end);
  }
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t i = 0; i < m; ++i) {
      groups[q].labels[i] = grade[q * m + i];
    }
  }
  return Dataset(std::move(groups), d);
}

}  // namespace rankforge

#endif  // RANKFORGE_DATASET_HPP_
