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

#ifndef RANKFORGE_LOSSES_HPP_
#define RANKFORGE_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/common.hpp"
#include "rankforge/metrics.hpp"

namespace rankforge {

enum class Objective { kXeNdcg, kListNet, kLambdaMart };

inline std::string to_string(Objective o) {
  switch (o) {
    case Objective::kXeNdcg: return "xe_ndcg";
    case Objective::kListNet: return "listnet";
    case Objective::kLambdaMart: return "lambdamart";
  }
  return "unknown";
}

inline Objective parse_objective(std::string_view name) {
  if (name == "xe_ndcg") return Objective::kXeNdcg;
  if (name == "listnet") return Objective::kListNet;
  if (name == "lambdamart") return Objective::kLambdaMart;
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

/// Default probability mass withheld from the score distribution. Applied to
/// max-shifted scores by the trainer, so it is relative to the largest e^f.
inline constexpr double kDefaultEpsilon = 1e-5;

/// Per-document label-distribution offsets, each in [0, 1].
struct GammaVector {
  std::vector<double> values;
  std::size_t size() const noexcept { return values.size(); }
};

/// A probability vector over the documents of one query.
struct LabelDistribution {
  std::vector<double> phi;
  std::size_t size() const noexcept { return phi.size(); }
};

/// Softmax of scores with a mass epsilon reserved for a phantom document:
///   rho_i = e^{f_i} / (sum_j e^{f_j} + epsilon),
///   residual_mass = epsilon / (sum_j e^{f_j} + epsilon).
/// one_minus_rho is computed from the complementary sum rather than 1 - rho,
/// which keeps it accurate when a single document dominates.
struct ScoreDistribution {
  std::vector<double> rho;
  std::vector<double> one_minus_rho;
  std::vector<double> log_rho;
  double epsilon = 0.0;
  double residual_mass = 0.0;

  std::size_t size() const noexcept { return rho.size(); }
};

/// Value, gradient and diagonal Hessian of a per-query loss, plus the
/// approximate Newton direction H^{-1} grad when requested.
struct LossState {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> hessian_diag;
  std::optional<std::vector<double>> newton_step;
};

// ---------------------------------------------------------------------------

inline GammaVector sample_gamma(std::size_t m, Rng& rng) {
  if (m == 0) throw ConfigError("sample_gamma requires m >= 1");
  GammaVector g;
  g.values.resize(m);
  for (auto& v : g.values) v = rng.uniform();
  return g;
}

/// Draw keyed by (seed, iteration, group) so any schedule sees the same values.
inline GammaVector sample_gamma(std::size_t m, std::uint64_t seed,
                                std::uint64_t iteration, std::uint64_t group) {
  Rng rng(derive_seed(seed, 0x6a33aULL, iteration, group));
  return sample_gamma(m, rng);
}

inline LabelDistribution xe_phi(std::span<const double> labels, const GammaVector& gamma) {
  if (gamma.size() != labels.size()) {
    throw ValidationError("xe_phi: gamma and label lengths differ");
  }
  LabelDistribution out;
  out.phi.resize(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double g = gamma.values[i];
    if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("gamma entries must lie in [0, 1]");
    out.phi[i] = std::exp2(labels[i]) - g;
    total += out.phi[i];
  }
  if (!(total > 0.0)) {
    throw DegenerateError("label distribution has zero mass (all labels 0 and gamma 1)");
  }
  for (double& p : out.phi) p /= total;
  return out;
}

namespace detail {

inline LabelDistribution softmax(std::span<const double> values) {
  LabelDistribution out;
  out.phi.resize(values.size());
  if (values.empty()) return out;
  const double top = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.phi[i] = std::exp(values[i] - top);
    total += out.phi[i];
  }
  for (double& p : out.phi) p /= total;
  return out;
}

/// epsilon == 0 gives the plain softmax; used by the certification code,
/// which checks results stated for the unregularized distribution.
inline ScoreDistribution score_distribution(std::span<const double> scores, double epsilon) {
  const std::size_t m = scores.size();
  ScoreDistribution d;
  d.epsilon = epsilon;
  d.rho.resize(m);
  d.one_minus_rho.resize(m);
  d.log_rho.resize(m);
  if (m == 0) return d;
  for (double f : scores) {
    if (!std::isfinite(f)) throw ValidationError("scores must be finite");
  }
  const auto top_it = std::max_element(scores.begin(), scores.end());
  const double top = *top_it;
  const auto arg = static_cast<std::size_t>(top_it - scores.begin());
  // epsilon rescaled into the max-shifted frame.
  const double eps_shifted = epsilon * std::exp(-top);
  // The largest shifted term is exactly 1; everything else is summed apart
  // so log1p keeps full precision when the rest is small.
  std::vector<double> z(m);
  double others = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = i == arg ? 1.0 : std::exp(scores[i] - top);
    if (i != arg) others += z[i];
  }
  const double rest = others + eps_shifted;
  const double denom = 1.0 + rest;
  const double log_denom = std::log1p(rest);
  d.residual_mass = eps_shifted / denom;
  for (std::size_t i = 0; i < m; ++i) {
    d.rho[i] = z[i] / denom;
    d.one_minus_rho[i] = (i == arg ? rest : (1.0 + (others - z[i])) + eps_shifted) / denom;
    d.log_rho[i] = (scores[i] - top) - log_denom;
  }
  return d;
}

inline void check_lengths(std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw ValidationError("label and score lengths differ");
  }
  if (labels.empty()) throw ValidationError("empty query");
}

}  // namespace detail

/// Top-one probabilities of the labels.
inline LabelDistribution listnet_phi(std::span<const double> labels) {
  return detail::softmax(labels);
}

/// Top-one probabilities of the scores.
inline LabelDistribution listnet_rho(std::span<const double> scores) {
  return detail::softmax(scores);
}

inline ScoreDistribution xe_rho(std::span<const double> scores, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  return detail::score_distribution(scores, epsilon);
}

/// Cross entropy -sum phi_i log rho_i.
inline double cross_entropy(const LabelDistribution& phi, const ScoreDistribution& rho) {
  double value = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi.phi[i] != 0.0) value -= phi.phi[i] * rho.log_rho[i];
  }
  return value;
}

inline double xe_loss(std::span<const double> labels, std::span<const double> scores,
                      const GammaVector& gamma, double epsilon = kDefaultEpsilon) {
  detail::check_lengths(labels, scores);
  return cross_entropy(xe_phi(labels, gamma), xe_rho(scores, epsilon));
}

inline std::vector<double> xe_gradient(std::span<const double> labels,
                                       std::span<const double> scores,
                                       const GammaVector& gamma,
                                       double epsilon = kDefaultEpsilon) {
  detail::check_lengths(labels, scores);
  const auto phi = xe_phi(labels, gamma);
  const auto rho = xe_rho(scores, epsilon);
  std::vector<double> grad(labels.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = rho.rho[i] - phi.phi[i];
  return grad;
}

/// Dense m x m Hessian of the cross entropy in the scores, row-major.
inline std::vector<double> xe_hessian_dense(std::span<const double> scores, double epsilon) {
  const auto rho = xe_rho(scores, epsilon);
  const std::size_t m = scores.size();
  std::vector<double> h(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      h[i * m + j] = i == j ? rho.rho[i] * rho.one_minus_rho[i] : -rho.rho[i] * rho.rho[j];
    }
  }
  return h;
}

/// Three-term Neumann approximation (I + S + S^2) D^{-1} grad of H^{-1} grad,
/// where H = D (I - S), D = diag(rho (1 - rho)), S_ij = rho_j / (1 - rho_i)
/// off the diagonal. Uses shared partial sums, so it runs in O(m).
inline std::vector<double> neumann_newton_step(std::span<const double> gradient,
                                               const ScoreDistribution& dist) {
  const std::size_t m = gradient.size();
  // first[k] = (S D^{-1} grad)_k = (A - a_k) / (1 - rho_k), a_i = g_i / (1 - rho_i).
  std::vector<double> a(m);
  double sum_a = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    a[i] = gradient[i] / dist.one_minus_rho[i];
    sum_a += a[i];
  }
  std::vector<double> first(m);
  double sum_b = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    first[k] = (sum_a - a[k]) / dist.one_minus_rho[k];
    sum_b += dist.rho[k] * first[k];
  }
  std::vector<double> step(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double diag = dist.rho[k] * dist.one_minus_rho[k];
    const double second = (sum_b - dist.rho[k] * first[k]) / dist.one_minus_rho[k];
    step[k] = gradient[k] / diag + first[k] + second;
  }
  return step;
}

inline std::vector<double> xe_newton_step(std::span<const double> labels,
                                          std::span<const double> scores,
                                          const GammaVector& gamma,
                                          double epsilon = kDefaultEpsilon) {
  const auto rho = xe_rho(scores, epsilon);
  return neumann_newton_step(xe_gradient(labels, scores, gamma, epsilon), rho);
}

namespace detail {

inline LossState cross_entropy_state(const LabelDistribution& phi,
                                     const ScoreDistribution& rho, bool with_newton) {
  LossState s;
  s.value = cross_entropy(phi, rho);
  const std::size_t m = phi.size();
  s.gradient.resize(m);
  s.hessian_diag.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    s.gradient[i] = rho.rho[i] - phi.phi[i];
    s.hessian_diag[i] = rho.rho[i] * rho.one_minus_rho[i];
  }
  if (with_newton) s.newton_step = neumann_newton_step(s.gradient, rho);
  return s;
}

}  // namespace detail

inline LossState xe_state(std::span<const double> labels, std::span<const double> scores,
                          const GammaVector& gamma, double epsilon = kDefaultEpsilon,
                          bool with_newton = true) {
  detail::check_lengths(labels, scores);
  return detail::cross_entropy_state(xe_phi(labels, gamma), xe_rho(scores, epsilon),
                                     with_newton);
}

/// ListNet: cross entropy between label softmax and the epsilon-regularized
/// score distribution (the same regularization as XE_NDCG).
inline LossState listnet_state(std::span<const double> labels,
                               std::span<const double> scores,
                               double epsilon = kDefaultEpsilon, bool with_newton = true) {
  detail::check_lengths(labels, scores);
  return detail::cross_entropy_state(listnet_phi(labels), xe_rho(scores, epsilon),
                                     with_newton);
}

/// LambdaMART pseudo-gradients. For every pair with y_hi > y_lo,
///   lambda = sigma |dNDCG| / (1 + e^{sigma (f_hi - f_lo)})
/// is subtracted from grad[hi] and added to grad[lo]; both receive the
/// second-order weight sigma^2 |dNDCG| s (1 - s). The loss value is unknown
/// and reported as 0.
inline LossState lambdamart_state(std::span<const double> labels,
                                  std::span<const double> scores, double sigma,
                                  const RankPermutation& perm) {
  detail::check_lengths(labels, scores);
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (perm.size() != labels.size()) {
    throw ValidationError("lambdamart_state: permutation length differs");
  }
  const double ideal = ideal_dcg(labels);
  if (!(ideal > 0.0)) throw DegenerateError("lambdamart undefined: ideal DCG is 0");

  const std::size_t m = labels.size();
  LossState s;
  s.gradient.assign(m, 0.0);
  s.hessian_diag.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (labels[i] == labels[j]) continue;
      const std::size_t hi = labels[i] > labels[j] ? i : j;
      const std::size_t lo = hi == i ? j : i;
      const double delta = delta_ndcg(perm, labels, hi, lo, ideal);
      const double sig = 1.0 / (1.0 + std::exp(sigma * (scores[hi] - scores[lo])));
      const double lambda = sigma * delta * sig;
      s.gradient[hi] -= lambda;
      s.gradient[lo] += lambda;
      const double w = sigma * sigma * delta * sig * (1.0 - sig);
      s.hessian_diag[hi] += w;
      s.hessian_diag[lo] += w;
    }
  }
  return s;
}

}  // namespace rankforge

#endif  // RANKFORGE_LOSSES_HPP_
