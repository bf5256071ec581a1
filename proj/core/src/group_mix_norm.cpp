/*
 * Copyright 2026 The GroupMixNorm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gmn/group_mix_norm.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "gmn/errors.hpp"

namespace gmn {

namespace {

// Draws from Gamma(alpha, 1) until the total is positive; with alpha = 0.1
// every draw can underflow to zero only with negligible probability.
std::vector<double> dirichlet(std::size_t k, double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(k);
  for (;;) {
    double total = 0.0;
    for (auto& v : w) {
      v = gamma(rng);
      total += v;
    }
    if (total > 0.0 && std::isfinite(total)) {
      for (auto& v : w) v /= total;
      return w;
    }
  }
}

// Maps each row to the position of its group in ascending label order.
std::map<int, std::size_t> index_groups(std::span<const int> group_ids) {
  std::map<int, std::size_t> index;
  for (int g : group_ids) {
    if (g < 0) throw DomainError("unknown group label " + std::to_string(g));
    index.emplace(g, 0);
  }
  std::size_t pos = 0;
  for (auto& [label, slot] : index) slot = pos++;
  return index;
}

}  // namespace

void MixNormConfig::validate() const {
  if (!(alpha > 0.0)) throw DomainError("GroupMixNorm alpha must be > 0");
  if (!(epsilon > 0.0)) throw DomainError("GroupMixNorm epsilon must be > 0");
}

std::vector<GroupStats> compute_group_stats(const Matrix& z,
                                            std::span<const int> group_ids,
                                            double epsilon) {
  if (z.rows() == 0) throw DomainError("compute_group_stats: empty batch");
  if (group_ids.size() != z.rows()) {
    throw ShapeError("compute_group_stats: " + std::to_string(group_ids.size()) +
                     " labels for " + std::to_string(z.rows()) + " rows");
  }
  const auto index = index_groups(group_ids);
  const std::size_t n = z.cols();

  std::vector<GroupStats> stats;
  stats.reserve(index.size());
  for (const auto& [label, pos] : index) {
    stats.push_back(GroupStats{label, 0, std::vector<double>(n, 0.0),
                               std::vector<double>(n, 0.0)});
  }
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto& g = stats[index.at(group_ids[r])];
    ++g.count;
    auto row = z.row(r);
    for (std::size_t d = 0; d < n; ++d) g.mean[d] += row[d];
  }
  for (auto& g : stats) {
    for (auto& m : g.mean) m /= static_cast<double>(g.count);
  }
  // Two-pass variance.
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto& g = stats[index.at(group_ids[r])];
    auto row = z.row(r);
    for (std::size_t d = 0; d < n; ++d) {
      const double c = row[d] - g.mean[d];
      g.std[d] += c * c;
    }
  }
  for (auto& g : stats) {
    for (auto& s : g.std) s = std::sqrt(s / static_cast<double>(g.count) + epsilon);
  }
  return stats;
}

std::vector<double> sample_mix_weights(std::size_t k, double alpha, Rng& rng) {
  if (k == 0) throw DomainError("sample_mix_weights: no groups");
  if (!(alpha > 0.0)) throw DomainError("sample_mix_weights: alpha must be > 0");
  if (k == 1) return {1.0};
  if (k == 2) {
    // Beta(alpha, alpha) as a ratio of gammas.
    auto w = dirichlet(2, alpha, rng);
    return {w[0], 1.0 - w[0]};
  }
  return dirichlet(k, alpha, rng);
}

MixedStats mix_statistics(std::span<const GroupStats> stats,
                          std::span<const double> weights) {
  if (stats.empty()) throw DomainError("mix_statistics: no groups");
  if (weights.size() != stats.size()) {
    throw ShapeError("mix_statistics: " + std::to_string(weights.size()) +
                     " weights for " + std::to_string(stats.size()) + " groups");
  }
  const std::size_t n = stats.front().mean.size();
  MixedStats mixed{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                   std::vector<double>(weights.begin(), weights.end())};
  for (std::size_t j = 0; j < stats.size(); ++j) {
    if (stats[j].mean.size() != n || stats[j].std.size() != n) {
      throw ShapeError("mix_statistics: groups disagree on feature dimension");
    }
    for (std::size_t d = 0; d < n; ++d) {
      mixed.gamma_mix[d] += weights[j] * stats[j].std[d];
      mixed.beta_mix[d] += weights[j] * stats[j].mean[d];
    }
  }
  return mixed;
}

MixNormOutput groupmix_forward(const Matrix& z, std::span<const int> group_ids,
                               const MixNormConfig& config, Rng& rng) {
  return groupmix_forward(z, group_ids, config, [&](std::size_t k) {
    return sample_mix_weights(k, config.alpha, rng);
  });
}

MixNormOutput groupmix_forward(const Matrix& z, std::span<const int> group_ids,
                               const MixNormConfig& config,
                               const WeightSource& weights) {
  if (!config.training) return {z, std::nullopt};

  MixNormCache cache;
  cache.stats = compute_group_stats(z, group_ids, config.epsilon);
  const auto index = index_groups(group_ids);
  cache.row_group.resize(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) cache.row_group[r] = index.at(group_ids[r]);

  const auto w = weights(cache.stats.size());
  cache.mixed = mix_statistics(cache.stats, w);

  const std::size_t n = z.cols();
  cache.normalized = Matrix(z.rows(), n);
  Matrix out(z.rows(), n);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto& g = cache.stats[cache.row_group[r]];
    auto in = z.row(r);
    auto xhat = cache.normalized.row(r);
    auto y = out.row(r);
    for (std::size_t d = 0; d < n; ++d) {
      xhat[d] = (in[d] - g.mean[d]) / g.std[d];
      y[d] = cache.mixed.gamma_mix[d] * xhat[d] + cache.mixed.beta_mix[d];
    }
  }
  return {std::move(out), std::move(cache)};
}

Matrix groupmix_backward(const Matrix& upstream,
                         const std::optional<MixNormCache>& cache) {
  if (!cache) throw StateError("groupmix_backward: no cached training-mode forward");
  const auto& c = *cache;
  if (!upstream.same_shape(c.normalized)) {
    throw ShapeError("groupmix_backward: upstream shape differs from forward output");
  }
  const std::size_t rows = upstream.rows();
  const std::size_t n = upstream.cols();
  const std::size_t k = c.stats.size();

  // Per-group sums of g and g * xhat, plus their batch totals, which are the
  // gradients w.r.t. beta_mix and gamma_mix.
  std::vector<double> sum_g(k * n, 0.0);
  std::vector<double> sum_gx(k * n, 0.0);
  std::vector<double> d_beta(n, 0.0);
  std::vector<double> d_gamma(n, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = c.row_group[r];
    auto g = upstream.row(r);
    auto xhat = c.normalized.row(r);
    for (std::size_t d = 0; d < n; ++d) {
      sum_g[j * n + d] += g[d];
      sum_gx[j * n + d] += g[d] * xhat[d];
      d_beta[d] += g[d];
      d_gamma[d] += g[d] * xhat[d];
    }
  }

  Matrix grad(rows, n);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = c.row_group[r];
    const auto& stats = c.stats[j];
    const double inv_n = 1.0 / static_cast<double>(stats.count);
    const double w = c.mixed.weights[j];
    auto g = upstream.row(r);
    auto xhat = c.normalized.row(r);
    auto out = grad.row(r);
    for (std::size_t d = 0; d < n; ++d) {
      const double gamma = c.mixed.gamma_mix[d];
      // Own-group normalization (batch-norm backward with scale gamma_mix).
      const double own = gamma / stats.std[d] *
                         (g[d] - sum_g[j * n + d] * inv_n -
                          xhat[d] * sum_gx[j * n + d] * inv_n);
      // Coupling through gamma_mix (via std_j) and beta_mix (via mean_j).
      const double mixed = w * inv_n * (d_gamma[d] * xhat[d] + d_beta[d]);
      out[d] = own + mixed;
    }
  }
  return grad;
}

}  // namespace gmn
