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

#ifndef GMN_GROUP_MIX_NORM_HPP_
#define GMN_GROUP_MIX_NORM_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmn/matrix.hpp"
#include "gmn/rng.hpp"

namespace gmn {

struct MixNormConfig {
  // Concentration of the symmetric Beta / Dirichlet mixing distribution.
  double alpha = 0.1;
  // Added to the per-group variance before taking the square root.
  double epsilon = 1e-5;
  bool training = true;

  // Throws DomainError unless alpha > 0 and epsilon > 0.
  void validate() const;
};

// Per-dimension statistics of the rows of one group within a batch.
struct GroupStats {
  int group_id = 0;
  std::size_t count = 0;
  std::vector<double> mean;
  // sqrt(population variance + epsilon)
  std::vector<double> std;
};

struct MixedStats {
  std::vector<double> gamma_mix;  // sum_j w_j * std_j
  std::vector<double> beta_mix;   // sum_j w_j * mean_j
  std::vector<double> weights;
};

// Everything groupmix_backward needs from the forward pass.
struct MixNormCache {
  std::vector<std::size_t> row_group;  // index into `stats` for every row
  std::vector<GroupStats> stats;
  MixedStats mixed;
  Matrix normalized;  // (Z - mean_g) / std_g
};

// Returns the mixing weights for K groups present in a batch.
using WeightSource = std::function<std::vector<double>(std::size_t k)>;

// Statistics of every group in the batch, ordered by ascending label.
std::vector<GroupStats> compute_group_stats(const Matrix& z,
                                            std::span<const int> group_ids,
                                            double epsilon);

// K = 1 -> {1}; K = 2 -> {l, 1 - l} with l ~ Beta(alpha, alpha);
// K > 2 -> Dirichlet(alpha, ..., alpha), which reduces to the K = 2 case.
std::vector<double> sample_mix_weights(std::size_t k, double alpha, Rng& rng);

MixedStats mix_statistics(std::span<const GroupStats> stats,
                          std::span<const double> weights);

struct MixNormOutput {
  Matrix output;
  std::optional<MixNormCache> cache;
};

// Outside training mode the input is returned unchanged and `group_ids` is
// not read. In training mode every row is standardized with its own group's
// mean/std and then scaled by gamma_mix and shifted by beta_mix, which are
// shared by the whole batch. One weight draw per call.
MixNormOutput groupmix_forward(const Matrix& z, std::span<const int> group_ids,
                               const MixNormConfig& config, Rng& rng);

// Same, with the mixing weights supplied by `weights` instead of sampled.
MixNormOutput groupmix_forward(const Matrix& z, std::span<const int> group_ids,
                               const MixNormConfig& config,
                               const WeightSource& weights);

// Gradient of the training-mode forward with respect to Z. Group means and
// stds, and therefore gamma_mix and beta_mix, are differentiated as functions
// of Z; the mixing weights are constants. Throws StateError without a cache.
Matrix groupmix_backward(const Matrix& upstream,
                         const std::optional<MixNormCache>& cache);

}  // namespace gmn

#endif  // GMN_GROUP_MIX_NORM_HPP_
