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

#ifndef GMN_ANALYSIS_HPP_
#define GMN_ANALYSIS_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmn/adult.hpp"
#include "gmn/layer_stack.hpp"
#include "gmn/matrix.hpp"

namespace gmn {

// Penultimate-layer activations (after the last hidden SiLU) in inference
// mode, row-aligned with the labels.
struct Embedding {
  Matrix h;
  std::vector<int> y;
  std::vector<int> s;
};

Embedding extract_embeddings(LayerStack& stack, const Dataset& ds);

struct KernelPcaOptions {
  std::size_t components = 2;
  // Kernel slope; defaults to 1 / feature width.
  std::optional<double> gamma;
  double coef0 = 1.0;
};

// Kernel PCA with K_ij = tanh(gamma <h_i, h_j> + coef0). The kernel is
// double-centered; projections are K_c * v_k / sqrt(l_k) for the leading
// eigenpairs (l_k clipped at 1e-10, since the sigmoid kernel is indefinite).
// Each component's sign is fixed so that its largest-magnitude entry is
// positive. Requires at least 3 rows.
Matrix kernel_pca_sigmoid(const Matrix& h, const KernelPcaOptions& options = {});

struct ProbeOptions {
  double lr = 1e-2;
  std::size_t epochs = 200;
};

struct ProbePair {
  std::vector<double> w_cls;
  std::vector<double> w_sens;
  double b_cls = 0.0;
  double b_sens = 0.0;
  // |cos(w_cls, w_sens)|, biases excluded
  double cosine = 0.0;
};

// Trains two logistic probes on the frozen embeddings, one for the class
// label and one for membership of group 1, with full-batch Adam from a zero
// initialization. Throws DomainError if either target has a single class.
ProbePair auxiliary_probe(const Embedding& e, const ProbeOptions& options = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b);

nlohmann::json to_json(const ProbePair& probes);

}  // namespace gmn

#endif  // GMN_ANALYSIS_HPP_
