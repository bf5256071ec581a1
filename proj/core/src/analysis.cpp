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

#include "gmn/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "gmn/activations.hpp"
#include "gmn/errors.hpp"
#include "gmn/loss.hpp"
#include "gmn/param_set.hpp"
#include "gmn/training.hpp"

namespace gmn {

namespace {

constexpr double kEigenFloor = 1e-10;

// Logistic regression on frozen features, full batch, zero init.
std::pair<std::vector<double>, double> fit_probe(const Matrix& h, const std::vector<int>& target,
                                                 const ProbeOptions& options) {
  ParamSet params;
  const auto w = params.add("w", Matrix(h.cols(), 1));
  const auto b = params.add("b", Matrix(1, 1));
  Matrix t(target.size(), 1);
  for (std::size_t i = 0; i < target.size(); ++i) t(i, 0) = target[i];
  const AdamOptions adam{options.lr};
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Matrix logits = matmul(h, params[w].value);
    add_row_vector(logits, params[b].value);
    const auto bce = bce_with_logits(logits, t);
    params[w].grad = matmul_tn(h, bce.grad_logits);
    params[b].grad = column_sums(bce.grad_logits);
    adam_step(params, adam);
  }
  const auto wv = params[w].value.values();
  return {std::vector<double>(wv.begin(), wv.end()), params[b].value(0, 0)};
}

void require_two_classes(const std::vector<int>& v, const char* what) {
  const bool has0 = std::find(v.begin(), v.end(), 0) != v.end();
  const bool has1 = std::find(v.begin(), v.end(), 1) != v.end();
  if (!has0 || !has1) throw DomainError(std::string("auxiliary_probe: ") + what + " has a single class");
}

}  // namespace

Embedding extract_embeddings(LayerStack& stack, const Dataset& ds) {
  return {stack.forward_prefix(ds.x, embedding_layer_count(stack)), ds.y, ds.s};
}

Matrix kernel_pca_sigmoid(const Matrix& h, const KernelPcaOptions& options) {
  const std::size_t n = h.rows();
  if (n < 3) throw DomainError("kernel_pca_sigmoid: need at least 3 rows");
  if (options.components < 1 || options.components > n) {
    throw DomainError("kernel_pca_sigmoid: invalid component count");
  }
  const double gamma = options.gamma.value_or(1.0 / static_cast<double>(std::max<std::size_t>(h.cols(), 1)));

  const Matrix gram = matmul_nt(h, h);
  Eigen::MatrixXd k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k(i, j) = std::tanh(gamma * gram(i, j) + options.coef0);
  }
  // K_c = (I - 1/n) K (I - 1/n)
  const Eigen::VectorXd row_mean = k.rowwise().mean();
  const Eigen::RowVectorXd col_mean = k.colwise().mean();
  const double all_mean = k.mean();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k(i, j) += all_mean - row_mean(i) - col_mean(j);
  }
  k = 0.5 * (k + k.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
  if (solver.info() != Eigen::Success) throw DomainError("kernel_pca_sigmoid: eigensolver failed");
  const auto& values = solver.eigenvalues();  // ascending
  const auto& vectors = solver.eigenvectors();

  Matrix proj(n, options.components);
  for (std::size_t c = 0; c < options.components; ++c) {
    const auto col = static_cast<Eigen::Index>(n - 1 - c);
    const double lambda = std::max(values(col), kEigenFloor);
    const Eigen::VectorXd coeff = vectors.col(col) / std::sqrt(lambda);
    Eigen::VectorXd p = k * coeff;
    Eigen::Index arg = 0;
    p.cwiseAbs().maxCoeff(&arg);
    if (p(arg) < 0.0) p = -p;
    for (std::size_t i = 0; i < n; ++i) proj(i, c) = p(static_cast<Eigen::Index>(i));
  }
  return proj;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine_similarity: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

ProbePair auxiliary_probe(const Embedding& e, const ProbeOptions& options) {
  if (e.y.size() != e.h.rows() || e.s.size() != e.h.rows()) {
    throw ShapeError("auxiliary_probe: labels not aligned with embeddings");
  }
  std::vector<int> sens(e.s.size());
  std::transform(e.s.begin(), e.s.end(), sens.begin(), [](int s) { return s == 1 ? 1 : 0; });
  require_two_classes(e.y, "class label");
  require_two_classes(sens, "sensitive label");

  ProbePair out;
  std::tie(out.w_cls, out.b_cls) = fit_probe(e.h, e.y, options);
  std::tie(out.w_sens, out.b_sens) = fit_probe(e.h, sens, options);
  out.cosine = std::abs(cosine_similarity(out.w_cls, out.w_sens));
  return out;
}

nlohmann::json to_json(const ProbePair& probes) {
  return {{"cosine", probes.cosine},
          {"w_cls", probes.w_cls},
          {"b_cls", probes.b_cls},
          {"w_sens", probes.w_sens},
          {"b_sens", probes.b_sens}};
}

}  // namespace gmn
