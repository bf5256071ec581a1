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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gmn/errors.hpp"
#include "gmn/training.hpp"
#include "oracles.hpp"

namespace gmn {
namespace {

// Projection computed from an explicitly centered kernel and the Jacobi
// eigensolver.
Matrix oracle_projection(const Matrix& h, double gamma, double coef0, std::size_t comps) {
  const std::size_t n = h.rows();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < h.cols(); ++d) dot += h(i, d) * h(j, d);
      k(i, j) = std::tanh(gamma * dot + coef0);
    }
  Matrix c(n, n);  // centering matrix I - 1/n
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / n;
  const Matrix kc = testing::naive_matmul(testing::naive_matmul(c, k), c);
  const auto [values, vectors] = testing::jacobi_eigen(kc);
  Matrix out(n, comps);
  for (std::size_t p = 0; p < comps; ++p) {
    const double lambda = std::max(values[p], 1e-10);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += kc(i, j) * vectors(j, p);
      out(i, p) = acc / std::sqrt(lambda);
    }
  }
  return out;
}

void expect_equal_up_to_sign(const Matrix& a, const Matrix& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t c = 0; c < a.cols(); ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 0; r < b.rows(); ++r)
      if (std::abs(b(r, c)) > std::abs(b(arg, c))) arg = r;
    const double sign = (a(arg, c) * b(arg, c) >= 0 ? 1.0 : -1.0);
    for (std::size_t r = 0; r < a.rows(); ++r) EXPECT_NEAR(a(r, c), sign * b(r, c), tol);
  }
}

TEST(KernelPca, FivePointHandDatasetMatchesDenseOracle) {
  const Matrix h{{0.0, 1.0}, {1.0, 0.5}, {-1.0, 0.2}, {2.0, -1.0}, {0.3, 0.3}};
  const Matrix p = kernel_pca_sigmoid(h);
  expect_equal_up_to_sign(p, oracle_projection(h, 0.5, 1.0, 2), 1e-6);
}

TEST(KernelPca, RandomDataMatchesOracleWithCustomKernel) {
  std::mt19937_64 rng(2);
  const Matrix h = testing::random_matrix(12, 4, rng);
  KernelPcaOptions opt;
  opt.gamma = 0.7;
  opt.coef0 = 0.2;
  opt.components = 3;
  expect_equal_up_to_sign(kernel_pca_sigmoid(h, opt), oracle_projection(h, 0.7, 0.2, 3), 1e-6);
}

TEST(KernelPca, SignConventionLargestEntryPositive) {
  std::mt19937_64 rng(3);
  const Matrix p = kernel_pca_sigmoid(testing::random_matrix(20, 5, rng));
  for (std::size_t c = 0; c < p.cols(); ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 0; r < p.rows(); ++r)
      if (std::abs(p(r, c)) > std::abs(p(arg, c))) arg = r;
    EXPECT_GT(p(arg, c), 0.0);
  }
}

TEST(KernelPca, DuplicatePointsShareProjection) {
  Matrix h{{0.1, 0.9}, {1.0, -0.5}, {0.1, 0.9}, {-2.0, 0.4}, {0.7, 0.7}};
  const Matrix p = kernel_pca_sigmoid(h);
  EXPECT_NEAR(p(0, 0), p(2, 0), 1e-12);
  EXPECT_NEAR(p(0, 1), p(2, 1), 1e-12);
}

TEST(KernelPca, ProjectionColumnsAreCentered) {
  std::mt19937_64 rng(4);
  const Matrix p = kernel_pca_sigmoid(testing::random_matrix(40, 6, rng, -2, 2));
  for (std::size_t c = 0; c < p.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) sum += p(r, c);
    EXPECT_NEAR(sum / p.rows(), 0.0, 1e-8);
  }
}

TEST(KernelPca, RowPermutationPermutesProjection) {
  std::mt19937_64 rng(5);
  const Matrix h = testing::random_matrix(15, 3, rng);
  std::vector<std::size_t> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Matrix a = select_rows(kernel_pca_sigmoid(h), perm);
  const Matrix b = kernel_pca_sigmoid(select_rows(h, perm));
  expect_equal_up_to_sign(a, b, 1e-8);
}

TEST(KernelPca, TooFewRows) {
  EXPECT_THROW(kernel_pca_sigmoid(Matrix(2, 3)), DomainError);
}

TEST(Cosine, Basics) {
  const std::vector<double> a = {1, 0, 0}, b = {0, 2, 0}, c = {-3, 0, 0};
  EXPECT_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_EQ(cosine_similarity(a, c), -1.0);
  EXPECT_THROW(cosine_similarity(a, std::vector<double>{1, 2}), ShapeError);
  EXPECT_THROW(cosine_similarity(a, std::vector<double>{0, 0, 0}), DomainError);
}

TEST(Cosine, InvariantUnderPositiveRescaling) {
  const std::vector<double> a = {0.3, -1.2, 2.0}, b = {1.1, 0.4, -0.7};
  std::vector<double> scaled = a;
  for (double& v : scaled) v *= 17.5;
  EXPECT_NEAR(cosine_similarity(scaled, b), cosine_similarity(a, b), 1e-15);
}

Embedding synthetic_embedding(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Embedding e;
  e.h = Matrix(n, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng() % 2);
    const int s = static_cast<int>(rng() % 2);
    for (std::size_t d = 0; d < 6; ++d) e.h(i, d) = noise(rng);
    e.h(i, 0) += y ? 2.0 : -2.0;  // class direction
    e.h(i, 1) += s ? 2.0 : -2.0;  // group direction
    e.y.push_back(y);
    e.s.push_back(s);
  }
  return e;
}

TEST(Probe, IndependentDirectionsGiveNearZeroCosine) {
  const auto p = auxiliary_probe(synthetic_embedding(2000, 6));
  EXPECT_LT(p.cosine, 0.1);
  EXPECT_EQ(p.w_cls.size(), 6u);
  EXPECT_GT(std::abs(p.w_cls[0]), 5 * std::abs(p.w_cls[1]));
  EXPECT_GT(std::abs(p.w_sens[1]), 5 * std::abs(p.w_sens[0]));
}

TEST(Probe, IdenticalTargetsGiveUnitCosine) {
  auto e = synthetic_embedding(500, 7);
  e.s = e.y;
  const auto p = auxiliary_probe(e);
  EXPECT_NEAR(p.cosine, 1.0, 1e-12);
}

TEST(Probe, SensitiveTargetIsGroupOne) {
  auto e = synthetic_embedding(500, 8);
  for (int& s : e.s) s = s == 1 ? 1 : 2;  // group ids {1, 2}
  const auto a = auxiliary_probe(e);
  EXPECT_LT(a.cosine, 0.1);
  EXPECT_GT(std::abs(a.w_sens[1]), 5 * std::abs(a.w_sens[0]));
}

TEST(Probe, Errors) {
  auto e = synthetic_embedding(50, 9);
  auto single = e;
  std::fill(single.y.begin(), single.y.end(), 1);
  EXPECT_THROW(auxiliary_probe(single), DomainError);
  single = e;
  std::fill(single.s.begin(), single.s.end(), 0);
  EXPECT_THROW(auxiliary_probe(single), DomainError);
  single = e;
  single.y.pop_back();
  EXPECT_THROW(auxiliary_probe(single), ShapeError);
}

TEST(Probe, JsonHasCosine) {
  const auto j = to_json(auxiliary_probe(synthetic_embedding(200, 10)));
  EXPECT_TRUE(j.contains("cosine"));
  EXPECT_EQ(j["w_cls"].size(), 6u);
}

TEST(Embeddings, WidthDeterminismAndVariation) {
  std::mt19937_64 rng(11);
  Dataset ds;
  ds.x = testing::random_matrix(30, 8, rng);
  ds.y.assign(30, 0);
  ds.s.assign(30, 0);
  auto stack = build_model(ModelConfig{}, 8);
  Rng init(1);
  stack.initialize(init);
  const auto a = extract_embeddings(stack, ds);
  const auto b = extract_embeddings(stack, ds);
  EXPECT_EQ(a.h.cols(), 50u);
  EXPECT_EQ(a.h.rows(), 30u);
  EXPECT_EQ(a.h, b.h);
  EXPECT_TRUE(a.h.all_finite());
  bool varies = false;
  for (std::size_t r = 1; r < 30 && !varies; ++r)
    for (std::size_t d = 0; d < 50; ++d)
      if (a.h(r, d) != a.h(0, d)) varies = true;
  EXPECT_TRUE(varies);
}

}  // namespace
}  // namespace gmn
