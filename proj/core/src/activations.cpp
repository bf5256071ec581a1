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

#include "gmn/activations.hpp"

#include <cmath>

#include "gmn/errors.hpp"

namespace gmn {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  auto out = y.values();
  auto in = x.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
  return y;
}

Matrix silu_forward(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  auto out = y.values();
  auto in = x.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * sigmoid(in[i]);
  return y;
}

Matrix silu_backward(const Matrix& x, const Matrix& upstream) {
  if (!x.same_shape(upstream)) throw ShapeError("silu_backward: shape mismatch");
  Matrix g(x.rows(), x.cols());
  auto out = g.values();
  auto in = x.values();
  auto up = upstream.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double s = sigmoid(in[i]);
    out[i] = up[i] * s * (1.0 + in[i] * (1.0 - s));
  }
  return g;
}

}  // namespace gmn
