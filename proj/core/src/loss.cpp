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

#include "gmn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "gmn/activations.hpp"
#include "gmn/errors.hpp"

namespace gmn {

BceResult bce_with_logits(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() == 0) throw DomainError("bce_with_logits: empty batch");
  if (logits.cols() != 1 || !logits.same_shape(targets)) {
    throw ShapeError("bce_with_logits: logits and targets must be matching columns");
  }
  const auto n = static_cast<double>(logits.rows());
  BceResult result{0.0, Matrix(logits.rows(), 1)};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double x = logits(i, 0);
    const double t = targets(i, 0);
    if (t != 0.0 && t != 1.0) throw DomainError("bce_with_logits: target not in {0,1}");
    result.loss += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    result.grad_logits(i, 0) = (sigmoid(x) - t) / n;
  }
  result.loss /= n;
  return result;
}

}  // namespace gmn
