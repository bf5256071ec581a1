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

#ifndef GMN_LOSS_HPP_
#define GMN_LOSS_HPP_

#include "gmn/matrix.hpp"

namespace gmn {

struct BceResult {
  double loss = 0.0;
  Matrix grad_logits;
};

// Mean binary cross-entropy over a column of logits, computed as
// max(x, 0) - x * t + log1p(exp(-|x|)). The gradient is
// (sigmoid(x) - t) / batch_size.
BceResult bce_with_logits(const Matrix& logits, const Matrix& targets);

}  // namespace gmn

#endif  // GMN_LOSS_HPP_
