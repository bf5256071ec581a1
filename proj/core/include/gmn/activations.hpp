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

#ifndef GMN_ACTIVATIONS_HPP_
#define GMN_ACTIVATIONS_HPP_

#include "gmn/matrix.hpp"

namespace gmn {

// Logistic function, evaluated without overflow for any finite x.
double sigmoid(double x);

Matrix sigmoid(const Matrix& x);

// y = x * sigmoid(x)
Matrix silu_forward(const Matrix& x);

// upstream * d/dx[x * sigmoid(x)] evaluated at x.
Matrix silu_backward(const Matrix& x, const Matrix& upstream);

}  // namespace gmn

#endif  // GMN_ACTIVATIONS_HPP_
