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

#ifndef GMN_PARAM_SET_HPP_
#define GMN_PARAM_SET_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gmn/matrix.hpp"

namespace gmn {

// A trainable array together with its gradient buffer and Adam moments.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
};

class ParamSet {
 public:
  // Registers a parameter; gradient and moment buffers start at zero.
  // Returns its index. Names must be unique.
  std::size_t add(std::string name, Matrix value);

  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }

  // Throws DomainError if no parameter has this name.
  Parameter& find(std::string_view name);
  const Parameter& find(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }

  void zero_grad();
  // Resets step counter and moment buffers.
  void reset_optimizer();
  // Total number of scalar parameters.
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
  std::int64_t step_ = 0;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of every parameter, then zeroes gradients.
void adam_step(ParamSet& params, const AdamOptions& options);

}  // namespace gmn

#endif  // GMN_PARAM_SET_HPP_
