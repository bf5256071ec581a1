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

#include "gmn/param_set.hpp"

#include <cmath>

#include "gmn/errors.hpp"

namespace gmn {

std::size_t ParamSet::add(std::string name, Matrix value) {
  if (contains(name)) throw DomainError("duplicate parameter name: " + name);
  const std::size_t r = value.rows();
  const std::size_t c = value.cols();
  params_.push_back(Parameter{std::move(name), std::move(value), Matrix(r, c),
                              Matrix(r, c), Matrix(r, c)});
  return params_.size() - 1;
}

Parameter& ParamSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw DomainError("no parameter named " + std::string(name));
}

const Parameter& ParamSet::find(std::string_view name) const {
  return const_cast<ParamSet*>(this)->find(name);
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParamSet::reset_optimizer() {
  step_ = 0;
  for (auto& p : params_) {
    p.first_moment.fill(0.0);
    p.second_moment.fill(0.0);
  }
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void adam_step(ParamSet& params, const AdamOptions& options) {
  params.set_step(params.step() + 1);
  const auto t = static_cast<double>(params.step());
  const double bc1 = 1.0 - std::pow(options.beta1, t);
  const double bc2 = 1.0 - std::pow(options.beta2, t);
  for (auto& p : params) {
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = p.first_moment.values();
    auto v = p.second_moment.values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
      grad[i] = 0.0;
    }
  }
}

}  // namespace gmn
