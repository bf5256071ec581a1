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

#ifndef GMN_LAYER_STACK_HPP_
#define GMN_LAYER_STACK_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gmn/group_mix_norm.hpp"
#include "gmn/matrix.hpp"
#include "gmn/param_set.hpp"
#include "gmn/rng.hpp"

namespace gmn {

enum class LayerKind { kAffine, kSilu, kGroupMixNorm, kSigmoidOutput };

std::string_view to_string(LayerKind kind);
// Throws ParseError for unknown names.
LayerKind layer_kind_from_string(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::kAffine;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  // Only meaningful for kGroupMixNorm.
  MixNormConfig mixnorm{};

  friend bool operator==(const LayerSpec& a, const LayerSpec& b) {
    return a.kind == b.kind && a.in_dim == b.in_dim && a.out_dim == b.out_dim &&
           a.mixnorm.alpha == b.mixnorm.alpha &&
           a.mixnorm.epsilon == b.mixnorm.epsilon;
  }
};

// Per-call inputs of a forward pass.
struct ForwardContext {
  bool training = false;
  // Protected-group label of every row; only read by GroupMixNorm layers in
  // training mode.
  std::span<const int> groups{};
  // Source of mixing weights when `weight_override` is empty.
  Rng* rng = nullptr;
  // Fixed mixing weights, used by gradient checks.
  WeightSource weight_override{};
};

// A sequential stack of differentiable layers. Each layer caches what its
// backward pass needs during forward; backward must follow a forward on the
// same stack. Affine parameters live in `params()` under the names
// "affine<k>.weight" (in x out) and "affine<k>.bias" (1 x out).
class LayerStack {
 public:
  LayerStack() = default;
  // Throws ShapeError if consecutive specs disagree on dimensions.
  explicit LayerStack(std::vector<LayerSpec> specs);

  // Affine weights ~ U(-1/sqrt(in), 1/sqrt(in)), biases zero.
  void initialize(Rng& rng);

  Matrix forward(const Matrix& x, const ForwardContext& ctx);
  // Accumulates parameter gradients and returns d(loss)/d(input).
  Matrix backward(const Matrix& upstream);

  // Inference-mode output of the first `layer_count` layers.
  Matrix forward_prefix(const Matrix& x, std::size_t layer_count);

  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Mixing weights drawn by each GroupMixNorm layer in the last training
  // forward, in layer order.
  std::vector<std::vector<double>> last_mix_weights() const;

 private:
  struct Affine {
    std::size_t weight = 0;
    std::size_t bias = 0;
    Matrix input;
  };
  struct Silu {
    Matrix input;
  };
  struct GroupMix {
    MixNormConfig config;
    std::optional<MixNormCache> cache;
  };
  struct SigmoidOutput {
    Matrix output;
  };
  using Layer = std::variant<Affine, Silu, GroupMix, SigmoidOutput>;

  Matrix forward_layer(Layer& layer, const Matrix& x, const ForwardContext& ctx);

  std::vector<LayerSpec> specs_;
  std::vector<Layer> layers_;
  ParamSet params_;
};

}  // namespace gmn

#endif  // GMN_LAYER_STACK_HPP_
