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

#include "gmn/layer_stack.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gmn/activations.hpp"
#include "gmn/errors.hpp"

namespace gmn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kAffine:
      return "affine";
    case LayerKind::kSilu:
      return "silu";
    case LayerKind::kGroupMixNorm:
      return "groupmixnorm";
    case LayerKind::kSigmoidOutput:
      return "sigmoid-output";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::kAffine, LayerKind::kSilu, LayerKind::kGroupMixNorm,
                    LayerKind::kSigmoidOutput}) {
    if (to_string(kind) == name) return kind;
  }
  throw ParseError("unknown layer kind '" + std::string(name) + "'");
}

LayerStack::LayerStack(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
  std::size_t affine_count = 0;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& spec = specs_[i];
    if (i > 0 && specs_[i - 1].out_dim != spec.in_dim) {
      throw ShapeError("layer " + std::to_string(i) + " expects width " +
                       std::to_string(spec.in_dim) + " but receives " +
                       std::to_string(specs_[i - 1].out_dim));
    }
    if (spec.kind != LayerKind::kAffine && spec.in_dim != spec.out_dim) {
      throw ShapeError("layer " + std::to_string(i) + " (" +
                       std::string(to_string(spec.kind)) + ") must preserve width");
    }
    switch (spec.kind) {
      case LayerKind::kAffine: {
        const std::string prefix = "affine" + std::to_string(affine_count++);
        Affine a;
        a.weight = params_.add(prefix + ".weight", Matrix(spec.in_dim, spec.out_dim));
        a.bias = params_.add(prefix + ".bias", Matrix(1, spec.out_dim));
        layers_.emplace_back(std::move(a));
        break;
      }
      case LayerKind::kSilu:
        layers_.emplace_back(Silu{});
        break;
      case LayerKind::kGroupMixNorm:
        spec.mixnorm.validate();
        layers_.emplace_back(GroupMix{spec.mixnorm, std::nullopt});
        break;
      case LayerKind::kSigmoidOutput:
        layers_.emplace_back(SigmoidOutput{});
        break;
    }
  }
}

void LayerStack::initialize(Rng& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto* affine = std::get_if<Affine>(&layers_[i]);
    if (affine == nullptr) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(specs_[i].in_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : params_[affine->weight].value.values()) w = dist(rng);
    params_[affine->bias].value.fill(0.0);
  }
  params_.zero_grad();
  params_.reset_optimizer();
}

std::size_t LayerStack::input_dim() const {
  return specs_.empty() ? 0 : specs_.front().in_dim;
}

std::size_t LayerStack::output_dim() const {
  return specs_.empty() ? 0 : specs_.back().out_dim;
}

Matrix LayerStack::forward_layer(Layer& layer, const Matrix& x,
                                 const ForwardContext& ctx) {
  return std::visit(
      Overloaded{
          [&](Affine& a) {
            a.input = x;
            Matrix y = matmul(x, params_[a.weight].value);
            add_row_vector(y, params_[a.bias].value);
            return y;
          },
          [&](Silu& s) {
            s.input = x;
            return silu_forward(x);
          },
          [&](GroupMix& g) {
            MixNormConfig cfg = g.config;
            cfg.training = ctx.training;
            MixNormOutput out;
            if (ctx.weight_override) {
              out = groupmix_forward(x, ctx.groups, cfg, ctx.weight_override);
            } else if (ctx.training && ctx.rng == nullptr) {
              throw StateError("GroupMixNorm training forward needs an rng");
            } else if (ctx.training) {
              out = groupmix_forward(x, ctx.groups, cfg, *ctx.rng);
            } else {
              out = {x, std::nullopt};
            }
            g.cache = std::move(out.cache);
            return std::move(out.output);
          },
          [&](SigmoidOutput& s) {
            s.output = sigmoid(x);
            return s.output;
          },
      },
      layer);
}

Matrix LayerStack::forward(const Matrix& x, const ForwardContext& ctx) {
  if (x.cols() != input_dim()) {
    throw ShapeError("stack expects " + std::to_string(input_dim()) +
                     " input features, got " + std::to_string(x.cols()));
  }
  Matrix h = x;
  for (auto& layer : layers_) h = forward_layer(layer, h, ctx);
  return h;
}

Matrix LayerStack::forward_prefix(const Matrix& x, std::size_t layer_count) {
  if (layer_count > layers_.size()) throw ShapeError("forward_prefix: too many layers");
  if (x.cols() != input_dim()) throw ShapeError("forward_prefix: input width");
  const ForwardContext inference{};
  Matrix h = x;
  for (std::size_t i = 0; i < layer_count; ++i) h = forward_layer(layers_[i], h, inference);
  return h;
}

Matrix LayerStack::backward(const Matrix& upstream) {
  Matrix g = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = std::visit(
        Overloaded{
            [&](Affine& a) {
              if (a.input.rows() != g.rows()) {
                throw StateError("affine backward without matching forward");
              }
              auto& w = params_[a.weight];
              auto& b = params_[a.bias];
              Matrix dw = matmul_tn(a.input, g);
              Matrix db = column_sums(g);
              auto wg = w.grad.values();
              auto dwv = dw.values();
              for (std::size_t k = 0; k < wg.size(); ++k) wg[k] += dwv[k];
              auto bg = b.grad.values();
              auto dbv = db.values();
              for (std::size_t k = 0; k < bg.size(); ++k) bg[k] += dbv[k];
              return matmul_nt(g, w.value);
            },
            [&](Silu& s) { return silu_backward(s.input, g); },
            [&](GroupMix& m) { return groupmix_backward(g, m.cache); },
            [&](SigmoidOutput& s) {
              if (!s.output.same_shape(g)) throw StateError("sigmoid backward shape");
              Matrix d(g.rows(), g.cols());
              auto y = s.output.values();
              auto up = g.values();
              auto out = d.values();
              for (std::size_t k = 0; k < out.size(); ++k) out[k] = up[k] * y[k] * (1.0 - y[k]);
              return d;
            },
        },
        layers_[i]);
  }
  return g;
}

std::vector<std::vector<double>> LayerStack::last_mix_weights() const {
  std::vector<std::vector<double>> out;
  for (const auto& layer : layers_) {
    if (const auto* g = std::get_if<GroupMix>(&layer); g != nullptr && g->cache) {
      out.push_back(g->cache->mixed.weights);
    }
  }
  return out;
}

}  // namespace gmn
