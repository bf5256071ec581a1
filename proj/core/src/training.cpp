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

#include "gmn/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "gmn/activations.hpp"
#include "gmn/errors.hpp"
#include "gmn/loss.hpp"

namespace gmn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (runs < 1) throw ConfigError("train.runs must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
  split.validate();
}

std::vector<LayerSpec> model_layout(const ModelConfig& cfg, std::size_t input_dim) {
  if (input_dim < 1) throw DomainError("model input dimension must be >= 1");
  std::vector<LayerSpec> specs;
  std::size_t width = input_dim;
  for (std::size_t h : cfg.hidden_dims) {
    specs.push_back({LayerKind::kAffine, width, h});
    specs.push_back({LayerKind::kSilu, h, h});
    if (cfg.use_groupmixnorm) specs.push_back({LayerKind::kGroupMixNorm, h, h, cfg.mixnorm});
    width = h;
  }
  specs.push_back({LayerKind::kAffine, width, 1});
  return specs;
}

LayerStack build_model(const ModelConfig& cfg, std::size_t input_dim) {
  return LayerStack(model_layout(cfg, input_dim));
}

std::size_t embedding_layer_count(const LayerStack& stack) {
  const auto& specs = stack.specs();
  for (std::size_t i = specs.size(); i-- > 0;) {
    if (specs[i].kind == LayerKind::kSilu) return i + 1;
  }
  throw DomainError("stack has no hidden activation");
}

RunStreams make_run_streams(std::uint64_t seed, std::size_t run) {
  return {make_rng(seed, Stream::kShuffle, run), make_rng(seed, Stream::kMixing, run)};
}

std::vector<double> predict(LayerStack& stack, const Matrix& x) {
  const Matrix logits = stack.forward(x, ForwardContext{});
  std::vector<double> scores(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) scores[i] = sigmoid(logits(i, 0));
  return scores;
}

FairnessReport evaluate(LayerStack& stack, const Dataset& ds, double threshold,
                        int reference_group) {
  PredictionSet p{predict(stack, ds.x), ds.y, ds.s, threshold};
  return full_report(p, reference_group);
}

namespace {

TrainedModel train_impl(LayerStack stack, const Dataset& train_ds, const Dataset& val_ds,
                        const ModelConfig& model_cfg, const TrainConfig& cfg,
                        RunStreams& streams, bool select_best) {
  cfg.validate();
  if (train_ds.size() == 0) throw DomainError("train: empty training set");
  if (train_ds.x.cols() != stack.input_dim()) {
    throw ShapeError("train: dataset width differs from model input");
  }

  TrainedModel result;
  result.model = model_cfg;
  result.train = cfg;
  result.encoder = train_ds.encoder;

  const AdamOptions adam{cfg.lr};
  const std::size_t n = train_ds.size();
  std::vector<std::size_t> order(n);
  std::vector<Matrix> best_values;
  double best_ap = -std::numeric_limits<double>::infinity();

  stack.params().zero_grad();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), streams.shuffle);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = select_rows(train_ds.x, idx);
      Matrix yb(idx.size(), 1);
      std::vector<int> sb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        yb(i, 0) = train_ds.y[idx[i]];
        sb[i] = train_ds.s[idx[i]];
      }
      ForwardContext ctx;
      ctx.training = true;
      ctx.groups = sb;
      ctx.rng = &streams.mixing;
      const Matrix logits = stack.forward(xb, ctx);
      const auto bce = bce_with_logits(logits, yb);
      stack.backward(bce.grad_logits);
      adam_step(stack.params(), adam);
      loss_sum += bce.loss * static_cast<double>(idx.size());
    }

    const auto report = evaluate(stack, val_ds, cfg.threshold, cfg.reference_group);
    EpochLog entry{epoch, loss_sum / static_cast<double>(n),
                   report.ap.value.value_or(std::numeric_limits<double>::quiet_NaN()),
                   report.dp, report.eop, report.eod};
    result.log.push_back(entry);

    if (!select_best) continue;
    const double ap = report.ap.value.value_or(-std::numeric_limits<double>::infinity());
    if (result.best_epoch == 0 || ap > best_ap) {
      best_ap = ap;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : stack.params()) best_values.push_back(p.value);
    }
  }

  if (select_best && !best_values.empty()) {
    std::size_t i = 0;
    for (auto& p : stack.params()) p.value = best_values[i++];
  } else if (!select_best) {
    result.best_epoch = cfg.epochs;
  }
  result.stack = std::move(stack);
  return result;
}

}  // namespace

TrainedModel train(LayerStack stack, const Dataset& train_ds, const Dataset& val_ds,
                   const ModelConfig& model_cfg, const TrainConfig& cfg,
                   RunStreams& streams) {
  return train_impl(std::move(stack), train_ds, val_ds, model_cfg, cfg, streams, true);
}

TrainedModel train_last(LayerStack stack, const Dataset& train_ds, const Dataset& val_ds,
                        const ModelConfig& model_cfg, const TrainConfig& cfg,
                        RunStreams& streams) {
  return train_impl(std::move(stack), train_ds, val_ds, model_cfg, cfg, streams, false);
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

AggregateReport aggregate(std::vector<RunResult> runs) {
  AggregateReport agg;
  std::vector<double> ap, dp, eop, eod;
  for (const auto& r : runs) {
    if (r.test.ap.value) ap.push_back(*r.test.ap.value);
    if (r.test.dp.value) dp.push_back(*r.test.dp.value);
    if (r.test.eop.value) eop.push_back(*r.test.eop.value);
    if (r.test.eod.value) eod.push_back(*r.test.eod.value);
  }
  agg.ap = summarize(ap);
  agg.dp = summarize(dp);
  agg.eop = summarize(eop);
  agg.eod = summarize(eod);
  agg.runs = std::move(runs);
  return agg;
}

RunResult run_once(const DatasetSplit& data, const ModelConfig& model_cfg,
                   const TrainConfig& cfg, std::size_t run) {
  auto stack = build_model(model_cfg, data.train.x.cols());
  auto init = make_rng(cfg.seed, Stream::kInit, run);
  stack.initialize(init);
  auto streams = make_run_streams(cfg.seed, run);
  RunResult result;
  result.run = run;
  result.model = train(std::move(stack), data.train, data.val, model_cfg, cfg, streams);
  result.model.run = run;
  result.test = evaluate(result.model.stack, data.test, cfg.threshold, cfg.reference_group);
  return result;
}

AggregateReport run_protocol(const RunDataFactory& data, const ModelConfig& model_cfg,
                             const TrainConfig& cfg) {
  cfg.validate();
  std::vector<RunResult> results(cfg.runs);
  std::vector<std::exception_ptr> errors(cfg.runs);
  std::size_t threads = cfg.threads != 0 ? cfg.threads
                                         : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.runs);

  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < cfg.runs; i += threads) {
      try {
        const std::size_t run = i + 1;
        results[i] = run_once(data(run), model_cfg, cfg, run);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (std::size_t i = 0; i < cfg.runs; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw DomainError("run " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return aggregate(std::move(results));
}

AggregateReport run_protocol(const Dataset& full, const ModelConfig& model_cfg,
                             const TrainConfig& cfg) {
  return run_protocol(
      [&](std::size_t run) {
        SplitSpec spec = cfg.split;
        spec.seed = derive_seed(cfg.seed, Stream::kSplit, run);
        return split(full, spec);
      },
      model_cfg, cfg);
}

TrainedModel finetune(const TrainedModel& pretrained, const ModelConfig& new_cfg,
                      const Dataset& data, const TrainConfig& cfg, RunStreams& streams) {
  const auto& old_specs = pretrained.stack.specs();
  auto stack = build_model(new_cfg, pretrained.stack.input_dim());

  auto affine_dims = [](const std::vector<LayerSpec>& specs) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    for (const auto& s : specs) {
      if (s.kind == LayerKind::kAffine) dims.emplace_back(s.in_dim, s.out_dim);
    }
    return dims;
  };
  if (affine_dims(old_specs) != affine_dims(stack.specs())) {
    throw ShapeError("finetune: pretrained affine layout differs from the new model");
  }
  for (auto& p : stack.params()) p.value = pretrained.stack.params().find(p.name).value;

  if (cfg.epochs == 0) {
    TrainedModel copy;
    copy.stack = std::move(stack);
    copy.model = new_cfg;
    copy.train = cfg;
    copy.encoder = pretrained.encoder;
    copy.run = pretrained.run;
    return copy;
  }
  auto result = train_last(std::move(stack), data, data, new_cfg, cfg, streams);
  result.encoder = pretrained.encoder;
  result.run = pretrained.run;
  return result;
}

}  // namespace gmn
