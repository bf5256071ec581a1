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

#ifndef GMN_TRAINING_HPP_
#define GMN_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmn/adult.hpp"
#include "gmn/fair_metrics.hpp"
#include "gmn/group_mix_norm.hpp"
#include "gmn/layer_stack.hpp"

namespace gmn {

struct ModelConfig {
  std::vector<std::size_t> hidden_dims{50, 50, 50};
  bool use_groupmixnorm = true;
  MixNormConfig mixnorm{};
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 1000;
  double lr = 1e-4;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  SplitSpec split{};
  double threshold = 0.5;
  int reference_group = 1;
  // Worker threads for independent runs; 0 picks hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

// [affine(d->h1), SiLU, (GMN), ..., affine(hk->1)]: GroupMixNorm follows
// every hidden SiLU when enabled and never the output head.
std::vector<LayerSpec> model_layout(const ModelConfig& cfg, std::size_t input_dim);
LayerStack build_model(const ModelConfig& cfg, std::size_t input_dim);

// Index one past the last hidden activation: the penultimate representation
// is forward_prefix(x, embedding_layer_count(stack)).
std::size_t embedding_layer_count(const LayerStack& stack);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_ap = 0.0;
  MetricValue val_dp;
  MetricValue val_eop;
  MetricValue val_eod;
};

struct TrainedModel {
  LayerStack stack;
  ModelConfig model;
  TrainConfig train;
  Encoder encoder;
  std::vector<EpochLog> log;
  // 1-based epoch whose parameters were kept; 0 when no epoch ran.
  std::size_t best_epoch = 0;
  std::size_t run = 0;
};

// Random streams consumed by one training run.
struct RunStreams {
  Rng shuffle;
  Rng mixing;
};

RunStreams make_run_streams(std::uint64_t seed, std::size_t run);

// Sigmoid scores of the stack in inference mode.
std::vector<double> predict(LayerStack& stack, const Matrix& x);

// Mini-batch Adam on mean BCE. Every epoch draws a fresh shuffle and keeps a
// trailing partial batch; GroupMixNorm layers receive the batch's group ids.
// After each epoch the validation AP is measured in inference mode and the
// parameters of the best epoch are returned.
TrainedModel train(LayerStack stack, const Dataset& train_ds, const Dataset& val_ds,
                   const ModelConfig& model_cfg, const TrainConfig& cfg,
                   RunStreams& streams);

// Like `train` but with no held-out selection: the parameters after the last
// epoch are returned. Used for fine-tuning on small data.
TrainedModel train_last(LayerStack stack, const Dataset& train_ds,
                        const Dataset& val_ds, const ModelConfig& model_cfg,
                        const TrainConfig& cfg, RunStreams& streams);

struct RunResult {
  std::size_t run = 0;
  FairnessReport test;
  TrainedModel model;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t count = 0;
};

struct AggregateReport {
  std::vector<RunResult> runs;
  MetricSummary ap;
  MetricSummary dp;
  MetricSummary eop;
  MetricSummary eod;
};

MetricSummary summarize(std::span<const double> values);
AggregateReport aggregate(std::vector<RunResult> runs);

// Prepared data of one run. `train`/`val`/`test` are produced by the caller.
using RunDataFactory = std::function<DatasetSplit(std::size_t run)>;

// For every run r in 1..runs: split(seed, r), fresh init, train, then
// evaluate the test split in inference mode. Runs are independent and may be
// executed on worker threads; results do not depend on the thread count.
AggregateReport run_protocol(const Dataset& full, const ModelConfig& model_cfg,
                             const TrainConfig& cfg);
AggregateReport run_protocol(const RunDataFactory& data, const ModelConfig& model_cfg,
                             const TrainConfig& cfg);

// Single run with an explicit split, as used by run_protocol.
RunResult run_once(const DatasetSplit& data, const ModelConfig& model_cfg,
                   const TrainConfig& cfg, std::size_t run);

FairnessReport evaluate(LayerStack& stack, const Dataset& ds, double threshold,
                        int reference_group);

// Inserts GroupMixNorm layers per `new_cfg` into the pretrained stack, copies
// all affine parameters, and trains on `data` (selection disabled).
// With cfg.epochs == 0 the warm-started model is returned untrained.
// Throws ShapeError if the affine layouts differ.
TrainedModel finetune(const TrainedModel& pretrained, const ModelConfig& new_cfg,
                      const Dataset& data, const TrainConfig& cfg, RunStreams& streams);

}  // namespace gmn

#endif  // GMN_TRAINING_HPP_
