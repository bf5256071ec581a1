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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "gmn/errors.hpp"
#include "oracles.hpp"
#include "synthetic_adult.hpp"

namespace gmn {
namespace {

Dataset synthetic_dataset(std::size_t rows, std::uint64_t seed,
                          ProtectedAttribute attr = ProtectedAttribute::kGender) {
  testing::SyntheticAdultOptions opt;
  opt.rows = rows;
  opt.seed = seed;
  std::istringstream in(testing::synthetic_adult(opt));
  auto raw = std::make_shared<const RawTable>(parse_adult(in, "synthetic"));
  std::vector<std::size_t> all(raw->rows.size());
  std::iota(all.begin(), all.end(), 0);
  return encode(raw, attr, all);
}

// Two Gaussian blobs separated along the first feature.
Dataset separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Dataset ds;
  ds.x = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    ds.x(i, 0) = (y ? 1.5 : -1.5) + noise(rng);
    ds.x(i, 1) = noise(rng);
    ds.y.push_back(y);
    ds.s.push_back(static_cast<int>((i / 2) % 2));
  }
  ds.group_names = {"a", "b"};
  return ds;
}

std::vector<Matrix> param_values(const LayerStack& stack) {
  std::vector<Matrix> v;
  for (const auto& p : stack.params()) v.push_back(p.value);
  return v;
}

TEST(BuildModel, PlainStackHasSevenLayers) {
  ModelConfig cfg;
  cfg.use_groupmixnorm = false;
  const auto specs = model_layout(cfg, 20);
  ASSERT_EQ(specs.size(), 7u);
  for (const auto& s : specs) EXPECT_NE(s.kind, LayerKind::kGroupMixNorm);
}

TEST(BuildModel, MixNormAfterEveryHiddenActivationOnly) {
  const auto specs = model_layout(ModelConfig{}, 20);
  ASSERT_EQ(specs.size(), 10u);
  std::size_t mix = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].kind == LayerKind::kSilu) {
      ASSERT_LT(i + 1, specs.size());
      EXPECT_EQ(specs[i + 1].kind, LayerKind::kGroupMixNorm);
    }
    if (specs[i].kind == LayerKind::kGroupMixNorm) ++mix;
  }
  EXPECT_EQ(mix, 3u);
  EXPECT_EQ(specs.back().kind, LayerKind::kAffine);
  EXPECT_EQ(specs.back().out_dim, 1u);
  EXPECT_EQ(specs[specs.size() - 2].kind, LayerKind::kGroupMixNorm);
}

TEST(BuildModel, ParameterCount) {
  for (std::size_t d : {1u, 7u, 104u}) {
    const auto stack = build_model(ModelConfig{}, d);
    EXPECT_EQ(stack.params().scalar_count(), d * 50 + 50 + 2 * (50 * 50 + 50) + 50 + 1);
  }
  EXPECT_THROW(build_model(ModelConfig{}, 0), DomainError);
}

TEST(BuildModel, EmbeddingLayerIsLastHiddenActivation) {
  const auto stack = build_model(ModelConfig{}, 5);
  const std::size_t k = embedding_layer_count(stack);
  EXPECT_EQ(stack.specs()[k - 1].kind, LayerKind::kSilu);
  EXPECT_EQ(stack.specs()[k - 1].out_dim, 50u);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  const auto ds = separable(64, 1);
  auto stack = build_model(ModelConfig{}, 2);
  Rng init(3);
  stack.initialize(init);
  const auto before = param_values(stack);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 10;
  auto streams = make_run_streams(1, 1);
  const auto m = train(stack, ds, ds, ModelConfig{}, cfg, streams);
  EXPECT_EQ(param_values(m.stack), before);
}

TEST(Train, BitwiseDeterministic) {
  const auto ds = synthetic_dataset(300, 2);
  auto run = [&] {
    auto stack = build_model(ModelConfig{}, ds.x.cols());
    Rng init(4);
    stack.initialize(init);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 64;
    cfg.lr = 1e-3;
    auto streams = make_run_streams(9, 1);
    return train(std::move(stack), ds, ds, ModelConfig{}, cfg, streams);
  };
  const auto a = run(), b = run();
  EXPECT_EQ(param_values(a.stack), param_values(b.stack));
  ASSERT_EQ(a.log.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(a.log[e].loss, b.log[e].loss);
}

TEST(Train, SeparableLossDecreasesMonotonically) {
  const auto ds = separable(400, 5);
  ModelConfig mc;
  mc.use_groupmixnorm = false;
  auto stack = build_model(mc, 2);
  Rng init(6);
  stack.initialize(init);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.epochs = 5;
  cfg.batch_size = 50;
  auto streams = make_run_streams(7, 1);
  const auto m = train_last(std::move(stack), ds, ds, mc, cfg, streams);
  ASSERT_EQ(m.log.size(), 5u);
  for (std::size_t e = 1; e < 5; ++e) EXPECT_LT(m.log[e].loss, m.log[e - 1].loss) << e;
  EXPECT_GT(m.log.back().val_ap, 0.99);
}

TEST(Train, KeepsBestValidationEpoch) {
  const auto full = synthetic_dataset(600, 8);
  const auto parts = split(full, SplitSpec{0.6, 0.2, 0.2, 3});
  auto stack = build_model(ModelConfig{}, full.x.cols());
  Rng init(1);
  stack.initialize(init);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 50;
  cfg.lr = 3e-3;
  auto streams = make_run_streams(2, 1);
  auto m = train(std::move(stack), parts.train, parts.val, ModelConfig{}, cfg, streams);
  ASSERT_EQ(m.log.size(), 6u);
  std::size_t best = 0;
  for (std::size_t e = 0; e < 6; ++e)
    if (m.log[e].val_ap > m.log[best].val_ap) best = e;
  EXPECT_EQ(m.best_epoch, best + 1);
  EXPECT_EQ(*evaluate(m.stack, parts.val, 0.5, 1).ap.value, m.log[best].val_ap);
}

TEST(Train, EmptyTrainingSetIsError) {
  Dataset empty;
  empty.x = Matrix(0, 2);
  auto stack = build_model(ModelConfig{}, 2);
  auto streams = make_run_streams(1, 1);
  EXPECT_THROW(train(stack, empty, separable(10, 1), ModelConfig{}, TrainConfig{}, streams),
               DomainError);
}

TEST(Train, SingleClassBatchesStillTrain) {
  auto ds = separable(40, 2);
  std::fill(ds.y.begin(), ds.y.end(), 0);
  ds.y[0] = 1;
  auto stack = build_model(ModelConfig{}, 2);
  Rng init(1);
  stack.initialize(init);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.lr = 1e-3;
  auto streams = make_run_streams(1, 1);
  const auto m = train(stack, ds, ds, ModelConfig{}, cfg, streams);
  EXPECT_TRUE(std::isfinite(m.log.back().loss));
}

TEST(Train, InvalidConfig) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.runs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

// Independent plain-MLP training loop: forward, backward and Adam written
// out directly.
struct ReferenceMlp {
  std::vector<Matrix> w, b, mw, vw, mb, vb;
  std::size_t step = 0;

  static double sig(double x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

  static void adam(Matrix& p, Matrix& m, Matrix& v, const Matrix& g, double lr, std::size_t t) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      double& mi = m.values()[i];
      double& vi = v.values()[i];
      const double gi = g.values()[i];
      mi = 0.9 * mi + 0.1 * gi;
      vi = 0.999 * vi + 0.001 * gi * gi;
      const double mh = mi / (1 - std::pow(0.9, static_cast<double>(t)));
      const double vh = vi / (1 - std::pow(0.999, static_cast<double>(t)));
      p.values()[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }

  double step_batch(const Matrix& x, const std::vector<double>& y, double lr) {
    const std::size_t layers = w.size();
    std::vector<Matrix> pre, act{x};
    for (std::size_t l = 0; l < layers; ++l) {
      Matrix z = testing::naive_matmul(act.back(), w[l]);
      for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += b[l](0, c);
      pre.push_back(z);
      if (l + 1 < layers) {
        Matrix h = z;
        for (double& v : h.values()) v = v * sig(v);
        act.push_back(h);
      }
    }
    const Matrix& logit = pre.back();
    const double batch = static_cast<double>(x.rows());
    double loss = 0.0;
    Matrix g(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double l = logit(r, 0);
      loss += std::max(l, 0.0) - l * y[r] + std::log1p(std::exp(-std::abs(l)));
      g(r, 0) = (sig(l) - y[r]) / batch;
    }
    ++step;
    std::vector<Matrix> gw(layers), gb(layers);
    for (std::size_t l = layers; l-- > 0;) {
      gw[l] = testing::naive_matmul(transpose(act[l]), g);
      gb[l] = Matrix(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[l](0, c) += g(r, c);
      if (l == 0) break;
      Matrix up = testing::naive_matmul(g, transpose(w[l]));
      for (std::size_t i = 0; i < up.size(); ++i) {
        const double z = pre[l - 1].values()[i];
        const double s = sig(z);
        up.values()[i] *= s * (1 + z * (1 - s));
      }
      g = up;
    }
    for (std::size_t l = 0; l < layers; ++l) {
      adam(w[l], mw[l], vw[l], gw[l], lr, step);
      adam(b[l], mb[l], vb[l], gb[l], lr, step);
    }
    return loss / batch;
  }
};

TEST(Train, PlainModelMatchesReferenceLoop) {
  const auto ds = synthetic_dataset(230, 12);
  ModelConfig mc;
  mc.use_groupmixnorm = false;
  mc.hidden_dims = {8, 6, 4};
  auto stack = build_model(mc, ds.x.cols());
  Rng init(5);
  stack.initialize(init);

  ReferenceMlp ref;
  for (std::size_t l = 0; l < 4; ++l) {
    const auto& w = stack.params().find("affine" + std::to_string(l) + ".weight").value;
    const auto& b = stack.params().find("affine" + std::to_string(l) + ".bias").value;
    ref.w.push_back(w);
    ref.b.push_back(b);
    ref.mw.emplace_back(w.rows(), w.cols());
    ref.vw.emplace_back(w.rows(), w.cols());
    ref.mb.emplace_back(b.rows(), b.cols());
    ref.vb.emplace_back(b.rows(), b.cols());
  }

  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 50;  // keeps a partial batch of 30
  cfg.lr = 1e-3;
  auto streams = make_run_streams(3, 1);
  const auto m = train_last(std::move(stack), ds, ds, mc, cfg, streams);

  Rng shuffle = make_rng(3, Stream::kShuffle, 1);
  std::vector<std::size_t> order(ds.size());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      std::vector<double> y;
      for (auto i : idx) y.push_back(ds.y[i]);
      total += ref.step_batch(select_rows(ds.x, idx), y, cfg.lr) * idx.size();
    }
    EXPECT_NEAR(m.log[e].loss, total / ds.size(), 1e-12) << "epoch " << e + 1;
  }
  for (std::size_t l = 0; l < 4; ++l) {
    const auto& w = m.stack.params().find("affine" + std::to_string(l) + ".weight").value;
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w.values()[i], ref.w[l].values()[i], 1e-12);
  }
}

TEST(Inference, IndependentOfProtectedAttribute) {
  const auto ds = synthetic_dataset(200, 13);
  auto stack = build_model(ModelConfig{}, ds.x.cols());
  Rng init(1);
  stack.initialize(init);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.lr = 1e-3;
  auto streams = make_run_streams(1, 1);
  auto m = train(std::move(stack), ds, ds, ModelConfig{}, cfg, streams);
  const auto scores = predict(m.stack, ds.x);
  Dataset shuffled = ds;
  std::mt19937_64 rng(2);
  std::shuffle(shuffled.s.begin(), shuffled.s.end(), rng);
  const auto a = evaluate(m.stack, ds, 0.5, 1);
  const auto b = evaluate(m.stack, shuffled, 0.5, 1);
  EXPECT_EQ(*a.ap.value, *b.ap.value);
  EXPECT_EQ(predict(m.stack, shuffled.x), scores);
}

TEST(Summaries, MeanAndSampleStd) {
  const std::vector<double> v = {1.0, 2.0, 4.0};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 7.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(((1 - 7.0 / 3) * (1 - 7.0 / 3) + (2 - 7.0 / 3) * (2 - 7.0 / 3) +
                                     (4 - 7.0 / 3) * (4 - 7.0 / 3)) / 2.0));
  EXPECT_EQ(s.count, 3u);
  const std::vector<double> one = {0.5};
  EXPECT_EQ(summarize(one).std, 0.0);
}

TrainConfig quick_config(std::size_t runs) {
  TrainConfig cfg;
  cfg.runs = runs;
  cfg.epochs = 2;
  cfg.batch_size = 64;
  cfg.lr = 1e-3;
  cfg.seed = 17;
  cfg.threads = 1;
  return cfg;
}

TEST(Protocol, SingleRunEqualsRunOnce) {
  const auto full = synthetic_dataset(300, 14);
  const auto cfg = quick_config(1);
  const auto agg = run_protocol(full, ModelConfig{}, cfg);
  SplitSpec spec = cfg.split;
  spec.seed = derive_seed(cfg.seed, Stream::kSplit, 1);
  const auto one = run_once(split(full, spec), ModelConfig{}, cfg, 1);
  ASSERT_EQ(agg.runs.size(), 1u);
  EXPECT_EQ(agg.ap.mean, *one.test.ap.value);
  EXPECT_EQ(agg.dp.mean, *one.test.dp.value);
  EXPECT_EQ(agg.ap.std, 0.0);
}

TEST(Protocol, AggregateIsMeanOfRuns) {
  const auto full = synthetic_dataset(300, 15);
  const auto agg = run_protocol(full, ModelConfig{}, quick_config(3));
  ASSERT_EQ(agg.runs.size(), 3u);
  double sum = 0.0;
  for (const auto& r : agg.runs) sum += *r.test.ap.value;
  EXPECT_NEAR(agg.ap.mean, sum / 3.0, 1e-15);
  EXPECT_EQ(agg.runs[0].run, 1u);
  EXPECT_EQ(agg.runs[2].run, 3u);
  EXPECT_NE(agg.runs[0].model.encoder, agg.runs[1].model.encoder);  // fresh split per run
}

TEST(Protocol, ThreadCountDoesNotChangeResults) {
  const auto full = synthetic_dataset(300, 16);
  auto cfg = quick_config(3);
  const auto a = run_protocol(full, ModelConfig{}, cfg);
  cfg.threads = 3;
  const auto b = run_protocol(full, ModelConfig{}, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(*a.runs[i].test.ap.value, *b.runs[i].test.ap.value);
    EXPECT_EQ(param_values(a.runs[i].model.stack), param_values(b.runs[i].model.stack));
  }
}

TEST(Protocol, FailedRunCarriesContext) {
  const auto cfg = quick_config(2);
  try {
    run_protocol([](std::size_t) -> DatasetSplit { throw SchemaError("boom"); }, ModelConfig{},
                 cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run 1"), std::string::npos);
  }
}

TEST(Finetune, ZeroEpochsKeepsPredictions) {
  const auto ds = synthetic_dataset(200, 18);
  ModelConfig plain;
  plain.use_groupmixnorm = false;
  auto stack = build_model(plain, ds.x.cols());
  Rng init(1);
  stack.initialize(init);
  auto streams = make_run_streams(1, 1);
  TrainConfig cfg = quick_config(1);
  auto pre = train(std::move(stack), ds, ds, plain, cfg, streams);
  TrainConfig ft = cfg;
  ft.epochs = 0;
  auto tuned = finetune(pre, ModelConfig{}, ds, ft, streams);
  EXPECT_EQ(predict(tuned.stack, ds.x), predict(pre.stack, ds.x));
  std::size_t mix = 0;
  for (const auto& s : tuned.stack.specs()) mix += s.kind == LayerKind::kGroupMixNorm;
  EXPECT_EQ(mix, 3u);
}

TEST(Finetune, TrainsWarmStartedParameters) {
  const auto ds = synthetic_dataset(200, 19);
  ModelConfig plain;
  plain.use_groupmixnorm = false;
  auto stack = build_model(plain, ds.x.cols());
  Rng init(1);
  stack.initialize(init);
  auto streams = make_run_streams(1, 1);
  auto pre = train(std::move(stack), ds, ds, plain, quick_config(1), streams);
  auto tuned = finetune(pre, ModelConfig{}, ds, quick_config(1), streams);
  EXPECT_EQ(tuned.log.size(), 2u);
  EXPECT_EQ(tuned.best_epoch, 2u);
  EXPECT_NE(param_values(tuned.stack), param_values(pre.stack));
}

TEST(Finetune, ShapeMismatch) {
  const auto ds = synthetic_dataset(100, 20);
  ModelConfig plain;
  plain.use_groupmixnorm = false;
  TrainedModel pre;
  pre.stack = build_model(plain, ds.x.cols());
  ModelConfig wider;
  wider.hidden_dims = {60, 50, 50};
  auto streams = make_run_streams(1, 1);
  EXPECT_THROW(finetune(pre, wider, ds, quick_config(1), streams), ShapeError);
}

}  // namespace
}  // namespace gmn
