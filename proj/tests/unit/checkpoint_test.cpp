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

#include "gmn/checkpoint.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <numeric>
#include <sstream>

#include "gmn/errors.hpp"
#include "synthetic_adult.hpp"

namespace gmn {
namespace {

TrainedModel small_model() {
  testing::SyntheticAdultOptions opt;
  opt.rows = 120;
  std::istringstream in(testing::synthetic_adult(opt));
  auto raw = std::make_shared<const RawTable>(parse_adult(in, "synthetic"));
  std::vector<std::size_t> all(raw->rows.size());
  std::iota(all.begin(), all.end(), 0);
  const auto ds = encode(raw, ProtectedAttribute::kGender, all);
  ModelConfig mc;
  mc.hidden_dims = {5, 4};
  mc.mixnorm.alpha = 0.3;
  auto stack = build_model(mc, ds.x.cols());
  Rng init(2);
  stack.initialize(init);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 32;
  tc.lr = 1e-2;
  tc.seed = 77;
  auto streams = make_run_streams(1, 1);
  auto m = train(std::move(stack), ds, ds, mc, tc, streams);
  m.run = 4;
  return m;
}

TEST(Checkpoint, RoundTripIsLossless) {
  auto m = small_model();
  m.stack.params()[0].value(0, 0) = 0.1 + 0.2;   // needs 17 digits
  m.stack.params()[0].value(0, 1) = 1e-300 / 3;  // tiny
  std::stringstream buf;
  const nlohmann::json snapshot = {{"seed", "77"}};
  write_checkpoint(buf, m, snapshot);
  const auto loaded = read_checkpoint(buf);
  const auto& lm = loaded.model;
  EXPECT_EQ(lm.stack.specs(), m.stack.specs());
  for (std::size_t i = 0; i < m.stack.params().size(); ++i) {
    EXPECT_EQ(lm.stack.params()[i].name, m.stack.params()[i].name);
    EXPECT_EQ(lm.stack.params()[i].value, m.stack.params()[i].value);
  }
  EXPECT_EQ(lm.encoder, m.encoder);
  EXPECT_EQ(lm.model.hidden_dims, m.model.hidden_dims);
  EXPECT_EQ(lm.model.mixnorm.alpha, 0.3);
  EXPECT_EQ(lm.train.seed, 77u);
  EXPECT_EQ(lm.run, 4u);
  EXPECT_EQ(lm.best_epoch, m.best_epoch);
  EXPECT_EQ(loaded.run_config, snapshot);
}

TEST(Checkpoint, RewriteIsByteIdentical) {
  const auto m = small_model();
  std::stringstream a, b;
  write_checkpoint(a, m, nlohmann::json::object());
  const auto loaded = read_checkpoint(a);
  write_checkpoint(b, loaded.model, loaded.run_config);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Checkpoint, FileRoundTrip) {
  const auto m = small_model();
  const auto path = std::filesystem::temp_directory_path() / "gmn_checkpoint_test.txt";
  write_checkpoint(path, m, nlohmann::json::object());
  EXPECT_EQ(read_checkpoint(path).model.stack.specs(), m.stack.specs());
  std::filesystem::remove(path);
  EXPECT_THROW(read_checkpoint(path), SchemaError);
}

nlohmann::json document() {
  std::stringstream buf;
  write_checkpoint(buf, small_model(), nlohmann::json::object());
  return nlohmann::json::parse(buf.str());
}

void expect_schema_error(const nlohmann::json& doc) {
  std::stringstream in(doc.dump());
  EXPECT_THROW(read_checkpoint(in), SchemaError) << doc.dump().substr(0, 80);
}

TEST(Checkpoint, RejectsMalformedDocuments) {
  std::stringstream garbage("not json");
  EXPECT_THROW(read_checkpoint(garbage), SchemaError);

  auto doc = document();
  doc["format"] = "something-else";
  expect_schema_error(doc);

  doc = document();
  doc["version"] = kCheckpointVersion + 1;
  expect_schema_error(doc);

  doc = document();
  doc["params"]["affine0.weight"]["shape"] = {1, 1};
  expect_schema_error(doc);

  doc = document();
  doc["params"].erase("affine1.bias");
  expect_schema_error(doc);

  doc = document();
  doc["layers"][0]["kind"] = "conv";
  expect_schema_error(doc);

  doc = document();
  doc["layers"][0]["out_dim"] = 6;
  expect_schema_error(doc);

  doc = document();
  doc["encoder"]["columns"].erase(0);
  expect_schema_error(doc);
}

}  // namespace
}  // namespace gmn
