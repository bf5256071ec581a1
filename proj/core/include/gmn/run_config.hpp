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

#ifndef GMN_RUN_CONFIG_HPP_
#define GMN_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmn/adult.hpp"
#include "gmn/training.hpp"

namespace gmn {

struct AnalysisConfig {
  // Rows sampled from the test split for kernel PCA (N x N kernel).
  std::size_t pca_samples = 1000;
  // 0 selects 1 / embedding width.
  double kernel_gamma = 0.0;
  double kernel_coef0 = 1.0;
  std::size_t probe_epochs = 200;
  double probe_lr = 1e-2;
};

struct FinetuneConfig {
  std::size_t epochs = 10;
  double lr = 1e-4;
};

// Everything a command needs, resolved from defaults, the config file and
// command-line flags (in that order of precedence, lowest first).
struct RunConfig {
  std::vector<std::filesystem::path> data_paths;
  ProtectedAttribute protected_attr = ProtectedAttribute::kGender;
  bool dump_encoded = false;
  ModelConfig model{};
  TrainConfig train{};
  FinetuneConfig finetune{};
  AnalysisConfig analysis{};
  std::filesystem::path output_dir = "out";

  void validate() const;  // ConfigError naming the offending key
};

// Flat "section.key = value" text. '#' starts a comment. Every key is typed;
// unknown keys and malformed values are ConfigErrors naming the key.
//
//   data.paths = adult.data, adult.test
//   data.protected_attr = gender
//   model.hidden_dims = 50, 50, 50
//   model.use_groupmixnorm = true
//   mixnorm.alpha = 0.1
//   train.epochs = 10
//   seed = 0
void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
// Sets one key, with the same typing rules as the file format.
void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Canonical text form; parsing it back yields an identical RunConfig.
std::string to_config_text(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace gmn

#endif  // GMN_RUN_CONFIG_HPP_
