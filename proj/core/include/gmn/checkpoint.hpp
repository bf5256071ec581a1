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

#ifndef GMN_CHECKPOINT_HPP_
#define GMN_CHECKPOINT_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gmn/training.hpp"

namespace gmn {

inline constexpr int kCheckpointVersion = 1;

// A checkpoint is one JSON text document:
//   format, version, layers (LayerSpec list), params (name -> shape + flat
//   row-major values), model/train settings, encoder, and an opaque
//   run-config snapshot. Doubles are printed in their shortest round-trip
//   form (at most 17 significant digits), so a write/read cycle is lossless.
void write_checkpoint(std::ostream& out, const TrainedModel& model,
                      const nlohmann::json& run_config);
void write_checkpoint(const std::filesystem::path& path, const TrainedModel& model,
                      const nlohmann::json& run_config);

struct LoadedCheckpoint {
  TrainedModel model;
  nlohmann::json run_config;
};

// Throws SchemaError on a wrong format tag, version, or inconsistent shapes.
LoadedCheckpoint read_checkpoint(std::istream& in);
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace gmn

#endif  // GMN_CHECKPOINT_HPP_
