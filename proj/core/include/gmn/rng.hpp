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

#ifndef GMN_RNG_HPP_
#define GMN_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace gmn {

using Rng = std::mt19937_64;

// Independent random streams. Every random decision of an experiment (split,
// weight init, batch shuffling, mixing weights) draws from its own stream,
// keyed by (base seed, stream name, run index), so that toggling one
// component never shifts the draws of another.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kInit = 2,
  kShuffle = 3,
  kMixing = 4,
  kProbe = 5,
  kAnalysis = 6,
  kFinetune = 7,
};

std::uint64_t derive_seed(std::uint64_t base_seed, Stream stream, std::uint64_t run);

inline Rng make_rng(std::uint64_t base_seed, Stream stream, std::uint64_t run = 0) {
  return Rng(derive_seed(base_seed, stream, run));
}

}  // namespace gmn

#endif  // GMN_RNG_HPP_
