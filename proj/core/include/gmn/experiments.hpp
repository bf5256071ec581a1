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

#ifndef GMN_EXPERIMENTS_HPP_
#define GMN_EXPERIMENTS_HPP_

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmn/adult.hpp"
#include "gmn/analysis.hpp"
#include "gmn/run_config.hpp"
#include "gmn/training.hpp"

namespace gmn {

// One row of a comparison table.
struct ComparisonRow {
  std::string model;
  AggregateReport report;
};

// Plain classifier vs GroupMixNorm under the same seeds and splits.
std::vector<ComparisonRow> run_tradeoff(std::shared_ptr<const RawTable> raw, const RunConfig& cfg);

// Train/val restricted to White and Black rows, test on all three race
// groups. Fairness values are the max pairwise gaps over the test groups.
std::vector<ComparisonRow> run_newgroups(std::shared_ptr<const RawTable> raw, const RunConfig& cfg);

// Per run: pretrain a plain model on train (validation selection), then
// insert GroupMixNorm and fine-tune on the validation split; both evaluated
// on test. Rows: "pretrained", "finetuned".
std::vector<ComparisonRow> run_debias(std::shared_ptr<const RawTable> raw, const RunConfig& cfg);

struct RepresentationRun {
  std::size_t run = 0;
  std::string model;
  ProbePair probes;
  Matrix projection;  // kernel PCA of the sampled test embeddings
  std::vector<int> y;
  std::vector<int> s;
};

struct RepresentationResult {
  std::vector<ComparisonRow> rows;
  std::vector<RepresentationRun> analyses;
};

// Trains plain and GroupMixNorm models per run, then probes and projects the
// test-split embeddings of each.
RepresentationResult run_representation(std::shared_ptr<const RawTable> raw, const RunConfig& cfg);

// Stable JSON / CSV views of a comparison.
nlohmann::json to_json(const AggregateReport& report);
nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string per_run_csv(const AggregateReport& report);
std::string train_log_csv(const TrainedModel& model);

}  // namespace gmn

#endif  // GMN_EXPERIMENTS_HPP_
