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

#ifndef GMN_FAIR_METRICS_HPP_
#define GMN_FAIR_METRICS_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gmn {

// Model scores with ground truth and protected group ids. The hard
// prediction of a row is [score >= threshold].
struct PredictionSet {
  std::vector<double> scores;
  std::vector<int> y_true;
  std::vector<int> s;
  double threshold = 0.5;

  // Throws ShapeError on length mismatch, DomainError for scores outside
  // [0, 1] or labels outside {0, 1}.
  void validate() const;
  bool predicted_positive(std::size_t i) const { return scores[i] >= threshold; }
};

struct GroupConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t count() const { return tp + fp + tn + fn; }
  std::optional<double> positive_rate() const;
  std::optional<double> tpr() const;
  std::optional<double> fpr() const;
};

// Confusion counts of rows with s == group (in_group) or s != group.
GroupConfusion confusion(const PredictionSet& p, int group, bool in_group = true);

// The binary metrics compare the subgroup S == protected_group with
// S != protected_group and throw UndefinedMetricError when a needed
// conditional rate has an empty denominator.

// |P[Yhat=1 | S=g] - P[Yhat=1 | S!=g]|
double demographic_parity(const PredictionSet& p, int protected_group = 1);
// |TPR(S=g) - TPR(S!=g)|
double equal_opportunity(const PredictionSet& p, int protected_group = 1);
// |dTPR| + |dFPR|, in [0, 2].
double equalized_odds(const PredictionSet& p, int protected_group = 1);

// Sum over descending-score ranks of (recall step) * precision; ties keep
// input order. Throws UndefinedMetricError without positives.
double average_precision(std::span<const double> scores, std::span<const int> y_true);
double average_precision(const PredictionSet& p);

// A metric value or the reason it could not be computed.
struct MetricValue {
  std::optional<double> value;
  std::string reason;

  bool defined() const { return value.has_value(); }
};

struct GroupSummary {
  GroupConfusion counts;
  std::optional<double> positive_rate;
  std::optional<double> tpr;
  std::optional<double> fpr;
};

struct FairnessReport {
  std::size_t samples = 0;
  double threshold = 0.5;
  MetricValue ap;
  // Largest gap over all pairs of groups. With two groups this is exactly
  // the S=1 vs S!=1 definition.
  MetricValue dp;
  MetricValue eop;
  MetricValue eod;
  // reference group vs. the rest
  int reference_group = 1;
  MetricValue dp_one_vs_rest;
  MetricValue eop_one_vs_rest;
  MetricValue eod_one_vs_rest;
  std::map<int, GroupSummary> per_group;
};

// Never throws for valid inputs; undefined metrics are reported with a reason.
FairnessReport full_report(const PredictionSet& p, int reference_group = 1);

// AP-only report for predictions without group labels.
FairnessReport report_without_groups(std::span<const double> scores,
                                     std::span<const int> y_true, double threshold);

nlohmann::json to_json(const FairnessReport& report);

// CSV with header "score,y_true,group".
PredictionSet read_prediction_csv(const std::filesystem::path& path, double threshold = 0.5);

}  // namespace gmn

#endif  // GMN_FAIR_METRICS_HPP_
