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

#include "gmn/fair_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gmn/errors.hpp"

namespace gmn {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

double require(std::optional<double> v, const char* what) {
  if (!v) throw UndefinedMetricError(what);
  return *v;
}

MetricValue defined(double v) { return {v, {}}; }
MetricValue undefined(std::string reason) { return {std::nullopt, std::move(reason)}; }

nlohmann::json metric_json(const MetricValue& m) {
  if (m.value) return *m.value;
  return nullptr;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

using RateFn = std::optional<double> (GroupConfusion::*)() const;

// Largest |rate(a) - rate(b)| over group pairs with both rates defined.
MetricValue max_pairwise(const std::map<int, GroupSummary>& groups, RateFn rate,
                         const char* what) {
  std::vector<double> rates;
  for (const auto& [id, g] : groups) {
    if (auto r = (g.counts.*rate)()) rates.push_back(*r);
  }
  if (rates.size() < 2) return undefined(std::string("fewer than two groups with defined ") + what);
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  return defined(*hi - *lo);
}

MetricValue max_pairwise_odds(const std::map<int, GroupSummary>& groups) {
  std::vector<std::pair<double, double>> rates;
  for (const auto& [id, g] : groups) {
    auto tpr = g.counts.tpr();
    auto fpr = g.counts.fpr();
    if (tpr && fpr) rates.emplace_back(*tpr, *fpr);
  }
  if (rates.size() < 2) return undefined("fewer than two groups with defined TPR and FPR");
  double best = 0.0;
  for (std::size_t a = 0; a < rates.size(); ++a) {
    for (std::size_t b = a + 1; b < rates.size(); ++b) {
      best = std::max(best, std::abs(rates[a].first - rates[b].first) +
                                std::abs(rates[a].second - rates[b].second));
    }
  }
  return defined(best);
}

template <class F>
MetricValue capture(F&& f) {
  try {
    return defined(f());
  } catch (const UndefinedMetricError& e) {
    return undefined(e.what());
  }
}

}  // namespace

void PredictionSet::validate() const {
  if (scores.size() != y_true.size() || scores.size() != s.size()) {
    throw ShapeError("prediction set columns differ in length");
  }
  for (double v : scores) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("score outside [0, 1]");
  }
  for (int y : y_true) {
    if (y != 0 && y != 1) throw DomainError("label outside {0, 1}");
  }
}

std::optional<double> GroupConfusion::positive_rate() const { return ratio(tp + fp, count()); }
std::optional<double> GroupConfusion::tpr() const { return ratio(tp, tp + fn); }
std::optional<double> GroupConfusion::fpr() const { return ratio(fp, fp + tn); }

GroupConfusion confusion(const PredictionSet& p, int group, bool in_group) {
  GroupConfusion c;
  for (std::size_t i = 0; i < p.scores.size(); ++i) {
    if ((p.s[i] == group) != in_group) continue;
    const bool pred = p.predicted_positive(i);
    if (p.y_true[i] == 1) {
      pred ? ++c.tp : ++c.fn;
    } else {
      pred ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double demographic_parity(const PredictionSet& p, int protected_group) {
  p.validate();
  const auto in = confusion(p, protected_group, true);
  const auto out = confusion(p, protected_group, false);
  return std::abs(require(in.positive_rate(), "DP: protected subgroup is empty") -
                  require(out.positive_rate(), "DP: complementary subgroup is empty"));
}

double equal_opportunity(const PredictionSet& p, int protected_group) {
  p.validate();
  const auto in = confusion(p, protected_group, true);
  const auto out = confusion(p, protected_group, false);
  return std::abs(require(in.tpr(), "EOP: protected subgroup has no positives") -
                  require(out.tpr(), "EOP: complementary subgroup has no positives"));
}

double equalized_odds(const PredictionSet& p, int protected_group) {
  p.validate();
  const auto in = confusion(p, protected_group, true);
  const auto out = confusion(p, protected_group, false);
  const double dtpr =
      std::abs(require(in.tpr(), "EOD: protected subgroup has no positives") -
               require(out.tpr(), "EOD: complementary subgroup has no positives"));
  const double dfpr =
      std::abs(require(in.fpr(), "EOD: protected subgroup has no negatives") -
               require(out.fpr(), "EOD: complementary subgroup has no negatives"));
  return dtpr + dfpr;
}

double average_precision(std::span<const double> scores, std::span<const int> y_true) {
  if (scores.size() != y_true.size()) throw ShapeError("AP: length mismatch");
  const auto positives = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
  if (positives == 0) throw UndefinedMetricError("AP: no positive samples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (y_true[order[k]] != 1) continue;
    ++tp;
    ap += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return ap / static_cast<double>(positives);
}

double average_precision(const PredictionSet& p) {
  p.validate();
  return average_precision(p.scores, p.y_true);
}

FairnessReport full_report(const PredictionSet& p, int reference_group) {
  p.validate();
  FairnessReport r;
  r.samples = p.scores.size();
  r.threshold = p.threshold;
  r.reference_group = reference_group;
  r.ap = capture([&] { return average_precision(p.scores, p.y_true); });

  const std::set<int> groups(p.s.begin(), p.s.end());
  for (int g : groups) {
    GroupSummary summary;
    summary.counts = confusion(p, g, true);
    summary.positive_rate = summary.counts.positive_rate();
    summary.tpr = summary.counts.tpr();
    summary.fpr = summary.counts.fpr();
    r.per_group.emplace(g, summary);
  }

  if (groups.size() < 2) {
    for (auto* m : {&r.dp, &r.eop, &r.eod, &r.dp_one_vs_rest, &r.eop_one_vs_rest,
                    &r.eod_one_vs_rest}) {
      *m = undefined("single group");
    }
    return r;
  }

  r.dp = max_pairwise(r.per_group, &GroupConfusion::positive_rate, "positive rate");
  r.eop = max_pairwise(r.per_group, &GroupConfusion::tpr, "TPR");
  r.eod = max_pairwise_odds(r.per_group);

  if (!groups.contains(reference_group)) {
    const std::string reason = "reference group " + std::to_string(reference_group) + " absent";
    r.dp_one_vs_rest = r.eop_one_vs_rest = r.eod_one_vs_rest = undefined(reason);
  } else {
    r.dp_one_vs_rest = capture([&] { return demographic_parity(p, reference_group); });
    r.eop_one_vs_rest = capture([&] { return equal_opportunity(p, reference_group); });
    r.eod_one_vs_rest = capture([&] { return equalized_odds(p, reference_group); });
  }
  return r;
}

FairnessReport report_without_groups(std::span<const double> scores,
                                     std::span<const int> y_true, double threshold) {
  FairnessReport r;
  r.samples = scores.size();
  r.threshold = threshold;
  r.ap = capture([&] { return average_precision(scores, y_true); });
  for (auto* m : {&r.dp, &r.eop, &r.eod, &r.dp_one_vs_rest, &r.eop_one_vs_rest,
                  &r.eod_one_vs_rest}) {
    *m = undefined("group labels withheld");
  }
  return r;
}

nlohmann::json to_json(const FairnessReport& report) {
  nlohmann::json j;
  j["samples"] = report.samples;
  j["threshold"] = report.threshold;
  j["ap"] = metric_json(report.ap);
  j["dp"] = metric_json(report.dp);
  j["eop"] = metric_json(report.eop);
  j["eod"] = metric_json(report.eod);
  j["one_vs_rest"] = {{"reference_group", report.reference_group},
                      {"dp", metric_json(report.dp_one_vs_rest)},
                      {"eop", metric_json(report.eop_one_vs_rest)},
                      {"eod", metric_json(report.eod_one_vs_rest)}};
  nlohmann::json reasons = nlohmann::json::object();
  const std::pair<const char*, const MetricValue*> named[] = {
      {"ap", &report.ap},
      {"dp", &report.dp},
      {"eop", &report.eop},
      {"eod", &report.eod},
      {"one_vs_rest.dp", &report.dp_one_vs_rest},
      {"one_vs_rest.eop", &report.eop_one_vs_rest},
      {"one_vs_rest.eod", &report.eod_one_vs_rest}};
  for (const auto& [name, m] : named) {
    if (!m->defined()) reasons[name] = m->reason;
  }
  j["undefined"] = std::move(reasons);
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [id, g] : report.per_group) {
    groups[std::to_string(id)] = {{"tp", g.counts.tp},
                                  {"fp", g.counts.fp},
                                  {"tn", g.counts.tn},
                                  {"fn", g.counts.fn},
                                  {"positive_rate", optional_json(g.positive_rate)},
                                  {"tpr", optional_json(g.tpr)},
                                  {"fpr", optional_json(g.fpr)}};
  }
  j["per_group"] = std::move(groups);
  return j;
}

PredictionSet read_prediction_csv(const std::filesystem::path& path, double threshold) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  PredictionSet p;
  p.threshold = threshold;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "score,y_true,group") {
        throw ParseError(path.string(), line_no, "expected header 'score,y_true,group'");
      }
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c, extra;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
        std::getline(ss, extra, ',')) {
      throw ParseError(path.string(), line_no, "expected 3 fields");
    }
    try {
      p.scores.push_back(std::stod(a));
      p.y_true.push_back(std::stoi(b));
      p.s.push_back(std::stoi(c));
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "non-numeric field");
    }
  }
  if (!header) throw ParseError(path.string(), 1, "empty prediction file");
  try {
    p.validate();
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return p;
}

}  // namespace gmn
