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

#include "gmn/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "gmn/errors.hpp"

namespace gmn {

namespace {

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string num(const MetricValue& m) { return m.value ? num(*m.value) : std::string(); }

nlohmann::json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

std::vector<std::size_t> all_rows(const RawTable& raw) {
  std::vector<std::size_t> rows(raw.rows.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

SplitSpec run_split(const RunConfig& cfg, std::size_t run) {
  SplitSpec spec = cfg.train.split;
  spec.seed = derive_seed(cfg.train.seed, Stream::kSplit, run);
  return spec;
}

ModelConfig with_mixnorm(ModelConfig m, bool on) {
  m.use_groupmixnorm = on;
  return m;
}

// Runs fn(run) for run = 1..runs on up to `threads` workers, collecting the
// results in run order.
template <class T, class Fn>
std::vector<T> for_each_run(std::size_t runs, std::size_t threads, Fn fn) {
  std::vector<T> out(runs);
  std::vector<std::exception_ptr> errors(runs);
  threads = threads != 0 ? threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, runs);
  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < runs; i += threads) {
      try {
        out[i] = fn(i + 1);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (std::size_t i = 0; i < runs; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw DomainError("run " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<ComparisonRow> run_tradeoff(std::shared_ptr<const RawTable> raw,
                                        const RunConfig& cfg) {
  cfg.validate();
  const auto rows = all_rows(*raw);
  const Dataset full = encode(raw, cfg.protected_attr, rows);
  std::vector<ComparisonRow> out;
  out.push_back({"plain", run_protocol(full, with_mixnorm(cfg.model, false), cfg.train)});
  out.push_back({"groupmixnorm", run_protocol(full, with_mixnorm(cfg.model, true), cfg.train)});
  return out;
}

std::vector<ComparisonRow> run_newgroups(std::shared_ptr<const RawTable> raw,
                                         const RunConfig& cfg) {
  cfg.validate();
  const auto rows = all_rows(*raw);
  const Dataset full = encode(raw, ProtectedAttribute::kRace, rows);
  const std::vector<int> seen = {0, 1};  // White, Black
  const RunDataFactory data = [&](std::size_t run) {
    auto s = split(full, run_split(cfg, run));
    s.train = filter_groups(s.train, seen);
    s.val = filter_groups(s.val, seen);
    return refit(s);
  };
  std::vector<ComparisonRow> out;
  out.push_back({"plain", run_protocol(data, with_mixnorm(cfg.model, false), cfg.train)});
  out.push_back({"groupmixnorm", run_protocol(data, with_mixnorm(cfg.model, true), cfg.train)});
  return out;
}

std::vector<ComparisonRow> run_debias(std::shared_ptr<const RawTable> raw,
                                      const RunConfig& cfg) {
  cfg.validate();
  const auto rows = all_rows(*raw);
  const Dataset full = encode(raw, cfg.protected_attr, rows);
  const auto plain = with_mixnorm(cfg.model, false);
  const auto mixed = with_mixnorm(cfg.model, true);
  TrainConfig ft = cfg.train;
  ft.epochs = cfg.finetune.epochs;
  ft.lr = cfg.finetune.lr;

  using Pair = std::pair<RunResult, RunResult>;
  auto results = for_each_run<Pair>(cfg.train.runs, cfg.train.threads, [&](std::size_t run) {
    const auto data = split(full, run_split(cfg, run));
    Pair p;
    p.first = run_once(data, plain, cfg.train, run);
    RunStreams streams{make_rng(cfg.train.seed, Stream::kFinetune, run),
                       make_rng(cfg.train.seed, Stream::kMixing, run)};
    p.second.run = run;
    p.second.model = finetune(p.first.model, mixed, data.val, ft, streams);
    p.second.test = evaluate(p.second.model.stack, data.test, cfg.train.threshold,
                             cfg.train.reference_group);
    return p;
  });
  std::vector<RunResult> pre, post;
  for (auto& [a, b] : results) {
    pre.push_back(std::move(a));
    post.push_back(std::move(b));
  }
  std::vector<ComparisonRow> out;
  out.push_back({"pretrained", aggregate(std::move(pre))});
  out.push_back({"finetuned", aggregate(std::move(post))});
  return out;
}

RepresentationResult run_representation(std::shared_ptr<const RawTable> raw,
                                        const RunConfig& cfg) {
  cfg.validate();
  const auto rows = all_rows(*raw);
  const Dataset full = encode(raw, cfg.protected_attr, rows);
  const ProbeOptions probe{cfg.analysis.probe_lr, cfg.analysis.probe_epochs};
  KernelPcaOptions pca;
  if (cfg.analysis.kernel_gamma > 0.0) pca.gamma = cfg.analysis.kernel_gamma;
  pca.coef0 = cfg.analysis.kernel_coef0;

  struct PerRun {
    RunResult plain, mixed;
    RepresentationRun plain_analysis, mixed_analysis;
  };
  auto analyse = [&](RunResult& r, const Dataset& test, const char* name) {
    RepresentationRun a;
    a.run = r.run;
    a.model = name;
    const auto emb = extract_embeddings(r.model.stack, test);
    a.probes = auxiliary_probe(emb, probe);

    std::vector<std::size_t> sample(test.size());
    std::iota(sample.begin(), sample.end(), 0);
    auto rng = make_rng(cfg.train.seed, Stream::kAnalysis, r.run);
    std::shuffle(sample.begin(), sample.end(), rng);
    sample.resize(std::min(sample.size(), cfg.analysis.pca_samples));
    std::sort(sample.begin(), sample.end());
    a.projection = kernel_pca_sigmoid(select_rows(emb.h, sample), pca);
    for (auto i : sample) {
      a.y.push_back(emb.y[i]);
      a.s.push_back(emb.s[i]);
    }
    return a;
  };

  auto results = for_each_run<PerRun>(cfg.train.runs, cfg.train.threads, [&](std::size_t run) {
    const auto data = split(full, run_split(cfg, run));
    PerRun p;
    p.plain = run_once(data, with_mixnorm(cfg.model, false), cfg.train, run);
    p.mixed = run_once(data, with_mixnorm(cfg.model, true), cfg.train, run);
    p.plain_analysis = analyse(p.plain, data.test, "plain");
    p.mixed_analysis = analyse(p.mixed, data.test, "groupmixnorm");
    return p;
  });

  RepresentationResult out;
  std::vector<RunResult> plain, mixed;
  for (auto& p : results) {
    plain.push_back(std::move(p.plain));
    mixed.push_back(std::move(p.mixed));
    out.analyses.push_back(std::move(p.plain_analysis));
    out.analyses.push_back(std::move(p.mixed_analysis));
  }
  out.rows.push_back({"plain", aggregate(std::move(plain))});
  out.rows.push_back({"groupmixnorm", aggregate(std::move(mixed))});
  return out;
}

nlohmann::json to_json(const AggregateReport& report) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"run", r.run}, {"best_epoch", r.model.best_epoch}, {"test", to_json(r.test)}});
  }
  return {{"runs", std::move(runs)},
          {"summary",
           {{"ap", summary_json(report.ap)},
            {"dp", summary_json(report.dp)},
            {"eop", summary_json(report.eop)},
            {"eod", summary_json(report.eod)}}}};
}

nlohmann::json comparison_json(const std::vector<ComparisonRow>& rows) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& row : rows) j[row.model] = to_json(row.report);
  return j;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "model,runs,ap_mean,ap_std,dp_mean,dp_std,eop_mean,eop_std,eod_mean,eod_std\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << row.model << ',' << r.runs.size() << ',' << num(r.ap.mean) << ',' << num(r.ap.std)
        << ',' << num(r.dp.mean) << ',' << num(r.dp.std) << ',' << num(r.eop.mean) << ','
        << num(r.eop.std) << ',' << num(r.eod.mean) << ',' << num(r.eod.std) << '\n';
  }
  return out.str();
}

std::string per_run_csv(const AggregateReport& report) {
  std::ostringstream out;
  out << "run,best_epoch,ap,dp,eop,eod,dp_one_vs_rest,eop_one_vs_rest,eod_one_vs_rest\n";
  for (const auto& r : report.runs) {
    out << r.run << ',' << r.model.best_epoch << ',' << num(r.test.ap) << ',' << num(r.test.dp)
        << ',' << num(r.test.eop) << ',' << num(r.test.eod) << ',' << num(r.test.dp_one_vs_rest)
        << ',' << num(r.test.eop_one_vs_rest) << ',' << num(r.test.eod_one_vs_rest) << '\n';
  }
  return out.str();
}

std::string train_log_csv(const TrainedModel& model) {
  std::ostringstream out;
  out << "epoch,loss,val_ap,val_dp,val_eop,val_eod\n";
  for (const auto& e : model.log) {
    out << e.epoch << ',' << num(e.loss) << ',' << num(e.val_ap) << ',' << num(e.val_dp) << ','
        << num(e.val_eop) << ',' << num(e.val_eod) << '\n';
  }
  return out.str();
}

}  // namespace gmn
