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

#include "gmn/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "gmn/errors.hpp"

namespace gmn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* type) {
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) +
                    "' is not a valid " + type);
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) bad_value(key, v, "non-negative integer");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) bad_value(key, v, "unsigned integer");
  return out;
}

int parse_int(std::string_view key, std::string_view v) {
  int out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) bad_value(key, v, "integer");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) bad_value(key, v, "real number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "boolean");
}

std::vector<std::string_view> parse_list(std::string_view v) {
  std::vector<std::string_view> items;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma - start));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

std::string real_str(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"data.paths",
       [](RunConfig& c, auto, auto v) {
         c.data_paths.clear();
         for (auto p : parse_list(v)) c.data_paths.emplace_back(std::string(p));
       }},
      {"data.protected_attr",
       [](RunConfig& c, auto, auto v) { c.protected_attr = protected_attribute_from_string(v); }},
      {"data.dump_encoded",
       [](RunConfig& c, auto k, auto v) { c.dump_encoded = parse_bool(k, v); }},
      {"model.hidden_dims",
       [](RunConfig& c, auto k, auto v) {
         c.model.hidden_dims.clear();
         for (auto item : parse_list(v)) c.model.hidden_dims.push_back(parse_count(k, item));
       }},
      {"model.use_groupmixnorm",
       [](RunConfig& c, auto k, auto v) { c.model.use_groupmixnorm = parse_bool(k, v); }},
      {"mixnorm.alpha",
       [](RunConfig& c, auto k, auto v) { c.model.mixnorm.alpha = parse_real(k, v); }},
      {"mixnorm.epsilon",
       [](RunConfig& c, auto k, auto v) { c.model.mixnorm.epsilon = parse_real(k, v); }},
      {"train.epochs", [](RunConfig& c, auto k, auto v) { c.train.epochs = parse_count(k, v); }},
      {"train.batch_size",
       [](RunConfig& c, auto k, auto v) { c.train.batch_size = parse_count(k, v); }},
      {"train.lr", [](RunConfig& c, auto k, auto v) { c.train.lr = parse_real(k, v); }},
      {"train.runs", [](RunConfig& c, auto k, auto v) { c.train.runs = parse_count(k, v); }},
      {"train.threads",
       [](RunConfig& c, auto k, auto v) { c.train.threads = parse_count(k, v); }},
      {"split.train", [](RunConfig& c, auto k, auto v) { c.train.split.train = parse_real(k, v); }},
      {"split.val", [](RunConfig& c, auto k, auto v) { c.train.split.val = parse_real(k, v); }},
      {"split.test", [](RunConfig& c, auto k, auto v) { c.train.split.test = parse_real(k, v); }},
      {"eval.threshold",
       [](RunConfig& c, auto k, auto v) { c.train.threshold = parse_real(k, v); }},
      {"eval.reference_group",
       [](RunConfig& c, auto k, auto v) { c.train.reference_group = parse_int(k, v); }},
      {"finetune.epochs",
       [](RunConfig& c, auto k, auto v) { c.finetune.epochs = parse_count(k, v); }},
      {"finetune.lr", [](RunConfig& c, auto k, auto v) { c.finetune.lr = parse_real(k, v); }},
      {"analysis.pca_samples",
       [](RunConfig& c, auto k, auto v) { c.analysis.pca_samples = parse_count(k, v); }},
      {"analysis.kernel_gamma",
       [](RunConfig& c, auto k, auto v) { c.analysis.kernel_gamma = parse_real(k, v); }},
      {"analysis.kernel_coef0",
       [](RunConfig& c, auto k, auto v) { c.analysis.kernel_coef0 = parse_real(k, v); }},
      {"analysis.probe_epochs",
       [](RunConfig& c, auto k, auto v) { c.analysis.probe_epochs = parse_count(k, v); }},
      {"analysis.probe_lr",
       [](RunConfig& c, auto k, auto v) { c.analysis.probe_lr = parse_real(k, v); }},
      {"output.dir", [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.train.seed = parse_u64(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (data_paths.empty()) throw ConfigError("config key 'data.paths' is required");
  if (model.hidden_dims.empty()) throw ConfigError("config key 'model.hidden_dims' is empty");
  for (auto h : model.hidden_dims) {
    if (h == 0) throw ConfigError("config key 'model.hidden_dims' has a zero width");
  }
  try {
    model.mixnorm.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config keys 'mixnorm.*': ") + e.what());
  }
  train.validate();
  if (analysis.pca_samples < 3) throw ConfigError("config key 'analysis.pca_samples' must be >= 3");
  if (!(train.threshold >= 0.0 && train.threshold <= 1.0)) {
    throw ConfigError("config key 'eval.threshold' must lie in [0, 1]");
  }
}

void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, trim(value));
}

void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_config_value(cfg, trim(body.substr(0, eq)), body.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  apply_config_text(cfg, in, path.string());
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  auto list = [](const auto& items, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ", ";
      s += fmt(items[i]);
    }
    return s;
  };
  out << "data.paths = "
      << list(cfg.data_paths, [](const std::filesystem::path& p) { return p.string(); }) << '\n'
      << "data.protected_attr = " << to_string(cfg.protected_attr) << '\n'
      << "data.dump_encoded = " << (cfg.dump_encoded ? "true" : "false") << '\n'
      << "model.hidden_dims = "
      << list(cfg.model.hidden_dims, [](std::size_t h) { return std::to_string(h); }) << '\n'
      << "model.use_groupmixnorm = " << (cfg.model.use_groupmixnorm ? "true" : "false") << '\n'
      << "mixnorm.alpha = " << real_str(cfg.model.mixnorm.alpha) << '\n'
      << "mixnorm.epsilon = " << real_str(cfg.model.mixnorm.epsilon) << '\n'
      << "train.epochs = " << cfg.train.epochs << '\n'
      << "train.batch_size = " << cfg.train.batch_size << '\n'
      << "train.lr = " << real_str(cfg.train.lr) << '\n'
      << "train.runs = " << cfg.train.runs << '\n'
      << "train.threads = " << cfg.train.threads << '\n'
      << "split.train = " << real_str(cfg.train.split.train) << '\n'
      << "split.val = " << real_str(cfg.train.split.val) << '\n'
      << "split.test = " << real_str(cfg.train.split.test) << '\n'
      << "eval.threshold = " << real_str(cfg.train.threshold) << '\n'
      << "eval.reference_group = " << cfg.train.reference_group << '\n'
      << "finetune.epochs = " << cfg.finetune.epochs << '\n'
      << "finetune.lr = " << real_str(cfg.finetune.lr) << '\n'
      << "analysis.pca_samples = " << cfg.analysis.pca_samples << '\n'
      << "analysis.kernel_gamma = " << real_str(cfg.analysis.kernel_gamma) << '\n'
      << "analysis.kernel_coef0 = " << real_str(cfg.analysis.kernel_coef0) << '\n'
      << "analysis.probe_epochs = " << cfg.analysis.probe_epochs << '\n'
      << "analysis.probe_lr = " << real_str(cfg.analysis.probe_lr) << '\n'
      << "output.dir = " << cfg.output_dir.string() << '\n'
      << "seed = " << cfg.train.seed << '\n';
  return out.str();
}

nlohmann::json to_json(const RunConfig& cfg) {
  std::istringstream in(to_config_text(cfg));
  nlohmann::json j = nlohmann::json::object();
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    j[std::string(trim(std::string_view(line).substr(0, eq)))] =
        std::string(trim(std::string_view(line).substr(eq + 1)));
  }
  return j;
}

}  // namespace gmn
