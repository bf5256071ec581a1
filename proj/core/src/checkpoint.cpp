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

#include <fstream>
#include <istream>
#include <ostream>

#include "gmn/errors.hpp"

namespace gmn {

namespace {

constexpr const char* kFormat = "groupmixnorm-checkpoint";

nlohmann::json model_json(const ModelConfig& m) {
  return {{"hidden_dims", m.hidden_dims},
          {"use_groupmixnorm", m.use_groupmixnorm},
          {"alpha", m.mixnorm.alpha},
          {"epsilon", m.mixnorm.epsilon}};
}

nlohmann::json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"runs", t.runs},
          {"seed", t.seed},
          {"split", {t.split.train, t.split.val, t.split.test}},
          {"threshold", t.threshold},
          {"reference_group", t.reference_group}};
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainedModel& model,
                      const nlohmann::json& run_config) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& spec : model.stack.specs()) {
    nlohmann::json l = {{"kind", std::string(to_string(spec.kind))},
                        {"in_dim", spec.in_dim},
                        {"out_dim", spec.out_dim}};
    if (spec.kind == LayerKind::kGroupMixNorm) {
      l["alpha"] = spec.mixnorm.alpha;
      l["epsilon"] = spec.mixnorm.epsilon;
    }
    layers.push_back(std::move(l));
  }
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : model.stack.params()) {
    params[p.name] = {{"shape", {p.value.rows(), p.value.cols()}},
                      {"data", std::vector<double>(p.value.values().begin(),
                                                   p.value.values().end())}};
  }
  nlohmann::json doc = {{"format", kFormat},
                        {"version", kCheckpointVersion},
                        {"layers", std::move(layers)},
                        {"params", std::move(params)},
                        {"model", model_json(model.model)},
                        {"train", train_json(model.train)},
                        {"encoder", model.encoder.to_json()},
                        {"run", model.run},
                        {"best_epoch", model.best_epoch},
                        {"run_config", run_config}};
  out << doc.dump(1) << '\n';
}

void write_checkpoint(const std::filesystem::path& path, const TrainedModel& model,
                      const nlohmann::json& run_config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_checkpoint(out, model, run_config);
}

LoadedCheckpoint read_checkpoint(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != kFormat) throw SchemaError("not a groupmixnorm checkpoint");
    if (doc.at("version") != kCheckpointVersion) {
      throw SchemaError("unsupported checkpoint version " + doc.at("version").dump());
    }
    std::vector<LayerSpec> specs;
    for (const auto& l : doc.at("layers")) {
      LayerSpec spec;
      spec.kind = layer_kind_from_string(l.at("kind").get<std::string>());
      spec.in_dim = l.at("in_dim").get<std::size_t>();
      spec.out_dim = l.at("out_dim").get<std::size_t>();
      if (spec.kind == LayerKind::kGroupMixNorm) {
        spec.mixnorm.alpha = l.at("alpha").get<double>();
        spec.mixnorm.epsilon = l.at("epsilon").get<double>();
      }
      specs.push_back(spec);
    }

    LoadedCheckpoint loaded;
    auto& m = loaded.model;
    m.stack = LayerStack(std::move(specs));
    const auto& params = doc.at("params");
    if (params.size() != m.stack.params().size()) {
      throw SchemaError("checkpoint parameter count does not match its layers");
    }
    for (auto& p : m.stack.params()) {
      const auto& entry = params.at(p.name);
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols()) {
        throw SchemaError("parameter " + p.name + " has the wrong shape");
      }
      p.value = Matrix(shape[0], shape[1], entry.at("data").get<std::vector<double>>());
    }

    const auto& mj = doc.at("model");
    m.model.hidden_dims = mj.at("hidden_dims").get<std::vector<std::size_t>>();
    m.model.use_groupmixnorm = mj.at("use_groupmixnorm").get<bool>();
    m.model.mixnorm.alpha = mj.at("alpha").get<double>();
    m.model.mixnorm.epsilon = mj.at("epsilon").get<double>();

    const auto& tj = doc.at("train");
    m.train.epochs = tj.at("epochs").get<std::size_t>();
    m.train.batch_size = tj.at("batch_size").get<std::size_t>();
    m.train.lr = tj.at("lr").get<double>();
    m.train.runs = tj.at("runs").get<std::size_t>();
    m.train.seed = tj.at("seed").get<std::uint64_t>();
    const auto split = tj.at("split").get<std::vector<double>>();
    if (split.size() != 3) throw SchemaError("split must have three fractions");
    m.train.split = {split[0], split[1], split[2], 0};
    m.train.threshold = tj.at("threshold").get<double>();
    m.train.reference_group = tj.at("reference_group").get<int>();

    m.encoder = Encoder::from_json(doc.at("encoder"));
    if (m.encoder.feature_dim() != m.stack.input_dim()) {
      throw SchemaError("encoder width does not match the model input");
    }
    m.run = doc.at("run").get<std::size_t>();
    m.best_epoch = doc.at("best_epoch").get<std::size_t>();
    loaded.run_config = doc.at("run_config");
    return loaded;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("inconsistent checkpoint: ") + e.what());
  } catch (const ParseError& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace gmn
