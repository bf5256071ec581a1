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

#include "gmn/adult.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "gmn/errors.hpp"
#include "gmn/rng.hpp"

namespace gmn {

namespace {

constexpr std::array<std::string_view, 6> kContinuous = {
    "age", "fnlwgt", "education-num", "capital-gain", "capital-loss", "hours-per-week"};
constexpr std::string_view kLabelColumn = "income";
constexpr double kScaleFloor = 1e-8;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_continuous(std::string_view name) {
  return std::find(kContinuous.begin(), kContinuous.end(), name) != kContinuous.end();
}

std::string_view protected_column(ProtectedAttribute attr) {
  return attr == ProtectedAttribute::kGender ? "sex" : "race";
}

double parse_number(const std::string& field, std::string_view column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("column '" + std::string(column) + "': '" + field +
                      "' is not numeric");
  }
}

}  // namespace

std::size_t RawTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw SchemaError("column '" + std::string(name) + "' not present");
}

RawTable parse_adult(std::istream& in, const std::string& source_name) {
  RawTable table;
  table.columns.assign(kAdultColumns.begin(), kAdultColumns.end());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '|') continue;

    fields.clear();
    std::size_t start = 0;
    for (;;) {
      const auto comma = body.find(',', start);
      fields.emplace_back(trim(body.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != kAdultColumns.size()) {
      throw ParseError(source_name, line_no,
                       "expected " + std::to_string(kAdultColumns.size()) +
                           " fields, found " + std::to_string(fields.size()));
    }
    ++table.records_read;
    if (std::any_of(fields.begin(), fields.end(),
                    [](const std::string& f) { return f == "?" || f.empty(); })) {
      ++table.dropped_missing;
      continue;
    }
    auto& label = fields.back();
    if (!label.empty() && label.back() == '.') label.pop_back();
    table.rows.push_back(fields);
  }
  return table;
}

RawTable parse_adult(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_adult(in, path.string());
}

RawTable parse_adult(std::span<const std::filesystem::path> paths) {
  RawTable all;
  all.columns.assign(kAdultColumns.begin(), kAdultColumns.end());
  for (const auto& p : paths) {
    auto part = parse_adult(p);
    all.records_read += part.records_read;
    all.dropped_missing += part.dropped_missing;
    std::move(part.rows.begin(), part.rows.end(), std::back_inserter(all.rows));
  }
  return all;
}

std::string_view to_string(ProtectedAttribute attr) {
  return attr == ProtectedAttribute::kGender ? "gender" : "race";
}

ProtectedAttribute protected_attribute_from_string(std::string_view name) {
  if (name == "gender") return ProtectedAttribute::kGender;
  if (name == "race") return ProtectedAttribute::kRace;
  throw ConfigError("protected attribute must be 'gender' or 'race', got '" +
                    std::string(name) + "'");
}

std::vector<std::string> group_names(ProtectedAttribute attr) {
  if (attr == ProtectedAttribute::kGender) return {"Male", "Female"};
  return {"White", "Black", "Others"};
}

Encoder Encoder::fit(const RawTable& raw, ProtectedAttribute attr,
                     std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw DomainError("Encoder::fit: no rows to fit on");
  Encoder enc;
  enc.attr_ = attr;
  enc.protected_index_ = raw.column_index(protected_column(attr));
  enc.label_index_ = raw.column_index(kLabelColumn);

  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    if (c == enc.protected_index_ || c == enc.label_index_) continue;
    ColumnEncoding col;
    col.name = raw.columns[c];
    col.continuous = is_continuous(col.name);
    if (col.continuous) {
      double sum = 0.0;
      for (auto r : fit_rows) sum += parse_number(raw.rows.at(r)[c], col.name);
      col.mean = sum / static_cast<double>(fit_rows.size());
      double ss = 0.0;
      for (auto r : fit_rows) {
        const double d = parse_number(raw.rows[r][c], col.name) - col.mean;
        ss += d * d;
      }
      col.scale = std::max(std::sqrt(ss / static_cast<double>(fit_rows.size())),
                           kScaleFloor);
    } else {
      std::set<std::string> vocab;
      for (auto r : fit_rows) vocab.insert(raw.rows.at(r)[c]);
      col.vocabulary.assign(vocab.begin(), vocab.end());
    }
    enc.columns_.push_back(std::move(col));
    enc.raw_index_.push_back(c);
  }
  enc.build_layout();
  return enc;
}

void Encoder::build_layout() {
  feature_names_.clear();
  for (const auto& col : columns_) {
    if (col.continuous) {
      feature_names_.push_back(col.name);
    } else {
      for (const auto& v : col.vocabulary) feature_names_.push_back(col.name + "=" + v);
    }
  }
}

Matrix Encoder::transform(const RawTable& raw, std::span<const std::size_t> rows) const {
  Matrix x(rows.size(), feature_dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& fields = raw.rows.at(rows[i]);
    auto out = x.row(i);
    std::size_t offset = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& col = columns_[c];
      const auto& value = fields.at(raw_index_[c]);
      if (col.continuous) {
        out[offset++] = (parse_number(value, col.name) - col.mean) / col.scale;
      } else {
        auto it = std::lower_bound(col.vocabulary.begin(), col.vocabulary.end(), value);
        if (it != col.vocabulary.end() && *it == value) {
          out[offset + static_cast<std::size_t>(it - col.vocabulary.begin())] = 1.0;
        }
        offset += col.vocabulary.size();
      }
    }
  }
  return x;
}

Matrix Encoder::inverse_continuous(const Matrix& x) const {
  if (x.cols() != feature_dim()) throw ShapeError("inverse_continuous: width");
  Matrix out = x;
  std::size_t offset = 0;
  for (const auto& col : columns_) {
    if (col.continuous) {
      for (std::size_t r = 0; r < x.rows(); ++r) {
        out(r, offset) = x(r, offset) * col.scale + col.mean;
      }
      ++offset;
    } else {
      offset += col.vocabulary.size();
    }
  }
  return out;
}

int Encoder::group_of(const std::vector<std::string>& row) const {
  const auto& v = row.at(protected_index_);
  if (attr_ == ProtectedAttribute::kGender) {
    if (v == "Male") return 0;
    if (v == "Female") return 1;
    throw SchemaError("unknown sex value '" + v + "'");
  }
  if (v == "White") return 0;
  if (v == "Black") return 1;
  return 2;
}

int Encoder::label_of(const std::vector<std::string>& row) const {
  const auto& v = row.at(label_index_);
  if (v == ">50K") return 1;
  if (v == "<=50K") return 0;
  throw SchemaError("unknown income label '" + v + "'");
}

nlohmann::json Encoder::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& col = columns_[c];
    nlohmann::json j = {{"name", col.name},
                        {"raw_index", raw_index_[c]},
                        {"continuous", col.continuous}};
    if (col.continuous) {
      j["mean"] = col.mean;
      j["scale"] = col.scale;
    } else {
      j["vocabulary"] = col.vocabulary;
    }
    cols.push_back(std::move(j));
  }
  return {{"attribute", std::string(to_string(attr_))},
          {"protected_index", protected_index_},
          {"label_index", label_index_},
          {"columns", std::move(cols)}};
}

Encoder Encoder::from_json(const nlohmann::json& j) {
  try {
    Encoder enc;
    enc.attr_ = protected_attribute_from_string(j.at("attribute").get<std::string>());
    enc.protected_index_ = j.at("protected_index").get<std::size_t>();
    enc.label_index_ = j.at("label_index").get<std::size_t>();
    for (const auto& c : j.at("columns")) {
      ColumnEncoding col;
      col.name = c.at("name").get<std::string>();
      col.continuous = c.at("continuous").get<bool>();
      if (col.continuous) {
        col.mean = c.at("mean").get<double>();
        col.scale = c.at("scale").get<double>();
      } else {
        col.vocabulary = c.at("vocabulary").get<std::vector<std::string>>();
      }
      enc.raw_index_.push_back(c.at("raw_index").get<std::size_t>());
      enc.columns_.push_back(std::move(col));
    }
    enc.build_layout();
    return enc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("encoder: ") + e.what());
  }
}

bool operator==(const Encoder& a, const Encoder& b) {
  if (a.attr_ != b.attr_ || a.raw_index_ != b.raw_index_ ||
      a.columns_.size() != b.columns_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.columns_.size(); ++i) {
    const auto& x = a.columns_[i];
    const auto& y = b.columns_[i];
    if (x.name != y.name || x.continuous != y.continuous || x.mean != y.mean ||
        x.scale != y.scale || x.vocabulary != y.vocabulary) {
      return false;
    }
  }
  return true;
}

Dataset encode_rows(std::shared_ptr<const RawTable> raw, const Encoder& encoder,
                    std::vector<std::size_t> rows) {
  Dataset ds;
  ds.x = encoder.transform(*raw, rows);
  ds.y.reserve(rows.size());
  ds.s.reserve(rows.size());
  for (auto r : rows) {
    ds.y.push_back(encoder.label_of(raw->rows[r]));
    ds.s.push_back(encoder.group_of(raw->rows[r]));
  }
  ds.attribute = encoder.attribute();
  ds.group_names = group_names(encoder.attribute());
  ds.encoder = encoder;
  ds.source = std::move(raw);
  ds.rows = std::move(rows);
  return ds;
}

Dataset encode(std::shared_ptr<const RawTable> raw, ProtectedAttribute attr,
               std::span<const std::size_t> fit_on) {
  if (!raw) throw DomainError("encode: no table");
  auto encoder = Encoder::fit(*raw, attr, fit_on);
  std::vector<std::size_t> all(raw->rows.size());
  std::iota(all.begin(), all.end(), 0);
  return encode_rows(std::move(raw), encoder, std::move(all));
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> positions) {
  Dataset out;
  out.x = select_rows(ds.x, positions);
  out.y.reserve(positions.size());
  out.s.reserve(positions.size());
  out.rows.reserve(positions.size());
  for (auto p : positions) {
    out.y.push_back(ds.y.at(p));
    out.s.push_back(ds.s.at(p));
    if (!ds.rows.empty()) out.rows.push_back(ds.rows.at(p));
  }
  out.attribute = ds.attribute;
  out.group_names = ds.group_names;
  out.encoder = ds.encoder;
  out.source = ds.source;
  return out;
}

void SplitSpec::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw ConfigError("split fractions must all be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

SplitPositions split_positions(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n) + 1e-9));
  SplitPositions out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test.assign(perm.begin() + n_train + n_val, perm.end());
  return out;
}

namespace {

std::vector<std::size_t> source_rows(const Dataset& ds,
                                     std::span<const std::size_t> positions) {
  std::vector<std::size_t> rows;
  rows.reserve(positions.size());
  for (auto p : positions) rows.push_back(ds.rows.at(p));
  return rows;
}

}  // namespace

DatasetSplit split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.size() < 10) throw DomainError("split: need at least 10 rows");
  if (!ds.source) throw DomainError("split: dataset has no source table");
  const auto pos = split_positions(ds.size(), spec);
  auto train_rows = source_rows(ds, pos.train);
  const auto encoder = Encoder::fit(*ds.source, ds.attribute, train_rows);
  return {encode_rows(ds.source, encoder, std::move(train_rows)),
          encode_rows(ds.source, encoder, source_rows(ds, pos.val)),
          encode_rows(ds.source, encoder, source_rows(ds, pos.test))};
}

DatasetSplit refit(const DatasetSplit& s) {
  const auto encoder = Encoder::fit(*s.train.source, s.train.attribute, s.train.rows);
  return {encode_rows(s.train.source, encoder, s.train.rows),
          encode_rows(s.val.source, encoder, s.val.rows),
          encode_rows(s.test.source, encoder, s.test.rows)};
}

Dataset filter_groups(const Dataset& ds, std::span<const int> keep) {
  if (keep.empty()) throw DomainError("filter_groups: empty keep set");
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), ds.s[i]) != keep.end()) positions.push_back(i);
  }
  if (positions.empty()) throw DomainError("filter_groups: no rows left");
  return subset(ds, positions);
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
  const auto& names = ds.encoder.feature_names();
  for (const auto& n : names) out << n << ',';
  out << "y,s\n";
  out.precision(17);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.x.row(r)) out << v << ',';
    out << ds.y[r] << ',' << ds.s[r] << '\n';
  }
}

}  // namespace gmn
