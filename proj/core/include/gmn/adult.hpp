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

#ifndef GMN_ADULT_HPP_
#define GMN_ADULT_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmn/matrix.hpp"

namespace gmn {

// Column order of the header-less UCI Adult files.
inline constexpr std::array<std::string_view, 15> kAdultColumns = {
    "age",          "workclass",    "fnlwgt",         "education",
    "education-num", "marital-status", "occupation",  "relationship",
    "race",         "sex",          "capital-gain",   "capital-loss",
    "hours-per-week", "native-country", "income"};

// Parsed string fields. Rows containing a missing value ('?') are dropped
// during parsing and only counted.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::size_t records_read = 0;
  std::size_t dropped_missing = 0;

  std::size_t column_index(std::string_view name) const;  // SchemaError if absent
};

// Parses one Adult file. Blank lines and lines starting with '|' (the test
// file's banner) are skipped; fields are trimmed; a trailing '.' on the label
// is removed. A row with the wrong number of fields is a ParseError naming
// its line.
RawTable parse_adult(std::istream& in, const std::string& source_name);
RawTable parse_adult(const std::filesystem::path& path);
// Concatenation of several Adult files, e.g. adult.data + adult.test.
RawTable parse_adult(std::span<const std::filesystem::path> paths);

enum class ProtectedAttribute { kGender, kRace };

std::string_view to_string(ProtectedAttribute attr);
// Throws ConfigError for anything but "gender" / "race".
ProtectedAttribute protected_attribute_from_string(std::string_view name);

// Group names indexed by group id: gender -> {Male, Female};
// race -> {White, Black, Others}.
std::vector<std::string> group_names(ProtectedAttribute attr);

struct ColumnEncoding {
  std::string name;
  bool continuous = false;
  double mean = 0.0;
  double scale = 1.0;
  std::vector<std::string> vocabulary;  // sorted; categorical only
};

// Fitted preprocessing: z-scores for continuous columns, one-hot encoding
// for categorical columns (unseen categories encode as all zeros). The
// protected column is left out of the features.
class Encoder {
 public:
  Encoder() = default;

  static Encoder fit(const RawTable& raw, ProtectedAttribute attr,
                     std::span<const std::size_t> fit_rows);

  Matrix transform(const RawTable& raw, std::span<const std::size_t> rows) const;
  // Reverses the z-score of continuous feature columns (one-hot columns are
  // copied through).
  Matrix inverse_continuous(const Matrix& x) const;

  int group_of(const std::vector<std::string>& row) const;
  int label_of(const std::vector<std::string>& row) const;

  ProtectedAttribute attribute() const { return attr_; }
  std::size_t feature_dim() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<ColumnEncoding>& columns() const { return columns_; }

  nlohmann::json to_json() const;
  static Encoder from_json(const nlohmann::json& j);

  friend bool operator==(const Encoder& a, const Encoder& b);

 private:
  void build_layout();

  ProtectedAttribute attr_ = ProtectedAttribute::kGender;
  std::vector<ColumnEncoding> columns_;
  std::vector<std::string> feature_names_;
  std::vector<std::size_t> raw_index_;  // raw column of each ColumnEncoding
  std::size_t protected_index_ = 0;
  std::size_t label_index_ = 0;
};

// Model-ready rows of a RawTable. `rows` are indices into `source`.
struct Dataset {
  Matrix x;
  std::vector<int> y;
  std::vector<int> s;
  ProtectedAttribute attribute = ProtectedAttribute::kGender;
  std::vector<std::string> group_names;
  Encoder encoder;
  std::shared_ptr<const RawTable> source;
  std::vector<std::size_t> rows;

  std::size_t size() const { return y.size(); }
  std::size_t group_count() const { return group_names.size(); }
};

// Encodes every row of `raw` with an encoder fitted on `fit_on`.
Dataset encode(std::shared_ptr<const RawTable> raw, ProtectedAttribute attr,
               std::span<const std::size_t> fit_on);

// Encodes `rows` of the source table with an existing encoder.
Dataset encode_rows(std::shared_ptr<const RawTable> raw, const Encoder& encoder,
                    std::vector<std::size_t> rows);

// Row subset by position within `ds`.
Dataset subset(const Dataset& ds, std::span<const std::size_t> positions);

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitPositions {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Uniform random partition of 0..n-1. Train gets floor(train * n) rows,
// val floor(val * n), test the remainder.
SplitPositions split_positions(std::size_t n, const SplitSpec& spec);

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Random partition of `ds`; the encoder is refitted on the train part and
// applied to all three. Requires at least 10 rows.
DatasetSplit split(const Dataset& ds, const SplitSpec& spec);

// Re-encodes every split with an encoder fitted on `split.train`.
DatasetSplit refit(const DatasetSplit& split);

// Rows whose group is in `keep`. Group ids are preserved.
Dataset filter_groups(const Dataset& ds, std::span<const int> keep);

// Audit dump: header of feature names followed by y and s columns.
void write_dataset_csv(const Dataset& ds, std::ostream& out);

}  // namespace gmn

#endif  // GMN_ADULT_HPP_
