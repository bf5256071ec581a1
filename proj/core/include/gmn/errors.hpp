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

#ifndef GMN_ERRORS_HPP_
#define GMN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gmn {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's domain (empty batch, unknown label, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong state, e.g. backward without a forward.
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Dataset or checkpoint does not have the expected columns/layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A fairness or ranking metric is undefined for the given predictions.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Invalid or incomplete run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gmn

#endif  // GMN_ERRORS_HPP_
