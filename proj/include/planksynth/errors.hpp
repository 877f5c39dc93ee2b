// Copyright 2026 The planksynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace planksynth {

/// Root of every exception thrown by the library. `kind()` is a stable,
/// machine-parsable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Invalid parameters or configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// A transform shrank the instance mask to nothing; callers re-draw.
class DegenerateTransform : public Error {
 public:
  explicit DegenerateTransform(const std::string& what)
      : Error("degenerate-transform", what) {}
};

class MalformedMask : public Error {
 public:
  explicit MalformedMask(const std::string& what) : Error("malformed-mask", what) {}
};

class BrokenTaxonomy : public Error {
 public:
  explicit BrokenTaxonomy(const std::string& what) : Error("broken-taxonomy", what) {}
};

/// Manifest, detection or plan file does not match its schema.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("schema", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

class MalformedPartition : public Error {
 public:
  explicit MalformedPartition(const std::string& what)
      : Error("malformed-partition", what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("shape-mismatch", what) {}
};

}  // namespace planksynth
