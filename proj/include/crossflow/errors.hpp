// Copyright 2026 The Crossflow Authors
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

namespace crossflow {

class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what)
      : std::invalid_argument(what) {}
};

// Malformed scenario or trajectory text. `where` is a human-readable
// location such as "line 3, column 7".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// Missing, unknown or mistyped field; `path` is a JSON-pointer-like path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Well-formed input that violates a physical or geometric invariant.
class SemanticError : public std::runtime_error {
 public:
  SemanticError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// The bicycle model divides by V; raised when V <= 0.
class SingularityError : public std::domain_error {
 public:
  SingularityError(const std::string& what, long step = -1)
      : std::domain_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iterations = 0)
      : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

class NotArrivedError : public std::runtime_error {
 public:
  explicit NotArrivedError(const std::string& vehicle_id)
      : std::runtime_error("vehicle '" + vehicle_id +
                           "' never settles within the arrival tolerance"),
        vehicle_id_(vehicle_id) {}
  const std::string& vehicle_id() const { return vehicle_id_; }

 private:
  std::string vehicle_id_;
};

}  // namespace crossflow
