// Copyright 2026 The CHILD Teleop Authors
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

#ifndef CHILD_ERROR_H_
#define CHILD_ERROR_H_

#include <stdexcept>
#include <string>

namespace child {

// Root of every error raised by the library. The CLI maps any Error to a
// nonzero exit code and prints what() prefixed by module().
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)) {}

  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

// Config errors carry the dotted field path they refer to, e.g.
// "limbs[2].joints[0].max".
class ConfigError : public Error {
 public:
  ConfigError(const std::string& kind, std::string path,
              const std::string& message)
      : Error("config", kind + " at " + (path.empty() ? "<root>" : path) +
                            ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SyntaxError : public ConfigError {
 public:
  SyntaxError(int line, int column, const std::string& message)
      : ConfigError("SyntaxError",
                    "line " + std::to_string(line) + ", column " +
                        std::to_string(column),
                    message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SchemaError : public ConfigError {
 public:
  SchemaError(std::string path, const std::string& message)
      : ConfigError("SchemaError", std::move(path), message) {}
};

class InvariantError : public ConfigError {
 public:
  InvariantError(std::string path, const std::string& message)
      : ConfigError("InvariantError", std::move(path), message) {}
};

class MappingError : public Error {
 public:
  MappingError(std::string joint, const std::string& message)
      : Error("config", "MappingError(" + joint + "): " + message),
        joint_(std::move(joint)) {}

  const std::string& joint() const { return joint_; }

 private:
  std::string joint_;
};

class SchemaMismatch : public Error {
 public:
  SchemaMismatch(const std::string& module, const std::string& message)
      : Error(module, "SchemaMismatch: " + message) {}
};

class LimitViolation : public Error {
 public:
  LimitViolation(const std::string& module, const std::string& message)
      : Error(module, "LimitViolation: " + message) {}
};

}  // namespace child

#endif  // CHILD_ERROR_H_
