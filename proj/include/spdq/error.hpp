// Copyright 2026-present the spdq project
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
#include <utility>

namespace spdq {

/// Base error type. `category()` is a stable machine-readable token that the
/// CLI maps to exit codes and prints on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

/// Shape mismatch between operands.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& m) : Error("dimension_mismatch", m) {}
};

/// Non-convergence, non-finite values, singular systems.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& m) : Error("numerical_failure", m) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& m) : Error("io_error", m) {}
};

class MissingFileError : public Error {
public:
    explicit MissingFileError(const std::string& m) : Error("missing_file", m) {}
};

/// Malformed configs, manifests, or file schemas.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& m) : Error("schema_violation", m) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& m) : Error("invalid_argument", m) {}
};

}  // namespace spdq
