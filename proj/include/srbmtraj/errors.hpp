// Copyright 2026 The srbmtraj Authors
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

namespace srbmtraj {

/// Base class for all srbmtraj exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A state failed validation (e.g. non-unit quaternion).
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Model parameters failed validation (non-SPD inertia, non-positive mass).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A maneuver spec or layout request is malformed.
class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

/// A vector does not match the expected decision layout.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A target value is outside its sanity range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, int step) : Error(msg), step_index(step) {}
  int step_index;
};

/// A file could not be parsed; message carries line/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An API was called with inconsistent arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Geometry degenerated (e.g. zero-length leg vector).
class SingularGeometryError : public Error {
 public:
  using Error::Error;
};

/// A reward input was non-finite; message names the field.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace srbmtraj
