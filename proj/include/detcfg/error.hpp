/*
 * Copyright 2026 The detcfg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detcfg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-side problem: bad file, bad argument, violated precondition.
/// The CLI maps these to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed text. `location` is a byte offset (JSON) or a 1-based row
/// number (CSV), as named by `unit`.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t location, const char* unit)
      : InputError(what + " (" + unit + " " + std::to_string(location) + ")"),
        location_(location) {}

  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

/// Well-formed text whose content violates a data-model invariant.
class StructuralError : public InputError {
 public:
  using InputError::InputError;
};

/// Precondition on an algorithm argument failed (k too large, empty input, ...).
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

/// An internal postcondition did not hold. Exit code 2 in the CLI.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace detcfg
