// Copyright 2026 The Epicontrol Authors
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

#ifndef EPICONTROL_ERRORS_HPP
#define EPICONTROL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epicontrol {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidAction : Error {
  using Error::Error;
};

/// Vaccination data does not cover a simulated day.
struct MalformedStream : Error {
  using Error::Error;
};

/// Every particle of a filter assigned the floor likelihood to an observation.
struct DegeneracyError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IngestError : Error {
  enum class Kind { kMissingFile, kParse, kDateMisalignment };

  IngestError(Kind kind, const std::string& what) : Error{what}, kind{kind} {}

  Kind kind;
};

struct NotFound : Error {
  using Error::Error;
};

struct WrongStatus : Error {
  using Error::Error;
};

}  // namespace epicontrol

#endif
