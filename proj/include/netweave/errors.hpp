// Copyright 2026 The Netweave Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace netweave {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grammar document is not even well-formed key/value structure.
struct SchemaError : Error {
  using Error::Error;
};

// Document parsed but violates a grammar invariant. Carries the field name.
struct ValidationError : Error {
  std::string field;
  ValidationError(const std::string& field_name, const std::string& what)
      : Error(what), field(field_name) {}
};

struct UnknownHandlerError : Error {
  using Error::Error;
};

// default-lower-layers links loop instead of terminating at frame level.
struct CycleError : Error {
  using Error::Error;
};

struct UnresolvedProtocolError : Error {
  using Error::Error;
};

struct EmptyInputError : Error {
  using Error::Error;
};

// Peer message arrived that the connection state machine cannot accept.
struct StateError : Error {
  using Error::Error;
};

// Fuzz input ran dry between packets; the execution is over.
struct FuzzExhausted : Error {
  using Error::Error;
};

struct InsufficientCandidatesError : Error {
  using Error::Error;
};

struct TargetExecutionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct MismatchedProfileError : Error {
  using Error::Error;
};

}  // namespace netweave
