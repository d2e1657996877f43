// Copyright 2026 The DynEval Authors.
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

namespace dyneval {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (manifest, config, lexicon, request body).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Unreadable or undecodable file, failed atomic write.
class IoError : public Error {
 public:
  using Error::Error;
};

// A perception backend (local, external process or HTTP service) failed.
class BackendError : public Error {
 public:
  using Error::Error;
};

// A transient failure that the caller may retry (LLM timeouts, refusals).
class RetriableError : public Error {
 public:
  using Error::Error;
};

// A replay backend was asked for an output that was never recorded.
class NotRecorded : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace dyneval
