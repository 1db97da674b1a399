// Copyright 2026 The Curatelab Authors.
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

#ifndef CURATELAB_ERRORS_HPP_
#define CURATELAB_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace curatelab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// A reward function was asked for a value on a point outside its domain.
class DomainMismatchError : public Error {
 public:
  using Error::Error;
};

// Exact K-tuple enumeration would exceed the configured tuple cap.
class EnumerationTooLargeError : public Error {
 public:
  using Error::Error;
};

// The MLE produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class SingularHessianError : public Error {
 public:
  using Error::Error;
};

// A discrete flip was requested on a pair whose label cannot be flipped.
class InvalidFlipError : public Error {
 public:
  using Error::Error;
};

class EmptyEligibleError : public Error {
 public:
  using Error::Error;
};

// A retraining iteration failed; wraps the underlying error's message.
class StepError : public Error {
 public:
  StepError(size_t iteration, const std::string& message)
      : Error("iteration " + std::to_string(iteration) + ": " + message), iteration_(iteration) {}
  size_t iteration() const { return iteration_; }

 private:
  size_t iteration_;
};

// Experiment-spec validation failure; `key()` names the offending key.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace curatelab

#endif  // CURATELAB_ERRORS_HPP_
