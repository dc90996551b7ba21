/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GOLDFISH_ERROR_H_
#define GOLDFISH_ERROR_H_

#include <stdexcept>
#include <string>

namespace goldfish {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad NetworkSpec, out-of-range hyperparameter,
// unknown config key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched matrix / vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (T <= 0, empty
// sample, non-normalized distribution).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition (empty dataset, unknown id, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data: IDX, CSV, checkpoint.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Training failure inside a federated round; carries the failing client.
class ClientError : public Error {
 public:
  ClientError(int client_id, const std::string& what)
      : Error("client " + std::to_string(client_id) + ": " + what),
        client_id_(client_id) {}

  int client_id() const { return client_id_; }

 private:
  int client_id_;
};

}  // namespace goldfish

#endif  // GOLDFISH_ERROR_H_
