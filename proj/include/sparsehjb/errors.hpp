/*
 Copyright 2026 The sparsehjb Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace sparsehjb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions, invalid parameters, malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A query outside the domain an object is defined on (grid bounds, box, time window).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Requested feature outside the supported envelope (e.g. brute force with m > 3).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// The stability bound demands more time steps than the configured cap.
class InfeasibleResolutionError : public Error {
 public:
  using Error::Error;
};

/// A non-finite number appeared in a solve or a simulated path.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparsehjb
