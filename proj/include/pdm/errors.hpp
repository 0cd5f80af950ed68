// Copyright 2026 The PDM Planner Authors
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

namespace pdm {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario/config/checkpoint text.
class ParseError : public Error {
public:
  using Error::Error;
};

/// A domain invariant does not hold; the message names the rule.
class InvariantError : public Error {
public:
  using Error::Error;
};

class RouteError : public Error {
public:
  using Error::Error;
};

/// Geometric query outside the supported domain (off-path pose, degenerate offset, ...).
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Gap to the leading entity is not positive.
class OverlapError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace pdm
