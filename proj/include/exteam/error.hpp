// Copyright 2026 The exteam Authors
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

#ifndef EXTEAM_ERROR_HPP_
#define EXTEAM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace exteam {

// Base class for every error raised by the library. Precondition violations
// on arguments (bad permutations, length mismatches) use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent problem/policy documents and model data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An exact enumeration or grid would exceed its work budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// A solver met a NaN or infinite objective value.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace exteam

#endif  // EXTEAM_ERROR_HPP_
