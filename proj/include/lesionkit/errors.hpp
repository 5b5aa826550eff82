// Copyright 2026 lesionkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>

namespace lk {

// Caller-supplied data is invalid: malformed files, bad records,
// out-of-range parameters. Maps to CLI exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation was invoked on a state that cannot support it
// (e.g. selecting by lesion score before scores were attached).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerically undefined result (e.g. correlation of a constant series).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lk
