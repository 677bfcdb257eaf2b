// Copyright 2026 The weakqubit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace weakqubit {

/// Invalid or inconsistent input parameters. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures that happen while computing. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// The integrated state left the physical region and could not be repaired.
class StateEscapeError : public NumericalError {
   public:
    StateEscapeError(const std::string &what, std::size_t step_index)
        : NumericalError(what + " at step " + std::to_string(step_index)), step_(step_index) {}
    std::size_t step_index() const { return step_; }

   private:
    std::size_t step_;
};

class RecordTooShortError : public NumericalError {
   public:
    using NumericalError::NumericalError;
};

class MissingTruthError : public NumericalError {
   public:
    using NumericalError::NumericalError;
};

/// An analytic formula was asked for parameters where it does not apply
/// (overdamped regime, Omega <= Gamma/2).
class OutsideValidityError : public NumericalError {
   public:
    using NumericalError::NumericalError;
};

}  // namespace weakqubit
