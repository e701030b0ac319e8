/*
   Copyright 2026 The samplab authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <stdexcept>
#include <string>

namespace samplab {

/**
 * Invalid configuration or argument: malformed JSON, out-of-range parameter,
 * dimension mismatch, non-finite input.  Maps to exit code 3 at the tool
 * boundary.
 */
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * A numerical routine failed to meet its accuracy contract (quadrature
 * tolerance not reached, eigenvalue drift beyond the PSD clamp window,
 * overflow in a closed-form evaluation).  Maps to exit code 4 at the tool
 * boundary.
 */
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace samplab
