// Copyright 2026 The GateForge Authors
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

namespace gateforge {

/// Bad shapes, out-of-range parameters, malformed input files.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric solver (root finder, calibration scan, optimizer) could not
/// produce an answer.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The two-pulse geometry is singular: the first pulse ends on the pole of
/// the phase-jump formula, so no laser phase closes the trajectory.
class DegenerateGeometry : public SolverFailure {
 public:
  using SolverFailure::SolverFailure;
};

/// A pulse sequence did not behave as the protocol requires (state did not
/// return, leakage too large).
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationFailure : public SolverFailure {
 public:
  using SolverFailure::SolverFailure;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gateforge
