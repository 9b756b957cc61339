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

/**
 * @file
 * Seeded Monte Carlo of state preparation errors, background loss, Rydberg
 * leakage and pushout / no-pushout fluorescence readout.
 */

#pragma once

#include <cstdint>
#include <optional>

#include "gateforge/circuits.hpp"
#include "gateforge/metrology.hpp"
#include "gateforge/random.hpp"

namespace gateforge {

struct NoiseConfig {
  double pumping_error = 0.007;
  double loss_before = 0.0025;
  double loss_after = 0.0025;
  std::uint64_t seed = 0;

  static NoiseConfig none(std::uint64_t seed = 0) { return {0, 0, 0, seed}; }
  void validate() const;
  SpamModel spam_model(int n_atoms) const {
    return {pumping_error, loss_before + loss_after, n_atoms};
  }
};

/// Samples readout patterns from a final state: |0> present, |1> absent
/// with pushout and present without, |r> always absent; then each atom is
/// lost independently with loss_before + loss_after.
OutcomeCounts sample_shots(const AtomState& final_state, const NoiseConfig& noise,
                           std::size_t n_shots, bool pushout);

/// Runs `circuit` from |0..0> (or `initial`) with per-shot, per-atom
/// preparation errors and loss, and fills both tables from independent shots.
/// A wrongly pumped atom sits out every qubit rotation and reads present;
/// an atom lost before the circuit also sits out and reads absent.
ShotTables run_experiment(const Circuit& circuit, const GateContext& ctx,
                          const NoiseConfig& noise, std::size_t n_shots,
                          const std::optional<AtomState>& initial = std::nullopt);

}  // namespace gateforge
