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
 * Two-pulse global CZ gate: closed forms, the root solve for the detuning
 * ratio, the finite-blockade re-solve, and simulated calibration scans.
 *
 * Dimensionless shorthand: y = Delta / Omega, s = Omega tau.
 */

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "gateforge/dynamics.hpp"

namespace gateforge {

struct CzParameters {
  double detuning_ratio = 0;         ///< y
  double phase_jump = 0;             ///< xi in [0, 2 pi)
  double pulse_area = 0;             ///< s, per pulse
  double single_particle_phase = 0;  ///< phase of |01> after both pulses
  double doubly_occupied_phase = 0;  ///< phase of |11> after both pulses
  /// V / Omega the parameters were solved for (infinite: perfect blockade).
  double interaction_ratio = std::numeric_limits<double>::infinity();

  double total_area() const { return 2 * pulse_area; }

  /// The two constant pulses at Rabi frequency `rabi` (rad/s).
  std::array<DrivePulse, 2> pulses(double rabi) const;
};

/// U|1> = cos(alpha)|1> + sin(beta) e^{i gamma}|r> for the first pulse;
/// gamma is measured relative to the phase of the |1> amplitude.
struct PulseDecomposition {
  double return_amplitude = 0;
  double excited_amplitude = 0;
  double excited_phase = 0;
};

/// 2 pi / sqrt(Delta^2 + 2 Omega^2). Throws InvalidArgument for rabi <= 0.
double tau_for_full_oscillation(double rabi, double detuning);

/// Phase of |11> after both pulses at perfect blockade, reduced to (-pi, pi].
/// Each pulse is one full detuned cycle of the {|11>, |W>} system and picks
/// up pi + Delta tau / 2, so the pair gives Delta tau = 2 pi y / sqrt(y^2+2).
double doubly_occupied_phase(double detuning_ratio);

/// Laser phase jump that closes the single-atom trajectory, in [0, 2 pi).
/// Throws DegenerateGeometry on the pole of the closed form.
double phase_jump_xi(double detuning_ratio, double pulse_area);

/// First-pulse action on a single atom in |1>.
PulseDecomposition decompose_first_pulse(double detuning_ratio,
                                         double pulse_area);

/// arg <1|U2 U1|1> for one atom. Throws ProtocolViolation if the atom does
/// not return (probability below 1 - 1e-6).
double single_particle_phase(double detuning_ratio, double pulse_area,
                             double phase_jump);

/// Root-solves the CZ condition at perfect blockade.
CzParameters solve_cz_parameters();

/// Re-solves the CZ condition with the three-level doubly-excited sector
/// {|11>, |W>, |rr>} for a finite interaction. Rates in rad/s.
CzParameters finite_blockade_adjust(double rabi, double interaction);

/// sqrt((2 pi / s)^2 - 2): the detuning ratio whose perfect-blockade cycle
/// has area s. For adjusted parameters this exceeds y by about Omega^2/(2V).
double effective_detuning_ratio(const CzParameters& params);

/// Phase of |11> after both pulses in the three-level sector.
std::complex<double> doubly_occupied_amplitude(double detuning_ratio,
                                               double pulse_area,
                                               double phase_jump,
                                               double interaction_ratio);

// ---------------------------------------------------------------------------
// Calibration scans
// ---------------------------------------------------------------------------

struct ScanRange {
  double lo = 0;
  double hi = 0;
  int points = 201;
  /// 0: exact probabilities. Otherwise each grid point is estimated from
  /// this many simulated no-pushout shots.
  std::size_t shots = 0;
  std::uint64_t seed = 0;
};

struct ScanResult {
  std::vector<double> values;
  std::vector<double> return_probability;
  double optimum = 0;
  double optimum_probability = 0;
};

/// Detuned oscillation of |11>; returns the time of best return in range.
ScanResult calibrate_tau_scan(double rabi, double detuning,
                              const InteractionSpec& spec,
                              const ScanRange& range);

/// Two pulses of length tau on an isolated atom in |1> with relative phase
/// xi; returns the xi of full return. Periodic when the range spans 2 pi.
ScanResult calibrate_xi_scan(double rabi, double detuning, double tau,
                             const ScanRange& range);

/// Maximizes `psi_plus_population(correction)` over a full period of the
/// single-particle phase correction. The optimum is reported in [0, 2 pi).
ScanResult calibrate_global_phase_scan(
    const std::function<double(double)>& psi_plus_population, int points = 721);

/// Reduces an angle to (-pi, pi].
double wrap_phase(double angle);

}  // namespace gateforge
