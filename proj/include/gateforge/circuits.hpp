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
 * Native gate set (global X(theta), local Z(theta), Rydberg CZ and CCZ
 * blocks with the light-shift echo) and the composite circuits built on it.
 *
 * Conventions: X(theta) = exp(-i theta sigma_x / 2) on {|0>,|1>} of every
 * atom; Z(theta) = diag(1, e^{i theta}). |r> amplitudes are never touched by
 * single-qubit operations.
 */

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gateforge/cz_protocol.hpp"
#include "gateforge/dynamics.hpp"

namespace gateforge {

struct GlobalX {
  double theta = 0;
};
struct LocalZ {
  double theta = 0;
  int site = 0;
};
/// Two Rydberg pulses; with echo also the light-shift cancelling X(pi) and
/// the single-particle phase correction.
struct CzBlock {
  bool echo = true;
};
struct CczBlock {
  bool echo = true;
};
/// Differential light shift e^{i theta} on |1> of every atom.
struct LightShiftPhase {
  double theta = 0;
};
/// Marks where the echo flip sits; no action.
struct EchoMarker {};
/// One raw constant Rydberg segment (e.g. a site-selective pi pulse).
struct RydbergPulse {
  DrivePulse pulse;
};

using CircuitOp = std::variant<GlobalX, LocalZ, CzBlock, CczBlock,
                               LightShiftPhase, EchoMarker, RydbergPulse>;

struct Circuit {
  int n_atoms = 2;
  std::vector<CircuitOp> ops;

  /// Throws InvalidArgument on a bad site index or non-finite angle.
  void validate() const;
};

/// Everything a circuit needs to turn blocks into dynamics.
struct GateContext {
  InteractionSpec spec = InteractionSpec::uniform(2, kPerfectBlockade<double>);
  double rabi = 2 * 3.141592653589793 * 3.5e6;  ///< rad/s
  CzParameters cz{};
  /// Differential light shift of the 420 nm pulse on |1>, rad/s.
  double light_shift_rate = 2 * 3.141592653589793 * 3e6;
  /// Single-particle correction applied after the echo; default pi + phi_1.
  std::optional<double> phase_correction{};
  /// Optimized CCZ pulse; without it the CCZ block applies the ideal matrix.
  std::optional<Waveform> ccz_waveform{};
  WaveformStepping ccz_stepping{4};
  /// Light-shift exposure assumed for an ideal CCZ block, s.
  double ideal_ccz_duration = 1.2e-6;

  double cz_duration() const { return cz.total_area() / rabi; }
  double correction() const;
};

/// Context for n atoms with a uniform interaction `interaction` (rad/s; may
/// be infinite) and the given CZ parameters.
GateContext make_gate_context(int n_atoms, double rabi, double interaction,
                              const CzParameters& cz);

AtomState apply_global_x(const AtomState& state, double theta,
                         std::uint32_t inactive_mask = 0);
AtomState apply_local_z(const AtomState& state, double theta, int site);
AtomState apply_light_shift(const AtomState& state, double theta);

/// Throws ProtocolViolation if the pulses leak more than half of any
/// computational basis state out of the qubit subspace.
AtomState cz_block(const AtomState& state, const GateContext& ctx, bool echo,
                   std::uint32_t inactive_mask = 0);
AtomState ccz_block(const AtomState& state, const GateContext& ctx, bool echo,
                    std::uint32_t inactive_mask = 0);

/// Runs every op in order. Atoms set in `inactive_mask` (bit i = atom i)
/// never see qubit rotations; they model atoms pumped outside the qubit
/// subspace that read out like |0>.
AtomState simulate(const Circuit& circuit, const GateContext& ctx,
                   const AtomState& initial, std::uint32_t inactive_mask = 0);

/// Circuit map on the computational subspace.
QubitGate circuit_gate(const Circuit& circuit, const GateContext& ctx);

Circuit bell_prep_circuit();
/// Bell preparation followed by Z(theta) on both atoms and X(pi/2); the
/// parity of the readout oscillates as -cos(2 theta) for |Phi+>.
Circuit bell_parity_circuit(double theta);
Circuit basis_prep_circuit(std::string_view bits);
Circuit cnot_circuit();
Circuit toffoli_circuit();
/// Hadamard-like construction on atom `site` of a 3-atom register:
/// X(pi/4), Z(pi)@site, X(3pi/4). Edge atoms get a net X(pi).
Circuit hadamard_construction(int n_atoms, int site);

/// diag(1, e^{i a}, e^{i b}, -e^{i(a+b)}) fitted to `gate`: the CZ fidelity
/// after the best local phase corrections.
double cz_fidelity_up_to_local_phases(const QubitGate& gate);

struct AddressedCzReport {
  QubitGate pair_gate;
  double fidelity = 0;
  /// Peak Rydberg population of each non-addressed atom during the pulses.
  std::vector<double> spectator_rydberg;
  double max_spectator_rydberg = 0;
};

/// CZ pulses on a chain in which the drive is resonant only with the
/// addressed pair; other atoms sit at their offsets delta_i in `chain`.
/// Spectators start in |1> (the driven case).
AddressedCzReport addressed_cz_in_chain(const InteractionSpec& chain,
                                        std::array<int, 2> addressed_sites,
                                        double rabi, const CzParameters& cz);

}  // namespace gateforge
