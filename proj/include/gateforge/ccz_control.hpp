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
 * Global-pulse CCZ: the target unitary, the local-pulse reference protocol
 * and a CRAB-style optimizer over amplitude and detuning modulation.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gateforge/dynamics.hpp"

namespace gateforge {

/// diag(1,-1,-1,-1,-1,1,-1,1) in basis order 000..111.
QubitGate ccz_target();

/// 1 - 2|111><111|.
QubitGate canonical_ccz();

/// pi pulse on both edges, 2 pi on the middle, pi on both edges, with
/// site-selective drive at Rabi frequency `rabi`.
QubitGate local_pulse_ccz_reference(const InteractionSpec& spec, double rabi);

struct ControlBounds {
  double max_rabi = 2 * 3.141592653589793 * 5e6;       ///< rad/s
  double max_detuning = 2 * 3.141592653589793 * 10e6;  ///< |Delta| bound, rad/s
};

/// Omega(t) = clamp(env(t) (base_rabi + sum_k a_k sin w_k t + b_k cos w_k t),
///                  0, max_rabi)
/// Delta(t) = clamp(base_detuning + sum_k c_k sin w_k t + d_k cos w_k t,
///                  -max_detuning, max_detuning)
/// with w_k = 2 pi (k + r_k) / T. env is a flat top with sin^2 ramps.
struct ControlAnsatz {
  int n_basis = 4;
  /// [base_rabi, base_detuning, a_1, b_1, ..., a_n, b_n, c_1, d_1, ..., c_n, d_n]
  std::vector<double> coefficients;
  /// r_k for the Rabi channel then the detuning channel (2 n_basis values).
  std::vector<double> frequency_jitters;
  ControlBounds bounds{};
  double duration = 1.2e-6;
  std::size_t samples = 600;
  double ramp_fraction = 0.1;

  static std::size_t parameter_count(int n_basis) {
    return 2 + 4 * static_cast<std::size_t>(n_basis);
  }
  void validate() const;
};

Waveform render_waveform(const ControlAnsatz& ansatz);

struct OptimizerConfig {
  int n_basis = 4;
  ControlBounds bounds{};
  double duration = 1.2e-6;
  std::size_t samples = 600;
  int restarts = 20;
  int evaluations_per_restart = 2000;
  /// Magnus steps per sample interval used inside the objective.
  int substeps = 1;
  /// Target gate; defaults to ccz_target().
  std::optional<QubitGate> target{};
  /// Stop early once this fidelity is reached (1 disables).
  double stop_fidelity = 1.0;
};

struct OptimizationReport {
  double best_fidelity = 0;
  std::size_t evaluations = 0;
  std::uint64_t seed = 0;
  int best_restart = -1;
  ControlAnsatz best_ansatz{};
  Waveform best_waveform = Waveform::constant(0, 0, 1);
  WaveformStepping stepping{1};
  /// Best fidelity after each restart.
  std::vector<double> restart_best;
};

/// Gate of a waveform via the sector decomposition.
QubitGate waveform_gate(const Waveform& wf, const InteractionSpec& spec,
                        WaveformStepping stepping);

OptimizationReport optimize_ccz(const InteractionSpec& spec,
                                const OptimizerConfig& config,
                                std::uint64_t seed);

}  // namespace gateforge
