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
 * Analysis of pushout (A) and no-pushout (B) shot tables: leakage-bounded
 * populations, Bell fidelity from populations and parity, truth tables,
 * SPAM correction, limited tomography and bootstrap errors.
 *
 * Presence patterns are strings over {P, L} (present, lost), atom 0 first.
 * In the A table a lost atom reads as qubit state 1.
 */

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gateforge/circuits.hpp"
#include "gateforge/dynamics.hpp"

namespace gateforge {

using OutcomeCounts = std::map<std::string, std::uint64_t>;

struct ShotTables {
  int n_atoms = 2;
  OutcomeCounts a_counts;  ///< pushout applied
  OutcomeCounts b_counts;  ///< no pushout

  std::uint64_t a_total() const;
  std::uint64_t b_total() const;
  double a_frequency(const std::string& pattern) const;
  double b_frequency(const std::string& pattern) const;
  /// Throws InvalidArgument on malformed patterns or empty tables.
  void validate() const;
};

/// "PLP" <-> "010": lost reads as 1.
std::string pattern_to_bits(const std::string& pattern);
std::string bits_to_pattern(const std::string& bits);

struct PopulationBounds {
  std::map<std::string, double> lower_bounds;  ///< keyed by qubit bit string
  std::map<std::string, double> raw;           ///< A frequencies, same keys
};

/// p(y) >= A(y) - sum over non-empty T within ones(y) of B(exactly T lost),
/// clamped at zero. For y = all ones this subtracts 1 - B(all present).
PopulationBounds leakage_lower_bounds(const ShotTables& shots);

/// (p00 + p11 + C) / 2. Inputs must lie in [0, 1].
double bell_fidelity(double populations, double coherence);

/// Appends Z(theta) on both atoms and a global X(pi/2) to a 2-atom state and
/// returns <sigma_z sigma_z> on the qubit subspace (|0> -> +1, |1> -> -1).
/// For |Phi+> this is -cos(2 theta).
double parity_signal(const AtomState& state, double theta);

struct ParityFit {
  double amplitude = 0;  ///< sqrt(a^2 + b^2) of a cos 2t + b sin 2t + c
  double phase = 0;
  double offset = 0;
};

/// Least-squares fit of a cos(2 theta) + b sin(2 theta) + c.
ParityFit fit_parity(const std::vector<double>& thetas,
                     const std::vector<double>& signals);

/// Parity from an A table: sum over patterns of (-1)^(number lost) x freq.
double parity_from_shots(const ShotTables& shots);

struct TruthTable {
  RMatrix probabilities;             ///< row = input, column = outcome
  std::vector<std::size_t> targets;  ///< expected outcome per row
  double fidelity = 0;               ///< mean target probability
};

/// Exact truth table: each input is prepared with basis_prep_circuit, then
/// `gate` runs; outcome probabilities are qubit-subspace populations.
TruthTable truth_table(const Circuit& gate, const GateContext& ctx,
                       const std::vector<std::size_t>& targets);

/// Truth table of lower bounds from one ShotTables per input row.
TruthTable truth_table_from_shots(const std::vector<ShotTables>& rows,
                                  const std::vector<std::size_t>& targets);

/// Target outcome per input for the CNOT and the echoed Toffoli circuits.
std::vector<std::size_t> cnot_targets();
std::vector<std::size_t> toffoli_targets();

struct SpamModel {
  double pumping_error = 0.007;
  double loss_error = 0.005;
  int n_atoms = 2;

  double epsilon() const { return pumping_error + loss_error; }
  /// (1 - epsilon)^N.
  double p_correct() const;
  /// Probability that at least one atom is pumped into the wrong sublevel.
  double wrong_sublevel_weight() const;
};

struct SpamCorrection {
  double value = 0;
  bool clamped = false;
};

/// F^c = (F - w F_false) / P with w = 1 - P unless given, clamped to [0, 1].
SpamCorrection spam_correct(double measured, double p_correct, double false_fidelity,
                            std::optional<double> false_weight = std::nullopt);

/// Forward model F = P F^c + w F_false.
double spam_mix(double corrected, double p_correct, double false_fidelity,
                std::optional<double> false_weight = std::nullopt);

/// Printed ideal echoed Toffoli with phases e^{i phi_j} on its eight entries.
QubitGate toffoli_with_phases(const std::array<double, 8>& phases);

struct LimitedTomography {
  RMatrix probabilities;
  std::vector<std::size_t> targets;
  double fidelity = 0;
};

/// Limited tomography row targets: 0->2, 1->3, 2->0, 3->1, 4->6, 5->7, 6->4, 7->5.
std::vector<std::size_t> limited_tomography_targets();

/// Conditional X(s pi/2) on all qubits before the gate, s = +1 when the
/// middle (target) qubit starts in 0 and -1 otherwise, and X(-s pi/2) after.
LimitedTomography limited_tomography(const QubitGate& toffoli);

/// The eight shot circuits: basis prep, X(s pi/2), `toffoli`, X(-s pi/2).
std::vector<Circuit> limited_tomography_circuits(const Circuit& toffoli);

struct LtLeakageBound {
  /// Per setting pair (keyed by the lower input index): per-atom excess
  /// absence a_b(i) + a_b'(i) - 1.
  std::map<std::size_t, std::vector<double>> per_atom;
  /// Per pair: min(1, sum_i max(0, excess_i)), tightened by 1 - B(all
  /// present) when no-pushout data are present.
  std::map<std::size_t, double> pair_bound;
  double max_bound = 0;
  /// Leakage-bounded target probability per setting.
  std::vector<double> target_lower_bounds;
  double fidelity_lower_bound = 0;
};

/// Settings b and b ^ 0b111 share the pre-gate state and differ by a final
/// global X(pi). Throws InvalidArgument if a setting lacks its partner.
LtLeakageBound leakage_constraint_from_lt_pairs(
    const std::map<std::size_t, ShotTables>& settings);

/// Nonparametric bootstrap standard error of `statistic`: both tables are
/// resampled multinomially with their own totals.
double bootstrap_standard_error(
    const ShotTables& shots, const std::function<double(const ShotTables&)>& statistic,
    int resamples = 1000, std::uint64_t seed = 0);

struct BellAnalysis {
  double raw_populations = 0;
  double population_lower_bound = 0;
  double coherence = 0;
  double fidelity_lower_bound = 0;
  double corrected_populations = 0;
  double corrected_coherence = 0;
  double corrected_fidelity = 0;
  bool clamped = false;
  double population_se = 0;
  double coherence_se = 0;
  double corrected_fidelity_se = 0;
};

/// Bell pipeline: populations from `populations`, coherence from a parity
/// scan (one ShotTables per theta), SPAM correction with `spam`.
BellAnalysis analyze_bell(const ShotTables& populations,
                          const std::vector<double>& thetas,
                          const std::vector<ShotTables>& parity_scan,
                          const SpamModel& spam, double false_fidelity = 0.15,
                          int resamples = 200, std::uint64_t seed = 0);

}  // namespace gateforge
