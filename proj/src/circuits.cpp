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

#include "gateforge/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gateforge/ccz_control.hpp"

namespace gateforge {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0, 1);

std::size_t place_of(int atom, int n) {
  std::size_t p = 1;
  for (int i = n - 1; i > atom; --i) p *= 3;
  return p;
}

bool inactive(std::uint32_t mask, int atom) { return (mask >> atom) & 1U; }

void check_site(int site, int n) {
  if (site < 0 || site >= n) {
    throw InvalidArgument("site " + std::to_string(site) + " outside register of " +
                          std::to_string(n));
  }
}

// Multiplies qubit-subspace amplitudes by a diagonal qubit gate; |r>
// components are untouched.
CVector apply_qubit_diagonal(const CVector& amps, const QubitGate& gate, int n) {
  CVector out = amps;
  for (std::size_t b = 0; b < qubit_dimension(n); ++b) {
    const auto i = static_cast<Eigen::Index>(b);
    out(static_cast<Eigen::Index>(qubit_to_atom_index(b, n))) *= gate.matrix()(i, i);
  }
  return out;
}

void check_leakage(const CMatrix& u, int n, const char* what) {
  for (std::size_t b = 0; b < qubit_dimension(n); ++b) {
    const auto col = u.col(static_cast<Eigen::Index>(qubit_to_atom_index(b, n)));
    double kept = 0;
    for (std::size_t q = 0; q < qubit_dimension(n); ++q) {
      kept += std::norm(col(static_cast<Eigen::Index>(qubit_to_atom_index(q, n))));
    }
    if (1 - kept > 0.5) {
      throw ProtocolViolation(std::string(what) + ": basis state " + bitstring(b, n) +
                              " leaks " + std::to_string(1 - kept) +
                              " out of the qubit subspace");
    }
  }
}

// Light-shift exposure followed by the echo and the optional correction.
AtomState echo_tail(AtomState psi, double theta_ls, bool echo,
                    std::optional<double> correction, std::uint32_t mask) {
  psi = apply_light_shift(psi, theta_ls);
  if (!echo) return psi;
  psi = apply_global_x(psi, kPi, mask);
  psi = apply_light_shift(psi, theta_ls);
  if (correction) psi = apply_light_shift(psi, *correction);
  return psi;
}

}  // namespace

void Circuit::validate() const {
  if (n_atoms < 1 || n_atoms > kMaxAtoms) {
    throw InvalidArgument("circuit atom count must be in [1, 4]");
  }
  for (const auto& op : ops) {
    if (const auto* z = std::get_if<LocalZ>(&op)) {
      check_site(z->site, n_atoms);
      if (!std::isfinite(z->theta)) throw InvalidArgument("LocalZ angle not finite");
    } else if (const auto* x = std::get_if<GlobalX>(&op)) {
      if (!std::isfinite(x->theta)) throw InvalidArgument("GlobalX angle not finite");
    } else if (const auto* l = std::get_if<LightShiftPhase>(&op)) {
      if (!std::isfinite(l->theta)) throw InvalidArgument("light-shift angle not finite");
    } else if (const auto* r = std::get_if<RydbergPulse>(&op)) {
      r->pulse.validate(n_atoms);
    }
  }
}

double GateContext::correction() const {
  return phase_correction ? *phase_correction : kPi + cz.single_particle_phase;
}

GateContext make_gate_context(int n_atoms, double rabi, double interaction,
                              const CzParameters& cz) {
  GateContext ctx;
  ctx.spec = InteractionSpec::uniform(n_atoms, interaction);
  ctx.rabi = rabi;
  ctx.cz = cz;
  return ctx;
}

AtomState apply_global_x(const AtomState& state, double theta,
                         std::uint32_t inactive_mask) {
  const int n = state.n_atoms();
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  CVector a = state.amplitudes();
  for (int atom = 0; atom < n; ++atom) {
    if (inactive(inactive_mask, atom)) continue;
    const std::size_t p = place_of(atom, n);
    for (std::size_t k = 0; k < state.dimension(); ++k) {
      if (level_of(k, atom, n) != Level::kZero) continue;
      const auto i0 = static_cast<Eigen::Index>(k);
      const auto i1 = static_cast<Eigen::Index>(k + p);
      const Complex a0 = a(i0), a1 = a(i1);
      a(i0) = c * a0 - kI * s * a1;
      a(i1) = -kI * s * a0 + c * a1;
    }
  }
  return AtomState(n, std::move(a));
}

AtomState apply_local_z(const AtomState& state, double theta, int site) {
  const int n = state.n_atoms();
  check_site(site, n);
  const Complex ph = std::polar(1.0, theta);
  CVector a = state.amplitudes();
  for (std::size_t k = 0; k < state.dimension(); ++k) {
    if (level_of(k, site, n) == Level::kOne) a(static_cast<Eigen::Index>(k)) *= ph;
  }
  return AtomState(n, std::move(a));
}

AtomState apply_light_shift(const AtomState& state, double theta) {
  AtomState out = state;
  for (int i = 0; i < state.n_atoms(); ++i) out = apply_local_z(out, theta, i);
  return out;
}

AtomState cz_block(const AtomState& state, const GateContext& ctx, bool echo,
                   std::uint32_t inactive_mask) {
  const int n = state.n_atoms();
  if (ctx.spec.n_atoms() != n) {
    throw InvalidArgument("gate context and state have different atom counts");
  }
  const auto pulses = ctx.cz.pulses(ctx.rabi);
  const CMatrix u = propagator(pulses[1], ctx.spec) * propagator(pulses[0], ctx.spec);
  check_leakage(u, n, "CZ block");
  AtomState psi(n, u * state.amplitudes());
  const double theta_ls = ctx.light_shift_rate * ctx.cz_duration();
  return echo_tail(std::move(psi), theta_ls, echo,
                   echo ? std::optional<double>(ctx.correction()) : std::nullopt,
                   inactive_mask);
}

AtomState ccz_block(const AtomState& state, const GateContext& ctx, bool echo,
                    std::uint32_t inactive_mask) {
  const int n = state.n_atoms();
  if (n != 3) throw InvalidArgument("CCZ block needs three atoms");
  AtomState psi = state;
  double duration = ctx.ideal_ccz_duration;
  if (ctx.ccz_waveform) {
    if (ctx.spec.n_atoms() != 3) {
      throw InvalidArgument("gate context spec must describe three atoms");
    }
    psi = evolve_waveform(state, *ctx.ccz_waveform, ctx.spec, ctx.ccz_stepping);
    duration = ctx.ccz_waveform->total_duration();
  } else {
    psi = AtomState(3, apply_qubit_diagonal(state.amplitudes(), ccz_target(), 3));
  }
  return echo_tail(std::move(psi), ctx.light_shift_rate * duration, echo,
                   std::nullopt, inactive_mask);
}

AtomState simulate(const Circuit& circuit, const GateContext& ctx,
                   const AtomState& initial, std::uint32_t inactive_mask) {
  circuit.validate();
  if (initial.n_atoms() != circuit.n_atoms) {
    throw InvalidArgument("initial state and circuit have different atom counts");
  }
  AtomState psi = initial;
  for (const auto& op : circuit.ops) {
    if (const auto* x = std::get_if<GlobalX>(&op)) {
      psi = apply_global_x(psi, x->theta, inactive_mask);
    } else if (const auto* z = std::get_if<LocalZ>(&op)) {
      if (!inactive(inactive_mask, z->site)) psi = apply_local_z(psi, z->theta, z->site);
    } else if (const auto* cz = std::get_if<CzBlock>(&op)) {
      psi = cz_block(psi, ctx, cz->echo, inactive_mask);
    } else if (const auto* ccz = std::get_if<CczBlock>(&op)) {
      psi = ccz_block(psi, ctx, ccz->echo, inactive_mask);
    } else if (const auto* ls = std::get_if<LightShiftPhase>(&op)) {
      psi = apply_light_shift(psi, ls->theta);
    } else if (const auto* rp = std::get_if<RydbergPulse>(&op)) {
      psi = evolve_constant(psi, rp->pulse, ctx.spec);
    }
  }
  return psi;
}

QubitGate circuit_gate(const Circuit& circuit, const GateContext& ctx) {
  std::vector<AtomState> finals;
  for (std::size_t b = 0; b < qubit_dimension(circuit.n_atoms); ++b) {
    finals.push_back(
        simulate(circuit, ctx, AtomState::from_qubit_index(b, circuit.n_atoms)));
  }
  return extract_qubit_gate<double>(finals);
}

Circuit bell_prep_circuit() {
  return Circuit{2, {GlobalX{kPi / 2}, CzBlock{true}, GlobalX{kPi / 4}}};
}

Circuit bell_parity_circuit(double theta) {
  Circuit c = bell_prep_circuit();
  c.ops.push_back(LocalZ{theta, 0});
  c.ops.push_back(LocalZ{theta, 1});
  c.ops.push_back(GlobalX{kPi / 2});
  return c;
}

Circuit basis_prep_circuit(std::string_view bits) {
  const int n = static_cast<int>(bits.size());
  if (n != 2 && n != 3) throw InvalidArgument("basis preparation supports 2 or 3 qubits");
  bitstring_index(bits);
  const auto ones = std::count(bits.begin(), bits.end(), '1');
  if (ones == 0) return Circuit{n, {}};
  if (ones == n) return Circuit{n, {GlobalX{kPi}}};
  // The addressed atom k ends opposite to the rest: X(pi/2) Z(pi) X(pi/2)
  // leaves k in |0> and the others in |1>; ending with X(3pi/2) swaps that.
  int k = 0;
  if (n == 3) {
    const char minority = ones == 1 ? '1' : '0';
    k = static_cast<int>(bits.find(minority));
  }
  const double last = bits[static_cast<std::size_t>(k)] == '0' ? kPi / 2 : 3 * kPi / 2;
  return Circuit{n, {GlobalX{kPi / 2}, LocalZ{kPi, k}, GlobalX{last}}};
}

Circuit cnot_circuit() {
  // [X(pi/4), Z(pi)@0, X(pi/4)] is X(pi/2) on the target times Z(pi) on the
  // control. The leading Z(pi) on the target and the closing X(pi) undo the
  // echo flip so that the map is a plain CNOT on basis states.
  Circuit c{2, {}};
  c.ops = {LocalZ{kPi, 1}, GlobalX{kPi / 4}, LocalZ{kPi, 0}, GlobalX{kPi / 4},
           CzBlock{true},  GlobalX{kPi / 4}, LocalZ{kPi, 0}, GlobalX{kPi / 4},
           GlobalX{kPi}};
  return c;
}

Circuit hadamard_construction(int n_atoms, int site) {
  check_site(site, n_atoms);
  return Circuit{n_atoms, {GlobalX{kPi / 4}, LocalZ{kPi, site}, GlobalX{3 * kPi / 4}}};
}

Circuit toffoli_circuit() {
  Circuit c = hadamard_construction(3, 1);
  c.ops.push_back(CczBlock{true});
  c.ops.push_back(EchoMarker{});
  const auto h = hadamard_construction(3, 1);
  c.ops.insert(c.ops.end(), h.ops.begin(), h.ops.end());
  return c;
}

double cz_fidelity_up_to_local_phases(const QubitGate& gate) {
  if (gate.n_qubits() != 2) throw InvalidArgument("CZ fidelity needs a 2-qubit gate");
  const CMatrix& g = gate.matrix();
  auto f = [&](double a, double b) {
    const Complex tr = g(0, 0) + std::polar(1.0, -a) * g(1, 1) +
                       std::polar(1.0, -b) * g(2, 2) -
                       std::polar(1.0, -(a + b)) * g(3, 3);
    return std::norm(tr) / 16.0;
  };
  constexpr int kGrid = 72;
  double best = -1, ba = 0, bb = 0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double a = 2 * kPi * i / kGrid, b = 2 * kPi * j / kGrid;
      const double v = f(a, b);
      if (v > best) {
        best = v;
        ba = a;
        bb = b;
      }
    }
  }
  // Coordinate refinement with shrinking steps.
  for (double h = 2 * kPi / kGrid; h > 1e-10; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [da, db] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        const double v = f(ba + da, bb + db);
        if (v > best) {
          best = v;
          ba += da;
          bb += db;
          moved = true;
        }
      }
    }
  }
  return std::min(1.0, best);
}

AddressedCzReport addressed_cz_in_chain(const InteractionSpec& chain,
                                        std::array<int, 2> addressed_sites,
                                        double rabi, const CzParameters& cz) {
  const int n = chain.n_atoms();
  if (n < 3) throw InvalidArgument("chain needs at least three atoms");
  for (int s : addressed_sites) check_site(s, n);
  if (addressed_sites[0] == addressed_sites[1]) {
    throw InvalidArgument("addressed sites must differ");
  }
  std::vector<int> spectators;
  for (int i = 0; i < n; ++i) {
    if (i != addressed_sites[0] && i != addressed_sites[1]) spectators.push_back(i);
  }
  const auto pulses = cz.pulses(rabi);
  const CMatrix u1 = propagator(pulses[0], chain);
  const CMatrix u2 = propagator(pulses[1], chain);
  // Short steps to follow the spectator excitation through each pulse.
  constexpr int kSteps = 200;
  const CMatrix s1 = propagator(DrivePulse{pulses[0].rabi, pulses[0].detuning, 0.0,
                                           pulses[0].duration / kSteps},
                                chain);
  const CMatrix s2 = propagator(DrivePulse{pulses[1].rabi, pulses[1].detuning,
                                           pulses[1].phase, pulses[1].duration / kSteps},
                                chain);

  AddressedCzReport rep{QubitGate::identity(2), 0, {}, 0};
  rep.spectator_rydberg.assign(spectators.size(), 0.0);
  CMatrix g(4, 4);
  for (std::size_t b = 0; b < 4; ++b) {
    std::string labels(static_cast<std::size_t>(n), '1');
    labels[static_cast<std::size_t>(addressed_sites[0])] = (b & 2U) ? '1' : '0';
    labels[static_cast<std::size_t>(addressed_sites[1])] = (b & 1U) ? '1' : '0';
    const AtomState start = AtomState::basis(labels);
    CVector psi = start.amplitudes();
    for (const CMatrix* step : {&s1, &s2}) {
      for (int k = 0; k < kSteps; ++k) {
        psi = *step * psi;
        const AtomState now(n, psi);
        for (std::size_t j = 0; j < spectators.size(); ++j) {
          rep.spectator_rydberg[j] =
              std::max(rep.spectator_rydberg[j], now.rydberg_population(spectators[j]));
        }
      }
    }
    const CVector fin = u2 * (u1 * start.amplitudes());
    for (std::size_t a = 0; a < 4; ++a) {
      std::string out = labels;
      out[static_cast<std::size_t>(addressed_sites[0])] = (a & 2U) ? '1' : '0';
      out[static_cast<std::size_t>(addressed_sites[1])] = (a & 1U) ? '1' : '0';
      g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          fin(static_cast<Eigen::Index>(basis_index(out)));
    }
  }
  rep.pair_gate = QubitGate(2, g);
  rep.fidelity = cz_fidelity_up_to_local_phases(rep.pair_gate);
  rep.max_spectator_rydberg =
      rep.spectator_rydberg.empty()
          ? 0.0
          : *std::max_element(rep.spectator_rydberg.begin(), rep.spectator_rydberg.end());
  return rep;
}

}  // namespace gateforge
