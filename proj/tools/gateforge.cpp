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

// gateforge: command-line front end. Frequencies in MHz, times in us.
// Exit codes: 0 ok, 2 invalid input, 3 solver or optimizer failure, 4 I/O.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gateforge/ccz_control.hpp"
#include "gateforge/circuits.hpp"
#include "gateforge/cz_protocol.hpp"
#include "gateforge/errors.hpp"
#include "gateforge/io.hpp"
#include "gateforge/measurement_sim.hpp"
#include "gateforge/metrology.hpp"
#include "gateforge/random.hpp"

namespace {

using gateforge::io::Json;
using std::numbers::pi;
namespace gf = gateforge;
namespace io = gateforge::io;

constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

// ---------------------------------------------------------------------------
// Shared option handling

double parse_interaction(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) {
    throw gf::InvalidArgument("--interaction: expected a number in MHz or 'inf', got '" + text + "'");
  }
  return v;
}

void require_positive(double v, const std::string& name) {
  if (!(v > 0) || std::isnan(v)) {
    throw gf::InvalidArgument(name + ": must be positive, got " + std::to_string(v));
  }
}

void require_probability(double v, const std::string& name) {
  if (!(v >= 0 && v <= 1)) throw gf::InvalidArgument(name + ": must lie in [0, 1]");
}

std::uint64_t require_seed(const CLI::Option* opt, std::uint64_t seed, const std::string& why) {
  if (opt->count() == 0) {
    throw gf::InvalidArgument("--seed is required " + why + " (no entropy default)");
  }
  return seed;
}

Json interaction_json(const std::string& text) {
  const double v = parse_interaction(text);
  if (std::isinf(v)) return "inf";
  return v;
}

void emit(const Json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_text_file(out, text);
  }
}

Json envelope(const std::string& command, const Json& config) {
  Json c = config;
  c["command"] = command;
  return {{"schema", io::kSchema}, {"command", command}, {"config", c}};
}

// Physics settings common to the circuit commands.
struct Hardware {
  double rabi_mhz = 3.5;
  std::string interaction = "inf";

  void add(CLI::App* app) {
    app->add_option("--rabi", rabi_mhz, "Rabi frequency Omega / 2 pi in MHz")->capture_default_str();
    app->add_option("--interaction", interaction,
                    "blockade interaction V / 2 pi in MHz, or 'inf'")
        ->capture_default_str();
  }
  double rabi() const {
    require_positive(rabi_mhz, "--rabi");
    return io::mhz_to_angular(rabi_mhz);
  }
  double interaction_angular() const {
    const double v = parse_interaction(interaction);
    require_positive(v, "--interaction");
    return std::isinf(v) ? v : io::mhz_to_angular(v);
  }
  gf::CzParameters cz() const {
    const double v = interaction_angular();
    return std::isinf(v) ? gf::solve_cz_parameters() : gf::finite_blockade_adjust(rabi(), v);
  }
  gf::GateContext context(int n_atoms) const {
    return gf::make_gate_context(n_atoms, rabi(), interaction_angular(), cz());
  }
  void echo(Json& c) const {
    c["rabi"] = rabi_mhz;
    c["interaction"] = interaction_json(interaction);
  }
};

struct Noise {
  std::string spam = "default";
  std::optional<double> pumping_error;
  std::optional<double> loss_before;
  std::optional<double> loss_after;

  void add(CLI::App* app) {
    app->add_option("--spam", spam, "noise preset: default or none")
        ->check(CLI::IsMember({"default", "none"}))
        ->capture_default_str();
    app->add_option("--pumping-error", pumping_error, "override pumping error probability");
    app->add_option("--loss-before", loss_before, "override loss before the circuit");
    app->add_option("--loss-after", loss_after, "override loss after the circuit");
  }
  gf::NoiseConfig resolve(std::uint64_t seed) const {
    gf::NoiseConfig nz = spam == "none" ? gf::NoiseConfig::none() : gf::NoiseConfig{};
    if (pumping_error) nz.pumping_error = *pumping_error;
    if (loss_before) nz.loss_before = *loss_before;
    if (loss_after) nz.loss_after = *loss_after;
    nz.seed = seed;
    nz.validate();
    return nz;
  }
  void echo(Json& c, const gf::NoiseConfig& nz) const {
    c["spam"] = spam;
    c["pumping-error"] = nz.pumping_error;
    c["loss-before"] = nz.loss_before;
    c["loss-after"] = nz.loss_after;
  }
};

gf::Circuit preset_circuit(const std::string& name) {
  if (name == "bell") return gf::bell_prep_circuit();
  if (name == "cnot") return gf::cnot_circuit();
  if (name == "toffoli") return gf::toffoli_circuit();
  throw gf::InvalidArgument("--preset: unknown circuit '" + name + "'");
}

std::string bits_of(std::size_t index, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int i = 0; i < n; ++i) {
    if ((index >> (n - 1 - i)) & 1U) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

double bell_overlap(const gf::AtomState& psi) {
  const gf::CVector q = psi.qubit_projection();
  return 0.5 * std::norm(q(0) + q(3));
}

gf::Circuit prepended(const gf::Circuit& prep, const gf::Circuit& body) {
  gf::Circuit c = prep;
  c.ops.insert(c.ops.end(), body.ops.begin(), body.ops.end());
  return c;
}

// ---------------------------------------------------------------------------
// solve-cz

struct SolveCz {
  double rabi_mhz = 3.5;
  std::optional<double> interaction_mhz;
  std::string preset = "none";
  std::string out;
};

void setup_solve_cz(CLI::App& app, SolveCz& o) {
  auto* c = app.add_subcommand("solve-cz", "two-pulse CZ parameters (perfect or finite blockade)");
  c->add_option("--rabi", o.rabi_mhz, "Rabi frequency in MHz")->capture_default_str();
  c->add_option("--interaction", o.interaction_mhz, "blockade interaction in MHz; omit for V = inf");
  c->add_option("--preset", o.preset, "none, or paper (Omega 3.5 MHz, V 24 MHz)")
      ->check(CLI::IsMember({"none", "paper"}))
      ->capture_default_str();
  c->add_option("--out", o.out, "write JSON here instead of stdout");
  c->callback([&o, c] {
    if (o.preset == "paper") {
      if (c->get_option("--rabi")->count() == 0) o.rabi_mhz = 3.5;
      if (!o.interaction_mhz) o.interaction_mhz = 24.0;
    }
    require_positive(o.rabi_mhz, "--rabi");
    if (o.interaction_mhz) require_positive(*o.interaction_mhz, "--interaction");
    const double rabi = io::mhz_to_angular(o.rabi_mhz);
    const double v = o.interaction_mhz ? io::mhz_to_angular(*o.interaction_mhz)
                                       : gf::kPerfectBlockade<double>;
    const gf::CzParameters p = o.interaction_mhz ? gf::finite_blockade_adjust(rabi, v)
                                                 : gf::solve_cz_parameters();
    const auto pulses = p.pulses(rabi);
    const auto gate = gf::simulate_qubit_gate<double>(pulses, gf::InteractionSpec::uniform(2, v));
    const gf::GateContext ctx = gf::make_gate_context(2, rabi, v, p);
    const double bell =
        bell_overlap(gf::simulate(gf::bell_prep_circuit(), ctx, gf::AtomState::ground(2)));

    Json cfg = {{"rabi", o.rabi_mhz}, {"preset", o.preset}};
    if (o.interaction_mhz) cfg["interaction"] = *o.interaction_mhz;
    if (!o.out.empty()) cfg["out"] = o.out;
    Json j = envelope("solve-cz", cfg);
    j["parameters"] = io::cz_parameters_to_json(p);
    j["pulses"] = {io::pulse_to_json(pulses[0]), io::pulse_to_json(pulses[1])};
    j["gate_time_us"] = io::seconds_to_us(p.total_area() / rabi);
    j["simulated_fidelity"] = gf::cz_fidelity_up_to_local_phases(gate);
    j["bell_fidelity"] = bell;
    j["max_leakage"] = gate.max_leakage();
    j["fidelity_metric"] = "|Tr(U^dagger V)|^2 / d^2 after removing single-qubit phases";
    emit(j, o.out);
  });
}

// ---------------------------------------------------------------------------
// calibrate

struct Calibrate {
  std::string kind;
  Hardware hw;
  std::optional<double> lo;
  std::optional<double> hi;
  int points = 201;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::string csv;
  std::string out;
};

void setup_calibrate(CLI::App& app, Calibrate& o) {
  auto* c = app.add_subcommand("calibrate", "simulated calibration scans, written as CSV");
  c->add_option("--kind", o.kind, "tau (us), xi (rad) or phase (single-particle correction, rad)")
      ->required()
      ->check(CLI::IsMember({"tau", "xi", "phase"}));
  o.hw.add(c);
  c->add_option("--lo", o.lo, "scan start (us for tau, rad otherwise)");
  c->add_option("--hi", o.hi, "scan end");
  c->add_option("--points", o.points, "grid points")->capture_default_str();
  c->add_option("--shots", o.shots, "shots per point; 0 = exact probabilities")->capture_default_str();
  auto* seed_opt = c->add_option("--seed", o.seed, "RNG seed (required with --shots)");
  c->add_option("--csv", o.csv, "curve output")->required();
  c->add_option("--out", o.out, "JSON summary (stdout if omitted)");
  c->callback([&o, seed_opt] {
    const double rabi = o.hw.rabi();
    const double v = o.hw.interaction_angular();
    const gf::CzParameters p = o.hw.cz();
    const double detuning = p.detuning_ratio * rabi;
    const double tau = p.pulse_area / rabi;
    if (o.points < 3) throw gf::InvalidArgument("--points: need at least 3");
    if (o.shots > 0) require_seed(seed_opt, o.seed, "with --shots > 0");

    gf::ScanResult r;
    std::string column;
    double expected = 0;
    double scale = 1;
    if (o.kind == "phase") {
      if (o.shots > 0) throw gf::InvalidArgument("--shots: the phase scan is exact only");
      if (o.lo || o.hi) throw gf::InvalidArgument("--lo/--hi: the phase scan always spans 2 pi");
      const gf::GateContext base = gf::make_gate_context(2, rabi, v, p);
      auto runner = [&](double correction) {
        gf::GateContext ctx = base;
        ctx.phase_correction = correction;
        gf::Circuit c = gf::bell_prep_circuit();
        c.ops.push_back(gf::GlobalX{pi / 2});
        const gf::CVector q = gf::simulate(c, ctx, gf::AtomState::ground(2)).qubit_projection();
        return 0.5 * std::norm(q(1) + q(2));
      };
      r = gf::calibrate_global_phase_scan(runner, o.points);
      column = "correction_rad";
      expected = std::fmod(base.correction() + 4 * pi, 2 * pi);
    } else {
      gf::ScanRange range;
      range.points = o.points;
      range.shots = o.shots;
      range.seed = o.seed;
      if (o.kind == "tau") {
        scale = 1e6;
        range.lo = o.lo ? io::us_to_seconds(*o.lo) : 0.5 * tau;
        range.hi = o.hi ? io::us_to_seconds(*o.hi) : 1.5 * tau;
        r = gf::calibrate_tau_scan(rabi, detuning, gf::InteractionSpec::uniform(2, v), range);
        column = "tau_us";
        expected = io::seconds_to_us(tau);
      } else {
        range.lo = o.lo.value_or(0);
        range.hi = o.hi.value_or(2 * pi);
        r = gf::calibrate_xi_scan(rabi, detuning, tau, range);
        column = "xi_rad";
        expected = p.phase_jump;
      }
      for (double& x : r.values) x *= scale;
      r.optimum *= scale;
    }
    io::write_text_file(o.csv, io::scan_csv(r, column));

    Json cfg = {{"kind", o.kind}, {"points", o.points}, {"shots", o.shots}, {"csv", o.csv}};
    o.hw.echo(cfg);
    if (o.lo) cfg["lo"] = *o.lo;
    if (o.hi) cfg["hi"] = *o.hi;
    if (seed_opt->count() > 0) cfg["seed"] = o.seed;
    if (!o.out.empty()) cfg["out"] = o.out;
    Json j = envelope("calibrate", cfg);
    j["column"] = column;
    j["optimum"] = r.optimum;
    j["optimum_probability"] = r.optimum_probability;
    j["solver_value"] = expected;
    emit(j, o.out);
  });
}

// ---------------------------------------------------------------------------
// run-circuit

struct RunCircuit {
  std::string preset;
  std::string circuit_file;
  std::string input;
  Hardware hw;
  Noise noise;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void setup_run_circuit(CLI::App& app, RunCircuit& o) {
  auto* c = app.add_subcommand("run-circuit", "simulate a circuit from a basis input");
  auto* preset = c->add_option("--preset", o.preset, "bell, cnot or toffoli")
                     ->check(CLI::IsMember({"bell", "cnot", "toffoli"}));
  auto* file = c->add_option("--circuit", o.circuit_file, "circuit JSON file");
  preset->excludes(file);
  c->add_option("--input", o.input, "input bit string, atom 0 first (default all zeros)");
  o.hw.add(c);
  o.noise.add(c);
  c->add_option("--shots", o.shots, "0 = exact amplitudes")->capture_default_str();
  auto* seed_opt = c->add_option("--seed", o.seed, "RNG seed (required with --shots)");
  c->add_option("--out", o.out, "write JSON here instead of stdout");
  c->callback([&o, seed_opt] {
    if (o.preset.empty() == o.circuit_file.empty()) {
      throw gf::InvalidArgument("give exactly one of --preset or --circuit");
    }
    std::optional<int> width;
    if (!o.input.empty()) width = static_cast<int>(o.input.size());
    const gf::Circuit circuit = o.preset.empty()
                                    ? io::circuit_from_json(io::read_json_file(o.circuit_file), width)
                                    : preset_circuit(o.preset);
    const int n = circuit.n_atoms;
    const std::string input = o.input.empty() ? std::string(static_cast<std::size_t>(n), '0') : o.input;
    if (static_cast<int>(input.size()) != n) {
      throw gf::InvalidArgument("--input: '" + input + "' has " + std::to_string(input.size()) +
                                " bits, circuit has " + std::to_string(n) + " atoms");
    }
    const std::size_t index = gf::bitstring_index(input);
    const gf::GateContext ctx = o.hw.context(n);
    const gf::AtomState start = gf::AtomState::from_qubit_index(index, n);

    Json cfg = {{"input", input}, {"shots", o.shots}};
    if (!o.preset.empty()) cfg["preset"] = o.preset;
    if (!o.circuit_file.empty()) cfg["circuit"] = o.circuit_file;
    o.hw.echo(cfg);
    if (!o.out.empty()) cfg["out"] = o.out;

    Json j;
    if (o.shots == 0) {
      const gf::AtomState psi = gf::simulate(circuit, ctx, start);
      j = envelope("run-circuit", cfg);
      Json amps = Json::object();
      for (std::size_t k = 0; k < psi.dimension(); ++k) {
        const auto a = psi.amplitudes()(static_cast<Eigen::Index>(k));
        amps[gf::basis_label(k, n)] = {a.real(), a.imag()};
      }
      Json pops = Json::object();
      const gf::CVector q = psi.qubit_projection();
      for (Eigen::Index k = 0; k < q.size(); ++k) {
        pops[bits_of(static_cast<std::size_t>(k), n)] = std::norm(q(k));
      }
      j["amplitudes"] = amps;
      j["populations"] = pops;
      j["leakage"] = psi.leakage();
      if (o.preset == "bell") {
        j["target"] = "Phi+ = (|00> + |11>) / sqrt 2";
        j["fidelity"] = bell_overlap(psi);
      } else if (o.preset == "cnot" || o.preset == "toffoli") {
        const auto targets = o.preset == "cnot" ? gf::cnot_targets() : gf::toffoli_targets();
        const auto tt = gf::truth_table(circuit, ctx, targets);
        j["target"] = bits_of(targets[index], n);
        j["fidelity"] = std::norm(q(static_cast<Eigen::Index>(targets[index])));
        j["truth_table"] = {{"probabilities", io::real_matrix_to_json(tt.probabilities)},
                            {"fidelity", tt.fidelity}};
      }
    } else {
      const std::uint64_t seed = require_seed(seed_opt, o.seed, "with --shots > 0");
      const gf::NoiseConfig nz = o.noise.resolve(seed);
      o.noise.echo(cfg, nz);
      cfg["seed"] = seed;
      j = envelope("run-circuit", cfg);
      j["shots"] = io::shot_tables_to_json(gf::run_experiment(circuit, ctx, nz, o.shots, start));
    }
    emit(j, o.out);
  });
}

// ---------------------------------------------------------------------------
// simulate-shots

struct SimulateShots {
  std::string preset;
  Hardware hw;
  Noise noise;
  std::size_t shots = 100000;
  int parity_points = 24;
  std::uint64_t seed = 0;
  std::string out;
};

void setup_simulate_shots(CLI::App& app, SimulateShots& o) {
  auto* c = app.add_subcommand("simulate-shots",
                               "Monte Carlo pushout / no-pushout tables for an experiment");
  c->add_option("--preset", o.preset, "bell, cnot, toffoli or limited-tomography")
      ->required()
      ->check(CLI::IsMember({"bell", "cnot", "toffoli", "limited-tomography"}));
  o.hw.add(c);
  o.noise.add(c);
  c->add_option("--shots", o.shots, "shots per table (bell: split over the parity scan too)")
      ->capture_default_str();
  c->add_option("--parity-points", o.parity_points, "bell parity scan points over [0, pi)")
      ->capture_default_str();
  auto* seed_opt = c->add_option("--seed", o.seed, "RNG seed (required)");
  c->add_option("--out", o.out, "write JSON here instead of stdout");
  c->callback([&o, seed_opt] {
    const std::uint64_t seed = require_seed(seed_opt, o.seed, "for shot simulation");
    if (o.shots < 1) throw gf::InvalidArgument("--shots: must be at least 1");
    gf::NoiseConfig nz = o.noise.resolve(seed);

    Json cfg = {{"preset", o.preset}, {"shots", o.shots}, {"seed", seed}};
    o.hw.echo(cfg);
    o.noise.echo(cfg, nz);
    if (!o.out.empty()) cfg["out"] = o.out;

    Json j;
    if (o.preset == "bell") {
      if (o.parity_points < 3) throw gf::InvalidArgument("--parity-points: need at least 3");
      cfg["parity-points"] = o.parity_points;
      j = envelope("simulate-shots", cfg);
      const gf::GateContext ctx = o.hw.context(2);
      j["kind"] = "bell";
      j["populations"] = io::shot_tables_to_json(gf::run_experiment(gf::bell_prep_circuit(), ctx, nz, o.shots));
      const std::size_t per_point =
          std::max<std::size_t>(1, o.shots / static_cast<std::size_t>(o.parity_points));
      Json scan = Json::array();
      for (int k = 0; k < o.parity_points; ++k) {
        const double theta = pi * k / o.parity_points;
        gf::NoiseConfig pz = nz;
        pz.seed = gf::derive_seed(seed, static_cast<std::uint64_t>(k) + 1);
        scan.push_back({{"theta", theta},
                        {"tables", io::shot_tables_to_json(gf::run_experiment(
                                       gf::bell_parity_circuit(theta), ctx, pz, per_point))}});
      }
      j["parity_scan"] = scan;
    } else if (o.preset == "cnot" || o.preset == "toffoli") {
      j = envelope("simulate-shots", cfg);
      const gf::Circuit gate = preset_circuit(o.preset);
      const int n = gate.n_atoms;
      const gf::GateContext ctx = o.hw.context(n);
      const auto targets = o.preset == "cnot" ? gf::cnot_targets() : gf::toffoli_targets();
      Json rows = Json::array();
      for (std::size_t i = 0; i < gf::qubit_dimension(n); ++i) {
        const std::string bits = bits_of(i, n);
        gf::NoiseConfig rz = nz;
        rz.seed = gf::derive_seed(seed, 100 + i);
        const auto tables = gf::run_experiment(prepended(gf::basis_prep_circuit(bits), gate), ctx, rz, o.shots);
        rows.push_back({{"input", bits}, {"target", bits_of(targets[i], n)},
                        {"tables", io::shot_tables_to_json(tables)}});
      }
      j["kind"] = "truth_table";
      j["rows"] = rows;
    } else {
      j = envelope("simulate-shots", cfg);
      const gf::GateContext ctx = o.hw.context(3);
      const auto circuits = gf::limited_tomography_circuits(gf::toffoli_circuit());
      const auto targets = gf::limited_tomography_targets();
      Json settings = Json::array();
      for (std::size_t b = 0; b < circuits.size(); ++b) {
        gf::NoiseConfig sz = nz;
        sz.seed = gf::derive_seed(seed, 200 + b);
        settings.push_back({{"input", bits_of(b, 3)}, {"target", bits_of(targets[b], 3)},
                            {"tables", io::shot_tables_to_json(gf::run_experiment(circuits[b], ctx, sz, o.shots))}});
      }
      j["kind"] = "limited_tomography";
      j["settings"] = settings;
    }
    emit(j, o.out);
  });
}

// ---------------------------------------------------------------------------
// analyze

struct Analyze {
  std::string shots_file;
  std::string report;
  std::string spam = "default";
  double pumping_error = 0.007;
  double loss_error = 0.005;
  double false_fidelity = 0.15;
  int resamples = 200;
  std::uint64_t seed = 0;
};

std::size_t bits_index_field(const Json& row, const char* key, const std::string& ctx, int n) {
  const auto it = row.find(key);
  if (it == row.end() || !it->is_string()) throw gf::InvalidArgument(ctx + "." + key + ": expected a bit string");
  const std::string bits = it->get<std::string>();
  if (static_cast<int>(bits.size()) != n) {
    throw gf::InvalidArgument(ctx + "." + key + ": expected " + std::to_string(n) + " bits");
  }
  try {
    return gf::bitstring_index(bits);
  } catch (const gf::InvalidArgument& e) {
    throw gf::InvalidArgument(ctx + "." + key + ": " + e.what());
  }
}

const Json& list_field(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw gf::InvalidArgument(std::string(key) + ": expected a list");
  return *it;
}

Json bounds_json(const gf::PopulationBounds& b) {
  Json lb = Json::object();
  Json raw = Json::object();
  for (const auto& [k, v] : b.lower_bounds) lb[k] = v;
  for (const auto& [k, v] : b.raw) raw[k] = v;
  return {{"raw", raw}, {"lower_bounds", lb}};
}

void setup_analyze(CLI::App& app, Analyze& o) {
  auto* c = app.add_subcommand("analyze", "leakage-bounded, SPAM-corrected analysis of shot tables");
  c->add_option("--shots", o.shots_file, "ShotTables or simulate-shots JSON")->required();
  c->add_option("--report", o.report, "write JSON here instead of stdout");
  c->add_option("--spam", o.spam, "SPAM model for correction: default or none")
      ->check(CLI::IsMember({"default", "none"}))
      ->capture_default_str();
  c->add_option("--pumping-error", o.pumping_error)->capture_default_str();
  c->add_option("--loss-error", o.loss_error)->capture_default_str();
  c->add_option("--false-fidelity", o.false_fidelity, "Bell fidelity of the false contribution")
      ->capture_default_str();
  c->add_option("--resamples", o.resamples, "bootstrap resamples; 0 disables error bars")
      ->capture_default_str();
  auto* seed_opt = c->add_option("--seed", o.seed, "bootstrap seed (required when resampling)");
  c->callback([&o, seed_opt] {
    require_probability(o.pumping_error, "--pumping-error");
    require_probability(o.loss_error, "--loss-error");
    require_probability(o.false_fidelity, "--false-fidelity");
    if (o.resamples < 0) throw gf::InvalidArgument("--resamples: must be >= 0");
    if (o.resamples > 0) require_seed(seed_opt, o.seed, "for bootstrap resampling");
    const Json in = io::read_json_file(o.shots_file);
    if (!in.is_object()) throw gf::InvalidArgument(o.shots_file + ": expected a JSON object");
    if (const auto it = in.find("schema"); it == in.end() || *it != io::kSchema) {
      throw gf::InvalidArgument(o.shots_file + ": schema: expected \"gateforge/v1\"");
    }
    const double pe = o.spam == "none" ? 0 : o.pumping_error;
    const double le = o.spam == "none" ? 0 : o.loss_error;

    Json cfg = {{"shots", o.shots_file}, {"spam", o.spam}, {"pumping-error", o.pumping_error},
                {"loss-error", o.loss_error}, {"false-fidelity", o.false_fidelity},
                {"resamples", o.resamples}};
    if (seed_opt->count() > 0) cfg["seed"] = o.seed;
    if (!o.report.empty()) cfg["report"] = o.report;
    Json j = envelope("analyze", cfg);
    j["error_method"] = o.resamples > 0 ? "nonparametric bootstrap, 1 standard error" : "none";

    std::string kind = "tables";
    if (const auto it = in.find("kind"); it != in.end()) {
      if (!it->is_string()) throw gf::InvalidArgument("kind: expected a string");
      kind = it->get<std::string>();
    }
    j["kind"] = kind;
    if (kind == "bell") {
      if (!in.contains("populations")) throw gf::InvalidArgument("populations: missing field");
      const auto pops = io::shot_tables_from_json(in["populations"], "populations");
      std::vector<double> thetas;
      std::vector<gf::ShotTables> scan;
      const Json& ps = list_field(in, "parity_scan");
      for (std::size_t k = 0; k < ps.size(); ++k) {
        const std::string ctx = "parity_scan[" + std::to_string(k) + "]";
        thetas.push_back(io::number_field(ps[k], "theta", ctx));
        if (!ps[k].contains("tables")) throw gf::InvalidArgument(ctx + ".tables: missing field");
        scan.push_back(io::shot_tables_from_json(ps[k]["tables"], ctx + ".tables"));
      }
      const gf::SpamModel spam{pe, le, 2};
      const auto r = gf::analyze_bell(pops, thetas, scan, spam, o.false_fidelity, o.resamples, o.seed);
      j["p_correct"] = spam.p_correct();
      j["bell"] = {{"raw_populations", r.raw_populations},
                   {"population_lower_bound", r.population_lower_bound},
                   {"coherence", r.coherence},
                   {"fidelity_lower_bound", r.fidelity_lower_bound},
                   {"corrected_populations", r.corrected_populations},
                   {"corrected_coherence", r.corrected_coherence},
                   {"corrected_fidelity", r.corrected_fidelity},
                   {"clamped", r.clamped},
                   {"population_se", r.population_se},
                   {"coherence_se", r.coherence_se},
                   {"corrected_fidelity_se", r.corrected_fidelity_se}};
    } else if (kind == "truth_table" || kind == "limited_tomography") {
      const bool lt = kind == "limited_tomography";
      const Json& rows = list_field(in, lt ? "settings" : "rows");
      if (rows.empty()) throw gf::InvalidArgument(std::string(lt ? "settings" : "rows") + ": empty");
      std::map<std::size_t, gf::ShotTables> by_input;
      int n = 0;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::string ctx = (lt ? "settings[" : "rows[") + std::to_string(k) + "]";
        if (!rows[k].contains("tables")) throw gf::InvalidArgument(ctx + ".tables: missing field");
        auto t = io::shot_tables_from_json(rows[k]["tables"], ctx + ".tables");
        if (n == 0) n = t.n_atoms;
        if (t.n_atoms != n) throw gf::InvalidArgument(ctx + ".tables.n_atoms: mixed atom counts");
        const std::size_t in_idx = bits_index_field(rows[k], "input", ctx, n);
        if (!by_input.emplace(in_idx, std::move(t)).second) {
          throw gf::InvalidArgument(ctx + ".input: duplicate input");
        }
      }
      std::vector<gf::ShotTables> ordered;
      std::vector<std::size_t> targets(gf::qubit_dimension(n));
      for (std::size_t i = 0; i < gf::qubit_dimension(n); ++i) {
        if (!by_input.count(i)) throw gf::InvalidArgument("missing input row " + bits_of(i, n));
        ordered.push_back(by_input.at(i));
      }
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::string ctx = (lt ? "settings[" : "rows[") + std::to_string(k) + "]";
        targets[bits_index_field(rows[k], "input", ctx, n)] = bits_index_field(rows[k], "target", ctx, n);
      }
      const auto tt = gf::truth_table_from_shots(ordered, targets);
      const gf::SpamModel spam{pe, le, n};
      const auto corrected = gf::spam_correct(tt.fidelity, spam.p_correct(), 0);
      double se = 0;
      if (o.resamples > 0) {
        // Rows are independent; combine per-row target-frequency errors.
        double var = 0;
        for (std::size_t i = 0; i < ordered.size(); ++i) {
          const std::string key = bits_of(targets[i], n);
          const double s = gf::bootstrap_standard_error(
              ordered[i],
              [&](const gf::ShotTables& t) { return gf::leakage_lower_bounds(t).lower_bounds.at(key); },
              o.resamples,
              gf::derive_seed(o.seed, i));
          var += s * s;
        }
        se = std::sqrt(var) / static_cast<double>(ordered.size());
      }
      j["p_correct"] = spam.p_correct();
      // Rows hold leakage-bounded populations, so the fidelity is a lower bound.
      j["probabilities"] = io::real_matrix_to_json(tt.probabilities);
      j["fidelity_lower_bound"] = tt.fidelity;
      j["fidelity_lower_bound_se"] = se;
      j["corrected_fidelity"] = corrected.value;
      j["corrected_fidelity_se"] = spam.p_correct() > 0 ? se / spam.p_correct() : 0.0;
      j["clamped"] = corrected.clamped;
      if (lt) {
        const auto b = gf::leakage_constraint_from_lt_pairs(by_input);
        Json pair = Json::object();
        for (const auto& [k, v] : b.pair_bound) pair[bits_of(k, n)] = v;
        j["pair_constraint"] = {{"pair_bound", pair},
                                {"max_bound", b.max_bound},
                                {"target_lower_bounds", b.target_lower_bounds},
                                {"fidelity_lower_bound", b.fidelity_lower_bound}};
      }
    } else if (kind == "tables") {
      const auto t = io::shot_tables_from_json(in, "shots");
      j["populations"] = bounds_json(gf::leakage_lower_bounds(t));
    } else {
      throw gf::InvalidArgument("kind: unknown '" + kind + "'");
    }
    emit(j, o.report);
  });
}

// ---------------------------------------------------------------------------
// optimize-ccz

struct OptimizeCcz {
  std::string preset = "paper";
  std::uint64_t seed = 0;
  int restarts = 20;
  int evaluations = 2000;
  int n_basis = 4;
  double max_rabi_mhz = 5;
  double max_detuning_mhz = 10;
  double duration_us = 1.2;
  std::size_t samples = 600;
  int substeps = 1;
  double nn_mhz = 24;
  double edge_mhz = 0.4;
  double stop_fidelity = 1.0;
  std::string out;
  std::string waveform_csv;
};

void setup_optimize_ccz(CLI::App& app, OptimizeCcz& o) {
  auto* c = app.add_subcommand("optimize-ccz", "CRAB-style global-pulse CCZ optimization");
  c->add_option("--preset", o.preset, "paper: T 1.2 us, V_nn 24 MHz, V_edge 0.4 MHz")
      ->check(CLI::IsMember({"paper"}))
      ->capture_default_str();
  auto* seed_opt = c->add_option("--seed", o.seed, "RNG seed (required)");
  c->add_option("--restarts", o.restarts)->capture_default_str();
  c->add_option("--evaluations", o.evaluations, "Nelder-Mead evaluations per restart")->capture_default_str();
  c->add_option("--n-basis", o.n_basis, "Fourier components per control")->capture_default_str();
  c->add_option("--max-rabi", o.max_rabi_mhz, "MHz")->capture_default_str();
  c->add_option("--max-detuning", o.max_detuning_mhz, "|Delta| bound, MHz")->capture_default_str();
  c->add_option("--duration", o.duration_us, "us")->capture_default_str();
  c->add_option("--samples", o.samples, "waveform time samples")->capture_default_str();
  c->add_option("--substeps", o.substeps, "Magnus steps per sample interval")->capture_default_str();
  c->add_option("--nn", o.nn_mhz, "nearest-neighbour interaction, MHz")->capture_default_str();
  c->add_option("--edge", o.edge_mhz, "edge-edge interaction, MHz")->capture_default_str();
  c->add_option("--stop-fidelity", o.stop_fidelity, "stop early at this fidelity")->capture_default_str();
  c->add_option("--out", o.out, "report JSON (stdout if omitted)");
  c->add_option("--waveform-csv", o.waveform_csv, "best waveform as t_us,omega_mhz,delta_mhz");
  c->callback([&o, seed_opt] {
    const std::uint64_t seed = require_seed(seed_opt, o.seed, "for optimization");
    require_positive(o.max_rabi_mhz, "--max-rabi");
    require_positive(o.max_detuning_mhz, "--max-detuning");
    require_positive(o.duration_us, "--duration");
    require_positive(o.nn_mhz, "--nn");
    if (!(o.edge_mhz >= 0)) throw gf::InvalidArgument("--edge: must be >= 0");
    gf::OptimizerConfig cfg;
    cfg.n_basis = o.n_basis;
    cfg.bounds.max_rabi = io::mhz_to_angular(o.max_rabi_mhz);
    cfg.bounds.max_detuning = io::mhz_to_angular(o.max_detuning_mhz);
    cfg.duration = io::us_to_seconds(o.duration_us);
    cfg.samples = o.samples;
    cfg.restarts = o.restarts;
    cfg.evaluations_per_restart = o.evaluations;
    cfg.substeps = o.substeps;
    cfg.stop_fidelity = o.stop_fidelity;
    const auto spec = gf::InteractionSpec::triplet(io::mhz_to_angular(o.nn_mhz),
                                                   io::mhz_to_angular(o.edge_mhz));
    const auto rep = gf::optimize_ccz(spec, cfg, seed);
    const auto check = gf::simulate_qubit_gate(rep.best_waveform, spec, rep.stepping);
    const double verified = gf::gate_fidelity(check, gf::ccz_target());

    Json c = {{"preset", o.preset}, {"seed", seed}, {"restarts", o.restarts},
              {"evaluations", o.evaluations}, {"n-basis", o.n_basis},
              {"max-rabi", o.max_rabi_mhz}, {"max-detuning", o.max_detuning_mhz},
              {"duration", o.duration_us}, {"samples", o.samples}, {"substeps", o.substeps},
              {"nn", o.nn_mhz}, {"edge", o.edge_mhz}, {"stop-fidelity", o.stop_fidelity}};
    if (!o.out.empty()) c["out"] = o.out;
    if (!o.waveform_csv.empty()) c["waveform-csv"] = o.waveform_csv;
    Json j = envelope("optimize-ccz", c);
    j["best_fidelity"] = rep.best_fidelity;
    j["verified_fidelity"] = verified;
    j["max_leakage"] = check.max_leakage();
    j["evaluations"] = rep.evaluations;
    j["best_restart"] = rep.best_restart;
    j["restart_best"] = rep.restart_best;
    j["ansatz"] = {{"n_basis", rep.best_ansatz.n_basis},
                   {"coefficients", rep.best_ansatz.coefficients},
                   {"frequency_jitters", rep.best_ansatz.frequency_jitters},
                   {"ramp_fraction", rep.best_ansatz.ramp_fraction}};
    j["fidelity_metric"] = "|Tr(T^dagger G)|^2 / 64 against the CCZ target";
    if (!o.waveform_csv.empty()) io::write_text_file(o.waveform_csv, io::waveform_csv(rep.best_waveform));
    emit(j, o.out);
  });
}

// ---------------------------------------------------------------------------
// --config expansion: the file's "config" object (or the file itself) is
// turned into options placed before the user's own, which win.

std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t k = 1; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw gf::InvalidArgument("--config: missing file name");
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
                 args.begin() + static_cast<std::ptrdiff_t>(k + 2));
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (path.empty()) return args;
  if (args.size() < 2) throw gf::InvalidArgument("--config needs a subcommand");
  const Json file = io::read_json_file(path);
  const Json& cfg = file.is_object() && file.contains("config") ? file["config"] : file;
  if (!cfg.is_object()) throw gf::InvalidArgument(path + ": config: expected an object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command") {
      if (!value.is_string() || value.get<std::string>() != args[1]) {
        throw gf::InvalidArgument(path + ": config.command: " + value.dump() +
                                  " does not match subcommand '" + args[1] + "'");
      }
      continue;
    }
    if (value.is_null()) continue;
    if (value.is_object() || value.is_array()) {
      throw gf::InvalidArgument(path + ": config." + key + ": expected a scalar");
    }
    extra.push_back("--" + key);
    extra.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"gateforge: Rydberg-blockade gate design, simulation and analysis"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", "gateforge 1.0.0 (schema gateforge/v1)");
  app.add_option("--config", "JSON config or earlier output; its config echo is replayed");

  SolveCz solve;
  Calibrate calibrate;
  RunCircuit run_circuit;
  SimulateShots simulate;
  Analyze analyze;
  OptimizeCcz optimize;
  setup_solve_cz(app, solve);
  setup_calibrate(app, calibrate);
  setup_run_circuit(app, run_circuit);
  setup_simulate_shots(app, simulate);
  setup_analyze(app, analyze);
  setup_optimize_ccz(app, optimize);

  std::vector<std::string> args(argv, argv + argc);
  args = expand_config(std::move(args));
  // CLI11 takes the arguments in reverse order.
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gf::IoError& e) {
    std::cerr << "gateforge: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const gf::InvalidArgument& e) {
    std::cerr << "gateforge: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const gf::SolverFailure& e) {
    std::cerr << "gateforge: solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const gf::ProtocolViolation& e) {
    std::cerr << "gateforge: protocol violation: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "gateforge: " << e.what() << "\n";
    return 1;
  }
}
