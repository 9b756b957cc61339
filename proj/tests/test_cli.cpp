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

// Runs the gateforge executable as a child process.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>

#include "gateforge/circuits.hpp"
#include "gateforge/cz_protocol.hpp"
#include "gateforge/io.hpp"

using namespace gateforge;
using io::Json;
using std::numbers::pi;

namespace {

namespace fs = std::filesystem;

fs::path workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::path(GATEFORGE_TEST_TMP) / "cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

struct Run {
  int code = -1;
  std::string out;
  std::string err;
  Json json() const { return io::parse_json(out, "stdout"); }
};

Run cli(const std::string& args) {
  const std::string out = path("stdout.txt");
  const std::string err = path("stderr.txt");
  const std::string cmd = std::string(GATEFORGE_CLI) + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = io::read_text_file(out);
  r.err = io::read_text_file(err);
  return r;
}

Json file_json(const std::string& name) { return io::read_json_file(path(name)); }

}  // namespace

TEST_CASE("solve-cz reproduces the blockaded parameters") {
  const Run r = cli("solve-cz");
  REQUIRE(r.code == 0);
  const Json j = r.json();
  CHECK(j["schema"] == "gateforge/v1");
  CHECK(j["parameters"]["detuning_ratio"].get<double>() == doctest::Approx(0.377371).epsilon(1e-4 / 0.377371));
  CHECK(std::abs(j["parameters"]["phase_jump"].get<double>() - 3.90242) < 1e-4);
  CHECK(std::abs(j["parameters"]["pulse_area"].get<double>() - 4.29268) < 1e-4);
  CHECK(j["parameters"]["interaction_ratio"] == "inf");
  CHECK(j["simulated_fidelity"].get<double>() >= 1 - 1e-9);
}

TEST_CASE("solve-cz rejects a zero Rabi frequency") {
  const Run r = cli("solve-cz --rabi 0");
  CHECK(r.code == 2);
  CHECK(r.err.find("--rabi") != std::string::npos);
  CHECK(cli("solve-cz --interaction -3").code == 2);
}

TEST_CASE("solve-cz failure exits with the solver code") {
  const Run r = cli("solve-cz --interaction 1");
  CHECK(r.code == 3);
  CHECK(!r.err.empty());
}

TEST_CASE("MHz inputs are converted exactly once") {
  const Run r = cli("solve-cz --rabi 3.5 --interaction 24");
  REQUIRE(r.code == 0);
  const Json j = r.json();
  const double rabi = 2 * pi * 3.5e6;
  const CzParameters lib = finite_blockade_adjust(rabi, 2 * pi * 24e6);
  CHECK(j["parameters"]["detuning_ratio"].get<double>() == doctest::Approx(lib.detuning_ratio).epsilon(1e-12));
  CHECK(j["parameters"]["interaction_ratio"].get<double>() == doctest::Approx(24.0 / 3.5).epsilon(1e-12));
  const auto pulses = lib.pulses(rabi);
  CHECK(j["pulses"][0]["duration_us"].get<double>() == doctest::Approx(pulses[0].duration * 1e6).epsilon(1e-12));
  CHECK(j["pulses"][0]["detuning_mhz"].get<double>() ==
        doctest::Approx(lib.detuning_ratio * 3.5).epsilon(1e-12));
  CHECK(j["simulated_fidelity"].get<double>() >= 0.999);
  CHECK(j["bell_fidelity"].get<double>() >= 0.999);
  // The hardware preset is the same run.
  const Json p = cli("solve-cz --preset paper").json();
  CHECK(p["parameters"] == j["parameters"]);
}

TEST_CASE("run-circuit bell preset gives the exact Bell state") {
  const Run r = cli("run-circuit --preset bell --shots 0");
  REQUIRE(r.code == 0);
  const Json j = r.json();
  CHECK(j["fidelity"].get<double>() == doctest::Approx(1).epsilon(1e-12));
  CHECK(j["populations"]["00"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j["amplitudes"].size() == 9);
  CHECK(j["config"]["interaction"] == "inf");
}

TEST_CASE("run-circuit with a circuit file matches the library") {
  const Circuit c{2, {GlobalX{0.7}, LocalZ{1.1, 1}, CzBlock{true}, GlobalX{pi / 3}}};
  io::write_text_file(path("circ.json"), io::circuit_to_json(c).dump());
  const Run r = cli("run-circuit --circuit " + path("circ.json") + " --input 10 --rabi 3.5 --interaction 24");
  REQUIRE(r.code == 0);
  const Json j = r.json();
  const double rabi = 2 * pi * 3.5e6, v = 2 * pi * 24e6;
  const GateContext ctx = make_gate_context(2, rabi, v, finite_blockade_adjust(rabi, v));
  const AtomState psi = simulate(c, ctx, AtomState::from_qubit_index(2, 2));
  for (std::size_t k = 0; k < psi.dimension(); ++k) {
    const auto& a = j["amplitudes"][basis_label(k, 2)];
    const Complex z = psi.amplitudes()(static_cast<Eigen::Index>(k));
    CHECK(std::abs(Complex(a[0].get<double>(), a[1].get<double>()) - z) < 1e-12);
  }
  CHECK(cli("run-circuit --circuit " + path("circ.json") + " --input 101").code == 2);
}

TEST_CASE("cnot and toffoli presets report their truth tables") {
  const Json cn = cli("run-circuit --preset cnot --input 11").json();
  CHECK(cn["target"] == "10");
  CHECK(cn["fidelity"].get<double>() == doctest::Approx(1).epsilon(1e-12));
  CHECK(cn["truth_table"]["fidelity"].get<double>() == doctest::Approx(1).epsilon(1e-12));
  const Json tf = cli("run-circuit --preset toffoli --input 000").json();
  CHECK(tf["truth_table"]["fidelity"].get<double>() == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("simulate-shots then analyze recovers the Bell fidelity") {
  REQUIRE(cli("simulate-shots --preset bell --spam default --shots 100000 --seed 11 --out " + path("bell.json"))
              .code == 0);
  const Json shots = file_json("bell.json");
  CHECK(shots["kind"] == "bell");
  CHECK(shots["populations"]["schema"] == "gateforge/v1");
  const Run r = cli("analyze --shots " + path("bell.json") + " --seed 3 --report " + path("bell_report.json"));
  REQUIRE(r.code == 0);
  const Json rep = file_json("bell_report.json");
  const double f = rep["bell"]["corrected_fidelity"].get<double>();
  const double se = rep["bell"]["corrected_fidelity_se"].get<double>();
  CHECK(se > 0);
  CHECK(std::abs(f - 1) < 3 * se);
  CHECK(rep["bell"]["fidelity_lower_bound"].get<double>() < f);
}

TEST_CASE("truth-table and tomography shots analyze") {
  REQUIRE(cli("simulate-shots --preset cnot --shots 20000 --seed 4 --out " + path("cnot.json")).code == 0);
  const Json cn = cli("analyze --shots " + path("cnot.json") + " --resamples 0").json();
  CHECK(cn["fidelity_lower_bound"].get<double>() > 0.97);
  CHECK(cn["corrected_fidelity"].get<double>() >= cn["fidelity_lower_bound"].get<double>());
  REQUIRE(cli("simulate-shots --preset limited-tomography --shots 20000 --seed 4 --spam none --out " +
              path("lt.json"))
              .code == 0);
  const Json lt = cli("analyze --shots " + path("lt.json") + " --resamples 0").json();
  CHECK(lt["fidelity_lower_bound"].get<double>() == doctest::Approx(1).epsilon(1e-12));
  CHECK(lt["pair_constraint"]["max_bound"].get<double>() == 0);
}

TEST_CASE("randomness needs an explicit seed") {
  CHECK(cli("simulate-shots --preset bell --shots 10").code == 2);
  CHECK(cli("run-circuit --preset bell --shots 10").code == 2);
  CHECK(cli("optimize-ccz --restarts 1 --evaluations 5").code == 2);
  CHECK(cli("calibrate --kind xi --shots 10 --csv " + path("x.csv")).code == 2);
  REQUIRE(cli("simulate-shots --preset bell --shots 1000 --seed 1 --out " + path("small.json")).code == 0);
  const Run r = cli("analyze --shots " + path("small.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("--seed") != std::string::npos);
}

TEST_CASE("same seed, same artifact") {
  const Run a = cli("simulate-shots --preset cnot --shots 500 --seed 9");
  const Run b = cli("simulate-shots --preset cnot --shots 500 --seed 9");
  const Run c = cli("simulate-shots --preset cnot --shots 500 --seed 10");
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("optimize-ccz is reproducible from its config echo") {
  const std::string args = "optimize-ccz --preset paper --seed 7 --restarts 2 --evaluations 40";
  REQUIRE(cli(args + " --out " + path("opt1.json") + " --waveform-csv " + path("wf.csv")).code == 0);
  const Json first = file_json("opt1.json");
  CHECK(first["config"]["seed"] == 7);
  CHECK(first["config"]["max-rabi"] == 5.0);
  CHECK(std::abs(first["best_fidelity"].get<double>() - first["verified_fidelity"].get<double>()) < 1e-9);
  REQUIRE(cli("optimize-ccz --config " + path("opt1.json") + " --out " + path("opt2.json")).code == 0);
  const Json second = file_json("opt2.json");
  CHECK(second["best_fidelity"] == first["best_fidelity"]);
  CHECK(second["ansatz"] == first["ansatz"]);
  CHECK(second["config"]["restarts"] == 2);
  // Explicit options override the file.
  const Json third = cli("optimize-ccz --config " + path("opt1.json") + " --seed 8 --out " + path("opt3.json")).code == 0
                         ? file_json("opt3.json")
                         : Json{};
  CHECK(third["config"]["seed"] == 8);
  const std::string csv = io::read_text_file(path("wf.csv"));
  CHECK(csv.rfind("t_us,omega_mhz,delta_mhz\n", 0) == 0);
  // A config from another command is refused.
  CHECK(cli("solve-cz --config " + path("opt1.json")).code == 2);
}

TEST_CASE("calibrate writes a curve with a header") {
  const Run r = cli("calibrate --kind tau --rabi 3.5 --csv " + path("tau.csv"));
  REQUIRE(r.code == 0);
  const Json j = r.json();
  CHECK(j["optimum"].get<double>() == doctest::Approx(j["solver_value"].get<double>()).epsilon(1e-4));
  std::istringstream in(io::read_text_file(path("tau.csv")));
  std::string header;
  std::getline(in, header);
  CHECK(header == "tau_us,return_probability");
  const Json xi = cli("calibrate --kind xi --csv " + path("xi.csv")).json();
  CHECK(std::abs(xi["optimum"].get<double>() - 3.90242) < 1e-4);
}

TEST_CASE("malformed inputs give diagnostics and exit codes") {
  io::write_text_file(path("bad.json"), "{\n  \"n_atoms\": 2,\n  \"ops\": [\n    {\"op\": \"x\",}\n  ]\n}\n");
  Run r = cli("run-circuit --circuit " + path("bad.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.json:4:") != std::string::npos);

  io::write_text_file(path("field.json"), R"({"n_atoms": 2, "ops": [{"op": "z", "theta": 1}]})");
  r = cli("run-circuit --circuit " + path("field.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("circuit.ops[0].site") != std::string::npos);

  io::write_text_file(path("tables.json"), R"({"schema": "gateforge/v1", "n_atoms": 2, "pushout": {"PQ": 4}})");
  r = cli("analyze --resamples 0 --shots " + path("tables.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("shots.pushout.PQ") != std::string::npos);

  r = cli("analyze --resamples 0 --shots " + path("missing.json"));
  CHECK(r.code == 4);
  CHECK(cli("simulate-shots --preset bell --shots 10 --seed 1 --out /nonexistent/dir/x.json").code == 4);
  CHECK(cli("no-such-command").code == 2);
  CHECK(cli("run-circuit --preset bell --shots -4").code == 2);
}

TEST_CASE("bare shot tables analyze to leakage bounds") {
  io::write_text_file(path("plain.json"),
                      R"({"schema": "gateforge/v1", "n_atoms": 2, "pushout": {"PP": 50, "LL": 50},
                          "no_pushout": {"PP": 98, "PL": 2}})");
  const Run r = cli("analyze --resamples 0 --shots " + path("plain.json"));
  REQUIRE(r.code == 0);
  const Json j = r.json();
  CHECK(j["populations"]["raw"]["11"].get<double>() == doctest::Approx(0.5));
  CHECK(j["populations"]["lower_bounds"]["11"].get<double>() < 0.5);
}
