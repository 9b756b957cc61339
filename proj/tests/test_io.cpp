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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "gateforge/errors.hpp"
#include "gateforge/io.hpp"

using namespace gateforge;
using io::Json;
using std::numbers::pi;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

// Structural equality with a relative tolerance on numbers; MHz and us
// conversions are not exact in the last bit.
bool close(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    return std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x));
  }
  if (a.type() != b.type() || a.size() != b.size()) return false;
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k) || !close(v, b[k])) return false;
    }
    return true;
  }
  if (a.is_array()) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!close(a[k], b[k])) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace

TEST_CASE("unit conversion") {
  CHECK(io::mhz_to_angular(1) == doctest::Approx(2 * pi * 1e6));
  CHECK(io::angular_to_mhz(io::mhz_to_angular(3.5)) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(io::us_to_seconds(1.2) == doctest::Approx(1.2e-6));
  CHECK(io::seconds_to_us(io::us_to_seconds(0.39)) == doctest::Approx(0.39).epsilon(1e-15));
}

TEST_CASE("circuit JSON round trip over random circuits") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> angle(-2 * pi, 2 * pi);
  for (int trial = 0; trial < 200; ++trial) {
    Circuit c;
    c.n_atoms = 2 + static_cast<int>(rng() % 2);
    const int len = static_cast<int>(rng() % 12);
    for (int k = 0; k < len; ++k) {
      switch (rng() % 7) {
        case 0: c.ops.push_back(GlobalX{angle(rng)}); break;
        case 1: c.ops.push_back(LocalZ{angle(rng), static_cast<int>(rng() % c.n_atoms)}); break;
        case 2: c.ops.push_back(CzBlock{(rng() % 2) == 0}); break;
        case 3: c.ops.push_back(CczBlock{(rng() % 2) == 0}); break;
        case 4: c.ops.push_back(LightShiftPhase{angle(rng)}); break;
        case 5: c.ops.push_back(EchoMarker{}); break;
        default: {
          DrivePulse p{io::mhz_to_angular(3.5), io::mhz_to_angular(angle(rng)), angle(rng), 1e-7};
          c.ops.push_back(RydbergPulse{p});
        }
      }
    }
    const Json j = io::circuit_to_json(c);
    const Circuit back = io::circuit_from_json(io::parse_json(j.dump(), "mem"));
    REQUIRE(back.n_atoms == c.n_atoms);
    REQUIRE(back.ops.size() == c.ops.size());
    CHECK(close(io::circuit_to_json(back), j));
  }
}

TEST_CASE("bare op lists take the width from the caller") {
  const Json j = io::parse_json(R"([{"op": "x", "theta": 1.5}, {"op": "z", "theta": 3.14, "site": 1}])", "mem");
  const Circuit c = io::circuit_from_json(j, 2);
  CHECK(c.n_atoms == 2);
  CHECK(std::get<LocalZ>(c.ops[1]).site == 1);
  CHECK_THROWS_AS(io::circuit_from_json(j), InvalidArgument);
  const Json obj = {{"n_atoms", 3}, {"ops", j}};
  CHECK_THROWS_AS(io::circuit_from_json(obj, 2), InvalidArgument);
}

TEST_CASE("malformed circuits name the field") {
  auto msg = [](const std::string& text) {
    return message_of([&] { io::circuit_from_json(io::parse_json(text, "c.json"), 2); });
  };
  CHECK(msg(R"([{"op": "x"}])").find("circuit.ops[0].theta: missing field") != std::string::npos);
  CHECK(msg(R"([{"op": "x", "theta": "a"}])").find("ops[0].theta: expected a number") != std::string::npos);
  CHECK(msg(R"([{"op": "x", "theta": 1}, {"op": "z", "theta": 1, "site": 5}])")
            .find("circuit.ops[1]") != std::string::npos);
  CHECK(msg(R"([{"op": "cz", "echo": 1}])").find("ops[0].echo") != std::string::npos);
  CHECK(msg(R"([{"theta": 1}])").find("ops[0].op: missing field") != std::string::npos);
  CHECK(msg(R"([{"op": "spin"}])").find("unknown op 'spin'") != std::string::npos);
  CHECK(msg(R"({"n_atoms": 9, "ops": []})").find("circuit.n_atoms") != std::string::npos);
}

TEST_CASE("JSON syntax errors carry line and column") {
  const std::string text = "{\n  \"a\": 1,\n  \"b\": ]\n}";
  const std::string m = message_of([&] { io::parse_json(text, "f.json"); });
  CHECK(m.rfind("f.json:3:", 0) == 0);
  CHECK_THROWS_AS(io::parse_json(text, "f.json"), InvalidArgument);
}

TEST_CASE("shot tables JSON") {
  ShotTables t;
  t.n_atoms = 2;
  t.a_counts = {{"PP", 40}, {"LL", 55}, {"PL", 5}};
  t.b_counts = {{"PP", 97}, {"LP", 3}};
  const Json j = io::shot_tables_to_json(t);
  CHECK(j["schema"] == "gateforge/v1");
  CHECK(j["pushout"]["LL"] == 55);
  const ShotTables back = io::shot_tables_from_json(io::parse_json(j.dump(), "mem"));
  CHECK(back.a_counts == t.a_counts);
  CHECK(back.b_counts == t.b_counts);

  auto msg = [](const std::string& text) {
    return message_of([&] { io::shot_tables_from_json(io::parse_json(text, "s.json")); });
  };
  CHECK(msg(R"({"n_atoms": 2, "pushout": {"PPP": 1}})").find("shots.pushout.PPP") != std::string::npos);
  CHECK(msg(R"({"n_atoms": 2, "pushout": {"PP": -1}})").find("non-negative") != std::string::npos);
  CHECK(msg(R"({"n_atoms": 2, "pushout": {"PP": 1.5}})").find("non-negative") != std::string::npos);
  CHECK(msg(R"({"n_atoms": 2, "pushout": {}})").find("empty") != std::string::npos);
  CHECK(msg(R"({"pushout": {"PP": 1}})").find("shots.n_atoms: missing") != std::string::npos);
  CHECK(msg(R"({"schema": "other/v9", "n_atoms": 2, "pushout": {"PP": 1}})").find("schema") !=
        std::string::npos);
  // no_pushout is optional.
  CHECK(io::shot_tables_from_json(Json{{"n_atoms", 1}, {"pushout", {{"P", 3}}}}).b_total() == 0);
}

TEST_CASE("CZ parameters, pulses and matrices") {
  const auto p = solve_cz_parameters();
  const Json j = io::cz_parameters_to_json(p);
  CHECK(j["detuning_ratio"].get<double>() == p.detuning_ratio);
  CHECK(j["interaction_ratio"] == "inf");
  CHECK(j["total_area_over_pi"].get<double>() == doctest::Approx(2.7328).epsilon(1e-4));
  const auto pulses = p.pulses(io::mhz_to_angular(3.5));
  const Json pj = io::pulse_to_json(pulses[1]);
  CHECK(pj["rabi_mhz"].get<double>() == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(pj["duration_us"].get<double>() ==
        doctest::Approx(p.pulse_area / (2 * pi * 3.5)).epsilon(1e-14));

  CMatrix m(2, 2);
  m << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(7, 8);
  const Json mj = io::matrix_to_json(m);
  CHECK(mj[0][1][0] == 3.0);
  CHECK(mj[1][0][1] == 6.0);
}

TEST_CASE("CSV exports carry a header and round-trip values") {
  const Waveform wf = Waveform::constant(io::mhz_to_angular(2.0), io::mhz_to_angular(-1.0), 1.2e-6, 4);
  std::istringstream in(io::waveform_csv(wf));
  std::string line;
  std::getline(in, line);
  CHECK(line == "t_us,omega_mhz,delta_mhz");
  int rows = 0;
  while (std::getline(in, line)) {
    double t = 0, om = 0, de = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ls(line);
    ls >> t >> c1 >> om >> c2 >> de;
    CHECK(om == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(de == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(t == doctest::Approx(0.4 * rows).epsilon(1e-12));
    ++rows;
  }
  CHECK(rows == 4);

  ScanResult r;
  r.values = {0.1, 0.2};
  r.return_probability = {0.25, 0.5};
  CHECK(io::scan_csv(r, "xi_rad") == "xi_rad,return_probability\n0.10000000000000001,0.25\n"
                                     "0.20000000000000001,0.5\n");
}

TEST_CASE("file errors are I/O errors") {
  CHECK_THROWS_AS(io::read_text_file("/nonexistent/dir/x.json"), IoError);
  CHECK_THROWS_AS(io::write_text_file("/nonexistent/dir/x.json", "{}"), IoError);
}
