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

#include "gateforge/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>

#include "gateforge/errors.hpp"

namespace gateforge::io {
namespace {

constexpr double kTwoPiMega = 2 * std::numbers::pi * 1e6;

std::string where(std::string_view context, std::string_view key) {
  std::string s(context);
  if (!key.empty()) s += "." + std::string(key);
  return s;
}

const Json& require(const Json& obj, std::string_view key, std::string_view context) {
  if (!obj.is_object()) throw InvalidArgument(std::string(context) + ": expected an object");
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw InvalidArgument(where(context, key) + ": missing field");
  return *it;
}

int int_field(const Json& obj, std::string_view key, std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_number_integer()) throw InvalidArgument(where(context, key) + ": expected an integer");
  return v.get<int>();
}

bool bool_or(const Json& obj, std::string_view key, std::string_view context, bool fallback) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) throw InvalidArgument(where(context, key) + ": expected true or false");
  return it->get<bool>();
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

OutcomeCounts counts_from_json(const Json& j, int n_atoms, const std::string& context) {
  if (!j.is_object()) throw InvalidArgument(context + ": expected an object of pattern counts");
  OutcomeCounts out;
  for (const auto& [pattern, count] : j.items()) {
    const std::string field = context + "." + pattern;
    if (static_cast<int>(pattern.size()) != n_atoms) {
      throw InvalidArgument(field + ": pattern length must equal n_atoms = " +
                            std::to_string(n_atoms));
    }
    for (char ch : pattern) {
      if (ch != 'P' && ch != 'L') throw InvalidArgument(field + ": pattern must use P and L");
    }
    if (!count.is_number_unsigned() && !(count.is_number_integer() && count.get<std::int64_t>() >= 0)) {
      throw InvalidArgument(field + ": count must be a non-negative integer");
    }
    out[pattern] += count.get<std::uint64_t>();
  }
  return out;
}

Json counts_to_json(const OutcomeCounts& c) {
  Json j = Json::object();
  for (const auto& [p, n] : c) j[p] = n;
  return j;
}

CircuitOp op_from_json(const Json& j, const std::string& ctx) {
  if (!j.is_object()) throw InvalidArgument(ctx + ": expected an object");
  const Json& name_json = require(j, "op", ctx);
  if (!name_json.is_string()) throw InvalidArgument(ctx + ".op: expected a string");
  const std::string name = name_json.get<std::string>();
  if (name == "x") return GlobalX{number_field(j, "theta", ctx)};
  if (name == "z") return LocalZ{number_field(j, "theta", ctx), int_field(j, "site", ctx)};
  if (name == "cz") return CzBlock{bool_or(j, "echo", ctx, true)};
  if (name == "ccz") return CczBlock{bool_or(j, "echo", ctx, true)};
  if (name == "light_shift") return LightShiftPhase{number_field(j, "theta", ctx)};
  if (name == "echo") return EchoMarker{};
  if (name == "pulse") {
    DrivePulse p;
    p.rabi = mhz_to_angular(number_field(j, "rabi_mhz", ctx));
    p.detuning = mhz_to_angular(optional_number(j, "detuning_mhz", ctx).value_or(0));
    p.phase = optional_number(j, "phase", ctx).value_or(0);
    p.duration = us_to_seconds(number_field(j, "duration_us", ctx));
    if (const auto it = j.find("site_rabi_scale"); it != j.end()) {
      if (!it->is_array()) throw InvalidArgument(ctx + ".site_rabi_scale: expected a list");
      for (const auto& v : *it) {
        if (!v.is_number()) throw InvalidArgument(ctx + ".site_rabi_scale: expected numbers");
        p.site_rabi_scale.push_back(v.get<double>());
      }
    }
    return RydbergPulse{p};
  }
  throw InvalidArgument(ctx + ".op: unknown op '" + name +
                        "' (expected x, z, cz, ccz, light_shift, echo or pulse)");
}

}  // namespace

double mhz_to_angular(double mhz) { return mhz * kTwoPiMega; }
double angular_to_mhz(double angular) { return angular / kTwoPiMega; }
double us_to_seconds(double us) { return us * 1e-6; }
double seconds_to_us(double seconds) { return seconds * 1e6; }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return os.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] " prefix.
    if (const auto p = what.find("] "); p != std::string::npos) what = what.substr(p + 2);
    // and its own position text, which the prefix below replaces.
    if (const auto p = what.find(": "); what.rfind("parse error at line", 0) == 0 &&
                                        p != std::string::npos) {
      what = what.substr(p + 2);
    }
    throw InvalidArgument(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + what);
  }
}

Json read_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

double number_field(const Json& obj, std::string_view key, std::string_view context) {
  const Json& v = require(obj, key, context);
  if (!v.is_number()) throw InvalidArgument(where(context, key) + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw InvalidArgument(where(context, key) + ": must be finite");
  return x;
}

std::optional<double> optional_number(const Json& obj, std::string_view key,
                                      std::string_view context) {
  if (!obj.is_object() || !obj.contains(std::string(key))) return std::nullopt;
  return number_field(obj, key, context);
}

Circuit circuit_from_json(const Json& j, std::optional<int> n_atoms) {
  Circuit c;
  const Json* ops = &j;
  if (j.is_object()) {
    c.n_atoms = int_field(j, "n_atoms", "circuit");
    if (n_atoms && *n_atoms != c.n_atoms) {
      throw InvalidArgument("circuit.n_atoms: " + std::to_string(c.n_atoms) +
                            " does not match the input width " + std::to_string(*n_atoms));
    }
    ops = &require(j, "ops", "circuit");
  } else if (n_atoms) {
    c.n_atoms = *n_atoms;
  } else {
    throw InvalidArgument("circuit: a bare op list needs the atom count (give an input bit string)");
  }
  if (!ops->is_array()) throw InvalidArgument("circuit.ops: expected a list");
  if (c.n_atoms < 1 || c.n_atoms > kMaxAtoms) {
    throw InvalidArgument("circuit.n_atoms: must be in [1, " + std::to_string(kMaxAtoms) + "]");
  }
  for (std::size_t k = 0; k < ops->size(); ++k) {
    const std::string ctx = "circuit.ops[" + std::to_string(k) + "]";
    CircuitOp op = op_from_json((*ops)[k], ctx);
    try {
      Circuit{c.n_atoms, {op}}.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(ctx + ": " + e.what());
    }
    c.ops.push_back(std::move(op));
  }
  return c;
}

Json circuit_to_json(const Circuit& circuit) {
  Json ops = Json::array();
  for (const auto& op : circuit.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, GlobalX>) {
            ops.push_back({{"op", "x"}, {"theta", o.theta}});
          } else if constexpr (std::is_same_v<T, LocalZ>) {
            ops.push_back({{"op", "z"}, {"theta", o.theta}, {"site", o.site}});
          } else if constexpr (std::is_same_v<T, CzBlock>) {
            ops.push_back({{"op", "cz"}, {"echo", o.echo}});
          } else if constexpr (std::is_same_v<T, CczBlock>) {
            ops.push_back({{"op", "ccz"}, {"echo", o.echo}});
          } else if constexpr (std::is_same_v<T, LightShiftPhase>) {
            ops.push_back({{"op", "light_shift"}, {"theta", o.theta}});
          } else if constexpr (std::is_same_v<T, EchoMarker>) {
            ops.push_back({{"op", "echo"}});
          } else {
            Json p = pulse_to_json(o.pulse);
            p["op"] = "pulse";
            ops.push_back(p);
          }
        },
        op);
  }
  return {{"n_atoms", circuit.n_atoms}, {"ops", ops}};
}

Json shot_tables_to_json(const ShotTables& tables) {
  return {{"schema", kSchema},
          {"n_atoms", tables.n_atoms},
          {"pushout", counts_to_json(tables.a_counts)},
          {"no_pushout", counts_to_json(tables.b_counts)}};
}

ShotTables shot_tables_from_json(const Json& j, std::string_view context) {
  const std::string ctx(context);
  if (!j.is_object()) throw InvalidArgument(ctx + ": expected an object");
  if (const auto it = j.find("schema"); it != j.end() && *it != kSchema) {
    throw InvalidArgument(ctx + ".schema: unsupported schema " + it->dump());
  }
  ShotTables t;
  t.n_atoms = int_field(j, "n_atoms", ctx);
  if (t.n_atoms < 1 || t.n_atoms > kMaxAtoms) {
    throw InvalidArgument(ctx + ".n_atoms: must be in [1, " + std::to_string(kMaxAtoms) + "]");
  }
  t.a_counts = counts_from_json(require(j, "pushout", ctx), t.n_atoms, ctx + ".pushout");
  if (const auto it = j.find("no_pushout"); it != j.end()) {
    t.b_counts = counts_from_json(*it, t.n_atoms, ctx + ".no_pushout");
  }
  if (t.a_total() == 0) throw InvalidArgument(ctx + ".pushout: table is empty");
  return t;
}

Json cz_parameters_to_json(const CzParameters& p) {
  Json j = {{"detuning_ratio", p.detuning_ratio},
            {"phase_jump", p.phase_jump},
            {"pulse_area", p.pulse_area},
            {"total_area", p.total_area()},
            {"total_area_over_pi", p.total_area() / std::numbers::pi},
            {"single_particle_phase", p.single_particle_phase},
            {"doubly_occupied_phase", p.doubly_occupied_phase}};
  if (std::isfinite(p.interaction_ratio)) {
    j["interaction_ratio"] = p.interaction_ratio;
  } else {
    j["interaction_ratio"] = "inf";
  }
  return j;
}

Json pulse_to_json(const DrivePulse& pulse) {
  Json j = {{"rabi_mhz", angular_to_mhz(pulse.rabi)},
            {"detuning_mhz", angular_to_mhz(pulse.detuning)},
            {"phase", pulse.phase},
            {"duration_us", seconds_to_us(pulse.duration)}};
  if (!pulse.site_rabi_scale.empty()) j["site_rabi_scale"] = pulse.site_rabi_scale;
  return j;
}

Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

Json real_matrix_to_json(const RMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::string waveform_csv(const Waveform& wf) {
  std::ostringstream os;
  os << "t_us,omega_mhz,delta_mhz\n";
  for (const auto& s : wf.samples()) {
    os << fmt(seconds_to_us(s.time)) << ',' << fmt(angular_to_mhz(s.rabi)) << ','
       << fmt(angular_to_mhz(s.detuning)) << '\n';
  }
  return os.str();
}

std::string scan_csv(const ScanResult& scan, std::string_view value_column) {
  std::ostringstream os;
  os << value_column << ",return_probability\n";
  for (std::size_t k = 0; k < scan.values.size(); ++k) {
    os << fmt(scan.values[k]) << ',' << fmt(scan.return_probability[k]) << '\n';
  }
  return os.str();
}

}  // namespace gateforge::io
