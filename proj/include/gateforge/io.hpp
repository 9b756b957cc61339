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
 * File formats: schema-versioned JSON for circuits, shot tables, gate
 * parameters and matrices; CSV for waveforms and scan curves.
 *
 * Files use MHz and microseconds. mhz_to_angular and us_to_seconds are the
 * only conversions into library units.
 */
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "gateforge/circuits.hpp"
#include "gateforge/cz_protocol.hpp"
#include "gateforge/dynamics.hpp"
#include "gateforge/metrology.hpp"

namespace gateforge::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchema = "gateforge/v1";

double mhz_to_angular(double mhz);
double angular_to_mhz(double angular);
double us_to_seconds(double us);
double seconds_to_us(double seconds);

/// Throws IoError when the file cannot be opened, read or written.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

/// Parse errors become InvalidArgument("<source>:<line>:<column>: ...").
Json parse_json(const std::string& text, const std::string& source);
Json read_json_file(const std::string& path);

/// Typed field access with "<context>.<key>" in the error message.
double number_field(const Json& obj, std::string_view key, std::string_view context);
std::optional<double> optional_number(const Json& obj, std::string_view key,
                                      std::string_view context);

/// Accepts a bare list of ops (then `n_atoms` is required) or an object
/// {"n_atoms": N, "ops": [...]}. Op names: x, z, cz, ccz, light_shift,
/// echo, pulse. Angles in radians; pulse fields rabi_mhz, detuning_mhz,
/// phase, duration_us.
Circuit circuit_from_json(const Json& j, std::optional<int> n_atoms = std::nullopt);
Json circuit_to_json(const Circuit& circuit);

Json shot_tables_to_json(const ShotTables& tables);
ShotTables shot_tables_from_json(const Json& j, std::string_view context = "shots");

Json cz_parameters_to_json(const CzParameters& params);
Json pulse_to_json(const DrivePulse& pulse);
/// Row-major list of rows, each entry an [re, im] pair.
Json matrix_to_json(const CMatrix& m);
Json real_matrix_to_json(const RMatrix& m);

/// Header "t_us,omega_mhz,delta_mhz".
std::string waveform_csv(const Waveform& wf);
/// Header "<value_column>,return_probability".
std::string scan_csv(const ScanResult& scan, std::string_view value_column);

}  // namespace gateforge::io
