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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace gateforge {

inline constexpr int kMaxAtoms = 4;

/// Per-atom levels. The numeric value is the ternary digit used in the
/// product basis.
enum class Level : std::uint8_t { kZero = 0, kOne = 1, kRydberg = 2 };

/// Product basis {|0>,|1>,|r>}^N. Atom 0 is the most significant digit.
constexpr std::size_t atom_dimension(int n_atoms) {
  std::size_t d = 1;
  for (int i = 0; i < n_atoms; ++i) d *= 3;
  return d;
}

constexpr std::size_t qubit_dimension(int n_qubits) {
  return std::size_t{1} << n_qubits;
}

constexpr Level level_of(std::size_t index, int atom, int n_atoms) {
  for (int i = n_atoms - 1; i > atom; --i) index /= 3;
  return static_cast<Level>(index % 3);
}

/// Index of a computational basis state (bit string, atom 0 = MSB) inside the
/// 3^N atom basis.
constexpr std::size_t qubit_to_atom_index(std::size_t qubit_index,
                                          int n_atoms) {
  std::size_t out = 0;
  for (int i = 0; i < n_atoms; ++i) {
    const std::size_t bit = (qubit_index >> (n_atoms - 1 - i)) & 1U;
    out = out * 3 + bit;
  }
  return out;
}

constexpr bool has_rydberg(std::size_t index, int n_atoms) {
  for (int i = 0; i < n_atoms; ++i, index /= 3) {
    if (index % 3 == 2) return true;
  }
  return false;
}

/// Parses "01r" style labels. Throws InvalidArgument on other characters.
std::size_t basis_index(std::string_view labels);

/// Parses a bit string such as "011" into a qubit index.
std::size_t bitstring_index(std::string_view bits);

std::string basis_label(std::size_t index, int n_atoms);
std::string bitstring(std::size_t qubit_index, int n_qubits);

}  // namespace gateforge
