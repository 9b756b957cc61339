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

#include "gateforge/basis.hpp"

#include "gateforge/errors.hpp"

namespace gateforge {

std::size_t basis_index(std::string_view labels) {
  if (labels.empty() || labels.size() > static_cast<std::size_t>(kMaxAtoms)) {
    throw InvalidArgument("basis label must have 1..4 characters");
  }
  std::size_t index = 0;
  for (char c : labels) {
    std::size_t digit = 0;
    switch (c) {
      case '0': digit = 0; break;
      case '1': digit = 1; break;
      case 'r': case 'R': digit = 2; break;
      default:
        throw InvalidArgument(std::string("bad basis label character '") + c +
                              "'");
    }
    index = index * 3 + digit;
  }
  return index;
}

std::size_t bitstring_index(std::string_view bits) {
  if (bits.empty() || bits.size() > static_cast<std::size_t>(kMaxAtoms)) {
    throw InvalidArgument("bit string must have 1..4 characters");
  }
  std::size_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') {
      throw InvalidArgument(std::string("bad bit character '") + c + "'");
    }
    index = index * 2 + static_cast<std::size_t>(c - '0');
  }
  return index;
}

std::string basis_label(std::size_t index, int n_atoms) {
  std::string out(static_cast<std::size_t>(n_atoms), '0');
  for (int i = n_atoms - 1; i >= 0; --i, index /= 3) {
    out[static_cast<std::size_t>(i)] = "01r"[index % 3];
  }
  return out;
}

std::string bitstring(std::size_t qubit_index, int n_qubits) {
  std::string out(static_cast<std::size_t>(n_qubits), '0');
  for (int i = n_qubits - 1; i >= 0; --i, qubit_index >>= 1) {
    out[static_cast<std::size_t>(i)] = (qubit_index & 1U) ? '1' : '0';
  }
  return out;
}

}  // namespace gateforge
