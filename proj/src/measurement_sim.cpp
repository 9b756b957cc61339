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

#include "gateforge/measurement_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace gateforge {

namespace {

// Cumulative Born distribution over the 3^N basis.
std::vector<double> cumulative(const AtomState& s) {
  std::vector<double> c(s.dimension());
  double acc = 0;
  for (std::size_t k = 0; k < s.dimension(); ++k) {
    acc += std::norm(s.amplitudes()(static_cast<Eigen::Index>(k)));
    c[k] = acc;
  }
  for (auto& v : c) v /= acc;
  return c;
}

std::size_t draw(const std::vector<double>& cdf, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u(rng));
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

// Bit i set = atom i absent.
std::uint32_t readout(std::size_t index, int n, bool pushout) {
  std::uint32_t lost = 0;
  for (int i = 0; i < n; ++i) {
    const Level l = level_of(index, i, n);
    if (l == Level::kRydberg || (pushout && l == Level::kOne)) lost |= 1U << i;
  }
  return lost;
}

std::string to_pattern(std::uint32_t lost, int n) {
  std::string p(static_cast<std::size_t>(n), 'P');
  for (int i = 0; i < n; ++i) {
    if ((lost >> i) & 1U) p[static_cast<std::size_t>(i)] = 'L';
  }
  return p;
}

OutcomeCounts to_counts(const std::vector<std::uint64_t>& hist, int n) {
  OutcomeCounts out;
  for (std::size_t m = 0; m < hist.size(); ++m) {
    if (hist[m] > 0) out[to_pattern(static_cast<std::uint32_t>(m), n)] = hist[m];
  }
  return out;
}

}  // namespace

void NoiseConfig::validate() const {
  for (double p : {pumping_error, loss_before, loss_after}) {
    if (!(p >= 0 && p <= 1)) throw InvalidArgument("noise probabilities must lie in [0, 1]");
  }
}

OutcomeCounts sample_shots(const AtomState& final_state, const NoiseConfig& noise,
                           std::size_t n_shots, bool pushout) {
  noise.validate();
  if (n_shots < 1) throw InvalidArgument("need at least one shot");
  const int n = final_state.n_atoms();
  const double loss = std::min(1.0, noise.loss_before + noise.loss_after);
  std::mt19937_64 rng(derive_seed(noise.seed, pushout ? 0 : 1));
  std::bernoulli_distribution lose(loss);
  const auto cdf = cumulative(final_state);
  std::vector<std::uint64_t> hist(std::size_t{1} << n, 0);
  for (std::size_t s = 0; s < n_shots; ++s) {
    std::uint32_t lost = readout(draw(cdf, rng), n, pushout);
    if (loss > 0) {
      for (int i = 0; i < n; ++i) {
        if (lose(rng)) lost |= 1U << i;
      }
    }
    ++hist[lost];
  }
  return to_counts(hist, n);
}

ShotTables run_experiment(const Circuit& circuit, const GateContext& ctx,
                          const NoiseConfig& noise, std::size_t n_shots,
                          const std::optional<AtomState>& initial) {
  noise.validate();
  circuit.validate();
  if (n_shots < 1) throw InvalidArgument("need at least one shot");
  const int n = circuit.n_atoms;
  const AtomState start = initial ? *initial : AtomState::ground(n);
  // Final-state distributions per set of sitting-out atoms, built on demand.
  std::vector<std::vector<double>> cdfs(std::size_t{1} << n);
  auto cdf_for = [&](std::uint32_t mask) -> const std::vector<double>& {
    auto& c = cdfs[mask];
    if (c.empty()) c = cumulative(simulate(circuit, ctx, start, mask));
    return c;
  };

  ShotTables tables;
  tables.n_atoms = n;
  for (int table = 0; table < 2; ++table) {
    const bool pushout = table == 0;
    std::mt19937_64 rng(derive_seed(noise.seed, 16 + static_cast<std::uint64_t>(table)));
    std::bernoulli_distribution pumped(noise.pumping_error);
    std::bernoulli_distribution lost_before(noise.loss_before);
    std::bernoulli_distribution lost_after(noise.loss_after);
    std::vector<std::uint64_t> hist(std::size_t{1} << n, 0);
    for (std::size_t s = 0; s < n_shots; ++s) {
      std::uint32_t out_mask = 0, gone = 0;
      for (int i = 0; i < n; ++i) {
        if (noise.pumping_error > 0 && pumped(rng)) out_mask |= 1U << i;
        if (noise.loss_before > 0 && lost_before(rng)) gone |= 1U << i;
      }
      std::uint32_t lost = readout(draw(cdf_for(out_mask | gone), rng), n, pushout);
      lost |= gone;
      if (noise.loss_after > 0) {
        for (int i = 0; i < n; ++i) {
          if (lost_after(rng)) lost |= 1U << i;
        }
      }
      ++hist[lost];
    }
    (pushout ? tables.a_counts : tables.b_counts) = to_counts(hist, n);
  }
  return tables;
}

}  // namespace gateforge
