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

#include "gateforge/ccz_control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

#include "gateforge/random.hpp"

namespace gateforge {

namespace {

constexpr double kPi = std::numbers::pi;

double envelope(double t, double total, double ramp_fraction) {
  const double ramp = ramp_fraction * total;
  if (ramp <= 0) return (t <= 0 || t >= total) ? 0.0 : 1.0;
  if (t < ramp) {
    const double s = std::sin(0.5 * kPi * t / ramp);
    return s * s;
  }
  if (t > total - ramp) {
    const double s = std::sin(0.5 * kPi * (total - t) / ramp);
    return s * s;
  }
  return 1.0;
}

// Nelder-Mead minimizer with an evaluation budget.
struct NelderMead {
  std::function<double(const std::vector<double>&)> f;
  int budget = 0;
  int used = 0;

  double eval(const std::vector<double>& x) {
    ++used;
    return f(x);
  }

  std::pair<std::vector<double>, double> run(std::vector<double> x0, double step) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> val(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
    for (std::size_t i = 0; i <= n && used < budget; ++i) val[i] = eval(pts[i]);
    std::vector<std::size_t> order(n + 1);
    auto combine = [&](const std::vector<double>& c, const std::vector<double>& p,
                       double w) {
      std::vector<double> out(n);
      for (std::size_t j = 0; j < n; ++j) out[j] = c[j] + w * (p[j] - c[j]);
      return out;
    };
    while (used < budget) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
      const std::size_t best = order.front(), worst = order.back(),
                        second = order[n - 1];
      if (val[worst] - val[best] < 1e-12) break;
      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[order[i]][j] / double(n);
      }
      const auto xr = combine(centroid, pts[worst], -1.0);
      const double fr = eval(xr);
      if (fr < val[best]) {
        if (used >= budget) {
          pts[worst] = xr;
          val[worst] = fr;
          break;
        }
        const auto xe = combine(centroid, pts[worst], -2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[worst] = xe;
          val[worst] = fe;
        } else {
          pts[worst] = xr;
          val[worst] = fr;
        }
      } else if (fr < val[second]) {
        pts[worst] = xr;
        val[worst] = fr;
      } else {
        const bool outside = fr < val[worst];
        const auto xc = combine(centroid, outside ? xr : pts[worst], 0.5);
        if (used >= budget) break;
        const double fc = eval(xc);
        if (fc < std::min(fr, val[worst])) {
          pts[worst] = xc;
          val[worst] = fc;
        } else {
          for (std::size_t i = 1; i <= n && used < budget; ++i) {
            auto& p = pts[order[i]];
            p = combine(pts[best], p, 0.5);
            val[order[i]] = eval(p);
          }
        }
      }
    }
    const auto it = std::min_element(val.begin(), val.end());
    return {pts[static_cast<std::size_t>(it - val.begin())], *it};
  }
};

}  // namespace

QubitGate ccz_target() {
  CVector d(8);
  d << 1, -1, -1, -1, -1, 1, -1, 1;
  return QubitGate::diagonal(d);
}

QubitGate canonical_ccz() {
  CVector d = CVector::Ones(8);
  d(7) = -1;
  return QubitGate::diagonal(d);
}

QubitGate local_pulse_ccz_reference(const InteractionSpec& spec, double rabi) {
  if (spec.n_atoms() != 3) throw InvalidArgument("CCZ reference needs three atoms");
  if (!(rabi > 0)) throw InvalidArgument("Rabi frequency must be positive");
  const DrivePulse edges{rabi, 0, 0, kPi / rabi, {1.0, 0.0, 1.0}};
  const DrivePulse middle{rabi, 0, 0, 2 * kPi / rabi, {0.0, 1.0, 0.0}};
  const std::vector<DrivePulse> seq{edges, middle, edges};
  return simulate_qubit_gate<double>(seq, spec);
}

void ControlAnsatz::validate() const {
  if (n_basis < 0) throw InvalidArgument("n_basis must be >= 0");
  if (coefficients.size() != parameter_count(n_basis)) {
    throw InvalidArgument("coefficient vector has the wrong length");
  }
  if (frequency_jitters.size() != 2 * static_cast<std::size_t>(n_basis)) {
    throw InvalidArgument("need one frequency jitter per basis function and channel");
  }
  if (!(duration > 0) || samples < 2) {
    throw InvalidArgument("ansatz needs a positive duration and >= 2 samples");
  }
  if (!(bounds.max_rabi >= 0) || !(bounds.max_detuning >= 0)) {
    throw InvalidArgument("control bounds must be non-negative");
  }
  if (ramp_fraction < 0 || ramp_fraction > 0.5) {
    throw InvalidArgument("ramp fraction must be in [0, 0.5]");
  }
}

Waveform render_waveform(const ControlAnsatz& a) {
  a.validate();
  const auto n = static_cast<std::size_t>(a.n_basis);
  const double T = a.duration;
  std::vector<WaveformSample<double>> out;
  out.reserve(a.samples);
  for (std::size_t k = 0; k < a.samples; ++k) {
    const double t = T * static_cast<double>(k) / static_cast<double>(a.samples - 1);
    double om = a.coefficients[0];
    double de = a.coefficients[1];
    for (std::size_t j = 0; j < n; ++j) {
      const double wr = 2 * kPi * (static_cast<double>(j + 1) + a.frequency_jitters[j]) / T;
      const double wd =
          2 * kPi * (static_cast<double>(j + 1) + a.frequency_jitters[n + j]) / T;
      om += a.coefficients[2 + 2 * j] * std::sin(wr * t) +
            a.coefficients[3 + 2 * j] * std::cos(wr * t);
      de += a.coefficients[2 + 2 * n + 2 * j] * std::sin(wd * t) +
            a.coefficients[3 + 2 * n + 2 * j] * std::cos(wd * t);
    }
    om = std::clamp(envelope(t, T, a.ramp_fraction) * om, 0.0, a.bounds.max_rabi);
    de = std::clamp(de, -a.bounds.max_detuning, a.bounds.max_detuning);
    out.push_back({t, om, de});
  }
  // The ramps already vanish at the ends; pin them against rounding.
  out.front().rabi = 0;
  out.back().rabi = 0;
  return Waveform(std::move(out));
}

QubitGate waveform_gate(const Waveform& wf, const InteractionSpec& spec,
                        WaveformStepping stepping) {
  return rydberg_phase_gate(wf, spec, stepping);
}

OptimizationReport optimize_ccz(const InteractionSpec& spec,
                                const OptimizerConfig& cfg, std::uint64_t seed) {
  if (spec.n_atoms() != 3) throw InvalidArgument("CCZ optimization needs three atoms");
  if (cfg.restarts < 1 || cfg.evaluations_per_restart < 1) {
    throw InvalidArgument("budget must allow at least one restart and evaluation");
  }
  const QubitGate target = cfg.target ? *cfg.target : ccz_target();
  if (target.n_qubits() != 3) throw InvalidArgument("target must be a 3-qubit gate");
  const std::size_t n_par = ControlAnsatz::parameter_count(cfg.n_basis);
  const WaveformStepping stepping{cfg.substeps};
  // Coefficients are optimized in units of the channel bounds.
  const double s_om = cfg.bounds.max_rabi > 0 ? cfg.bounds.max_rabi : 1.0;
  const double s_de = cfg.bounds.max_detuning > 0 ? cfg.bounds.max_detuning : 1.0;

  auto make_ansatz = [&](const std::vector<double>& x, const std::vector<double>& jit) {
    ControlAnsatz a;
    a.n_basis = cfg.n_basis;
    a.bounds = cfg.bounds;
    a.duration = cfg.duration;
    a.samples = cfg.samples;
    a.frequency_jitters = jit;
    a.coefficients.resize(n_par);
    const auto n = static_cast<std::size_t>(cfg.n_basis);
    a.coefficients[0] = x[0] * s_om;
    a.coefficients[1] = x[1] * s_de;
    for (std::size_t j = 0; j < 2 * n; ++j) {
      a.coefficients[2 + j] = x[2 + j] * s_om;
      a.coefficients[2 + 2 * n + j] = x[2 + 2 * n + j] * s_de;
    }
    return a;
  };

  OptimizationReport rep;
  rep.seed = seed;
  rep.stepping = stepping;
  rep.best_fidelity = -1;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    std::vector<double> jit(2 * static_cast<std::size_t>(cfg.n_basis));
    for (auto& j : jit) j = unit(rng);
    std::vector<double> x0(n_par);
    x0[0] = 0.6 + 0.4 * unit(rng);
    x0[1] = 0.3 * unit(rng);
    for (std::size_t i = 2; i < n_par; ++i) x0[i] = 0.3 * unit(rng);

    double restart_best = -1;
    NelderMead nm;
    nm.budget = cfg.evaluations_per_restart;
    nm.f = [&](const std::vector<double>& x) {
      const ControlAnsatz a = make_ansatz(x, jit);
      const Waveform wf = render_waveform(a);
      const double fid = gate_fidelity(waveform_gate(wf, spec, stepping), target);
      if (fid > restart_best) restart_best = fid;
      if (fid > rep.best_fidelity) {
        rep.best_fidelity = fid;
        rep.best_ansatz = a;
        rep.best_waveform = wf;
        rep.best_restart = r;
      }
      if (fid >= cfg.stop_fidelity) nm.budget = nm.used;
      return 1.0 - fid;
    };
    nm.run(x0, 0.15);
    rep.evaluations += static_cast<std::size_t>(nm.used);
    rep.restart_best.push_back(restart_best);
    if (rep.best_fidelity >= cfg.stop_fidelity) break;
  }
  rep.best_fidelity = std::clamp(rep.best_fidelity, 0.0, 1.0);
  return rep;
}

}  // namespace gateforge
