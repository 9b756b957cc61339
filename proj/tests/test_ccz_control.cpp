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

#include <cmath>
#include <numbers>
#include <random>

#include "gateforge/ccz_control.hpp"
#include "gateforge/errors.hpp"

using namespace gateforge;
using std::numbers::pi;

namespace {

constexpr double kRabi = 2 * pi * 3.5e6;
const double kNearest = 2 * pi * 24e6;
const double kEdge = 2 * pi * 0.4e6;

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ControlAnsatz random_ansatz(std::mt19937_64& rng, int n_basis = 4) {
  std::uniform_real_distribution<double> u(-1, 1);
  ControlAnsatz a;
  a.n_basis = n_basis;
  a.coefficients.resize(ControlAnsatz::parameter_count(n_basis));
  a.frequency_jitters.resize(2 * static_cast<std::size_t>(n_basis));
  for (auto& c : a.coefficients) c = 2 * u(rng) * a.bounds.max_rabi;
  for (auto& j : a.frequency_jitters) j = 0.5 * u(rng);
  return a;
}

OptimizerConfig small_config() {
  OptimizerConfig cfg;
  cfg.restarts = 2;
  cfg.evaluations_per_restart = 60;
  cfg.samples = 200;
  return cfg;
}

}  // namespace

TEST_CASE("CCZ target") {
  const QubitGate t = ccz_target();
  CHECK(t.matrix()(0, 0) == Complex(1, 0));
  CHECK(t.matrix()(1, 1) == Complex(-1, 0));
  CHECK(t.matrix().isDiagonal());
  CHECK((t.matrix() * t.matrix() - CMatrix::Identity(8, 8)).norm() < 1e-15);
  CHECK((t.matrix().adjoint() * t.matrix() - CMatrix::Identity(8, 8)).norm() < 1e-15);
  // Local equivalence with the canonical gate.
  CMatrix x(2, 2), z(2, 2);
  x << 0, Complex(0, -1), Complex(0, -1), 0;
  z << 1, 0, 0, -1;
  const CMatrix id = CMatrix::Identity(2, 2);
  const CMatrix xs = kron(kron(x, id), x);
  const CMatrix zs = kron(kron(z, id), z);
  const QubitGate lhs(3, xs * t.matrix() * zs * xs);
  CHECK(gate_fidelity(lhs, canonical_ccz()) == doctest::Approx(1).epsilon(1e-14));
}

TEST_CASE("local pulse CCZ reference") {
  const QubitGate blockaded =
      local_pulse_ccz_reference(InteractionSpec::triplet(kPerfectBlockade<double>, 0), kRabi);
  CHECK(gate_fidelity(blockaded, ccz_target()) >= 1 - 1e-6);
  CHECK(blockaded.max_leakage() < 1e-12);
  // |101>: the middle 2 pi pulse is blocked by both edges in |r>.
  const Complex a101 = blockaded.matrix()(5, 5);
  const Complex a001 = blockaded.matrix()(1, 1);
  CHECK(std::abs(a101 + a001) < 1e-9);

  const QubitGate huge = local_pulse_ccz_reference(InteractionSpec::triplet(1e6 * kRabi, 0), kRabi);
  CHECK(gate_fidelity(huge, ccz_target()) >= 1 - 1e-5);

  const QubitGate real = local_pulse_ccz_reference(InteractionSpec::triplet(kNearest, kEdge), kRabi);
  const double f = gate_fidelity(real, ccz_target());
  MESSAGE("local CCZ fidelity at the experimental interactions: " << f);
  CHECK(f < 1 - 1e-3);
  CHECK(f > 0.5);
  CHECK_THROWS_AS(local_pulse_ccz_reference(InteractionSpec::uniform(2, 1.0), kRabi),
                  InvalidArgument);
}

TEST_CASE("render waveform") {
  SUBCASE("zero harmonics") {
    ControlAnsatz a;
    a.coefficients.assign(ControlAnsatz::parameter_count(4), 0.0);
    a.frequency_jitters.assign(8, 0.1);
    a.coefficients[0] = 0.7 * a.bounds.max_rabi;
    a.coefficients[1] = -0.2 * a.bounds.max_detuning;
    const Waveform wf = render_waveform(a);
    CHECK(wf.samples().size() == a.samples);
    CHECK(wf.total_duration() == doctest::Approx(a.duration));
    const auto mid = wf.at(a.duration / 2);
    CHECK(mid.rabi == doctest::Approx(a.coefficients[0]));
    for (const auto& s : wf.samples()) CHECK(s.detuning == doctest::Approx(a.coefficients[1]));
    CHECK(wf.samples().front().rabi == 0);
    CHECK(wf.samples().back().rabi == 0);
  }
  SUBCASE("bounds hold for random coefficients") {
    std::mt19937_64 rng(99);
    for (int k = 0; k < 1000; ++k) {
      ControlAnsatz a = random_ansatz(rng);
      a.samples = 50;
      const Waveform wf = render_waveform(a);
      for (const auto& s : wf.samples()) {
        REQUIRE(s.rabi >= 0);
        REQUIRE(s.rabi <= a.bounds.max_rabi);
        REQUIRE(std::abs(s.detuning) <= a.bounds.max_detuning);
      }
      REQUIRE(wf.samples().front().rabi == 0);
      REQUIRE(wf.samples().back().rabi == 0);
    }
  }
  SUBCASE("invalid ansatz") {
    ControlAnsatz a;
    a.coefficients.assign(3, 0.0);
    a.frequency_jitters.assign(8, 0.0);
    CHECK_THROWS_AS(render_waveform(a), InvalidArgument);
    a.coefficients.assign(ControlAnsatz::parameter_count(4), 0.0);
    a.samples = 1;
    CHECK_THROWS_AS(render_waveform(a), InvalidArgument);
  }
}

TEST_CASE("sample density convergence") {
  std::mt19937_64 rng(4);
  const auto spec = InteractionSpec::triplet(kNearest, kEdge);
  for (int k = 0; k < 3; ++k) {
    ControlAnsatz a = random_ansatz(rng);
    for (double& c : a.coefficients) c *= 0.3;
    a.coefficients[0] = 0.6 * a.bounds.max_rabi;
    const double f1 = gate_fidelity(waveform_gate(render_waveform(a), spec, {4}), ccz_target());
    a.samples *= 2;
    const double f2 = gate_fidelity(waveform_gate(render_waveform(a), spec, {2}), ccz_target());
    CHECK(std::abs(f1 - f2) < 1e-4);
  }
}

TEST_CASE("optimizer is deterministic and monotone") {
  const auto spec = InteractionSpec::triplet(kNearest, kEdge);
  const OptimizerConfig cfg = small_config();
  const auto a = optimize_ccz(spec, cfg, 7);
  const auto b = optimize_ccz(spec, cfg, 7);
  CHECK(a.best_ansatz.coefficients == b.best_ansatz.coefficients);
  CHECK(a.best_fidelity == b.best_fidelity);
  CHECK(a.evaluations == 120);
  CHECK(a.restart_best.size() == 2);
  CHECK(a.best_fidelity >= 0);
  CHECK(a.best_fidelity <= 1);
  CHECK(a.seed == 7);

  OptimizerConfig bigger = cfg;
  bigger.evaluations_per_restart *= 2;
  CHECK(optimize_ccz(spec, bigger, 7).best_fidelity >= a.best_fidelity);

  // The report re-verifies with a full-space evolution.
  const double again = gate_fidelity(
      simulate_qubit_gate(a.best_waveform, spec, a.stepping), ccz_target());
  CHECK(again == doctest::Approx(a.best_fidelity).epsilon(1e-9));
  const double rerendered =
      gate_fidelity(waveform_gate(render_waveform(a.best_ansatz), spec, a.stepping), ccz_target());
  CHECK(rerendered == doctest::Approx(a.best_fidelity).epsilon(1e-12));
}

TEST_CASE("null pulse reaches the identity") {
  OptimizerConfig cfg = small_config();
  cfg.bounds.max_rabi = 0;
  cfg.restarts = 1;
  cfg.evaluations_per_restart = 5;
  cfg.target = QubitGate::identity(3);
  const auto r = optimize_ccz(InteractionSpec::triplet(kNearest, kEdge), cfg, 1);
  CHECK(r.best_fidelity == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("optimizer argument checks") {
  OptimizerConfig cfg = small_config();
  CHECK_THROWS_AS(optimize_ccz(InteractionSpec::uniform(2, 1.0), cfg, 1), InvalidArgument);
  cfg.restarts = 0;
  CHECK_THROWS_AS(optimize_ccz(InteractionSpec::triplet(kNearest, kEdge), cfg, 1), InvalidArgument);
  cfg = small_config();
  cfg.target = QubitGate::identity(2);
  CHECK_THROWS_AS(optimize_ccz(InteractionSpec::triplet(kNearest, kEdge), cfg, 1), InvalidArgument);
}

TEST_CASE("stop fidelity ends the search early") {
  OptimizerConfig cfg = small_config();
  cfg.stop_fidelity = 0.0;
  const auto r = optimize_ccz(InteractionSpec::triplet(kNearest, kEdge), cfg, 3);
  CHECK(r.evaluations == 1);
  CHECK(r.restart_best.size() == 1);
}
