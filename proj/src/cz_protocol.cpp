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

#include "gateforge/cz_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "gateforge/measurement_sim.hpp"

namespace gateforge {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
const Complex kI(0, 1);

// exp(-i h) for a small Hermitian matrix.
CMatrix expm_hermitian(const CMatrix& h) {
  return detail::hermitian_exp<double>(h);
}

// Single-atom {|1>, |r>} propagator for one pulse with Omega = 1.
CMatrix single_atom_pulse(double y, double s, double phase) {
  CMatrix h(2, 2);
  const Complex c = 0.5 * std::polar(1.0, phase);
  h << 0, c, std::conj(c), -y;
  return expm_hermitian(h * s);
}

// Doubly-excited sector {|a2> = |11>, |b2> = |W>, |c2> = |rr>}, Omega = 1:
// sqrt(2)/2 (e^{i phase}|a><b| + e^{i phase}|b><c| + h.c.) - y |b><b|
//   + (v - 2y) |c><c|.
CMatrix doubly_sector_pulse(double y, double s, double phase, double v) {
  const Complex c = std::sqrt(2.0) / 2 * std::polar(1.0, phase);
  CMatrix h = CMatrix::Zero(3, 3);
  h(0, 1) = c;
  h(1, 0) = std::conj(c);
  h(1, 1) = -y;
  if (std::isinf(v)) {
    return expm_hermitian(CMatrix(h.topLeftCorner(2, 2) * s));
  }
  h(1, 2) = c;
  h(2, 1) = std::conj(c);
  h(2, 2) = v - 2 * y;
  return expm_hermitian(CMatrix(h * s));
}

double first_pulse_return(double y, double s, double v) {
  return std::norm(doubly_sector_pulse(y, s, 0, v)(0, 0));
}

// Maximizes the first-pulse return of |11> over s near the blockaded cycle.
double return_area(double y, double v) {
  const double s0 = kTwoPi / std::sqrt(y * y + 2);
  if (std::isinf(v)) return s0;
  double a = 0.8 * s0, b = 1.2 * s0;
  // Coarse grid to land in the right basin, then golden section.
  constexpr int kGrid = 80;
  int best = 0;
  double best_p = -1;
  for (int k = 0; k <= kGrid; ++k) {
    const double p = first_pulse_return(y, a + (b - a) * k / kGrid, v);
    if (p > best_p) {
      best_p = p;
      best = k;
    }
  }
  const double h = (b - a) / kGrid;
  double lo = a + h * std::max(0, best - 1);
  double hi = a + h * std::min(kGrid, best + 1);
  const double g = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = first_pulse_return(y, x1, v), f2 = first_pulse_return(y, x2, v);
  while (hi - lo > 1e-13 * s0) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = first_pulse_return(y, x1, v);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = first_pulse_return(y, x2, v);
    }
  }
  return 0.5 * (lo + hi);
}

struct Candidate {
  double y, s, xi, phi1, phi2;
};

// Full parameter set for a detuning ratio; v = V / Omega.
Candidate evaluate(double y, double v) {
  Candidate c;
  c.y = y;
  c.s = return_area(y, v);
  c.xi = phase_jump_xi(y, c.s);
  c.phi1 = single_particle_phase(y, c.s, c.xi);
  c.phi2 = std::isinf(v)
               ? doubly_occupied_phase(y)
               : std::arg(doubly_occupied_amplitude(y, c.s, c.xi, v));
  return c;
}

// Wrapped mismatch arg(e^{i(phi2 - 2 phi1 - pi)}).
double mismatch(const Candidate& c) {
  return std::arg(std::polar(1.0, c.phi2 - 2 * c.phi1 - std::numbers::pi));
}

CzParameters solve_condition(double v) {
  constexpr double kLo = 0.05, kHi = 0.9;
  constexpr int kGrid = 170;
  auto g = [&](double y) { return mismatch(evaluate(y, v)); };
  double prev_y = kLo, prev_g = g(kLo);
  for (int k = 1; k <= kGrid; ++k) {
    const double y = kLo + (kHi - kLo) * k / kGrid;
    const double gy = g(y);
    // A continuous sign change, not a jump across the +-pi branch cut.
    if ((prev_g <= 0) != (gy <= 0) && std::abs(prev_g - gy) < std::numbers::pi) {
      double a = prev_y, b = y, ga = prev_g;
      while (b - a > 1e-7) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if ((gm <= 0) == (ga <= 0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      // Secant polish.
      double x0 = a, x1 = b, g0 = g(a), g1 = g(b);
      for (int it = 0; it < 50 && std::abs(x1 - x0) > 1e-12; ++it) {
        if (g1 == g0) break;
        const double x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = g(x1);
        if (std::abs(g1) < 1e-14) break;
      }
      const Candidate c = evaluate(x1, v);
      CzParameters p;
      p.detuning_ratio = c.y;
      p.pulse_area = c.s;
      p.phase_jump = c.xi;
      p.single_particle_phase = c.phi1;
      p.doubly_occupied_phase = c.phi2;
      p.interaction_ratio = v;
      return p;
    }
    prev_y = y;
    prev_g = gy;
  }
  std::ostringstream msg;
  msg << "no CZ solution bracketed for y in [" << kLo << ", " << kHi
      << "] at V/Omega = " << v;
  throw SolverFailure(msg.str());
}

// Parabolic vertex through three equally spaced samples.
double parabolic_offset(double fm, double f0, double fp) {
  const double den = fm - 2 * f0 + fp;
  if (den >= 0) return 0;
  return 0.5 * (fm - fp) / den;
}

ScanResult finish_scan(std::vector<double> xs, std::vector<double> ps,
                       bool periodic, const char* what) {
  const int n = static_cast<int>(xs.size());
  const auto it = std::max_element(ps.begin(), ps.end());
  const int k = static_cast<int>(it - ps.begin());
  const double h = xs[1] - xs[0];
  ScanResult r;
  if (!periodic && (k == 0 || k == n - 1)) {
    throw CalibrationFailure(std::string(what) +
                             " scan has no interior maximum; widen the range");
  }
  const double fm = ps[static_cast<std::size_t>((k - 1 + n) % n)];
  const double fp = ps[static_cast<std::size_t>((k + 1) % n)];
  const double off = std::clamp(parabolic_offset(fm, *it, fp), -0.5, 0.5);
  r.optimum = xs[static_cast<std::size_t>(k)] + off * h;
  r.optimum_probability = *it;
  r.values = std::move(xs);
  r.return_probability = std::move(ps);
  return r;
}

void check_range(const ScanRange& range) {
  if (range.points < 50) throw InvalidArgument("scan grid needs at least 50 points");
  if (!(range.hi > range.lo) || !std::isfinite(range.lo) || !std::isfinite(range.hi)) {
    throw InvalidArgument("scan range must satisfy lo < hi");
  }
}

// Exact probability or a shot estimate from the no-pushout table, where an
// all-present outcome means every atom is back in the qubit subspace.
double measured_return(const AtomState& state, double exact, const ScanRange& range,
                       int index) {
  if (range.shots == 0) return exact;
  NoiseConfig noise = NoiseConfig::none();
  noise.seed = derive_seed(range.seed, static_cast<std::uint64_t>(index));
  const auto counts = sample_shots(state, noise, range.shots, false);
  const std::string all(static_cast<std::size_t>(state.n_atoms()), 'P');
  const auto f = counts.find(all);
  return f == counts.end() ? 0.0
                           : static_cast<double>(f->second) /
                                 static_cast<double>(range.shots);
}

}  // namespace

std::array<DrivePulse, 2> CzParameters::pulses(double rabi) const {
  if (!(rabi > 0)) throw InvalidArgument("Rabi frequency must be positive");
  const double tau = pulse_area / rabi;
  return {DrivePulse{rabi, detuning_ratio * rabi, 0.0, tau},
          DrivePulse{rabi, detuning_ratio * rabi, phase_jump, tau}};
}

double wrap_phase(double angle) {
  double a = std::remainder(angle, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

double tau_for_full_oscillation(double rabi, double detuning) {
  if (!(rabi > 0) || !std::isfinite(rabi) || !std::isfinite(detuning)) {
    throw InvalidArgument("Rabi frequency must be positive and finite");
  }
  return kTwoPi / std::sqrt(detuning * detuning + 2 * rabi * rabi);
}

double doubly_occupied_phase(double y) {
  return wrap_phase(kTwoPi * y / std::sqrt(y * y + 2));
}

double phase_jump_xi(double y, double s) {
  const double q = std::sqrt(y * y + 1);
  const double c = std::cos(0.5 * s * q), sn = std::sin(0.5 * s * q);
  const Complex num(-q * c, y * sn);
  const Complex den(q * c, y * sn);
  if (std::abs(den) <= 1e-12) {
    throw DegenerateGeometry("phase jump undefined: first pulse ends on the pole");
  }
  double xi = std::arg(num / den);
  if (xi < 0) xi += kTwoPi;
  if (xi >= kTwoPi) xi -= kTwoPi;
  return xi;
}

PulseDecomposition decompose_first_pulse(double y, double s) {
  const CMatrix u = single_atom_pulse(y, s, 0);
  PulseDecomposition d;
  d.return_amplitude = std::abs(u(0, 0));
  d.excited_amplitude = std::abs(u(1, 0));
  d.excited_phase = wrap_phase(std::arg(u(1, 0)) - std::arg(u(0, 0)));
  return d;
}

double single_particle_phase(double y, double s, double xi) {
  const CMatrix u = single_atom_pulse(y, s, xi) * single_atom_pulse(y, s, 0);
  const Complex a = u(0, 0);
  if (std::norm(a) < 1 - 1e-6) {
    throw ProtocolViolation("single atom does not return to |1> after both pulses");
  }
  return std::arg(a);
}

std::complex<double> doubly_occupied_amplitude(double y, double s, double xi,
                                               double v) {
  const CMatrix u = doubly_sector_pulse(y, s, xi, v) * doubly_sector_pulse(y, s, 0, v);
  return u(0, 0);
}

CzParameters solve_cz_parameters() {
  return solve_condition(std::numeric_limits<double>::infinity());
}

CzParameters finite_blockade_adjust(double rabi, double interaction) {
  if (!(rabi > 0) || !std::isfinite(rabi)) {
    throw InvalidArgument("Rabi frequency must be positive and finite");
  }
  if (!(interaction > 0)) throw InvalidArgument("interaction must be positive");
  const double v = interaction / rabi;
  CzParameters p = solve_condition(v);
  const double back = first_pulse_return(p.detuning_ratio, p.pulse_area, v);
  const Complex both = doubly_occupied_amplitude(p.detuning_ratio, p.pulse_area,
                                                 p.phase_jump, v);
  // The third level keeps a small |rr> residue after one pulse; the second
  // pulse largely undoes it, so only the two-pulse return is gated.
  if (std::norm(both) < 1 - 1e-4) {
    std::ostringstream msg;
    msg << "no closed |11> trajectory at V/Omega = " << v
        << " (two-pulse return " << std::norm(both) << ", first-pulse return " << back
        << ", searched s in [0.8, 1.2] x 2pi/sqrt(y^2+2), y in [0.05, 0.9])";
    throw SolverFailure(msg.str());
  }
  return p;
}

double effective_detuning_ratio(const CzParameters& params) {
  const double k = kTwoPi / params.pulse_area;
  return std::sqrt(std::max(0.0, k * k - 2));
}

ScanResult calibrate_tau_scan(double rabi, double detuning,
                              const InteractionSpec& spec, const ScanRange& range) {
  check_range(range);
  if (range.lo < 0) throw InvalidArgument("pulse times must be non-negative");
  if (spec.n_atoms() != 2) throw InvalidArgument("tau calibration uses an atom pair");
  const DrivePulse unit{rabi, detuning, 0.0, 1.0};
  Eigen::SelfAdjointEigenSolver<CMatrix> es(build_hamiltonian(unit, spec));
  const AtomState start = AtomState::basis("11");
  const CVector c0 = es.eigenvectors().adjoint() * start.amplitudes();
  std::vector<double> xs, ps;
  for (int k = 0; k < range.points; ++k) {
    const double t = range.lo + (range.hi - range.lo) * k / (range.points - 1);
    const CVector ph = (es.eigenvalues().cast<Complex>() * (-kI * t)).array().exp();
    AtomState psi(2, es.eigenvectors() * ph.cwiseProduct(c0));
    xs.push_back(t);
    ps.push_back(measured_return(psi, psi.population("11"), range, k));
  }
  ScanResult r = finish_scan(std::move(xs), std::move(ps), false, "tau");
  if (range.shots == 0) {
    const CVector ph = (es.eigenvalues().cast<Complex>() * (-kI * r.optimum)).array().exp();
    r.optimum_probability =
        AtomState(2, es.eigenvectors() * ph.cwiseProduct(c0)).population("11");
  }
  return r;
}

ScanResult calibrate_xi_scan(double rabi, double detuning, double tau,
                             const ScanRange& range) {
  check_range(range);
  const auto spec = InteractionSpec::isolated(1);
  const CMatrix u1 = propagator(DrivePulse{rabi, detuning, 0.0, tau}, spec);
  const bool periodic = range.hi - range.lo >= kTwoPi - 1e-12;
  const int n = range.points;
  std::vector<double> xs, ps;
  for (int k = 0; k < n; ++k) {
    // A periodic scan drops the duplicate endpoint.
    const double xi = range.lo + (range.hi - range.lo) * k / (periodic ? n : n - 1);
    const CMatrix u2 = propagator(DrivePulse{rabi, detuning, xi, tau}, spec);
    AtomState psi(1, u2 * (u1 * AtomState::basis("1").amplitudes()));
    xs.push_back(xi);
    ps.push_back(measured_return(psi, psi.population("1"), range, k));
  }
  ScanResult r = finish_scan(std::move(xs), std::move(ps), periodic, "xi");
  if (range.shots == 0) {
    const CMatrix u2 = propagator(DrivePulse{rabi, detuning, r.optimum, tau}, spec);
    r.optimum_probability =
        AtomState(1, u2 * (u1 * AtomState::basis("1").amplitudes())).population("1");
  }
  return r;
}

ScanResult calibrate_global_phase_scan(
    const std::function<double(double)>& psi_plus_population, int points) {
  if (points < 50) throw InvalidArgument("scan grid needs at least 50 points");
  std::vector<double> xs, ps;
  for (int k = 0; k < points; ++k) {
    const double c = kTwoPi * k / points;
    xs.push_back(c);
    ps.push_back(psi_plus_population(c));
  }
  ScanResult r = finish_scan(std::move(xs), std::move(ps), true, "phase");
  r.optimum = std::fmod(r.optimum + kTwoPi, kTwoPi);
  r.optimum_probability = psi_plus_population(r.optimum);
  return r;
}

}  // namespace gateforge
