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

#include "gateforge/metrology.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gateforge/errors.hpp"
#include "gateforge/random.hpp"

namespace gateforge {

namespace {

using std::numbers::pi;

std::uint64_t total(const OutcomeCounts& c) {
  std::uint64_t t = 0;
  for (const auto& [k, v] : c) t += v;
  return t;
}

double frequency(const OutcomeCounts& c, const std::string& pattern) {
  const auto t = total(c);
  if (t == 0) throw InvalidArgument("empty shot table");
  const auto it = c.find(pattern);
  return it == c.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(t);
}

void check_pattern(const std::string& p, int n) {
  if (static_cast<int>(p.size()) != n) {
    throw InvalidArgument("pattern '" + p + "' does not have " + std::to_string(n) + " atoms");
  }
  for (char ch : p) {
    if (ch != 'P' && ch != 'L') throw InvalidArgument("pattern '" + p + "' must use P and L");
  }
}

// Bit i of the mask = atom i (atom 0 is the leftmost character).
std::string mask_pattern(std::uint32_t lost, int n) {
  std::string p(static_cast<std::size_t>(n), 'P');
  for (int i = 0; i < n; ++i) {
    if ((lost >> i) & 1U) p[static_cast<std::size_t>(i)] = 'L';
  }
  return p;
}

// Qubit index (atom 0 = MSB) to a mask with bit i = atom i.
std::uint32_t index_mask(std::size_t index, int n) {
  std::uint32_t m = 0;
  for (int i = 0; i < n; ++i) {
    if ((index >> (n - 1 - i)) & 1U) m |= 1U << i;
  }
  return m;
}

// Probability that atom `atom` reads absent in the A table.
double absent_fraction(const ShotTables& s, int atom) {
  double f = 0;
  const double t = static_cast<double>(s.a_total());
  for (const auto& [p, c] : s.a_counts) {
    if (p[static_cast<std::size_t>(atom)] == 'L') f += static_cast<double>(c) / t;
  }
  return f;
}

CMatrix x_rotation(double theta) {
  CMatrix x(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  x << c, Complex(0, -s), Complex(0, -s), c;
  return x;
}

CMatrix global_rotation(double theta, int n) {
  CMatrix out = CMatrix::Identity(1, 1);
  const CMatrix x = x_rotation(theta);
  for (int i = 0; i < n; ++i) {
    CMatrix next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < 2; ++r) {
      for (Eigen::Index c = 0; c < 2; ++c) next.block(r * out.rows(), c * out.cols(), out.rows(), out.cols()) = x(r, c) * out;
    }
    out = next;
  }
  return out;
}

OutcomeCounts resample(const OutcomeCounts& c, std::mt19937_64& rng) {
  std::uint64_t left = total(c);
  double mass = 1.0;
  const double t = static_cast<double>(left);
  OutcomeCounts out;
  for (const auto& [p, v] : c) {
    if (left == 0) break;
    const double q = std::clamp(static_cast<double>(v) / t / mass, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> bin(left, q);
    const auto k = bin(rng);
    if (k > 0) out[p] = k;
    left -= k;
    mass -= static_cast<double>(v) / t;
  }
  return out;
}

ShotTables resample(const ShotTables& s, std::mt19937_64& rng) {
  ShotTables r;
  r.n_atoms = s.n_atoms;
  r.a_counts = resample(s.a_counts, rng);
  r.b_counts = resample(s.b_counts, rng);
  return r;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double bell_population_bound(const ShotTables& s) {
  const auto b = leakage_lower_bounds(s);
  const std::string zeros(static_cast<std::size_t>(s.n_atoms), '0');
  const std::string ones(static_cast<std::size_t>(s.n_atoms), '1');
  return b.lower_bounds.at(zeros) + b.lower_bounds.at(ones);
}

double scan_coherence(const std::vector<double>& thetas, const std::vector<ShotTables>& scan) {
  std::vector<double> signals;
  signals.reserve(scan.size());
  for (const auto& s : scan) signals.push_back(parity_from_shots(s));
  return std::min(1.0, fit_parity(thetas, signals).amplitude);
}

}  // namespace

std::uint64_t ShotTables::a_total() const { return total(a_counts); }
std::uint64_t ShotTables::b_total() const { return total(b_counts); }
double ShotTables::a_frequency(const std::string& p) const { return frequency(a_counts, p); }
double ShotTables::b_frequency(const std::string& p) const { return frequency(b_counts, p); }

void ShotTables::validate() const {
  if (n_atoms < 1 || n_atoms > kMaxAtoms) throw InvalidArgument("n_atoms out of range");
  for (const auto& [p, c] : a_counts) check_pattern(p, n_atoms);
  for (const auto& [p, c] : b_counts) check_pattern(p, n_atoms);
  if (a_total() == 0) throw InvalidArgument("pushout table is empty");
}

std::string pattern_to_bits(const std::string& pattern) {
  std::string out = pattern;
  for (char& ch : out) {
    if (ch == 'P') ch = '0';
    else if (ch == 'L') ch = '1';
    else throw InvalidArgument("pattern '" + pattern + "' must use P and L");
  }
  return out;
}

std::string bits_to_pattern(const std::string& bits) {
  std::string out = bits;
  for (char& ch : out) {
    if (ch == '0') ch = 'P';
    else if (ch == '1') ch = 'L';
    else throw InvalidArgument("bit string '" + bits + "' must use 0 and 1");
  }
  return out;
}

PopulationBounds leakage_lower_bounds(const ShotTables& shots) {
  shots.validate();
  if (shots.b_total() == 0) throw InvalidArgument("no-pushout table is empty");
  const int n = shots.n_atoms;
  PopulationBounds out;
  for (std::size_t y = 0; y < qubit_dimension(n); ++y) {
    const std::string bits = bitstring(y, n);
    const double a = shots.a_frequency(bits_to_pattern(bits));
    const std::uint32_t ones = index_mask(y, n);
    // Every non-empty subset T of the 1 positions: leaked atoms in T also
    // read as this A outcome.
    double leak = 0;
    for (std::uint32_t t = ones; t != 0; t = (t - 1) & ones) {
      leak += shots.b_frequency(mask_pattern(t, n));
    }
    out.raw[bits] = a;
    out.lower_bounds[bits] = std::max(0.0, a - leak);
  }
  return out;
}

double bell_fidelity(double populations, double coherence) {
  if (!(populations >= 0 && populations <= 1) || !(coherence >= 0 && coherence <= 1)) {
    throw InvalidArgument("populations and coherence must lie in [0, 1]");
  }
  return 0.5 * (populations + coherence);
}

double parity_signal(const AtomState& state, double theta) {
  if (state.n_atoms() != 2) throw InvalidArgument("parity_signal needs two atoms");
  AtomState s = apply_local_z(state, theta, 0);
  s = apply_local_z(s, theta, 1);
  s = apply_global_x(s, pi / 2);
  const CVector q = s.qubit_projection();
  double p = 0;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    const double sign = (std::popcount(static_cast<unsigned>(k)) % 2) ? -1.0 : 1.0;
    p += sign * std::norm(q(k));
  }
  return p;
}

ParityFit fit_parity(const std::vector<double>& thetas, const std::vector<double>& signals) {
  if (thetas.size() != signals.size() || thetas.size() < 3) {
    throw InvalidArgument("parity fit needs at least three matching points");
  }
  const auto m = static_cast<Eigen::Index>(thetas.size());
  RMatrix design(m, 3);
  RVector y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double t = thetas[static_cast<std::size_t>(k)];
    design(k, 0) = std::cos(2 * t);
    design(k, 1) = std::sin(2 * t);
    design(k, 2) = 1;
    y(k) = signals[static_cast<std::size_t>(k)];
  }
  const Eigen::ColPivHouseholderQR<RMatrix> qr(design);
  if (qr.rank() < 3) throw InvalidArgument("parity scan angles do not span a full period");
  const RVector c = qr.solve(y);
  return {std::hypot(c(0), c(1)), std::atan2(c(1), c(0)), c(2)};
}

double parity_from_shots(const ShotTables& shots) {
  shots.validate();
  const double t = static_cast<double>(shots.a_total());
  double p = 0;
  for (const auto& [pattern, c] : shots.a_counts) {
    const auto lost = std::count(pattern.begin(), pattern.end(), 'L');
    p += (lost % 2 ? -1.0 : 1.0) * static_cast<double>(c) / t;
  }
  return p;
}

TruthTable truth_table(const Circuit& gate, const GateContext& ctx,
                       const std::vector<std::size_t>& targets) {
  const int n = gate.n_atoms;
  const std::size_t d = qubit_dimension(n);
  if (targets.size() != d) throw InvalidArgument("need one target per input");
  TruthTable tt;
  tt.targets = targets;
  tt.probabilities = RMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (targets[i] >= d) throw InvalidArgument("target index out of range");
    Circuit c = basis_prep_circuit(bitstring(i, n));
    c.ops.insert(c.ops.end(), gate.ops.begin(), gate.ops.end());
    const CVector q = simulate(c, ctx, AtomState::ground(n)).qubit_projection();
    for (std::size_t j = 0; j < d; ++j) {
      tt.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::norm(q(static_cast<Eigen::Index>(j)));
    }
    tt.fidelity += tt.probabilities(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(targets[i]));
  }
  tt.fidelity /= static_cast<double>(d);
  return tt;
}

TruthTable truth_table_from_shots(const std::vector<ShotTables>& rows,
                                  const std::vector<std::size_t>& targets) {
  if (rows.empty() || rows.size() != targets.size()) {
    throw InvalidArgument("need one shot table per target");
  }
  const int n = rows.front().n_atoms;
  const std::size_t d = qubit_dimension(n);
  if (rows.size() != d) throw InvalidArgument("need one shot table per basis input");
  TruthTable tt;
  tt.targets = targets;
  tt.probabilities = RMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].n_atoms != n) throw InvalidArgument("mixed atom numbers in truth table");
    if (targets[i] >= d) throw InvalidArgument("target index out of range");
    const auto b = leakage_lower_bounds(rows[i]);
    for (std::size_t j = 0; j < d; ++j) {
      tt.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          b.lower_bounds.at(bitstring(j, n));
    }
    tt.fidelity += tt.probabilities(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(targets[i]));
  }
  tt.fidelity /= static_cast<double>(d);
  return tt;
}

std::vector<std::size_t> cnot_targets() { return {0, 1, 3, 2}; }
std::vector<std::size_t> toffoli_targets() { return {7, 6, 5, 4, 3, 0, 1, 2}; }

double SpamModel::p_correct() const { return std::pow(1.0 - epsilon(), n_atoms); }

double SpamModel::wrong_sublevel_weight() const {
  return 1.0 - std::pow(1.0 - pumping_error, n_atoms);
}

SpamCorrection spam_correct(double measured, double p_correct, double false_fidelity,
                            std::optional<double> false_weight) {
  if (!(p_correct > 0 && p_correct <= 1)) throw InvalidArgument("P must lie in (0, 1]");
  if (!(false_fidelity >= 0 && false_fidelity <= 1)) {
    throw InvalidArgument("false fidelity must lie in [0, 1]");
  }
  const double w = false_weight.value_or(1.0 - p_correct);
  const double raw = (measured - w * false_fidelity) / p_correct;
  const double v = std::clamp(raw, 0.0, 1.0);
  return {v, v != raw};
}

double spam_mix(double corrected, double p_correct, double false_fidelity,
                std::optional<double> false_weight) {
  return p_correct * corrected + false_weight.value_or(1.0 - p_correct) * false_fidelity;
}

QubitGate toffoli_with_phases(const std::array<double, 8>& phases) {
  static constexpr std::array<std::size_t, 8> kColumn = {5, 6, 7, 4, 3, 2, 1, 0};
  const std::array<Complex, 8> base = {Complex(0, 1), 1, Complex(0, -1), 1, 1, -1, 1, -1};
  CMatrix m = CMatrix::Zero(8, 8);
  for (std::size_t r = 0; r < 8; ++r) {
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(kColumn[r])) =
        base[r] * std::polar(1.0, phases[r]);
  }
  return QubitGate(3, m);
}

std::vector<std::size_t> limited_tomography_targets() { return {2, 3, 0, 1, 6, 7, 4, 5}; }

LimitedTomography limited_tomography(const QubitGate& toffoli) {
  if (toffoli.n_qubits() != 3) throw InvalidArgument("limited tomography needs a 3-qubit gate");
  const CMatrix plus = global_rotation(pi / 2, 3), minus = global_rotation(-pi / 2, 3);
  LimitedTomography lt;
  lt.targets = limited_tomography_targets();
  lt.probabilities = RMatrix::Zero(8, 8);
  for (Eigen::Index b = 0; b < 8; ++b) {
    const bool middle_one = (b >> 1) & 1;
    const CMatrix& pre = middle_one ? minus : plus;
    const CMatrix& post = middle_one ? plus : minus;
    const CVector out = post * toffoli.matrix() * pre.col(b);
    lt.probabilities.row(b) = out.cwiseAbs2().transpose();
    lt.fidelity += lt.probabilities(b, static_cast<Eigen::Index>(lt.targets[b]));
  }
  lt.fidelity /= 8;
  return lt;
}

std::vector<Circuit> limited_tomography_circuits(const Circuit& toffoli) {
  if (toffoli.n_atoms != 3) throw InvalidArgument("limited tomography needs three atoms");
  std::vector<Circuit> out;
  for (std::size_t b = 0; b < 8; ++b) {
    const double s = ((b >> 1) & 1U) ? -1.0 : 1.0;
    Circuit c = basis_prep_circuit(bitstring(b, 3));
    c.ops.push_back(GlobalX{s * pi / 2});
    c.ops.insert(c.ops.end(), toffoli.ops.begin(), toffoli.ops.end());
    c.ops.push_back(GlobalX{-s * pi / 2});
    out.push_back(std::move(c));
  }
  return out;
}

LtLeakageBound leakage_constraint_from_lt_pairs(
    const std::map<std::size_t, ShotTables>& settings) {
  if (settings.empty()) throw InvalidArgument("no limited tomography settings");
  const auto targets = limited_tomography_targets();
  LtLeakageBound out;
  std::map<std::size_t, double> per_setting_bound;
  for (const auto& [b, s] : settings) {
    if (b >= 8) throw InvalidArgument("setting index out of range");
    if (!settings.count(b ^ 7U)) {
      throw InvalidArgument("setting " + std::to_string(b) + " has no X(pi) partner " +
                            std::to_string(b ^ 7U));
    }
    s.validate();
    if (s.n_atoms != 3) throw InvalidArgument("limited tomography tables need three atoms");
  }
  for (const auto& [b, s] : settings) {
    if (b > (b ^ 7U)) continue;
    const ShotTables& partner = settings.at(b ^ 7U);
    std::vector<double> excess(3);
    double sum = 0;
    for (int i = 0; i < 3; ++i) {
      excess[static_cast<std::size_t>(i)] = absent_fraction(s, i) + absent_fraction(partner, i) - 1;
      sum += std::max(0.0, excess[static_cast<std::size_t>(i)]);
    }
    double bound = std::min(1.0, sum);
    if (s.b_total() > 0 && partner.b_total() > 0) {
      bound = std::min(bound, std::max(1 - s.b_frequency("PPP"), 1 - partner.b_frequency("PPP")));
    }
    out.per_atom[b] = excess;
    out.pair_bound[b] = bound;
    out.max_bound = std::max(out.max_bound, bound);
  }
  for (const auto& [b, s] : settings) {
    const std::size_t key = std::min(b, b ^ std::size_t{7});
    const auto& excess = out.per_atom.at(key);
    const std::size_t t = targets[b];
    double lb = s.a_frequency(bits_to_pattern(bitstring(t, 3)));
    for (int i = 0; i < 3; ++i) {
      if ((t >> (2 - i)) & 1U) lb -= std::max(0.0, excess[static_cast<std::size_t>(i)]);
    }
    out.target_lower_bounds.push_back(std::max(0.0, lb));
    out.fidelity_lower_bound += out.target_lower_bounds.back();
  }
  out.fidelity_lower_bound /= static_cast<double>(settings.size());
  return out;
}

double bootstrap_standard_error(const ShotTables& shots,
                                const std::function<double(const ShotTables&)>& statistic,
                                int resamples, std::uint64_t seed) {
  if (resamples < 2) throw InvalidArgument("bootstrap needs at least two resamples");
  shots.validate();
  std::mt19937_64 rng(derive_seed(seed, 0xb007));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) values.push_back(statistic(resample(shots, rng)));
  return sample_sd(values);
}

BellAnalysis analyze_bell(const ShotTables& populations, const std::vector<double>& thetas,
                          const std::vector<ShotTables>& parity_scan, const SpamModel& spam,
                          double false_fidelity, int resamples, std::uint64_t seed) {
  if (populations.n_atoms != 2) throw InvalidArgument("Bell analysis needs two atoms");
  if (thetas.size() != parity_scan.size()) {
    throw InvalidArgument("one parity table per phase is required");
  }
  BellAnalysis r;
  r.raw_populations = populations.a_frequency("PP") + populations.a_frequency("LL");
  r.population_lower_bound = bell_population_bound(populations);
  r.coherence = scan_coherence(thetas, parity_scan);
  r.fidelity_lower_bound = bell_fidelity(r.population_lower_bound, r.coherence);

  const double p = spam.p_correct();
  // Populations: only the wrong-sublevel fraction contributes falsely. The
  // parity amplitude gets no false contribution.
  const auto cp = spam_correct(r.population_lower_bound, p, false_fidelity,
                               spam.wrong_sublevel_weight());
  const auto cc = spam_correct(r.coherence, p, 0.0);
  r.corrected_populations = cp.value;
  r.corrected_coherence = cc.value;
  r.corrected_fidelity = bell_fidelity(cp.value, cc.value);
  r.clamped = cp.clamped || cc.clamped;

  if (resamples >= 2) {
    r.population_se = bootstrap_standard_error(populations, bell_population_bound, resamples, seed);
    std::mt19937_64 rng(derive_seed(seed, 0xc0e));
    std::vector<double> values;
    std::vector<ShotTables> scan(parity_scan.size());
    for (int k = 0; k < resamples; ++k) {
      for (std::size_t j = 0; j < scan.size(); ++j) scan[j] = resample(parity_scan[j], rng);
      values.push_back(scan_coherence(thetas, scan));
    }
    r.coherence_se = sample_sd(values);
    r.corrected_fidelity_se = 0.5 * std::hypot(r.population_se, r.coherence_se) / p;
  }
  return r;
}

}  // namespace gateforge
