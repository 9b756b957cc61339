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
 * Exact dynamics of up to four three-level atoms {|0>, |1>, |r>} under a
 * Rydberg drive that couples |1> to |r>, with pairwise Rydberg-Rydberg
 * interactions and per-site detuning offsets.
 *
 * All frequencies are angular. The Hamiltonian is
 *
 *   H = sum_i s_i/2 (Omega e^{i phi} |1><r|_i + h.c.)
 *       - sum_i (Delta + delta_i) |r><r|_i
 *       + sum_{i<j} V_ij |r><r|_i (x) |r><r|_j
 *
 * where s_i is an optional per-site addressing scale (1 for a global drive).
 * An infinite V_ij is the perfect-blockade limit: basis states with both
 * atoms i and j in |r> are removed from the dynamics.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gateforge/basis.hpp"
#include "gateforge/errors.hpp"

namespace gateforge {

template <typename Real>
using CVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using CMatrixT =
    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RVectorT = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using RMatrixT = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using CVector = CVectorT<double>;
using CMatrix = CMatrixT<double>;
using RVector = RVectorT<double>;
using RMatrix = RMatrixT<double>;
using Complex = std::complex<double>;

template <typename Real>
inline constexpr Real kPerfectBlockade = std::numeric_limits<Real>::infinity();

// ---------------------------------------------------------------------------
// AtomState
// ---------------------------------------------------------------------------

template <typename Real>
class BasicAtomState {
 public:
  using Scalar = std::complex<Real>;
  using Vector = CVectorT<Real>;

  /// Throws InvalidArgument unless the vector has length 3^n_atoms and unit
  /// norm (within 1e-9).
  BasicAtomState(int n_atoms, Vector amplitudes)
      : n_atoms_(n_atoms), amplitudes_(std::move(amplitudes)) {
    if (n_atoms < 1 || n_atoms > kMaxAtoms) {
      throw InvalidArgument("atom count must be in [1, " +
                            std::to_string(kMaxAtoms) + "]");
    }
    if (static_cast<std::size_t>(amplitudes_.size()) !=
        atom_dimension(n_atoms)) {
      throw InvalidArgument("amplitude vector length must be 3^n_atoms");
    }
    if (std::abs(amplitudes_.squaredNorm() - Real(1)) > Real(1e-9)) {
      throw InvalidArgument("atom state is not normalized");
    }
  }

  static BasicAtomState normalized(int n_atoms, Vector amplitudes) {
    const Real n = amplitudes.norm();
    if (!(n > Real(0))) throw InvalidArgument("zero state cannot be normalized");
    amplitudes /= n;
    return BasicAtomState(n_atoms, std::move(amplitudes));
  }

  /// Basis state from a label such as "01r".
  static BasicAtomState basis(std::string_view labels) {
    const int n = static_cast<int>(labels.size());
    Vector v = Vector::Zero(static_cast<Eigen::Index>(atom_dimension(n)));
    v(static_cast<Eigen::Index>(basis_index(labels))) = Scalar(1);
    return BasicAtomState(n, std::move(v));
  }

  static BasicAtomState from_qubit_index(std::size_t qubit_index, int n_atoms) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(atom_dimension(n_atoms)));
    v(static_cast<Eigen::Index>(qubit_to_atom_index(qubit_index, n_atoms))) =
        Scalar(1);
    return BasicAtomState(n_atoms, std::move(v));
  }

  /// Embeds a normalized 2^N qubit vector.
  static BasicAtomState from_qubits(const Vector& qubits, int n_atoms) {
    if (static_cast<std::size_t>(qubits.size()) != qubit_dimension(n_atoms)) {
      throw InvalidArgument("qubit vector length must be 2^n_atoms");
    }
    Vector v = Vector::Zero(static_cast<Eigen::Index>(atom_dimension(n_atoms)));
    for (std::size_t q = 0; q < qubit_dimension(n_atoms); ++q) {
      v(static_cast<Eigen::Index>(qubit_to_atom_index(q, n_atoms))) =
          qubits(static_cast<Eigen::Index>(q));
    }
    return BasicAtomState(n_atoms, std::move(v));
  }

  static BasicAtomState ground(int n_atoms) {
    return basis(std::string(static_cast<std::size_t>(n_atoms), '0'));
  }

  int n_atoms() const noexcept { return n_atoms_; }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(amplitudes_.size());
  }
  const Vector& amplitudes() const noexcept { return amplitudes_; }
  Real norm() const { return amplitudes_.norm(); }

  Scalar amplitude(std::string_view labels) const {
    check_labels(labels);
    return amplitudes_(static_cast<Eigen::Index>(basis_index(labels)));
  }
  Real population(std::string_view labels) const {
    return std::norm(amplitude(labels));
  }

  Real rydberg_population(int atom) const {
    Real p = 0;
    for (std::size_t k = 0; k < dimension(); ++k) {
      if (level_of(k, atom, n_atoms_) == Level::kRydberg) {
        p += std::norm(amplitudes_(static_cast<Eigen::Index>(k)));
      }
    }
    return p;
  }

  /// Weight outside the computational subspace {|0>,|1>}^N.
  Real leakage() const {
    Real p = 0;
    for (std::size_t k = 0; k < dimension(); ++k) {
      if (has_rydberg(k, n_atoms_)) {
        p += std::norm(amplitudes_(static_cast<Eigen::Index>(k)));
      }
    }
    return p;
  }

  /// Projection onto {|0>,|1>}^N as a 2^N vector (not renormalized).
  Vector qubit_projection() const {
    const std::size_t d = qubit_dimension(n_atoms_);
    Vector q(static_cast<Eigen::Index>(d));
    for (std::size_t b = 0; b < d; ++b) {
      q(static_cast<Eigen::Index>(b)) = amplitudes_(
          static_cast<Eigen::Index>(qubit_to_atom_index(b, n_atoms_)));
    }
    return q;
  }

 private:
  void check_labels(std::string_view labels) const {
    if (static_cast<int>(labels.size()) != n_atoms_) {
      throw InvalidArgument("label length does not match atom count");
    }
  }

  int n_atoms_;
  Vector amplitudes_;
};

// ---------------------------------------------------------------------------
// InteractionSpec
// ---------------------------------------------------------------------------

template <typename Real>
class BasicInteractionSpec {
 public:
  using Matrix = RMatrixT<Real>;
  using Vector = RVectorT<Real>;

  BasicInteractionSpec(Matrix pair_strengths, Vector site_detuning_offsets)
      : pair_strengths_(std::move(pair_strengths)),
        offsets_(std::move(site_detuning_offsets)) {
    const auto n = pair_strengths_.rows();
    if (n < 1 || n > kMaxAtoms || pair_strengths_.cols() != n) {
      throw InvalidArgument("interaction matrix must be square, 1..4 atoms");
    }
    if (offsets_.size() != n) {
      throw InvalidArgument("site offset vector length must equal atom count");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pair_strengths_(i, i) != Real(0)) {
        throw InvalidArgument("interaction matrix diagonal must be zero");
      }
      if (!std::isfinite(offsets_(i))) {
        throw InvalidArgument("site detuning offsets must be finite");
      }
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (pair_strengths_(i, j) != pair_strengths_(j, i)) {
          throw InvalidArgument("interaction matrix must be symmetric");
        }
        if (std::isnan(pair_strengths_(i, j))) {
          throw InvalidArgument("interaction strength is NaN");
        }
      }
    }
  }

  explicit BasicInteractionSpec(Matrix pair_strengths)
      : BasicInteractionSpec(pair_strengths,
                             Vector::Zero(pair_strengths.rows())) {}

  static BasicInteractionSpec isolated(int n_atoms) {
    return BasicInteractionSpec(Matrix::Zero(n_atoms, n_atoms));
  }

  /// Every pair interacts with the same strength.
  static BasicInteractionSpec uniform(int n_atoms, Real strength) {
    Matrix v = Matrix::Constant(n_atoms, n_atoms, strength);
    v.diagonal().setZero();
    return BasicInteractionSpec(std::move(v));
  }

  /// Linear chain with van der Waals falloff V_ij = V_nn / |i-j|^6.
  static BasicInteractionSpec chain(int n_atoms, Real nearest_neighbor) {
    Matrix v = Matrix::Zero(n_atoms, n_atoms);
    for (int i = 0; i < n_atoms; ++i) {
      for (int j = i + 1; j < n_atoms; ++j) {
        const Real d = Real(j - i);
        v(i, j) = v(j, i) = nearest_neighbor / (d * d * d * d * d * d);
      }
    }
    return BasicInteractionSpec(std::move(v));
  }

  /// Three atoms in a line: edges 0 and 2 each blockade the middle atom 1 and
  /// interact with each other with `edge_edge`.
  static BasicInteractionSpec triplet(Real nearest_neighbor, Real edge_edge) {
    Matrix v = Matrix::Zero(3, 3);
    v(0, 1) = v(1, 0) = nearest_neighbor;
    v(1, 2) = v(2, 1) = nearest_neighbor;
    v(0, 2) = v(2, 0) = edge_edge;
    return BasicInteractionSpec(std::move(v));
  }

  int n_atoms() const noexcept {
    return static_cast<int>(pair_strengths_.rows());
  }
  const Matrix& pair_strengths() const noexcept { return pair_strengths_; }
  const Vector& site_detuning_offsets() const noexcept { return offsets_; }
  Real strength(int i, int j) const { return pair_strengths_(i, j); }
  Real offset(int i) const { return offsets_(i); }

  BasicInteractionSpec with_offsets(Vector offsets) const {
    return BasicInteractionSpec(pair_strengths_, std::move(offsets));
  }

  /// Multiplies every frequency by `factor` (time then scales by 1/factor).
  BasicInteractionSpec scaled(Real factor) const {
    return BasicInteractionSpec(pair_strengths_ * factor, offsets_ * factor);
  }

  BasicInteractionSpec subset(std::span<const int> atoms) const {
    const auto k = static_cast<Eigen::Index>(atoms.size());
    Matrix v(k, k);
    Vector d(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      d(a) = offsets_(atoms[a]);
      for (Eigen::Index b = 0; b < k; ++b) {
        v(a, b) = a == b ? Real(0) : pair_strengths_(atoms[a], atoms[b]);
      }
    }
    return BasicInteractionSpec(std::move(v), std::move(d));
  }

  bool operator==(const BasicInteractionSpec& o) const {
    return pair_strengths_ == o.pair_strengths_ && offsets_ == o.offsets_;
  }

 private:
  Matrix pair_strengths_;
  Vector offsets_;
};

// ---------------------------------------------------------------------------
// DrivePulse, Waveform
// ---------------------------------------------------------------------------

/// One constant segment of Rydberg drive.
template <typename Real>
struct BasicDrivePulse {
  Real rabi = 0;       ///< Omega, rad/s, >= 0
  Real detuning = 0;   ///< Delta, rad/s
  Real phase = 0;      ///< laser phase, rad
  Real duration = 0;   ///< tau, s, >= 0
  /// Per-site multiplier on the Rabi frequency; empty means a global drive.
  std::vector<Real> site_rabi_scale{};

  Real scale(int atom) const {
    return site_rabi_scale.empty() ? Real(1)
                                   : site_rabi_scale[static_cast<std::size_t>(atom)];
  }

  void validate(int n_atoms) const {
    if (!(duration >= Real(0)) || !std::isfinite(duration)) {
      throw InvalidArgument("pulse duration must be finite and >= 0");
    }
    if (!(rabi >= Real(0)) || !std::isfinite(rabi)) {
      throw InvalidArgument("Rabi frequency must be finite and >= 0");
    }
    if (!std::isfinite(detuning) || !std::isfinite(phase)) {
      throw InvalidArgument("detuning and phase must be finite");
    }
    if (!site_rabi_scale.empty() &&
        static_cast<int>(site_rabi_scale.size()) != n_atoms) {
      throw InvalidArgument("site_rabi_scale length must equal atom count");
    }
  }
};

template <typename Real>
struct WaveformSample {
  Real time;
  Real rabi;
  Real detuning;
};

/// Piecewise-linear Omega(t), Delta(t) with zero laser phase.
template <typename Real>
class BasicWaveform {
 public:
  using Sample = WaveformSample<Real>;

  explicit BasicWaveform(std::vector<Sample> samples)
      : samples_(std::move(samples)) {
    if (samples_.size() < 2) {
      throw InvalidArgument("waveform needs at least two samples");
    }
    if (samples_.front().time != Real(0)) {
      throw InvalidArgument("waveform must start at t = 0");
    }
    for (std::size_t k = 1; k < samples_.size(); ++k) {
      if (!(samples_[k].time > samples_[k - 1].time)) {
        throw InvalidArgument("waveform sample times must be strictly increasing");
      }
    }
    for (const auto& s : samples_) {
      if (!std::isfinite(s.rabi) || !std::isfinite(s.detuning) ||
          !std::isfinite(s.time)) {
        throw InvalidArgument("waveform samples must be finite");
      }
    }
  }

  static BasicWaveform constant(Real rabi, Real detuning, Real duration,
                                std::size_t n_samples = 2) {
    std::vector<Sample> s;
    s.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
      s.push_back({duration * Real(k) / Real(n_samples - 1), rabi, detuning});
    }
    return BasicWaveform(std::move(s));
  }

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  Real total_duration() const noexcept { return samples_.back().time; }

  Sample at(Real t) const {
    if (t <= Real(0)) return samples_.front();
    if (t >= total_duration()) return samples_.back();
    auto it = std::upper_bound(
        samples_.begin(), samples_.end(), t,
        [](Real v, const Sample& s) { return v < s.time; });
    const Sample& b = *it;
    const Sample& a = *(it - 1);
    const Real w = (t - a.time) / (b.time - a.time);
    return {t, a.rabi + w * (b.rabi - a.rabi),
            a.detuning + w * (b.detuning - a.detuning)};
  }

 private:
  std::vector<Sample> samples_;
};

// ---------------------------------------------------------------------------
// QubitGate
// ---------------------------------------------------------------------------

/// A map on the computational subspace, column k = image of basis state k.
template <typename Real>
class BasicQubitGate {
 public:
  using Matrix = CMatrixT<Real>;

  BasicQubitGate(int n_qubits, Matrix matrix)
      : n_qubits_(n_qubits), matrix_(std::move(matrix)) {
    const auto d = static_cast<Eigen::Index>(qubit_dimension(n_qubits));
    if (n_qubits < 1 || matrix_.rows() != d || matrix_.cols() != d) {
      throw InvalidArgument("gate matrix must be 2^n x 2^n");
    }
    leakage_.resize(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
      const Real w = matrix_.col(k).squaredNorm();
      if (w > Real(1) + Real(1e-10)) {
        throw InvalidArgument("gate column norm exceeds one");
      }
      leakage_[static_cast<std::size_t>(k)] = std::max(Real(0), Real(1) - w);
    }
  }

  static BasicQubitGate identity(int n_qubits) {
    const auto d = static_cast<Eigen::Index>(qubit_dimension(n_qubits));
    return BasicQubitGate(n_qubits, Matrix::Identity(d, d));
  }

  static BasicQubitGate diagonal(const CVectorT<Real>& phases_or_entries) {
    const auto d = phases_or_entries.size();
    int n = 0;
    while ((Eigen::Index{1} << n) < d) ++n;
    return BasicQubitGate(n, phases_or_entries.asDiagonal().toDenseMatrix());
  }

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(matrix_.rows());
  }
  const Matrix& matrix() const noexcept { return matrix_; }
  const std::vector<Real>& leakage() const noexcept { return leakage_; }
  Real max_leakage() const {
    return *std::max_element(leakage_.begin(), leakage_.end());
  }

 private:
  int n_qubits_;
  Matrix matrix_;
  std::vector<Real> leakage_;
};

using AtomState = BasicAtomState<double>;
using InteractionSpec = BasicInteractionSpec<double>;
using DrivePulse = BasicDrivePulse<double>;
using Waveform = BasicWaveform<double>;
using QubitGate = BasicQubitGate<double>;

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Drive-independent pieces of the Hamiltonian on a product space with
/// either three levels per site {|0>,|1>,|r>} or two {|1>,|r>} (a sector in
/// which every atom starts in |1>).
template <typename Real>
struct RydbergOperators {
  int n_atoms = 0;
  int local_dim = 3;
  CMatrixT<Real> raise;     ///< sum_i s_i |1><r|_i (blockaded states removed)
  RVectorT<Real> number;    ///< -sum_i n_r,i  (multiplies Delta)
  RVectorT<Real> fixed;     ///< sum V_ij n_i n_j - sum delta_i n_i

  Eigen::Index dimension() const { return raise.rows(); }

  /// Dense Hermitian H for a constant drive.
  CMatrixT<Real> hamiltonian(Real rabi, Real detuning, Real phase) const {
    const std::complex<Real> up =
        Real(0.5) * rabi * std::polar(Real(1), phase);
    CMatrixT<Real> h = up * raise + std::conj(up) * raise.adjoint();
    h.diagonal() += (detuning * number + fixed).template cast<std::complex<Real>>();
    return h;
  }
};

namespace detail {

template <typename Real>
RydbergOperators<Real> make_operators(const BasicInteractionSpec<Real>& spec,
                                      std::span<const Real> site_scale,
                                      int local_dim) {
  const int n = spec.n_atoms();
  std::size_t dim = 1;
  for (int i = 0; i < n; ++i) dim *= static_cast<std::size_t>(local_dim);
  const auto d = static_cast<Eigen::Index>(dim);
  const int rydberg_digit = local_dim - 1;
  const int one_digit = local_dim - 2;

  auto digit = [&](std::size_t index, int atom) {
    for (int i = n - 1; i > atom; --i) index /= static_cast<std::size_t>(local_dim);
    return static_cast<int>(index % static_cast<std::size_t>(local_dim));
  };
  auto place = [&](int atom) {
    std::size_t p = 1;
    for (int i = n - 1; i > atom; --i) p *= static_cast<std::size_t>(local_dim);
    return p;
  };

  RydbergOperators<Real> ops;
  ops.n_atoms = n;
  ops.local_dim = local_dim;
  ops.raise = CMatrixT<Real>::Zero(d, d);
  ops.number = RVectorT<Real>::Zero(d);
  ops.fixed = RVectorT<Real>::Zero(d);

  std::vector<bool> allowed(dim, true);
  for (std::size_t k = 0; k < dim; ++k) {
    Real fixed = 0;
    Real number = 0;
    for (int i = 0; i < n; ++i) {
      if (digit(k, i) != rydberg_digit) continue;
      number -= Real(1);
      fixed -= spec.offset(i);
      for (int j = i + 1; j < n; ++j) {
        if (digit(k, j) != rydberg_digit) continue;
        const Real v = spec.strength(i, j);
        if (std::isinf(v) && v > 0) {
          allowed[k] = false;
        } else {
          fixed += v;
        }
      }
    }
    const auto kk = static_cast<Eigen::Index>(k);
    if (allowed[k]) {
      ops.fixed(kk) = fixed;
      ops.number(kk) = number;
    }
  }
  for (std::size_t k = 0; k < dim; ++k) {
    if (!allowed[k]) continue;
    for (int i = 0; i < n; ++i) {
      if (digit(k, i) != one_digit) continue;
      const std::size_t target = k + place(i);  // |1>_i -> |r>_i
      if (!allowed[target]) continue;
      const Real s = site_scale.empty() ? Real(1)
                                        : site_scale[static_cast<std::size_t>(i)];
      ops.raise(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(target)) = s;
    }
  }
  return ops;
}

/// exp(-i K) for Hermitian K, applied to the columns of `psi`.
template <typename Real, typename Derived>
void apply_hermitian_exp(const CMatrixT<Real>& k, Eigen::MatrixBase<Derived>& psi) {
  Eigen::SelfAdjointEigenSolver<CMatrixT<Real>> es(k);
  const auto& v = es.eigenvectors();
  const CVectorT<Real> phases =
      (es.eigenvalues().template cast<std::complex<Real>>() *
       std::complex<Real>(0, -1))
          .array()
          .exp()
          .matrix();
  psi = v * (phases.asDiagonal() * (v.adjoint() * psi));
}

template <typename Real>
CMatrixT<Real> hermitian_exp(const CMatrixT<Real>& k) {
  Eigen::SelfAdjointEigenSolver<CMatrixT<Real>> es(k);
  const auto& v = es.eigenvectors();
  const CVectorT<Real> phases =
      (es.eigenvalues().template cast<std::complex<Real>>() *
       std::complex<Real>(0, -1))
          .array()
          .exp()
          .matrix();
  return v * phases.asDiagonal() * v.adjoint();
}

/// Fourth-order commutator Magnus step for H(t) = Omega(t) D + diag(Delta(t) N + C),
/// D = (R + R^dagger)/2, with Omega and Delta linear inside the step.
template <typename Real, typename Derived>
void magnus4_step(const RydbergOperators<Real>& ops, const CMatrixT<Real>& d_op,
                  Real h, Real rabi_a, Real det_a, Real rabi_b, Real det_b,
                  Eigen::MatrixBase<Derived>& psi) {
  const Eigen::Index n = ops.dimension();
  const RVectorT<Real> diag_a = det_a * ops.number + ops.fixed;
  const RVectorT<Real> diag_b = det_b * ops.number + ops.fixed;
  // K = h/2 (H_a + H_b) - i sqrt(3) h^2 / 12 [H_b, H_a]
  // [H_b, H_a]_{jk} = D_jk (Omega_b (a_k - a_j) - Omega_a (b_k - b_j))
  const Real c = std::sqrt(Real(3)) * h * h / Real(12);
  CMatrixT<Real> k(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = 0; row < n; ++row) {
      const std::complex<Real> dv = d_op(row, col);
      if (row == col) {
        k(row, col) = Real(0.5) * h *
                      ((rabi_a + rabi_b) * dv + diag_a(row) + diag_b(row));
      } else if (dv == std::complex<Real>(0)) {
        k(row, col) = 0;
      } else {
        const Real comm = rabi_b * (diag_a(col) - diag_a(row)) -
                          rabi_a * (diag_b(col) - diag_b(row));
        k(row, col) = Real(0.5) * h * (rabi_a + rabi_b) * dv -
                      std::complex<Real>(0, 1) * c * comm * dv;
      }
    }
  }
  apply_hermitian_exp<Real>(k, psi);
}

/// Propagates the columns of `psi` through a piecewise-linear waveform.
template <typename Real, typename Derived>
void propagate_waveform(const RydbergOperators<Real>& ops,
                        const BasicWaveform<Real>& wf, int substeps,
                        Eigen::MatrixBase<Derived>& psi) {
  const CMatrixT<Real> d_op =
      Real(0.5) * (ops.raise + CMatrixT<Real>(ops.raise.adjoint()));
  const Real g1 = Real(0.5) - std::sqrt(Real(3)) / Real(6);
  const Real g2 = Real(0.5) + std::sqrt(Real(3)) / Real(6);
  const auto& s = wf.samples();
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const Real t0 = s[k].time;
    const Real span = s[k + 1].time - t0;
    const Real h = span / Real(substeps);
    auto lerp = [&](Real t, Real a, Real b) { return a + (b - a) * ((t - t0) / span); };
    for (int m = 0; m < substeps; ++m) {
      const Real ta = t0 + (Real(m) + g1) * h;
      const Real tb = t0 + (Real(m) + g2) * h;
      magnus4_step<Real>(ops, d_op, h, lerp(ta, s[k].rabi, s[k + 1].rabi),
                         lerp(ta, s[k].detuning, s[k + 1].detuning),
                         lerp(tb, s[k].rabi, s[k + 1].rabi),
                         lerp(tb, s[k].detuning, s[k + 1].detuning), psi);
    }
  }
}

template <typename Real>
void check_dimensions(int n_atoms, const BasicInteractionSpec<Real>& spec) {
  if (n_atoms != spec.n_atoms()) {
    throw InvalidArgument("state and interaction spec have different atom counts");
  }
}

}  // namespace detail

template <typename Real>
RydbergOperators<Real> rydberg_operators(const BasicInteractionSpec<Real>& spec,
                                         std::span<const Real> site_scale = {}) {
  return detail::make_operators<Real>(spec, site_scale, 3);
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

template <typename Real>
CMatrixT<Real> build_hamiltonian(const BasicDrivePulse<Real>& drive,
                                 const BasicInteractionSpec<Real>& spec) {
  drive.validate(spec.n_atoms());
  const auto ops = rydberg_operators<Real>(spec, drive.site_rabi_scale);
  return ops.hamiltonian(drive.rabi, drive.detuning, drive.phase);
}

/// exp(-i H tau) on the full 3^N space.
template <typename Real>
CMatrixT<Real> propagator(const BasicDrivePulse<Real>& drive,
                          const BasicInteractionSpec<Real>& spec) {
  const CMatrixT<Real> h = build_hamiltonian(drive, spec);
  return detail::hermitian_exp<Real>(CMatrixT<Real>(h * drive.duration));
}

template <typename Real>
BasicAtomState<Real> evolve_constant(const BasicAtomState<Real>& state,
                                     const BasicDrivePulse<Real>& drive,
                                     const BasicInteractionSpec<Real>& spec) {
  detail::check_dimensions(state.n_atoms(), spec);
  const CMatrixT<Real> h = build_hamiltonian(drive, spec) * drive.duration;
  CVectorT<Real> psi = state.amplitudes();
  detail::apply_hermitian_exp<Real>(h, psi);
  return BasicAtomState<Real>(state.n_atoms(), std::move(psi));
}

template <typename Real>
BasicAtomState<Real> evolve_sequence(BasicAtomState<Real> state,
                                     std::span<const BasicDrivePulse<Real>> pulses,
                                     const BasicInteractionSpec<Real>& spec) {
  for (const auto& p : pulses) state = evolve_constant(state, p, spec);
  return state;
}

/// Integrator resolution for waveforms: Magnus steps per sample interval.
struct WaveformStepping {
  int substeps = 1;
};

template <typename Real>
BasicAtomState<Real> evolve_waveform(const BasicAtomState<Real>& state,
                                     const BasicWaveform<Real>& wf,
                                     const BasicInteractionSpec<Real>& spec,
                                     WaveformStepping stepping) {
  detail::check_dimensions(state.n_atoms(), spec);
  if (stepping.substeps < 1) throw InvalidArgument("substeps must be >= 1");
  const auto ops = rydberg_operators<Real>(spec);
  CVectorT<Real> psi = state.amplitudes();
  detail::propagate_waveform<Real>(ops, wf, stepping.substeps, psi);
  return BasicAtomState<Real>(state.n_atoms(), std::move(psi));
}

/// Doubles the number of Magnus steps per interval until two successive
/// results differ by less than `tol` in 2-norm, and returns the finer one.
template <typename Real>
BasicAtomState<Real> evolve_waveform(const BasicAtomState<Real>& state,
                                     const BasicWaveform<Real>& wf,
                                     const BasicInteractionSpec<Real>& spec,
                                     Real tol, int* substeps_used = nullptr) {
  if (!(tol > Real(0))) throw InvalidArgument("tolerance must be positive");
  detail::check_dimensions(state.n_atoms(), spec);
  const auto ops = rydberg_operators<Real>(spec);
  CVectorT<Real> coarse = state.amplitudes();
  detail::propagate_waveform<Real>(ops, wf, 1, coarse);
  for (int sub = 2; sub <= (1 << 14); sub *= 2) {
    CVectorT<Real> fine = state.amplitudes();
    detail::propagate_waveform<Real>(ops, wf, sub, fine);
    if ((fine - coarse).norm() < tol) {
      if (substeps_used != nullptr) *substeps_used = sub;
      return BasicAtomState<Real>(state.n_atoms(), std::move(fine));
    }
    coarse = std::move(fine);
  }
  throw SolverFailure("waveform integration did not converge to tolerance");
}

/// Column k of the result is the computational-subspace projection of
/// `finals[k]`, the evolved image of qubit basis state k.
template <typename Real>
BasicQubitGate<Real> extract_qubit_gate(
    std::span<const BasicAtomState<Real>> finals) {
  if (finals.empty()) throw InvalidArgument("no evolved basis states given");
  const int n = finals.front().n_atoms();
  const std::size_t d = qubit_dimension(n);
  if (finals.size() != d) {
    throw InvalidArgument("need one evolved state per computational basis state");
  }
  CMatrixT<Real> m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    if (finals[k].n_atoms() != n) throw InvalidArgument("mixed atom counts");
    m.col(static_cast<Eigen::Index>(k)) = finals[k].qubit_projection();
  }
  return BasicQubitGate<Real>(n, std::move(m));
}

/// Phase-insensitive trace fidelity |Tr(target^dagger actual)|^2 / d^2.
template <typename Real>
Real gate_fidelity(const BasicQubitGate<Real>& actual,
                   const BasicQubitGate<Real>& target) {
  if (actual.n_qubits() != target.n_qubits()) {
    throw InvalidArgument("gates act on different qubit counts");
  }
  const Real d = static_cast<Real>(actual.dimension());
  const std::complex<Real> tr = (target.matrix().adjoint() * actual.matrix()).trace();
  return std::min(Real(1), std::norm(tr) / (d * d));
}

/// Qubit gate of a pulse sequence by evolving every computational basis
/// state on the full 3^N space.
template <typename Real>
BasicQubitGate<Real> simulate_qubit_gate(
    std::span<const BasicDrivePulse<Real>> pulses,
    const BasicInteractionSpec<Real>& spec) {
  const int n = spec.n_atoms();
  const auto d = static_cast<Eigen::Index>(atom_dimension(n));
  CMatrixT<Real> u = CMatrixT<Real>::Identity(d, d);
  for (const auto& p : pulses) u = propagator(p, spec) * u;
  std::vector<BasicAtomState<Real>> finals;
  for (std::size_t b = 0; b < qubit_dimension(n); ++b) {
    finals.emplace_back(
        n, u.col(static_cast<Eigen::Index>(qubit_to_atom_index(b, n))));
  }
  return extract_qubit_gate<Real>(finals);
}

template <typename Real>
BasicQubitGate<Real> simulate_qubit_gate(const BasicWaveform<Real>& wf,
                                         const BasicInteractionSpec<Real>& spec,
                                         WaveformStepping stepping) {
  const int n = spec.n_atoms();
  std::vector<BasicAtomState<Real>> finals;
  for (std::size_t b = 0; b < qubit_dimension(n); ++b) {
    finals.push_back(evolve_waveform(BasicAtomState<Real>::from_qubit_index(b, n),
                                     wf, spec, stepping));
  }
  return extract_qubit_gate<Real>(finals);
}

// ---------------------------------------------------------------------------
// Sector decomposition
// ---------------------------------------------------------------------------
//
// A Rydberg drive never touches |0>, so a computational basis state whose
// atoms in |1> form the set S evolves inside {|1>,|r>}^S alone, and its only
// computational component at the end is itself. The qubit gate is therefore
// diagonal and each entry can be computed in a 2^|S| dimensional space.

namespace detail {

template <typename Real>
struct Sector {
  std::vector<int> atoms;
  BasicInteractionSpec<Real> spec;
  std::vector<Real> scale;
};

template <typename Real>
std::vector<int> atoms_of_mask(std::size_t mask, int n) {
  std::vector<int> atoms;
  for (int i = 0; i < n; ++i) {
    if ((mask >> (n - 1 - i)) & 1U) atoms.push_back(i);
  }
  return atoms;
}

/// Evaluates `entry(ops)` once per distinct sector and fills the diagonal.
template <typename Real, typename Fn>
BasicQubitGate<Real> sector_diagonal(const BasicInteractionSpec<Real>& spec,
                                     std::span<const Real> scale, Fn&& entry) {
  const int n = spec.n_atoms();
  const std::size_t d = qubit_dimension(n);
  CVectorT<Real> diag(static_cast<Eigen::Index>(d));
  diag(0) = Real(1);
  std::vector<std::pair<Sector<Real>, std::complex<Real>>> cache;
  for (std::size_t mask = 1; mask < d; ++mask) {
    auto atoms = atoms_of_mask<Real>(mask, n);
    auto sub = spec.subset(atoms);
    std::vector<Real> sub_scale;
    if (!scale.empty()) {
      for (int a : atoms) sub_scale.push_back(scale[static_cast<std::size_t>(a)]);
    }
    std::complex<Real> value;
    bool found = false;
    for (const auto& [sector, v] : cache) {
      if (sector.spec == sub && sector.scale == sub_scale) {
        value = v;
        found = true;
        break;
      }
    }
    if (!found) {
      const auto ops = make_operators<Real>(sub, sub_scale, 2);
      value = entry(ops);
      cache.push_back({Sector<Real>{atoms, sub, sub_scale}, value});
    }
    diag(static_cast<Eigen::Index>(mask)) = value;
  }
  return BasicQubitGate<Real>(n, diag.asDiagonal().toDenseMatrix());
}

}  // namespace detail

/// Diagonal qubit gate of a sequence of constant Rydberg pulses, computed
/// sector by sector. Pulses in one sequence must share one addressing pattern.
template <typename Real>
BasicQubitGate<Real> rydberg_phase_gate(
    std::span<const BasicDrivePulse<Real>> pulses,
    const BasicInteractionSpec<Real>& spec) {
  if (pulses.empty()) return BasicQubitGate<Real>::identity(spec.n_atoms());
  for (const auto& p : pulses) {
    p.validate(spec.n_atoms());
    if (p.site_rabi_scale != pulses.front().site_rabi_scale) {
      throw InvalidArgument("sector route needs one addressing pattern per sequence");
    }
  }
  const std::vector<Real>& scale = pulses.front().site_rabi_scale;
  return detail::sector_diagonal<Real>(
      spec, scale, [&](const RydbergOperators<Real>& ops) {
        CVectorT<Real> psi = CVectorT<Real>::Zero(ops.dimension());
        psi(0) = Real(1);
        for (const auto& p : pulses) {
          const CMatrixT<Real> k =
              ops.hamiltonian(p.rabi, p.detuning, p.phase) * p.duration;
          detail::apply_hermitian_exp<Real>(k, psi);
        }
        return psi(0);
      });
}

template <typename Real>
BasicQubitGate<Real> rydberg_phase_gate(const BasicWaveform<Real>& wf,
                                        const BasicInteractionSpec<Real>& spec,
                                        WaveformStepping stepping) {
  if (stepping.substeps < 1) throw InvalidArgument("substeps must be >= 1");
  return detail::sector_diagonal<Real>(
      spec, std::span<const Real>{}, [&](const RydbergOperators<Real>& ops) {
        CVectorT<Real> psi = CVectorT<Real>::Zero(ops.dimension());
        psi(0) = Real(1);
        detail::propagate_waveform<Real>(ops, wf, stepping.substeps, psi);
        return psi(0);
      });
}

extern template class BasicAtomState<double>;
extern template class BasicInteractionSpec<double>;
extern template class BasicWaveform<double>;
extern template class BasicQubitGate<double>;

}  // namespace gateforge
