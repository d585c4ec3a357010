/* Copyright 2026 The pairdec Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Secular dipolar and rotating-frame RF Hamiltonians. Units: hbar = 1, so
// every Hamiltonian is an angular-frequency operator in rad/s.

#pragma once

#include "pairdec/spin_algebra.hpp"
#include "pairdec/system.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace pairdec {

/// h_ij = 2 Z_i Z_j - X_i X_j - Y_i Y_j
inline Operator pair_coupling_operator(int i, int j, int n) {
  if (i == j) throw DomainError("pair coupling needs two distinct spins");
  return 2.0 * pauli(Axis::Z, i, n) * pauli(Axis::Z, j, n) - pauli(Axis::X, i, n) * pauli(Axis::X, j, n) -
         pauli(Axis::Y, i, n) * pauli(Axis::Y, j, n);
}

/// H_d = sum_{i<j} (w_ij / 4) h_ij; each unordered pair is counted once.
inline Operator dipolar_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const int n = sys.spin_count();
  const auto dim = Eigen::Index{1} << n;
  Operator h = Operator::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = sys.coupling(i, j);
      if (w != 0.0) h += (w / 4.0) * pair_coupling_operator(i, j, n);
    }
  }
  return h;
}

/// Only the intra-pair (strong) part of H_d.
inline Operator strong_pair_hamiltonian(const SpinSystem& sys) {
  const int n = sys.spin_count();
  const auto dim = Eigen::Index{1} << n;
  Operator h = Operator::Zero(dim, dim);
  for (const auto& p : sys.pairs()) {
    h += (sys.coupling(p[0], p[1]) / 4.0) * pair_coupling_operator(p[0], p[1], n);
  }
  return h;
}

enum class Envelope { CosineAM, Constant };

/// Resonant RF drive in the rotating frame. amplitude and modulation in rad/s.
struct DriveSpec {
  double amplitude = 0.0;   // omega_1
  double modulation = 0.0;  // omega_m
  Axis axis = Axis::X;
  Envelope envelope = Envelope::CosineAM;
  double carrier_offset = 0.0;

  void validate() const {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw DomainError("drive amplitude must be >= 0");
    if (axis == Axis::Z) throw DomainError("drive axis must be X or Y");
    if (envelope == Envelope::CosineAM && !(modulation > 0.0)) {
      throw DomainError("cosine amplitude modulation needs a positive modulation frequency");
    }
    if (!std::isfinite(carrier_offset)) throw DomainError("non-finite carrier offset");
  }

  /// e(t) = omega_1 cos(omega_m t) or omega_1.
  double envelope_at(double t) const {
    return envelope == Envelope::CosineAM ? amplitude * std::cos(modulation * t) : amplitude;
  }

  double phase() const { return axis == Axis::Y ? std::numbers::pi / 2.0 : 0.0; }
};

/// Drive with omega_m matched to the pair: omega_m = 3 omega_D / 2.
inline DriveSpec matched_drive(double strong_coupling, double amplitude) {
  DriveSpec d;
  d.amplitude = amplitude;
  d.modulation = 1.5 * strong_coupling;
  return d;
}

/// (1/2) sum_i (cos(phi) X_i + sin(phi) Y_i)
inline Operator transverse_half_sum(double phase, int n) {
  return 0.5 * (std::cos(phase) * collective(Axis::X, n) + std::sin(phase) * collective(Axis::Y, n));
}

struct DriveTerm {
  std::function<double(double)> envelope;
  Operator op;
};

/// Frame change applied on evaluation: X -> U(t)^dagger (X - G(t)) U(t).
struct FrameStep {
  std::function<Operator(double)> unitary;
  std::function<Operator(double)> subtract;
};

/// H(t) = static_part + sum_k e_k(t) op_k, optionally seen through a chain
/// of frame changes. Copies share the (immutable) frame closures.
class TimeDependentHamiltonian {
 public:
  TimeDependentHamiltonian() = default;
  explicit TimeDependentHamiltonian(Operator static_part) : static_(std::move(static_part)) {
    if (static_.rows() != static_.cols()) throw DomainError("static Hamiltonian is not square");
  }

  TimeDependentHamiltonian& add_drive(DriveTerm term) {
    check_same_dim(static_, term.op);
    drives_.push_back(std::move(term));
    return *this;
  }

  TimeDependentHamiltonian& add_frame(FrameStep step) {
    frames_.push_back(std::make_shared<const FrameStep>(std::move(step)));
    return *this;
  }

  const Operator& static_part() const { return static_; }
  const std::vector<DriveTerm>& drive_terms() const { return drives_; }
  bool has_frames() const { return !frames_.empty(); }
  Eigen::Index dim() const { return static_.rows(); }
  int spins() const { return spin_count(static_); }
  bool time_independent() const { return drives_.empty() && frames_.empty(); }

  /// Hamiltonian before any frame change.
  Operator untransformed(double t) const {
    Operator h = static_;
    for (const auto& d : drives_) {
      const double e = d.envelope(t);
      if (e != 0.0) h += e * d.op;
    }
    return h;
  }

  Operator operator()(double t) const {
    Operator h = untransformed(t);
    for (const auto& f : frames_) {
      const Operator u = f->unitary(t);
      h = u.adjoint() * (h - f->subtract(t)) * u;
    }
    return h;
  }

 private:
  Operator static_;
  std::vector<DriveTerm> drives_;
  std::vector<std::shared_ptr<const FrameStep>> frames_;
};

/// Drive term e(t) * (1/2) sum_i sigma_axis^i (rotating frame, on resonance).
inline DriveTerm am_drive_hamiltonian(const SpinSystem& sys, const DriveSpec& drive, double phase_offset = 0.0) {
  drive.validate();
  DriveTerm term;
  term.op = transverse_half_sum(drive.phase() + phase_offset, sys.spin_count());
  term.envelope = [drive](double t) { return drive.envelope_at(t); };
  return term;
}

/// Full rotating-frame Hamiltonian: H_d + (offset/2) sum Z + drive.
inline TimeDependentHamiltonian rotating_frame_hamiltonian(const SpinSystem& sys, const DriveSpec& drive,
                                                           double phase_offset = 0.0) {
  Operator stat = dipolar_hamiltonian(sys);
  if (drive.carrier_offset != 0.0) stat += 0.5 * drive.carrier_offset * collective(Axis::Z, sys.spin_count());
  TimeDependentHamiltonian h(std::move(stat));
  if (drive.amplitude != 0.0) h.add_drive(am_drive_hamiltonian(sys, drive, phase_offset));
  return h;
}

/// Largest angular frequency driving the dynamics: max(3 w_max / 2, w1, wm, |offset|).
inline double largest_frequency(const SpinSystem& sys, const DriveSpec* drive) {
  double w = 1.5 * sys.couplings().cwiseAbs().maxCoeff();
  if (drive != nullptr) {
    w = std::max({w, drive->amplitude, drive->envelope == Envelope::CosineAM ? drive->modulation : 0.0,
                  std::abs(drive->carrier_offset)});
  }
  return w;
}

}  // namespace pairdec
