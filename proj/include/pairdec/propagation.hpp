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

// Time-ordered propagation of density matrices under piecewise-constant
// exponentials, and interaction-frame transforms.

#pragma once

#include "pairdec/hamiltonian.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

namespace pairdec {

enum class StateMode { Density, Deviation };

class DensityState {
 public:
  DensityState() = default;

  /// Full density matrix: Hermitian, unit trace, positive semidefinite.
  static DensityState density(Operator rho) {
    DensityState s(std::move(rho), StateMode::Density);
    s.validate();
    return s;
  }

  /// High-temperature deviation density matrix: Hermitian and traceless.
  static DensityState deviation(Operator dev) {
    DensityState s(std::move(dev), StateMode::Deviation);
    s.validate();
    return s;
  }

  /// Equilibrium deviation sum_i Z_i.
  static DensityState thermal_deviation(int n) { return deviation(collective(Axis::Z, n)); }

  const Operator& matrix() const { return m_; }
  StateMode mode() const { return mode_; }
  int spins() const { return spin_count(m_); }
  Eigen::Index dim() const { return m_.rows(); }

  /// Tr(O rho), or Tr(O dev) / 2^n in deviation mode.
  double expectation(const Operator& o) const {
    check_same_dim(o, m_);
    const double tr = (o * m_).trace().real();
    return mode_ == StateMode::Deviation ? tr / static_cast<double>(m_.rows()) : tr;
  }

  DensityState evolved(const Operator& u) const {
    DensityState s(*this);
    s.m_ = u * m_ * u.adjoint();
    return s;
  }

  DensityState with_matrix(Operator m) const {
    DensityState s(*this);
    s.m_ = std::move(m);
    return s;
  }

  void validate(double tol = 1e-10) const {
    spin_count(m_);
    const double scale = std::max(max_abs(m_), 1.0);
    if (hermiticity_error(m_) > tol * scale) throw DomainError("state is not Hermitian");
    const Complex tr = m_.trace();
    if (mode_ == StateMode::Density) {
      if (std::abs(tr - 1.0) > tol) throw DomainError("density matrix trace differs from 1");
      Eigen::SelfAdjointEigenSolver<Operator> es(m_, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -tol) throw DomainError("density matrix has a negative eigenvalue");
    } else if (std::abs(tr) > tol * scale) {
      throw DomainError("deviation density matrix must be traceless");
    }
  }

 private:
  DensityState(Operator m, StateMode mode) : m_(std::move(m)), mode_(mode) {}
  Operator m_;
  StateMode mode_ = StateMode::Deviation;
};

enum class Sampler { Midpoint, LeftEndpoint };

struct NamedObservable {
  std::string name;
  Operator op;
};

struct PropagationConfig {
  double dt = 0.0;  // seconds
  Sampler sampler = Sampler::Midpoint;
  std::vector<NamedObservable> observables;
  int record_stride = 1;
  bool strict = false;
  // Largest frequency in the problem (rad/s), normally largest_frequency();
  // 0 means estimate it from the spectral spread of H at the first step.
  double omega_max = 0.0;
  std::function<void(const std::string&)> warn = [](const std::string& msg) {
    std::clog << "warning: " << msg << '\n';
  };
};

/// (2 pi / omega_max) / 100
inline double default_dt(double omega_max) {
  if (!(omega_max > 0.0)) throw DomainError("omega_max must be positive");
  return kTwoPi / omega_max / 100.0;
}

/// Time grid plus named observable channels.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[channel][sample]

  Trajectory() = default;
  explicit Trajectory(std::vector<std::string> channel_names)
      : names(std::move(channel_names)), values(names.size()) {}

  std::size_t size() const { return times.size(); }
  std::size_t channels() const { return names.size(); }

  void add_sample(double t, const std::vector<double>& v) {
    if (v.size() != names.size()) throw DomainError("sample width does not match channel count");
    times.push_back(t);
    for (std::size_t c = 0; c < v.size(); ++c) values[c].push_back(v[c]);
  }

  void overwrite_last(const std::vector<double>& v) {
    if (times.empty()) throw DomainError("no sample to overwrite");
    for (std::size_t c = 0; c < v.size(); ++c) values[c].back() = v[c];
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (names[c] == name) return c;
    }
    throw DomainError("no channel named '" + name + "'");
  }

  const std::vector<double>& channel(const std::string& name) const { return values[index_of(name)]; }

  std::vector<double> final_values() const {
    std::vector<double> out;
    for (const auto& ch : values) out.push_back(ch.empty() ? 0.0 : ch.back());
    return out;
  }
};

inline std::vector<std::string> observable_names(const std::vector<NamedObservable>& obs) {
  std::vector<std::string> names;
  for (const auto& o : obs) names.push_back(o.name);
  return names;
}

inline std::vector<double> measure(const DensityState& state, const std::vector<NamedObservable>& obs) {
  std::vector<double> v;
  v.reserve(obs.size());
  for (const auto& o : obs) v.push_back(state.expectation(o.op));
  return v;
}

namespace detail {

inline void check_finite(const Operator& m, double t) {
  if (!m.allFinite()) {
    throw NumericalError("non-finite value in propagated state at t = " + std::to_string(t) + " s");
  }
}

inline void check_step_size(double h, double omega_max, const PropagationConfig& cfg) {
  if (!(omega_max > 0.0)) return;
  const double limit = kTwoPi / omega_max / 50.0;
  if (h > limit * (1.0 + 1e-12)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "time step %.4g s exceeds (2 pi / omega_max) / 50 = %.4g s", h, limit);
    const std::string msg = buf;
    if (cfg.strict) throw NumericalError(msg);
    if (cfg.warn) cfg.warn(msg);
  }
}

}  // namespace detail

/// Step count and uniform step for `duration` at requested `dt`; the last
/// step lands exactly on t0 + duration.
inline std::pair<long, double> step_grid(double duration, double dt) {
  if (!(duration >= 0.0)) throw DomainError("duration must be non-negative");
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (duration == 0.0) return {0, 0.0};
  const long steps = std::max(1L, static_cast<long>(std::ceil(duration / dt - 1e-9)));
  return {steps, duration / static_cast<double>(steps)};
}

/// Evolves `state` from t0 for `duration`. When `record` is non-null, appends
/// the initial sample, every `record_stride`-th step, and the final sample.
inline DensityState propagate_state(const TimeDependentHamiltonian& h, DensityState state, double t0,
                                    double duration, const PropagationConfig& cfg, Trajectory* record = nullptr) {
  check_same_dim(h.static_part(), state.matrix());
  if (cfg.record_stride < 1) throw DomainError("record_stride must be >= 1");
  const auto [steps, step] = step_grid(duration, cfg.dt);
  if (record != nullptr && record->times.empty()) record->add_sample(t0, measure(state, cfg.observables));
  if (steps == 0) return state;

  Operator rho = state.matrix();
  Operator u_fixed;
  const bool fixed = h.time_independent();
  for (long k = 0; k < steps; ++k) {
    const double t_left = t0 + static_cast<double>(k) * step;
    const double t_eval = cfg.sampler == Sampler::Midpoint ? t_left + 0.5 * step : t_left;
    Operator u;
    if (fixed && k > 0) {
      u = u_fixed;
    } else {
      const Operator hk = h(t_eval);
      if (!hk.allFinite()) throw NumericalError("non-finite Hamiltonian at t = " + std::to_string(t_eval));
      HermitianExponential ex(hk, false);
      if (k == 0) {
        double w_max = cfg.omega_max;
        if (!(w_max > 0.0) && ex.eigenvalues().size() > 0) {
          w_max = ex.eigenvalues().maxCoeff() - ex.eigenvalues().minCoeff();
        }
        detail::check_step_size(step, w_max, cfg);
      }
      u = ex(step);
      if (fixed) u_fixed = u;
    }
    rho = u * rho * u.adjoint();
    detail::check_finite(rho, t_left + step);
    if (record != nullptr && ((k + 1) % cfg.record_stride == 0 || k + 1 == steps)) {
      record->add_sample(t0 + static_cast<double>(k + 1) * step,
                         measure(state.with_matrix(rho), cfg.observables));
    }
  }
  return state.with_matrix(std::move(rho));
}

inline Trajectory propagate(const TimeDependentHamiltonian& h, const DensityState& state, double duration,
                            const PropagationConfig& cfg) {
  Trajectory traj(observable_names(cfg.observables));
  propagate_state(h, state, 0.0, duration, cfg, &traj);
  return traj;
}

/// Time-ordered product of the step exponentials over [t0, t0 + duration].
inline Operator total_propagator(const TimeDependentHamiltonian& h, double t0, double duration, double dt,
                                 Sampler sampler = Sampler::Midpoint) {
  const auto [steps, step] = step_grid(duration, dt);
  Operator u = Operator::Identity(h.dim(), h.dim());
  for (long k = 0; k < steps; ++k) {
    const double t_left = t0 + static_cast<double>(k) * step;
    const double t_eval = sampler == Sampler::Midpoint ? t_left + 0.5 * step : t_left;
    u = HermitianExponential(h(t_eval), false)(step) * u;
  }
  return u;
}

/// t -> e^{+i H0 t} (H(t) - H0) e^{-i H0 t}, evaluated lazily. This is the
/// Hamiltonian generating U0(t)^dagger U(t) with U0 = e^{-i H0 t}.
inline TimeDependentHamiltonian interaction_frame(const TimeDependentHamiltonian& h, const Operator& h0) {
  check_same_dim(h.static_part(), h0);
  auto ex = std::make_shared<const HermitianExponential>(h0);
  TimeDependentHamiltonian out = h;
  out.add_frame(FrameStep{[ex](double t) { return (*ex)(t); }, [h0](double) { return h0; }});
  return out;
}

/// U_rf(t) = exp(-i (w1 / (2 wm)) sin(wm t) sum_i sigma_axis^i), the exact
/// propagator of a cosine-AM drive on its own.
class DriveTogglingFrame {
 public:
  DriveTogglingFrame(const DriveSpec& drive, int n)
      : drive_(drive), generator_(transverse_half_sum(drive.phase(), n)), ex_(generator_) {
    drive.validate();
    if (drive.envelope != Envelope::CosineAM) {
      throw DomainError("drive toggling frame requires a cosine-AM envelope");
    }
    if (drive.carrier_offset != 0.0) {
      throw DomainError("off-resonant drive does not commute with itself at different times");
    }
  }

  /// Integrated drive phase (w1 / wm) sin(wm t) acting on (1/2) sum sigma.
  double angle(double t) const { return drive_.amplitude / drive_.modulation * std::sin(drive_.modulation * t); }

  Operator operator()(double t) const { return ex_(angle(t)); }

  /// Largest coefficient of sum sigma in the exponent: w1 / (2 wm).
  double max_phase() const { return drive_.amplitude / (2.0 * drive_.modulation); }

  double period() const { return kTwoPi / drive_.modulation; }
  const Operator& generator() const { return generator_; }

 private:
  DriveSpec drive_;
  Operator generator_;
  HermitianExponential ex_;
};

inline DriveTogglingFrame toggling_frame_of_drive(const DriveSpec& drive, int n) {
  return DriveTogglingFrame(drive, n);
}

/// H seen from the toggling frame of `drive`: U_rf^dagger (H - D(t)) U_rf.
/// H must contain the drive term produced by am_drive_hamiltonian.
inline TimeDependentHamiltonian drive_toggling_frame(const TimeDependentHamiltonian& h, const DriveSpec& drive) {
  auto frame = std::make_shared<const DriveTogglingFrame>(drive, h.spins());
  TimeDependentHamiltonian out = h;
  out.add_frame(FrameStep{[frame](double t) { return (*frame)(t); },
                          [frame, drive](double t) { return drive.envelope_at(t) * frame->generator(); }});
  return out;
}

}  // namespace pairdec
