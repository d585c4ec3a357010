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

// Pulse sequences: ideal rotations, AM modulation blocks, free evolution,
// crusher projections and phase cycles.

#pragma once

#include "pairdec/propagation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace pairdec {

inline constexpr double kPhaseX = 0.0;
inline constexpr double kPhaseY = std::numbers::pi / 2.0;
inline constexpr double kPhaseMinusX = std::numbers::pi;
inline constexpr double kPhaseMinusY = 1.5 * std::numbers::pi;

/// Instantaneous exp(-i (angle / 2) sum_i (cos(phase) X_i + sin(phase) Y_i)).
struct IdealRotation {
  double phase = kPhaseX;
  double angle = std::numbers::pi / 2.0;
};

struct AmModulation {
  DriveSpec drive;
  double duration = 0.0;
};

struct FreeEvolution {
  double duration = 0.0;
};

enum class CrusherKind {
  SingleSpinZ,   // keep only weight-1 Z strings
  Longitudinal,  // keep every string made of I and Z
  Explicit,      // keep the listed strings
};

/// Projection of the deviation density matrix onto a Pauli-string subspace.
struct Crusher {
  CrusherKind kind = CrusherKind::SingleSpinZ;
  std::vector<std::string> retain;  // labels, for CrusherKind::Explicit
};

using Segment = std::variant<IdealRotation, AmModulation, FreeEvolution, Crusher>;

/// One step of a phase cycle: per-segment phase offsets (radians, applied to
/// rotations and drives) and a receiver weight.
struct PhaseStep {
  std::vector<double> phase_offsets;
  double receiver = 1.0;
};

struct PhaseCycle {
  std::vector<PhaseStep> steps;

  void validate(std::size_t segment_count) const {
    if (steps.empty()) throw DomainError("phase cycle has no steps");
    double total = 0.0;
    for (const auto& s : steps) {
      if (s.phase_offsets.size() != segment_count) {
        throw DomainError("phase cycle step has " + std::to_string(s.phase_offsets.size()) +
                          " offsets for " + std::to_string(segment_count) + " segments");
      }
      if (!std::isfinite(s.receiver)) throw DomainError("non-finite receiver weight");
      for (double p : s.phase_offsets) {
        if (!std::isfinite(p)) throw DomainError("non-finite phase offset");
      }
      total += std::abs(s.receiver);
    }
    if (total == 0.0) throw DomainError("phase cycle receiver weights are all zero");
  }

  double receiver_sum() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.receiver;
    return s;
  }
};

struct SequenceOptions {
  double dt = 0.0;  // 0: default_dt of the largest frequency in the problem
  int record_stride = 1;
  std::vector<NamedObservable> observables;
  bool strict = false;
};

namespace detail {

inline bool crusher_keeps(const Crusher& c, const PauliString& p) {
  switch (c.kind) {
    case CrusherKind::SingleSpinZ:
      return p.weight() == 1 &&
             std::any_of(p.factors.begin(), p.factors.end(), [](PauliLabel l) { return l == PauliLabel::Z; });
    case CrusherKind::Longitudinal:
      return std::all_of(p.factors.begin(), p.factors.end(),
                         [](PauliLabel l) { return l == PauliLabel::I || l == PauliLabel::Z; });
    case CrusherKind::Explicit: {
      const auto l = p.label();
      return std::find(c.retain.begin(), c.retain.end(), l) != c.retain.end();
    }
  }
  return false;
}

}  // namespace detail

/// Orthogonal projection of `m` onto the crusher's Pauli subspace. Pauli
/// strings are Hermitian, so any subspace spanned by them is closed under
/// conjugation; explicit labels are still checked for validity.
inline Operator apply_crusher(const Crusher& c, const Operator& m) {
  const int n = spin_count(m);
  if (c.kind == CrusherKind::Explicit) {
    if (c.retain.empty()) throw DomainError("explicit crusher needs at least one retained string");
    for (const auto& l : c.retain) {
      if (PauliString::parse(l).spins() != n) throw DomainError("crusher label '" + l + "' has wrong spin count");
    }
  }
  std::vector<PauliString> kept;
  for (auto& t : pauli_decompose(m, 0.0)) {
    if (detail::crusher_keeps(c, t)) kept.push_back(std::move(t));
  }
  return reconstruct(kept, n);
}

inline Operator rotation_operator(double phase, double angle, int n) {
  return expm_hermitian(transverse_half_sum(phase, n), angle);
}

inline double sequence_duration(std::span<const Segment> segments) {
  double t = 0.0;
  for (const auto& s : segments) {
    if (const auto* a = std::get_if<AmModulation>(&s)) t += a->duration;
    if (const auto* f = std::get_if<FreeEvolution>(&s)) t += f->duration;
  }
  return t;
}

/// Largest frequency over the system and every drive in the sequence.
inline double sequence_omega_max(const SpinSystem& sys, std::span<const Segment> segments) {
  double w = largest_frequency(sys, nullptr);
  for (const auto& s : segments) {
    if (const auto* a = std::get_if<AmModulation>(&s)) w = std::max(w, largest_frequency(sys, &a->drive));
  }
  return w;
}

namespace detail {

// Single pass of the segment list with per-segment phase offsets.
inline DensityState run_once(const SpinSystem& sys, std::span<const Segment> segments,
                             std::span<const double> offsets, DensityState state, const PropagationConfig& cfg,
                             Trajectory& traj) {
  const int n = sys.spin_count();
  const Operator hd = dipolar_hamiltonian(sys);
  double t = 0.0;
  if (traj.times.empty()) traj.add_sample(0.0, measure(state, cfg.observables));
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const double offset = offsets.empty() ? 0.0 : offsets[k];
    const auto& seg = segments[k];
    if (const auto* r = std::get_if<IdealRotation>(&seg)) {
      state = state.evolved(rotation_operator(r->phase + offset, r->angle, n));
      traj.overwrite_last(measure(state, cfg.observables));
    } else if (const auto* c = std::get_if<Crusher>(&seg)) {
      state = state.with_matrix(apply_crusher(*c, state.matrix()));
      traj.overwrite_last(measure(state, cfg.observables));
    } else if (const auto* a = std::get_if<AmModulation>(&seg)) {
      a->drive.validate();
      // drive time is measured from the start of its own block
      auto h = rotating_frame_hamiltonian(sys, a->drive, offset);
      Trajectory local(traj.names);
      state = propagate_state(h, state, 0.0, a->duration, cfg, &local);
      for (std::size_t i = 1; i < local.size(); ++i) {
        std::vector<double> v;
        for (const auto& ch : local.values) v.push_back(ch[i]);
        traj.add_sample(t + local.times[i], v);
      }
      t += a->duration;
    } else if (const auto* f = std::get_if<FreeEvolution>(&seg)) {
      TimeDependentHamiltonian h(hd);
      Trajectory local(traj.names);
      state = propagate_state(h, state, 0.0, f->duration, cfg, &local);
      for (std::size_t i = 1; i < local.size(); ++i) {
        std::vector<double> v;
        for (const auto& ch : local.values) v.push_back(ch[i]);
        traj.add_sample(t + local.times[i], v);
      }
      t += f->duration;
    }
  }
  return state;
}

}  // namespace detail

struct SequenceRun {
  Trajectory trajectory;
  std::vector<DensityState> final_states;  // one per phase-cycle step
};

/// Executes the segments in order, recording observables. Each sample holds
/// the state after every instantaneous segment at that time. With a phase
/// cycle the run repeats per step and the recorded channels are combined as
/// sum_k w_k s_k / sum_k |w_k|.
inline SequenceRun run_sequence_detailed(const SpinSystem& sys, std::span<const Segment> segments,
                                         const std::optional<PhaseCycle>& cycle, const DensityState& initial,
                                         const SequenceOptions& opt) {
  if (initial.spins() != sys.spin_count()) throw DomainError("initial state does not match the system size");
  PropagationConfig cfg;
  const double w = sequence_omega_max(sys, segments);
  cfg.omega_max = w;
  cfg.dt = opt.dt > 0.0 ? opt.dt : (w > 0.0 ? default_dt(w) : 1.0);
  cfg.observables = opt.observables;
  cfg.record_stride = opt.record_stride;
  cfg.strict = opt.strict;

  SequenceRun out;
  if (!cycle) {
    Trajectory traj(observable_names(opt.observables));
    out.final_states.push_back(detail::run_once(sys, segments, {}, initial, cfg, traj));
    out.trajectory = std::move(traj);
    return out;
  }
  cycle->validate(segments.size());
  double norm = 0.0;
  for (const auto& s : cycle->steps) norm += std::abs(s.receiver);
  Trajectory combined;
  for (std::size_t k = 0; k < cycle->steps.size(); ++k) {
    const auto& step = cycle->steps[k];
    Trajectory traj(observable_names(opt.observables));
    out.final_states.push_back(detail::run_once(sys, segments, step.phase_offsets, initial, cfg, traj));
    if (k == 0) {
      combined = traj;
      for (auto& ch : combined.values) {
        for (auto& v : ch) v *= step.receiver / norm;
      }
    } else {
      for (std::size_t c = 0; c < traj.values.size(); ++c) {
        for (std::size_t i = 0; i < traj.values[c].size(); ++i) {
          combined.values[c][i] += step.receiver / norm * traj.values[c][i];
        }
      }
    }
  }
  out.trajectory = std::move(combined);
  return out;
}

inline Trajectory run_sequence(const SpinSystem& sys, std::span<const Segment> segments,
                               const std::optional<PhaseCycle>& cycle, const DensityState& initial,
                               const SequenceOptions& opt) {
  return run_sequence_detailed(sys, segments, cycle, initial, opt).trajectory;
}

// ---------------------------------------------------------------------------
// Observables and readout channels

/// sum_i X_i over all spins.
inline Operator sigma_x_sum(int n) { return collective(Axis::X, n); }

/// sum over pairs of (Y_a Z_b + Z_a Y_b).
inline Operator two_spin_term(const SpinSystem& sys) {
  const int n = sys.spin_count();
  Operator out = Operator::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (const auto& p : sys.pairs()) {
    out += pauli(Axis::Y, p[0], n) * pauli(Axis::Z, p[1], n) + pauli(Axis::Z, p[0], n) * pauli(Axis::Y, p[1], n);
  }
  return out;
}

inline std::vector<NamedObservable> coherence_channels(const SpinSystem& sys) {
  return {{"sigma_x_sum", sigma_x_sum(sys.spin_count())}, {"two_spin", two_spin_term(sys)}};
}

/// Hilbert-Schmidt projections Re Tr(P^dagger rho) / 2^n onto each string
/// (the string's own coefficient is ignored).
inline std::vector<double> direct_term_extraction(const DensityState& state, const std::vector<PauliString>& terms) {
  const int n = state.spins();
  std::vector<double> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    if (t.spins() != n) throw DomainError("term spin count does not match the state");
    PauliString unit(t.factors, 1.0);
    out.push_back(hs_inner(unit.to_operator(), state.matrix()).real() / static_cast<double>(state.dim()));
  }
  return out;
}

/// Strings X_a, X_b, Y_a Z_b, Z_a Y_b for every pair.
inline std::vector<PauliString> pair_coherence_strings(const SpinSystem& sys) {
  const int n = sys.spin_count();
  std::vector<PauliString> out;
  for (const auto& p : sys.pairs()) {
    out.push_back(PauliString::single(Axis::X, p[0], n));
    out.push_back(PauliString::single(Axis::X, p[1], n));
    out.push_back(PauliString::pair(Axis::Y, p[0], Axis::Z, p[1], n));
    out.push_back(PauliString::pair(Axis::Z, p[0], Axis::Y, p[1], n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Readout blocks

/// sigma_x readout: pi/2 about -y stores sum X as sum Z, the crusher removes
/// every other term, and pi/2 about y returns it to sum X.
inline std::vector<Segment> sigma_x_readout_segments() {
  return {IdealRotation{kPhaseMinusY, std::numbers::pi / 2.0}, Crusher{CrusherKind::SingleSpinZ, {}},
          IdealRotation{kPhaseY, std::numbers::pi / 2.0}};
}

/// Back-to-back pi/2 pulses (both phase x) with the two-spin term as the
/// receiver observable.
inline std::vector<Segment> dq_filter_segments() {
  return {IdealRotation{kPhaseX, std::numbers::pi / 2.0}, IdealRotation{kPhaseX, std::numbers::pi / 2.0}};
}

/// Four-step cycle: phases of both filter pulses advance by 90 degrees per
/// step, receiver (+, -, +, -). `leading` segments before the filter keep
/// zero offset.
inline PhaseCycle dq_filter_cycle(std::size_t leading = 0) {
  PhaseCycle c;
  const double sign[] = {1.0, -1.0, 1.0, -1.0};
  for (int k = 0; k < 4; ++k) {
    PhaseStep s;
    s.phase_offsets.assign(leading, 0.0);
    s.phase_offsets.push_back(k * std::numbers::pi / 2.0);
    s.phase_offsets.push_back(k * std::numbers::pi / 2.0);
    s.receiver = sign[k];
    c.steps.push_back(std::move(s));
  }
  return c;
}

enum class Readout { SigmaXSum, DqFiltered };

/// Signal from applying the readout block to `state` (ideal pulses).
inline double readout_signal(const SpinSystem& sys, const DensityState& state, Readout readout) {
  SequenceOptions opt;
  if (readout == Readout::SigmaXSum) {
    opt.observables = {{"signal", sigma_x_sum(sys.spin_count())}};
    const auto segs = sigma_x_readout_segments();
    return run_sequence(sys, segs, std::nullopt, state, opt).final_values().front();
  }
  opt.observables = {{"signal", two_spin_term(sys)}};
  const auto segs = dq_filter_segments();
  return run_sequence(sys, segs, dq_filter_cycle(), state, opt).final_values().front();
}

/// Sweep of the modulation length with one readout per duration.
struct SweepResult {
  std::vector<double> durations;
  std::vector<double> signal;
  std::string readout;
};

/// Number of sweep points: floor((t_end - t_start) / step) + 1.
inline std::size_t sweep_point_count(double t_start, double t_end, double step) {
  if (!(t_end >= t_start)) throw DomainError("sweep end must not precede its start");
  if (!(step > 0.0)) throw DomainError("sweep step must be positive");
  return static_cast<std::size_t>(std::floor((t_end - t_start) / step + 1e-9)) + 1;
}

struct SweepOptions {
  double dt = 0.0;  // integration step; 0 selects default_dt
  bool strict = false;
  // Spectral resolution wanted from an FFT along the sweep (Hz); 0 disables
  // the check.
  double resolution_hz = 0.0;
  std::function<void(const std::string&)> warn = [](const std::string& msg) {
    std::clog << "warning: " << msg << '\n';
  };
};

/// Runs [AM(drive, t), readout] for t = t_start + k * step. With ideal
/// readout pulses every point shares one continuous propagation, so the
/// modulation is integrated once on a grid commensurate with the sweep.
inline SweepResult modulation_sweep(const SpinSystem& sys, const DriveSpec& drive, double t_start, double t_end,
                                    double step, Readout readout, const DensityState& initial,
                                    const SweepOptions& opt = {}) {
  const std::size_t count = sweep_point_count(t_start, t_end, step);
  if (opt.resolution_hz > 0.0) {
    const double span = static_cast<double>(count) * step;
    const double achievable = 1.0 / span;
    if (achievable > opt.resolution_hz && opt.warn) {
      opt.warn("sweep of " + std::to_string(count) + " points spans " + std::to_string(span) +
               " s; achievable resolution is " + std::to_string(achievable) + " Hz, requested " +
               std::to_string(opt.resolution_hz) + " Hz");
    }
  }
  SweepResult out;
  out.readout = readout == Readout::SigmaXSum ? "sigma_x_sum" : "dq_filtered";
  const double w = largest_frequency(sys, &drive);
  const double target = opt.dt > 0.0 ? opt.dt : default_dt(w);
  const auto h = rotating_frame_hamiltonian(sys, drive);
  PropagationConfig cfg;
  cfg.omega_max = w;
  cfg.strict = opt.strict;
  cfg.dt = target;
  DensityState state = propagate_state(h, initial, 0.0, t_start, cfg);
  // sub-steps per sweep increment
  cfg.dt = step / std::ceil(step / target - 1e-9);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t_start + static_cast<double>(k) * step;
    if (k > 0) state = propagate_state(h, state, t - step, step, cfg);
    out.durations.push_back(t);
    out.signal.push_back(readout_signal(sys, state, readout));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Disorder ensembles

/// Seed used for realization r of an ensemble started from `seed`.
inline std::uint64_t realization_seed(std::uint64_t seed, int r) {
  return seed + static_cast<std::uint64_t>(r);
}

/// Runs `run(system)` on `realizations` disorder draws of `spec` and returns
/// the channel-wise mean. Realizations may execute on several threads; the
/// sum is always formed in realization order, so the result does not depend
/// on the thread count.
template <class Fn>
Trajectory ensemble_average(const TopologySpec& spec, int realizations, std::uint64_t seed, Fn&& run,
                            int threads = 1) {
  if (realizations < 1) throw DomainError("need at least one realization");
  if (threads < 1) throw DomainError("thread count must be >= 1");
  std::vector<Trajectory> results(static_cast<std::size_t>(realizations));
  std::vector<std::exception_ptr> errors(results.size());
  auto work = [&](int r) {
    try {
      TopologySpec s = spec;
      if (s.disorder) s.disorder->seed = realization_seed(seed, r);
      results[static_cast<std::size_t>(r)] = run(build_system(s));
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  };
  if (threads == 1 || realizations == 1) {
    for (int r = 0; r < realizations; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(threads, realizations); ++w) {
      pool.emplace_back([&] {
        for (int r = next++; r < realizations; r = next++) work(r);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Trajectory mean = results.front();
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].times.size() != mean.times.size()) throw NumericalError("ensemble members differ in length");
    for (std::size_t c = 0; c < mean.values.size(); ++c) {
      for (std::size_t i = 0; i < mean.values[c].size(); ++i) mean.values[c][i] += results[r].values[c][i];
    }
  }
  for (auto& ch : mean.values) {
    for (auto& v : ch) v /= static_cast<double>(realizations);
  }
  return mean;
}

}  // namespace pairdec
