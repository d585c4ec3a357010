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

// Numerical average-Hamiltonian theory: zeroth- and first-order Magnus terms
// of a periodic frame Hamiltonian, reported in the Pauli basis.

#pragma once

#include "pairdec/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pairdec {

struct MagnusOptions {
  // Absolute bound on the quadrature error estimate (rad/s). Negative selects
  // 1e-9 * (|H| + |H|^2 tau). Infinity disables sample doubling.
  double tolerance = -1.0;
  int max_samples = 1 << 15;
  double pauli_cutoff = 1e-12;
};

struct MagnusResult {
  double period = 0.0;
  int samples = 0;
  Operator h0;  // (1/tau) int H(t) dt
  Operator h1;  // (-i / 2 tau) int_0^tau dt2 int_0^t2 dt1 [H(t2), H(t1)]
  double error_estimate = 0.0;
  std::vector<PauliString> h0_terms;
  std::vector<PauliString> h1_terms;
};

namespace detail {

struct MagnusPair {
  Operator h0;
  Operator h1;
};

// Trapezoid for the mean and cumulative trapezoid for the nested integral,
// using every `stride`-th point of `hs` (hs spans [0, tau] inclusive).
inline MagnusPair magnus_quadrature(const std::vector<Operator>& hs, std::size_t stride, double period) {
  const std::size_t intervals = (hs.size() - 1) / stride;
  const double h = period / static_cast<double>(intervals);
  const auto dim = hs.front().rows();
  Operator sum = 0.5 * (hs.front() + hs.back());
  Operator cumulative = Operator::Zero(dim, dim);
  Operator nested = Operator::Zero(dim, dim);
  for (std::size_t k = 1; k <= intervals; ++k) {
    const Operator& prev = hs[(k - 1) * stride];
    const Operator& cur = hs[k * stride];
    if (k < intervals) sum += cur;
    cumulative += (0.5 * h) * (prev + cur);
    const Operator f = cur * cumulative - cumulative * cur;
    nested += (k < intervals ? h : 0.5 * h) * f;
  }
  MagnusPair out;
  out.h0 = sum * (h / period);
  out.h1 = nested * (-kI / (2.0 * period));
  out.h0 = 0.5 * (out.h0 + out.h0.adjoint()).eval();
  out.h1 = 0.5 * (out.h1 + out.h1.adjoint()).eval();
  return out;
}

}  // namespace detail

/// Zeroth- and first-order average Hamiltonian of `h` over [0, period] by
/// composite trapezoid. The error estimate is the Richardson difference
/// between N and N/2 intervals; N doubles until it meets the tolerance.
/// Throws NumericalError when the estimate is still above tolerance at
/// max_samples.
inline MagnusResult average_hamiltonian(const TimeDependentHamiltonian& h, double period, int samples,
                                        const MagnusOptions& opt = {}) {
  if (!(period > 0.0)) throw DomainError("period must be positive");
  if (samples < 64) throw DomainError("average_hamiltonian needs at least 64 samples");
  if (samples % 2 != 0) ++samples;

  std::vector<Operator> hs;
  hs.reserve(static_cast<std::size_t>(samples) + 1);
  for (int k = 0; k <= samples; ++k) hs.push_back(h(period * k / samples));

  int n = samples;
  while (true) {
    double scale = 0.0;
    for (const auto& m : hs) scale = std::max(scale, max_abs(m));
    const double floor = 1e-14 * (scale + scale * scale * period);
    const double tol = opt.tolerance < 0.0 ? 1e-9 * (scale + scale * scale * period) : opt.tolerance;

    const auto fine = detail::magnus_quadrature(hs, 1, period);
    const auto coarse = detail::magnus_quadrature(hs, 2, period);
    const double err =
        std::max({max_abs(fine.h0 - coarse.h0), max_abs(fine.h1 - coarse.h1)}) / 3.0 + floor;

    if (err <= tol || !std::isfinite(tol) || 2 * n > opt.max_samples) {
      if (err > tol && std::isfinite(tol)) {
        throw NumericalError("average_hamiltonian: quadrature estimate " + std::to_string(err) +
                             " rad/s above tolerance " + std::to_string(tol) + " at " + std::to_string(n) +
                             " samples");
      }
      MagnusResult r;
      r.period = period;
      r.samples = n;
      r.h0 = fine.h0;
      r.h1 = fine.h1;
      r.error_estimate = err;
      r.h0_terms = pauli_decompose(r.h0, opt.pauli_cutoff * std::max(scale, 1.0));
      r.h1_terms = pauli_decompose(r.h1, opt.pauli_cutoff * std::max(scale * scale * period, 1.0));
      return r;
    }

    // double the grid, evaluating only the new midpoints
    std::vector<Operator> next;
    next.reserve(2 * hs.size() - 1);
    for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
      next.push_back(std::move(hs[k]));
      next.push_back(h(period * (2.0 * static_cast<double>(k) + 1.0) / (2.0 * n)));
    }
    next.push_back(std::move(hs.back()));
    hs = std::move(next);
    n *= 2;
  }
}

/// Zeroth-order average over `period` of e^{iGt} (h0bar - G) e^{-iGt}: the
/// input seen from the frame of its own drive part G.
inline Operator second_frame_average(const Operator& h0bar, const Operator& generator, double period,
                                     int samples, const MagnusOptions& opt = {}) {
  check_same_dim(h0bar, generator);
  const auto framed = interaction_frame(TimeDependentHamiltonian(h0bar), generator);
  return average_hamiltonian(framed, period, samples, opt).h0;
}

/// Sum of the single-spin transverse (X, Y) terms of `terms` on `sites`.
inline Operator drive_part(const std::vector<PauliString>& terms, const std::vector<int>& sites, int n) {
  std::vector<PauliString> kept;
  for (const auto& t : terms) {
    if (t.weight() != 1) continue;
    for (int s : sites) {
      const auto l = t.factors[static_cast<std::size_t>(s)];
      if (l == PauliLabel::X || l == PauliLabel::Y) kept.push_back(t);
    }
  }
  return reconstruct(kept, n);
}

/// Largest |coefficient| among strings touching more than one group, where
/// `group_of[i]` labels the pair (or spectator) that spin i belongs to.
inline double max_cross_group_coefficient(const std::vector<PauliString>& terms, const std::vector<int>& group_of) {
  double worst = 0.0;
  for (const auto& t : terms) {
    int first = -1;
    bool cross = false;
    for (std::size_t s = 0; s < t.factors.size(); ++s) {
      if (t.factors[s] == PauliLabel::I) continue;
      const int g = group_of.at(s);
      if (first < 0) {
        first = g;
      } else if (g != first) {
        cross = true;
      }
    }
    if (cross) worst = std::max(worst, std::abs(t.coefficient));
  }
  return worst;
}

/// Group labels for a SpinSystem: pair index, spectators numbered after pairs.
inline std::vector<int> pair_groups(const SpinSystem& sys) {
  std::vector<int> g(static_cast<std::size_t>(sys.spin_count()));
  int next = static_cast<int>(sys.pairs().size());
  for (int i = 0; i < sys.spin_count(); ++i) {
    const int p = sys.pair_of(i);
    g[static_cast<std::size_t>(i)] = p >= 0 ? p : next++;
  }
  return g;
}

/// Rotating-frame Hamiltonian seen from the interaction frame of the strong
/// pair couplings; periodic in 2 pi / wm when wm = 3 wD / 2.
inline TimeDependentHamiltonian pair_interaction_frame(const SpinSystem& sys, const DriveSpec& drive) {
  return interaction_frame(rotating_frame_hamiltonian(sys, drive), strong_pair_hamiltonian(sys));
}

/// Rotating-frame Hamiltonian seen from the toggling frame of the drive.
inline TimeDependentHamiltonian drive_frame(const SpinSystem& sys, const DriveSpec& drive) {
  auto h = rotating_frame_hamiltonian(sys, drive);
  if (drive.amplitude == 0.0) return h;
  return drive_toggling_frame(h, drive);
}

/// Structure of an isolated-pair average: H = a (2XX - YY - ZZ) + b (ZZ - YY)
/// + remainder. a and b are least-squares projections onto the two forms.
struct PairAverageForm {
  double xx = 0.0, yy = 0.0, zz = 0.0;
  double drive_independent = 0.0;  // a
  double bessel_term = 0.0;        // b
  double remainder = 0.0;          // max |coefficient| outside span{XX, YY, ZZ}
};

inline PairAverageForm pair_average_form(const Operator& h, int i, int j) {
  const int n = spin_count(h);
  const auto terms = pauli_decompose(h, 0.0);
  PairAverageForm f;
  const auto xx = PauliString::pair(Axis::X, i, Axis::X, j, n).label();
  const auto yy = PauliString::pair(Axis::Y, i, Axis::Y, j, n).label();
  const auto zz = PauliString::pair(Axis::Z, i, Axis::Z, j, n).label();
  for (const auto& t : terms) {
    const auto l = t.label();
    if (l == xx) {
      f.xx = t.coefficient.real();
    } else if (l == yy) {
      f.yy = t.coefficient.real();
    } else if (l == zz) {
      f.zz = t.coefficient.real();
    } else {
      f.remainder = std::max(f.remainder, std::abs(t.coefficient));
    }
  }
  // XX = 2a, YY = -a - b, ZZ = -a + b
  f.drive_independent = f.xx / 2.0;
  f.bessel_term = (f.zz - f.yy) / 2.0;
  return f;
}

/// Bessel J0 by its power series, stopping once the term ratio drops below
/// 1e-16. Intended for |x| < ~10.
inline double bessel_j0(double x) {
  const double q = x * x / 4.0;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (std::abs(term) <= 1e-16 * std::abs(sum)) break;
  }
  return sum;
}

struct BesselFit {
  double a = 0.0;  // argument scale: model c * J0(a * r)
  double c = 0.0;
  double max_residual = 0.0;  // max |y - model| / |c|
  double rms = 0.0;
};

/// Least-squares fit of y = c J0(a r). c is solved linearly for each a; a is
/// found by grid scan over [a_min, a_max] followed by golden-section search.
inline BesselFit fit_bessel_j0(std::span<const double> r, std::span<const double> y, double a_min = 0.01,
                               double a_max = 10.0) {
  if (r.size() != y.size() || r.size() < 3) throw DomainError("Bessel fit needs >= 3 matched samples");
  auto solve_c = [&](double a) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double j = bessel_j0(a * r[k]);
      num += y[k] * j;
      den += j * j;
    }
    return den > 0.0 ? num / den : 0.0;
  };
  auto cost = [&](double a) {
    const double c = solve_c(a);
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double d = y[k] - c * bessel_j0(a * r[k]);
      s += d * d;
    }
    return s;
  };
  constexpr int kGrid = 2000;
  double best_a = a_min;
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= kGrid; ++g) {
    const double a = a_min + (a_max - a_min) * g / kGrid;
    const double v = cost(a);
    if (v < best) {
      best = v;
      best_a = a;
    }
  }
  const double step = (a_max - a_min) / kGrid;
  double lo = std::max(a_min, best_a - step);
  double hi = std::min(a_max, best_a + step);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = cost(x2);
    }
  }
  BesselFit fit;
  fit.a = 0.5 * (lo + hi);
  fit.c = solve_c(fit.a);
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double d = y[k] - fit.c * bessel_j0(fit.a * r[k]);
    s += d * d;
    fit.max_residual = std::max(fit.max_residual, std::abs(d));
  }
  fit.rms = std::sqrt(s / static_cast<double>(r.size()));
  if (fit.c != 0.0) fit.max_residual /= std::abs(fit.c);
  return fit;
}

/// Stroboscopic comparison of exact frame dynamics against an effective
/// Hamiltonian.
struct DiscrepancyReport {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> exact;
  std::vector<std::vector<double>> effective;
  std::vector<double> max_deviation;
};

/// Propagates `h` exactly and `h_eff` as a constant Hamiltonian, comparing
/// observables at multiples of `period` up to `duration`.
inline DiscrepancyReport effective_vs_exact(const TimeDependentHamiltonian& h, const Operator& h_eff,
                                            const DensityState& state, double duration, double period,
                                            const std::vector<NamedObservable>& observables, double dt) {
  if (!(period > 0.0)) throw DomainError("period must be positive");
  const double cycles = duration / period;
  const long n_cycles = std::lround(cycles);
  if (n_cycles < 1 || std::abs(cycles - static_cast<double>(n_cycles)) > 1e-9 * std::max(1.0, cycles)) {
    throw DomainError("duration must be a positive integer number of periods");
  }
  const Operator u_eff = expm_hermitian(h_eff, period);

  DiscrepancyReport r;
  r.names = observable_names(observables);
  r.exact.resize(observables.size());
  r.effective.resize(observables.size());
  r.max_deviation.assign(observables.size(), 0.0);

  PropagationConfig cfg;
  cfg.dt = dt;
  cfg.warn = nullptr;
  DensityState exact = state;
  DensityState eff = state;
  auto record = [&](double t) {
    r.times.push_back(t);
    const auto a = measure(exact, observables);
    const auto b = measure(eff, observables);
    for (std::size_t c = 0; c < observables.size(); ++c) {
      r.exact[c].push_back(a[c]);
      r.effective[c].push_back(b[c]);
      r.max_deviation[c] = std::max(r.max_deviation[c], std::abs(a[c] - b[c]));
    }
  };
  record(0.0);
  for (long k = 0; k < n_cycles; ++k) {
    exact = propagate_state(h, exact, static_cast<double>(k) * period, period, cfg);
    eff = eff.evolved(u_eff);
    record(static_cast<double>(k + 1) * period);
  }
  return r;
}

}  // namespace pairdec
