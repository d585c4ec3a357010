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

// Spectra, linewidths, decay fits and phase analysis of recorded signals.
// Times are in seconds and frequencies in Hz throughout this header.

#pragma once

#include "pairdec/spin_algebra.hpp"

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace pairdec {

/// Raised when a fit does not converge; carries the best parameters found.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, std::vector<double> best, double residual)
      : NumericalError(what), best_(std::move(best)), residual_(residual) {}
  const std::vector<double>& best_parameters() const { return best_; }
  double residual() const { return residual_; }

 private:
  std::vector<double> best_;
  double residual_;
};

enum class Window { None, Exponential };
enum class SpectrumMode { Magnitude, Absorption };

struct SpectrumOptions {
  Window window = Window::None;
  double line_broadening_hz = 0.0;  // exponential window exp(-pi lb t)
  int zero_fill_factor = 4;
  double peak_threshold = 0.05;  // fraction of the largest displayed value
  SpectrumMode mode = SpectrumMode::Magnitude;
  bool halve_first_point = false;
};

struct Peak {
  double center_hz = 0.0;
  double fwhm_hz = 0.0;
  double height = 0.0;
};

struct Spectrum {
  std::vector<double> freqs;                 // ascending, fftshifted
  std::vector<std::complex<double>> amplitudes;
  std::vector<Peak> peaks;                   // sorted by decreasing height
  SpectrumOptions options;
  std::size_t samples = 0;                   // input length
  double dt = 0.0;
  double time_energy = 0.0;                  // sum |x_n|^2 of the transformed samples

  std::size_t size() const { return freqs.size(); }
  double bin_width() const { return 1.0 / (static_cast<double>(freqs.size()) * dt); }

  std::vector<double> display() const {
    std::vector<double> d(amplitudes.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      d[k] = options.mode == SpectrumMode::Absorption ? amplitudes[k].real() : std::abs(amplitudes[k]);
    }
    return d;
  }

  /// sum |X_k|^2 / (N sum |x_n|^2); 1 for an unnormalized DFT.
  double parseval_ratio() const {
    double e = 0.0;
    for (const auto& a : amplitudes) e += std::norm(a);
    return e / (static_cast<double>(amplitudes.size()) * time_energy);
  }
};

/// Sampling interval of a uniform grid; throws for fewer than two samples
/// or a non-uniform grid.
inline double uniform_step(std::span<const double> times, double rel_tol = 1e-6) {
  if (times.size() < 2) throw DomainError("need at least two samples for a uniform grid");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw DomainError("time grid must be increasing");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - dt) > rel_tol * dt) throw DomainError("time grid is not uniform");
  }
  return dt;
}

namespace detail {

inline std::size_t next_pow2(std::size_t n) { return std::bit_ceil(std::max<std::size_t>(n, 1)); }

inline void fftshift(std::vector<std::complex<double>>& v) {
  std::rotate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
}

inline void ifftshift(std::vector<std::complex<double>>& v) {
  std::rotate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() - v.size() / 2), v.end());
}

inline double half_height_crossing(const std::vector<double>& d, const std::vector<double>& f, std::size_t i,
                                   double half, int dir) {
  std::size_t k = i;
  while (true) {
    if ((dir < 0 && k == 0) || (dir > 0 && k + 1 == d.size())) return f[k];
    const std::size_t nxt = dir < 0 ? k - 1 : k + 1;
    if (d[nxt] < half) {
      const double frac = (d[k] - half) / (d[k] - d[nxt]);
      return f[k] + frac * (f[nxt] - f[k]);
    }
    k = nxt;
  }
}

inline std::vector<Peak> pick_peaks(const std::vector<double>& d, const std::vector<double>& f, double threshold) {
  std::vector<Peak> peaks;
  if (d.empty()) return peaks;
  const double top = *std::max_element(d.begin(), d.end());
  if (!(top > 0.0)) return peaks;
  const double floor = threshold * top;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const bool left = k == 0 || d[k] > d[k - 1];
    const bool right = k + 1 == d.size() || d[k] >= d[k + 1];
    if (left && right && d[k] >= floor) {
      const double half = 0.5 * d[k];
      const double lo = half_height_crossing(d, f, k, half, -1);
      const double hi = half_height_crossing(d, f, k, half, +1);
      peaks.push_back({f[k], hi - lo, d[k]});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
  return peaks;
}

}  // namespace detail

/// DFT of a uniformly sampled signal, zero-filled to next_pow2(N) times
/// zero_fill_factor, with the frequency grid centred on 0.
inline Spectrum fft_spectrum(std::span<const double> times, std::span<const std::complex<double>> signal,
                             const SpectrumOptions& opt = {}) {
  if (signal.empty()) throw DomainError("empty signal");
  if (signal.size() != times.size()) throw DomainError("signal and time grid differ in length");
  if (opt.zero_fill_factor < 1) throw DomainError("zero_fill_factor must be >= 1");
  if (opt.window == Window::Exponential && !(opt.line_broadening_hz >= 0.0)) {
    throw DomainError("line broadening must be non-negative");
  }
  const double dt = uniform_step(times);
  const std::size_t nfft = detail::next_pow2(signal.size()) * static_cast<std::size_t>(opt.zero_fill_factor);

  std::vector<std::complex<double>> x(nfft, 0.0);
  double energy = 0.0;
  for (std::size_t k = 0; k < signal.size(); ++k) {
    std::complex<double> v = signal[k];
    if (opt.window == Window::Exponential) {
      v *= std::exp(-std::numbers::pi * opt.line_broadening_hz * (times[k] - times.front()));
    }
    if (k == 0 && opt.halve_first_point) v *= 0.5;
    x[k] = v;
    energy += std::norm(v);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out;
  fft.fwd(out, x);
  detail::fftshift(out);

  Spectrum s;
  s.options = opt;
  s.samples = signal.size();
  s.dt = dt;
  s.time_energy = energy;
  s.amplitudes = std::move(out);
  s.freqs.resize(nfft);
  const double df = 1.0 / (static_cast<double>(nfft) * dt);
  const auto half = static_cast<long>(nfft / 2);
  for (std::size_t k = 0; k < nfft; ++k) s.freqs[k] = static_cast<double>(static_cast<long>(k) - half) * df;
  s.peaks = detail::pick_peaks(s.display(), s.freqs, opt.peak_threshold);
  return s;
}

inline Spectrum fft_spectrum(std::span<const double> times, std::span<const double> signal,
                             const SpectrumOptions& opt = {}) {
  std::vector<std::complex<double>> c(signal.begin(), signal.end());
  return fft_spectrum(times, std::span<const std::complex<double>>(c), opt);
}

/// Inverse of fft_spectrum for window = none and no first-point scaling:
/// returns the first `samples` points of the inverse DFT.
inline std::vector<std::complex<double>> inverse_fft(const Spectrum& s) {
  if (s.amplitudes.empty()) throw DomainError("empty spectrum");
  std::vector<std::complex<double>> a = s.amplitudes;
  detail::ifftshift(a);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> x;
  fft.inv(x, a);
  x.resize(s.samples);
  return x;
}

// ---------------------------------------------------------------------------
// Decay fits

enum class DecayModel { Exponential, Gaussian, ExpCosine };

inline const char* decay_model_name(DecayModel m) {
  switch (m) {
    case DecayModel::Exponential: return "exponential";
    case DecayModel::Gaussian: return "gaussian";
    case DecayModel::ExpCosine: return "exp-cosine";
  }
  return "?";
}

struct DecayFit {
  DecayModel model = DecayModel::Exponential;
  double amplitude = 0.0;
  double t2_eff = 0.0;      // s
  double frequency = 0.0;   // Hz, exp-cosine only
  double phase = 0.0;       // rad, exp-cosine only
  double residual = 0.0;    // rms(misfit) / rms(data)
  int evaluations = 0;
};

namespace detail {

struct DecayFunctor {
  DecayModel model;
  std::span<const double> t;
  std::span<const double> y;
  double t0;

  int inputs() const { return model == DecayModel::ExpCosine ? 4 : 2; }
  int values() const { return static_cast<int>(t.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t k = 0; k < t.size(); ++k) r[static_cast<Eigen::Index>(k)] = eval(p, t[k] - t0) - y[k];
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    const double a = p[0];
    const double tau = p[1];
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double s = t[k] - t0;
      const auto row = static_cast<Eigen::Index>(k);
      switch (model) {
        case DecayModel::Exponential: {
          const double e = std::exp(-s / tau);
          j(row, 0) = e;
          j(row, 1) = a * e * s / (tau * tau);
          break;
        }
        case DecayModel::Gaussian: {
          const double e = std::exp(-(s / tau) * (s / tau));
          j(row, 0) = e;
          j(row, 1) = a * e * 2.0 * s * s / (tau * tau * tau);
          break;
        }
        case DecayModel::ExpCosine: {
          const double e = std::exp(-s / tau);
          const double arg = 2.0 * std::numbers::pi * p[2] * s + p[3];
          const double c = std::cos(arg);
          const double sn = std::sin(arg);
          j(row, 0) = e * c;
          j(row, 1) = a * e * c * s / (tau * tau);
          j(row, 2) = -a * e * sn * 2.0 * std::numbers::pi * s;
          j(row, 3) = -a * e * sn;
          break;
        }
      }
    }
    return 0;
  }

  double eval(const Eigen::VectorXd& p, double s) const {
    switch (model) {
      case DecayModel::Exponential: return p[0] * std::exp(-s / p[1]);
      case DecayModel::Gaussian: return p[0] * std::exp(-(s / p[1]) * (s / p[1]));
      case DecayModel::ExpCosine: return p[0] * std::exp(-s / p[1]) * std::cos(2.0 * std::numbers::pi * p[2] * s + p[3]);
    }
    return 0.0;
  }
};

inline double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

/// Least-squares line y = c0 + c1 x.
inline std::pair<double, double> linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return {sy / n, 0.0};
  const double c1 = (n * sxy - sx * sy) / den;
  return {(sy - c1 * sx) / n, c1};
}

}  // namespace detail

/// First sample plus every local maximum of |signal|.
inline std::pair<std::vector<double>, std::vector<double>> envelope(std::span<const double> times,
                                                                    std::span<const double> signal) {
  if (times.size() != signal.size()) throw DomainError("signal and time grid differ in length");
  std::vector<double> te, ae;
  if (signal.empty()) return {te, ae};
  te.push_back(times[0]);
  ae.push_back(std::abs(signal[0]));
  for (std::size_t k = 1; k + 1 < signal.size(); ++k) {
    const double a = std::abs(signal[k]);
    if (a >= std::abs(signal[k - 1]) && a >= std::abs(signal[k + 1])) {
      te.push_back(times[k]);
      ae.push_back(a);
    }
  }
  return {te, ae};
}

namespace detail {

inline DecayFit fit_decay_impl(std::span<const double> t, std::span<const double> y, DecayModel model,
                               std::size_t min_samples) {
  if (t.size() != y.size()) throw DomainError("signal and time grid differ in length");
  if (t.size() < min_samples) {
    throw DomainError("decay fit needs at least " + std::to_string(min_samples) + " samples");
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!std::isfinite(t[k]) || !std::isfinite(y[k])) throw DomainError("non-finite sample in decay fit");
  }
  const double scale = rms(y);
  if (!(scale > 0.0)) throw DomainError("signal is identically zero");
  const double t0 = t.front();
  const double span = t.back() - t0;
  if (!(span > 0.0)) throw DomainError("time grid must span a positive interval");

  // Deterministic start: regression of log |y| over its envelope.
  std::vector<double> xs, ls;
  {
    std::vector<double> tt, aa;
    if (model == DecayModel::ExpCosine) {
      std::tie(tt, aa) = envelope(t, y);
    } else {
      tt.assign(t.begin(), t.end());
      for (double v : y) aa.push_back(std::abs(v));
    }
    const double amax = *std::max_element(aa.begin(), aa.end());
    for (std::size_t k = 0; k < tt.size(); ++k) {
      if (aa[k] > 1e-6 * amax) {
        const double s = tt[k] - t0;
        xs.push_back(model == DecayModel::Gaussian ? s * s : s);
        ls.push_back(std::log(aa[k]));
      }
    }
  }
  auto [c0, c1] = linear_regression(xs, ls);
  double tau0 = 10.0 * span;
  if (c1 < 0.0) tau0 = model == DecayModel::Gaussian ? std::sqrt(-1.0 / c1) : -1.0 / c1;
  tau0 = std::min(tau0, 100.0 * span);

  Eigen::VectorXd p(model == DecayModel::ExpCosine ? 4 : 2);
  p[0] = std::exp(c0);
  p[1] = tau0;
  if (model == DecayModel::ExpCosine) {
    // frequency from the FFT peak, phase from the DFT at that frequency
    std::vector<double> tv(t.begin(), t.end());
    SpectrumOptions so;
    so.zero_fill_factor = 8;
    const Spectrum sp = fft_spectrum(tv, y, so);
    const auto d = sp.display();
    std::size_t best = sp.size() / 2;
    for (std::size_t k = sp.size() / 2; k < sp.size(); ++k) {
      if (d[k] > d[best]) best = k;
    }
    const double f0 = sp.freqs[best];
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      acc += y[k] * std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * f0 * (t[k] - t0)));
    }
    p[0] = std::max(p[0], std::abs(y[0]));
    p[2] = f0;
    p[3] = std::arg(acc);
  }

  DecayFunctor fn{model, t, y, t0};
  Eigen::LevenbergMarquardt<DecayFunctor> lm(fn);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.gtol = 0.0;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(p);

  DecayFit fit;
  fit.model = model;
  fit.amplitude = p[0];
  fit.t2_eff = p[1];
  Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
  fn(p, r);
  fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(t.size())) / scale;
  fit.evaluations = static_cast<int>(lm.nfev);
  if (model == DecayModel::ExpCosine) {
    fit.frequency = p[2];
    fit.phase = p[3];
    if (fit.amplitude < 0.0) {
      fit.amplitude = -fit.amplitude;
      fit.phase += std::numbers::pi;
    }
    if (fit.frequency < 0.0) {
      fit.frequency = -fit.frequency;
      fit.phase = -fit.phase;
    }
    fit.phase = std::remainder(fit.phase, 2.0 * std::numbers::pi);
  }
  std::vector<double> best(p.data(), p.data() + p.size());
  if (status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation ||
      status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    throw FitError(std::string(decay_model_name(model)) + " fit did not converge (residual " +
                       std::to_string(fit.residual) + ")",
                   best, fit.residual);
  }
  if (!(fit.t2_eff > 0.0) || !std::isfinite(fit.t2_eff)) {
    throw FitError("fitted decay time is not positive", best, fit.residual);
  }
  return fit;
}

}  // namespace detail

/// Least-squares decay fit; the exp-cosine model fits the full signal,
/// the others fit the signal as an envelope.
inline DecayFit fit_decay(std::span<const double> times, std::span<const double> signal, DecayModel model) {
  return detail::fit_decay_impl(times, signal, model, 8);
}

/// Exponential A exp(-t / T) fitted to the local maxima of |signal|; robust
/// for signals whose oscillation frequency drifts during the decay.
inline DecayFit envelope_decay(std::span<const double> times, std::span<const double> signal) {
  auto [te, ae] = envelope(times, signal);
  return detail::fit_decay_impl(te, ae, DecayModel::Exponential, 3);
}

// ---------------------------------------------------------------------------
// Narrowing reports

enum class LineQuantity { LinewidthHz, DecayTimeS };

struct LineMeasure {
  double value = 0.0;
  LineQuantity quantity = LineQuantity::LinewidthHz;
  std::string label;
};

inline LineMeasure linewidth_of(const Spectrum& s, std::string label = {}) {
  if (s.peaks.empty()) throw DomainError("spectrum has no peaks");
  return {s.peaks.front().fwhm_hz, LineQuantity::LinewidthHz, std::move(label)};
}

inline LineMeasure decay_time_of(const DecayFit& f, std::string label = {}) {
  return {f.t2_eff, LineQuantity::DecayTimeS, std::move(label)};
}

struct NarrowingReport {
  LineMeasure free;
  LineMeasure modulated;
  double ratio = 0.0;  // > 1 means the modulated line is narrower
  bool model_dependent = false;
  std::string note;
};

/// Narrowing factor: free width / modulated width, or modulated decay time /
/// free decay time. Results from small simulated systems are flagged as
/// model-dependent.
inline NarrowingReport narrowing_report(const LineMeasure& free, const LineMeasure& modulated,
                                        bool model_dependent = false) {
  if (free.quantity != modulated.quantity) {
    throw DomainError("cannot compare a linewidth with a decay time");
  }
  if (!(free.value > 0.0) || !(modulated.value > 0.0)) throw DomainError("line measures must be positive");
  NarrowingReport r{free, modulated, 0.0, model_dependent, {}};
  r.ratio = free.quantity == LineQuantity::LinewidthHz ? free.value / modulated.value : modulated.value / free.value;
  if (model_dependent) {
    r.note = "desk-scale result; depends on system size, disorder and fit model";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Coherence-transfer phase

struct TransferPhase {
  double frequency_hz = 0.0;
  double phase_deg = 0.0;      // arg(B) - arg(A) at the dominant frequency, in (-180, 180]
  double amplitude_a = 0.0;
  double amplitude_b = 0.0;
  double early_late_a = 0.0;   // rms(first third) / rms(last third)
  double early_late_b = 0.0;
};

namespace detail {

/// Least-squares fit y = Re(c exp(i 2 pi f (t - t0))) + offset; returns c.
/// Unlike a single DFT bin this is unbiased for a non-integer number of
/// cycles in the window.
inline std::complex<double> sinusoid_at(std::span<const double> t, std::span<const double> y, double f) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd m(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double ph = 2.0 * std::numbers::pi * f * (t[static_cast<std::size_t>(k)] - t.front());
    m(k, 0) = std::cos(ph);
    m(k, 1) = std::sin(ph);
    m(k, 2) = 1.0;
    rhs[k] = y[static_cast<std::size_t>(k)];
  }
  const Eigen::Vector3d c = m.colPivHouseholderQr().solve(rhs);
  return {c[0], -c[1]};
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double third_ratio(std::span<const double> y, double mean) {
  const std::size_t third = y.size() / 3;
  double early = 0.0, late = 0.0;
  for (std::size_t k = 0; k < third; ++k) {
    early += (y[k] - mean) * (y[k] - mean);
    late += (y[y.size() - 1 - k] - mean) * (y[y.size() - 1 - k] - mean);
  }
  return late > 0.0 ? std::sqrt(early / late) : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Phase of channel b relative to channel a at their common dominant
/// frequency, refined by a golden-section search on |A(f)|^2 + |B(f)|^2.
inline TransferPhase transfer_phase(std::span<const double> times, std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() != times.size() || b.size() != times.size()) throw DomainError("channels are not synchronized");
  if (times.size() < 8) throw DomainError("transfer phase needs at least 8 samples");
  uniform_step(times);
  const double ma = detail::mean_of(a);
  const double mb = detail::mean_of(b);
  std::vector<std::complex<double>> za(a.size()), zb(b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    za[k] = a[k] - ma;
    zb[k] = b[k] - mb;
  }
  SpectrumOptions so;
  so.zero_fill_factor = 8;
  const Spectrum sa = fft_spectrum(times, std::span<const std::complex<double>>(za), so);
  const Spectrum sb = fft_spectrum(times, std::span<const std::complex<double>>(zb), so);
  const std::size_t mid = sa.size() / 2;
  std::size_t best = mid;
  double best_power = 0.0;
  for (std::size_t k = mid; k < sa.size(); ++k) {
    const double pw = std::norm(sa.amplitudes[k]) + std::norm(sb.amplitudes[k]);
    if (pw > best_power) {
      best_power = pw;
      best = k;
    }
  }
  const double span = times.back() - times.front();
  const double df = sa.bin_width();
  if (!(best_power > 0.0) || sa.freqs[best] < 1.0 / span) {
    throw DomainError("no dominant oscillation found");
  }
  auto power = [&](double f) {
    return std::norm(detail::sinusoid_at(times, a, f)) + std::norm(detail::sinusoid_at(times, b, f));
  };
  double lo = sa.freqs[best] - df, hi = sa.freqs[best] + df;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double p1 = power(x1), p2 = power(x2);
  for (int it = 0; it < 60; ++it) {
    if (p1 > p2) {
      hi = x2;
      x2 = x1;
      p2 = p1;
      x1 = hi - g * (hi - lo);
      p1 = power(x1);
    } else {
      lo = x1;
      x1 = x2;
      p1 = p2;
      x2 = lo + g * (hi - lo);
      p2 = power(x2);
    }
  }
  const double f = 0.5 * (lo + hi);
  const auto ca = detail::sinusoid_at(times, a, f);
  const auto cb = detail::sinusoid_at(times, b, f);
  TransferPhase out;
  out.frequency_hz = f;
  out.amplitude_a = std::abs(ca);
  out.amplitude_b = std::abs(cb);
  const double scale = out.amplitude_a + out.amplitude_b;
  if (out.amplitude_a < 1e-9 * scale || out.amplitude_b < 1e-9 * scale) {
    throw DomainError("one channel has no component at the dominant frequency");
  }
  double deg = (std::arg(cb) - std::arg(ca)) * 180.0 / std::numbers::pi;
  deg = std::remainder(deg, 360.0);
  if (deg <= -180.0) deg += 360.0;
  out.phase_deg = deg;
  out.early_late_a = detail::third_ratio(a, ma);
  out.early_late_b = detail::third_ratio(b, mb);
  return out;
}

}  // namespace pairdec
