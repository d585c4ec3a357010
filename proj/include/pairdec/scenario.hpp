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

// Scenario configuration files and the runners behind the command-line
// tool. Config files give frequencies in Hz and times in microseconds; both
// are converted here, once, to rad/s and seconds.

#pragma once

#include "pairdec/aht.hpp"
#include "pairdec/io.hpp"
#include "pairdec/observables.hpp"
#include "pairdec/sequences.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace pairdec {

class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

namespace cfg {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline double number(const Json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

inline int integer(const Json& j, const char* key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<int>();
}

inline std::string text(const Json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

inline bool flag(const Json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return v.get<bool>();
}

inline std::vector<double> numbers(const Json& j, const char* key, const std::string& where) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline double us(double microseconds) { return microseconds * 1e-6; }

}  // namespace cfg

// ---------------------------------------------------------------------------
// Configuration model

struct SystemConfig {
  std::string preset = "pair";  // pair, gypsum, four_spin, three_spin, custom
  TopologySpec topology;        // all but three_spin
  double weak13 = 0.0;          // three_spin only (rad/s)
  double weak23 = 0.0;
  int realizations = 1;

  double strong() const { return topology.strong_coupling; }
  double weak() const {
    return preset == "three_spin" ? std::max(weak13, weak23) : topology.weak_coupling;
  }
  bool is_ensemble() const { return topology.disorder && topology.disorder->spread > 0.0 && realizations > 1; }

  SpinSystem build(std::uint64_t seed) const {
    if (preset == "three_spin") return three_spin_preset(topology.strong_coupling, weak13, weak23);
    TopologySpec s = topology;
    if (s.disorder) s.disorder->seed = seed;
    return build_system(s);
  }
};

struct SweepConfig {
  double start = cfg::us(100.0);
  double end = cfg::us(2900.0);
  double step = cfg::us(5.5);
  Readout readout = Readout::SigmaXSum;
  double resolution_hz = 0.0;
};

struct AhtConfig {
  std::string scenario = "three_spin";  // three_spin, pair_bessel
  int steps = 24;
  double max_factor = 2.0;
  int samples = 256;
};

struct SpectrumConfig {
  std::string input;
  std::string column;
  SpectrumOptions options;
};

struct ScenarioConfig {
  Json raw;
  std::string name = "run";
  SystemConfig system;
  DriveSpec drive;
  std::string sequence = "fid";
  std::vector<Segment> segments;  // explicit sequences
  std::optional<PhaseCycle> cycle;
  std::string initial = "thermal";
  std::vector<std::string> observables;
  double duration = -1.0;  // s; negative selects the preset default
  double dt = 0.0;
  int record_stride = 1;
  SweepConfig sweep;
  std::vector<double> scan_amplitudes;  // rad/s
  AhtConfig aht;
  SpectrumConfig spectrum;
  std::uint64_t seed = 1;
};

namespace cfg {

inline SystemConfig parse_system(const Json& node) {
  SystemConfig sc;
  Json j = node.is_string() ? Json{{"preset", node}} : node;
  const std::string w = "system";
  check_keys(j, {"preset", "pair_count", "strong_hz", "weak_hz", "weak13_hz", "weak23_hz", "weak_pattern",
                 "weak_table", "disorder"},
             w);
  sc.preset = text(j, "preset", "custom", w);
  auto& t = sc.topology;
  t.strong_coupling = hz_to_rad(kGypsumStrongHz);
  t.weak_coupling = hz_to_rad(kGypsumWeakHz);
  t.larmor = hz_to_rad(kGypsumLarmorHz);
  if (sc.preset == "pair") {
    t.pair_count = 1;
    t.weak_coupling = 0.0;
  } else if (sc.preset == "gypsum") {
    t.pair_count = 3;
  } else if (sc.preset == "four_spin") {
    t.pair_count = 2;
  } else if (sc.preset == "three_spin") {
    t.pair_count = 1;
    sc.weak13 = sc.weak23 = t.weak_coupling;
  } else if (sc.preset == "custom") {
    t.pair_count = 1;
  } else {
    throw ConfigError("unknown system preset '" + sc.preset + "'");
  }
  t.pair_count = integer(j, "pair_count", t.pair_count, w);
  t.strong_coupling = hz_to_rad(number(j, "strong_hz", rad_to_hz(t.strong_coupling), w));
  t.weak_coupling = hz_to_rad(number(j, "weak_hz", rad_to_hz(t.weak_coupling), w));
  if (sc.preset == "three_spin") {
    if (j.contains("pair_count") || j.contains("weak_pattern") || j.contains("weak_table") || j.contains("disorder")) {
      throw ConfigError("three_spin preset takes only strong_hz, weak_hz, weak13_hz and weak23_hz");
    }
    sc.weak13 = hz_to_rad(number(j, "weak13_hz", rad_to_hz(t.weak_coupling), w));
    sc.weak23 = hz_to_rad(number(j, "weak23_hz", rad_to_hz(t.weak_coupling), w));
    three_spin_preset(t.strong_coupling, sc.weak13, sc.weak23);  // validates
    return sc;
  }
  if (j.contains("weak13_hz") || j.contains("weak23_hz")) {
    throw ConfigError("weak13_hz and weak23_hz apply only to the three_spin preset");
  }
  const std::string pattern = text(j, "weak_pattern", "uniform", w);
  if (pattern == "uniform") {
    t.weak_pattern = WeakPattern::UniformAllToAll;
  } else if (pattern == "nearest_neighbor") {
    t.weak_pattern = WeakPattern::NearestNeighborPairs;
  } else if (pattern == "table") {
    t.weak_pattern = WeakPattern::ExplicitTable;
    if (!j.contains("weak_table") || !j.at("weak_table").is_array()) {
      throw ConfigError("weak_pattern 'table' needs a weak_table array");
    }
    for (const auto& row : j.at("weak_table")) {
      check_keys(row, {"spin_a", "spin_b", "coupling_hz"}, "system.weak_table entry");
      t.weak_table.push_back({integer(row, "spin_a", -1, "weak_table"), integer(row, "spin_b", -1, "weak_table"),
                              hz_to_rad(number(row, "coupling_hz", 0.0, "weak_table"))});
    }
  } else {
    throw ConfigError("unknown weak_pattern '" + pattern + "'");
  }
  if (j.contains("disorder")) {
    const auto& d = j.at("disorder");
    check_keys(d, {"spread", "realizations"}, "system.disorder");
    t.disorder = Disorder{number(d, "spread", 0.0, "system.disorder"), 0};
    sc.realizations = integer(d, "realizations", 1, "system.disorder");
    if (sc.realizations < 1) throw ConfigError("system.disorder.realizations must be >= 1");
  }
  t.validate();
  return sc;
}

inline DriveSpec parse_drive(const Json& j, double strong) {
  const std::string w = "drive";
  check_keys(j, {"amplitude_hz", "amplitude_factor", "modulation_hz", "axis", "envelope", "offset_hz"}, w);
  if (j.contains("amplitude_hz") && j.contains("amplitude_factor")) {
    throw ConfigError("give either drive.amplitude_hz or drive.amplitude_factor, not both");
  }
  DriveSpec d = matched_drive(strong, 0.0);
  d.amplitude = j.contains("amplitude_factor") ? number(j, "amplitude_factor", 0.0, w) * strong
                                               : hz_to_rad(number(j, "amplitude_hz", 0.0, w));
  d.modulation = hz_to_rad(number(j, "modulation_hz", rad_to_hz(d.modulation), w));
  const std::string axis = text(j, "axis", "x", w);
  if (axis == "x") {
    d.axis = Axis::X;
  } else if (axis == "y") {
    d.axis = Axis::Y;
  } else {
    throw ConfigError("drive.axis must be 'x' or 'y'");
  }
  const std::string env = text(j, "envelope", "cosine", w);
  if (env == "cosine") {
    d.envelope = Envelope::CosineAM;
  } else if (env == "constant") {
    d.envelope = Envelope::Constant;
  } else {
    throw ConfigError("drive.envelope must be 'cosine' or 'constant'");
  }
  d.carrier_offset = hz_to_rad(number(j, "offset_hz", 0.0, w));
  d.validate();
  return d;
}

inline double degrees(double deg) { return deg * std::numbers::pi / 180.0; }

inline Segment parse_segment(const Json& j, std::size_t index) {
  const std::string w = "sequence.segments[" + std::to_string(index) + "]";
  const std::string type = text(j, "type", "", w);
  if (type == "rotation") {
    check_keys(j, {"type", "phase_deg", "angle_deg"}, w);
    return IdealRotation{degrees(number(j, "phase_deg", 0.0, w)), degrees(number(j, "angle_deg", 90.0, w))};
  }
  if (type == "modulation") {
    check_keys(j, {"type", "duration_us"}, w);
    AmModulation m;
    m.duration = us(number(j, "duration_us", 0.0, w));
    if (!(m.duration >= 0.0)) throw ConfigError(w + ".duration_us must be >= 0");
    return m;
  }
  if (type == "free") {
    check_keys(j, {"type", "duration_us"}, w);
    const double d = us(number(j, "duration_us", 0.0, w));
    if (!(d >= 0.0)) throw ConfigError(w + ".duration_us must be >= 0");
    return FreeEvolution{d};
  }
  if (type == "crusher") {
    check_keys(j, {"type", "kind", "retain"}, w);
    Crusher c;
    const std::string kind = text(j, "kind", "single_spin_z", w);
    if (kind == "single_spin_z") {
      c.kind = CrusherKind::SingleSpinZ;
    } else if (kind == "longitudinal") {
      c.kind = CrusherKind::Longitudinal;
    } else if (kind == "explicit") {
      c.kind = CrusherKind::Explicit;
      if (!j.contains("retain") || !j.at("retain").is_array()) throw ConfigError(w + ".retain must list strings");
      for (const auto& l : j.at("retain")) {
        if (!l.is_string()) throw ConfigError(w + ".retain must list strings");
        c.retain.push_back(l.get<std::string>());
      }
    } else {
      throw ConfigError(w + ".kind must be single_spin_z, longitudinal or explicit");
    }
    return c;
  }
  throw ConfigError(w + ".type must be rotation, modulation, free or crusher");
}

inline const std::vector<std::string>& sequence_presets() {
  static const std::vector<std::string> names{"fid", "fig2_sweep", "fig3a", "fig3b", "fig4_free", "fig4_modulated"};
  return names;
}

}  // namespace cfg

/// Parses a scenario. `seed_override` replaces the config seed and is
/// written back into the echoed config.
inline ScenarioConfig parse_scenario(const Json& root, std::optional<std::uint64_t> seed_override = std::nullopt) {
  using namespace cfg;
  check_keys(root, {"name", "system", "drive", "sequence", "timing", "sweep", "scan", "aht", "spectrum", "seed"},
             "config");
  ScenarioConfig c;
  c.raw = root;
  c.name = text(root, "name", "run", "config");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("config.name must be a plain file stem");
  }
  if (root.contains("seed")) {
    const auto& sv = root.at("seed");
    if (!sv.is_number_integer() || (!sv.is_number_unsigned() && sv.get<std::int64_t>() < 0)) {
      throw ConfigError("config.seed must be a non-negative integer");
    }
    c.seed = root.at("seed").get<std::uint64_t>();
  }
  if (seed_override) {
    c.seed = *seed_override;
    c.raw["seed"] = c.seed;
  }
  c.system = parse_system(root.contains("system") ? root.at("system") : Json("pair"));
  c.drive = parse_drive(root.contains("drive") ? root.at("drive") : Json::object(), c.system.strong());

  if (root.contains("sequence")) {
    const auto& s = root.at("sequence");
    Json j = s.is_string() ? Json{{"preset", s}} : s;
    check_keys(j, {"preset", "segments", "cycle", "initial", "observables"}, "sequence");
    if (j.contains("preset") && j.contains("segments")) {
      throw ConfigError("sequence takes either a preset or a segment list");
    }
    if (j.contains("segments")) {
      c.sequence = "explicit";
      if (!j.at("segments").is_array()) throw ConfigError("sequence.segments must be an array");
      std::size_t k = 0;
      for (const auto& seg : j.at("segments")) c.segments.push_back(parse_segment(seg, k++));
    } else {
      c.sequence = text(j, "preset", "fid", "sequence");
      const auto& names = sequence_presets();
      if (std::find(names.begin(), names.end(), c.sequence) == names.end()) {
        throw ConfigError("unknown sequence preset '" + c.sequence + "'");
      }
    }
    if (j.contains("cycle")) {
      if (c.sequence != "explicit") throw ConfigError("sequence.cycle applies to explicit segment lists");
      const auto& cy = j.at("cycle");
      if (cy.is_string()) {
        if (cy.get<std::string>() != "dq") throw ConfigError("sequence.cycle must be 'dq' or a list of steps");
        if (c.segments.size() < 2) throw ConfigError("the dq cycle needs two trailing rotation segments");
        c.cycle = dq_filter_cycle(c.segments.size() - 2);
      } else if (cy.is_array()) {
        PhaseCycle pc;
        for (const auto& st : cy) {
          check_keys(st, {"offsets_deg", "receiver"}, "sequence.cycle step");
          PhaseStep ps;
          for (double d : numbers(st, "offsets_deg", "sequence.cycle step")) ps.phase_offsets.push_back(degrees(d));
          ps.receiver = number(st, "receiver", 1.0, "sequence.cycle step");
          pc.steps.push_back(std::move(ps));
        }
        pc.validate(c.segments.size());
        c.cycle = std::move(pc);
      } else {
        throw ConfigError("sequence.cycle must be 'dq' or a list of steps");
      }
    }
    c.initial = text(j, "initial", "thermal", "sequence");
    if (c.initial != "thermal" && c.initial != "sigma_x") {
      throw ConfigError("sequence.initial must be 'thermal' or 'sigma_x'");
    }
    if (j.contains("observables")) {
      if (!j.at("observables").is_array()) throw ConfigError("sequence.observables must be an array");
      for (const auto& o : j.at("observables")) {
        if (!o.is_string()) throw ConfigError("sequence.observables must list names");
        c.observables.push_back(o.get<std::string>());
      }
    }
  }

  if (root.contains("timing")) {
    const auto& t = root.at("timing");
    check_keys(t, {"duration_us", "dt_us", "record_stride"}, "timing");
    c.duration = t.contains("duration_us") ? us(number(t, "duration_us", 0.0, "timing")) : -1.0;
    if (t.contains("duration_us") && !(c.duration >= 0.0)) throw ConfigError("timing.duration_us must be >= 0");
    c.dt = us(number(t, "dt_us", 0.0, "timing"));
    if (!(c.dt >= 0.0)) throw ConfigError("timing.dt_us must be >= 0");
    c.record_stride = integer(t, "record_stride", 1, "timing");
    if (c.record_stride < 1) throw ConfigError("timing.record_stride must be >= 1");
  }

  if (root.contains("sweep")) {
    const auto& s = root.at("sweep");
    check_keys(s, {"start_us", "end_us", "step_us", "readout", "resolution_hz"}, "sweep");
    c.sweep.start = us(number(s, "start_us", 100.0, "sweep"));
    c.sweep.end = us(number(s, "end_us", 2900.0, "sweep"));
    c.sweep.step = us(number(s, "step_us", 5.5, "sweep"));
    c.sweep.resolution_hz = number(s, "resolution_hz", 0.0, "sweep");
    const std::string r = text(s, "readout", "sigma_x_sum", "sweep");
    if (r == "sigma_x_sum") {
      c.sweep.readout = Readout::SigmaXSum;
    } else if (r == "dq_filtered") {
      c.sweep.readout = Readout::DqFiltered;
    } else {
      throw ConfigError("sweep.readout must be sigma_x_sum or dq_filtered");
    }
    sweep_point_count(c.sweep.start, c.sweep.end, c.sweep.step);
  }

  if (root.contains("scan")) {
    const auto& s = root.at("scan");
    check_keys(s, {"amplitudes_hz", "amplitude_factors"}, "scan");
    for (double hz : numbers(s, "amplitudes_hz", "scan")) c.scan_amplitudes.push_back(hz_to_rad(hz));
    for (double f : numbers(s, "amplitude_factors", "scan")) c.scan_amplitudes.push_back(f * c.system.strong());
    for (double a : c.scan_amplitudes) {
      if (!(a >= 0.0)) throw ConfigError("scan amplitudes must be >= 0");
    }
  }

  if (root.contains("aht")) {
    const auto& a = root.at("aht");
    check_keys(a, {"scenario", "steps", "max_factor", "samples"}, "aht");
    c.aht.scenario = text(a, "scenario", "three_spin", "aht");
    if (c.aht.scenario != "three_spin" && c.aht.scenario != "pair_bessel") {
      throw ConfigError("aht.scenario must be three_spin or pair_bessel");
    }
    c.aht.steps = integer(a, "steps", 24, "aht");
    c.aht.max_factor = number(a, "max_factor", 2.0, "aht");
    c.aht.samples = integer(a, "samples", 256, "aht");
    if (c.aht.steps < 2) throw ConfigError("aht.steps must be >= 2");
    if (!(c.aht.max_factor > 0.0)) throw ConfigError("aht.max_factor must be positive");
  }

  if (root.contains("spectrum")) {
    const auto& s = root.at("spectrum");
    check_keys(s, {"input", "column", "zero_fill", "line_broadening_hz", "mode", "halve_first_point",
                   "peak_threshold"},
               "spectrum");
    c.spectrum.input = text(s, "input", "", "spectrum");
    c.spectrum.column = text(s, "column", "", "spectrum");
    auto& o = c.spectrum.options;
    o.zero_fill_factor = integer(s, "zero_fill", 4, "spectrum");
    o.line_broadening_hz = number(s, "line_broadening_hz", 0.0, "spectrum");
    o.window = o.line_broadening_hz > 0.0 ? Window::Exponential : Window::None;
    o.halve_first_point = flag(s, "halve_first_point", false, "spectrum");
    o.peak_threshold = number(s, "peak_threshold", 0.05, "spectrum");
    const std::string mode = text(s, "mode", "magnitude", "spectrum");
    if (mode == "magnitude") {
      o.mode = SpectrumMode::Magnitude;
    } else if (mode == "absorption") {
      o.mode = SpectrumMode::Absorption;
    } else {
      throw ConfigError("spectrum.mode must be magnitude or absorption");
    }
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path + "'");
  Json j;
  try {
    j = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(j, seed_override);
}

// ---------------------------------------------------------------------------
// Runners

struct RunContext {
  int threads = 1;
  bool strict = false;
  std::function<void(const std::string&)> warn = [](const std::string& msg) {
    std::clog << "warning: " << msg << '\n';
  };
};

/// Files produced by a runner, in emission order: (file name, contents).
struct RunOutput {
  std::vector<std::pair<std::string, std::string>> files;
  Json summary;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

namespace detail {

inline Operator named_observable(const std::string& name, const SpinSystem& sys) {
  const int n = sys.spin_count();
  if (name == "sigma_x_sum") return collective(Axis::X, n);
  if (name == "sigma_y_sum") return collective(Axis::Y, n);
  if (name == "sigma_z_sum") return collective(Axis::Z, n);
  if (name == "two_spin") return two_spin_term(sys);
  // otherwise a Pauli string label such as "XIZ"
  try {
    const auto p = PauliString::parse(name);
    if (p.spins() != n) throw DomainError("");
    return p.to_operator();
  } catch (const DomainError&) {
    throw ConfigError("unknown observable '" + name + "'");
  }
}

inline std::vector<NamedObservable> build_observables(const std::vector<std::string>& names, const SpinSystem& sys) {
  std::vector<NamedObservable> out;
  for (const auto& nm : names) out.push_back({nm, named_observable(nm, sys)});
  return out;
}

inline std::vector<Segment> with_drive(std::vector<Segment> segs, const DriveSpec& drive) {
  for (auto& s : segs) {
    if (auto* a = std::get_if<AmModulation>(&s)) a->drive = drive;
  }
  return segs;
}

struct PresetPlan {
  std::vector<Segment> segments;
  std::optional<PhaseCycle> cycle;
  std::vector<std::string> observables;
  std::string initial = "thermal";
};

inline PresetPlan plan_for(const ScenarioConfig& c) {
  PresetPlan p;
  const IdealRotation excite{kPhaseY, std::numbers::pi / 2.0};
  auto dur = [&](double fallback_us) { return c.duration >= 0.0 ? c.duration : cfg::us(fallback_us); };
  const std::string& s = c.sequence;
  if (s == "explicit") {
    p.segments = c.segments;
    p.cycle = c.cycle;
    p.initial = c.initial;
    p.observables = {"sigma_x_sum", "two_spin"};
  } else if (s == "fid") {
    p.segments = {excite, FreeEvolution{dur(1000.0)}};
    p.observables = {"sigma_x_sum", "two_spin"};
  } else if (s == "fig3a") {
    p.segments = {excite, AmModulation{{}, dur(500.0)}};
    for (auto& r : sigma_x_readout_segments()) p.segments.push_back(r);
    p.observables = {"sigma_x_sum"};
  } else if (s == "fig3b") {
    p.segments = {excite, AmModulation{{}, dur(500.0)}};
    for (auto& r : dq_filter_segments()) p.segments.push_back(r);
    p.cycle = dq_filter_cycle(2);
    p.observables = {"two_spin"};
  } else if (s == "fig4_free") {
    p.segments = {excite, FreeEvolution{dur(600.0)}};
    p.observables = {"sigma_x_sum", "two_spin"};
  } else if (s == "fig4_modulated") {
    p.segments = {excite, AmModulation{{}, dur(600.0)}};
    p.observables = {"sigma_x_sum", "two_spin"};
  } else {
    throw ConfigError("sequence preset '" + s + "' is not a single sequence run");
  }
  if (!c.observables.empty()) p.observables = c.observables;
  p.segments = with_drive(std::move(p.segments), c.drive);
  return p;
}

inline DensityState initial_state(const std::string& kind, int n) {
  if (kind == "sigma_x") return DensityState::deviation(collective(Axis::X, n));
  return DensityState::thermal_deviation(n);
}

/// Runs `fn(system)` once, or over the disorder ensemble when configured.
template <class Fn>
Trajectory run_over_systems(const ScenarioConfig& c, const RunContext& ctx, Fn&& fn, int threads) {
  (void)ctx;
  if (c.system.preset == "three_spin" || !c.system.is_ensemble()) {
    return fn(c.system.build(c.seed));
  }
  return ensemble_average(c.system.topology, c.system.realizations, c.seed, fn, threads);
}

inline Json transfer_json(const TransferPhase& t) {
  return {{"frequency_hz", t.frequency_hz},
          {"phase_deg", t.phase_deg},
          {"amplitude_single_spin", t.amplitude_a},
          {"amplitude_two_spin", t.amplitude_b},
          {"early_late_ratio_single_spin", t.early_late_a},
          {"early_late_ratio_two_spin", t.early_late_b}};
}

inline Json system_json(const ScenarioConfig& c) {
  Json j{{"preset", c.system.preset},
         {"spins", c.system.build(c.seed).spin_count()},
         {"strong_hz", rad_to_hz(c.system.strong())},
         {"weak_hz", rad_to_hz(c.system.weak())},
         {"realizations", c.system.is_ensemble() ? c.system.realizations : 1}};
  return j;
}

}  // namespace detail

/// Trajectory analysis attached to simulate outputs.
inline Json analyze_channels(const Trajectory& traj, bool want_spectrum, RunOutput& out, const ScenarioConfig& c) {
  Json a = Json::object();
  if (traj.size() < 8) return a;
  const auto& t = traj.times;
  bool uniform = true;
  try {
    uniform_step(t);
  } catch (const DomainError&) {
    uniform = false;
  }
  if (!uniform) {
    a["note"] = "non-uniform time grid; spectral analysis skipped";
    return a;
  }
  const bool has_x = std::find(traj.names.begin(), traj.names.end(), "sigma_x_sum") != traj.names.end();
  const bool has_b = std::find(traj.names.begin(), traj.names.end(), "two_spin") != traj.names.end();
  if (has_x) {
    const auto& x = traj.channel("sigma_x_sum");
    try {
      a["envelope_decay"] = decay_json(envelope_decay(t, x));
    } catch (const std::exception& e) {
      a["envelope_decay_error"] = e.what();
    }
    if (want_spectrum) {
      const Spectrum s = fft_spectrum(t, x);
      a["peaks"] = peaks_json(s);
      if (s.peaks.size() >= 2) a["splitting_hz"] = std::abs(s.peaks[0].center_hz - s.peaks[1].center_hz);
      a["bin_width_hz"] = s.bin_width();
      out.add(c.name + "_spectrum.csv", to_csv(spectrum_table(s), c.raw));
    }
  }
  if (has_x && has_b) {
    try {
      a["transfer_phase"] = detail::transfer_json(transfer_phase(t, traj.channel("sigma_x_sum"), traj.channel("two_spin")));
    } catch (const std::exception& e) {
      a["transfer_phase_error"] = e.what();
    }
  }
  return a;
}

inline RunOutput run_sweep(const ScenarioConfig& c, const RunContext& ctx) {
  RunOutput out;
  const auto& sw = c.sweep;
  auto sweep_one = [&](const SpinSystem& sys) {
    SweepOptions so;
    so.dt = c.dt;
    so.strict = ctx.strict;
    so.resolution_hz = sw.resolution_hz;
    so.warn = ctx.warn;
    const DensityState start = DensityState::thermal_deviation(sys.spin_count()).evolved(
        rotation_operator(kPhaseY, std::numbers::pi / 2.0, sys.spin_count()));
    const auto r = modulation_sweep(sys, c.drive, sw.start, sw.end, sw.step, sw.readout, start, so);
    Trajectory t({r.readout});
    for (std::size_t k = 0; k < r.durations.size(); ++k) t.add_sample(r.durations[k], {r.signal[k]});
    return t;
  };
  const Trajectory traj = detail::run_over_systems(c, ctx, sweep_one, ctx.threads);
  Table table;
  table.add("duration_s", traj.times);
  table.add(traj.names.front(), traj.values.front());
  out.add(c.name + "_sweep.csv", to_csv(table, c.raw));

  Json res;
  res["points"] = traj.size();
  res["system"] = detail::system_json(c);
  if (traj.size() >= 8) {
    const Spectrum s = fft_spectrum(traj.times, traj.values.front());
    out.add(c.name + "_sweep_spectrum.csv", to_csv(spectrum_table(s), c.raw));
    res["peaks"] = peaks_json(s);
    res["bin_width_hz"] = s.bin_width();
    try {
      const DecayFit f = fit_decay(traj.times, traj.values.front(), DecayModel::ExpCosine);
      res["decay_fit"] = decay_json(f);
      res["lorentzian_fwhm_hz"] = 1.0 / (std::numbers::pi * f.t2_eff);
    } catch (const std::exception& e) {
      res["decay_fit_error"] = e.what();
    }
    // Narrowing relative to the free-evolution FID of the same system
    try {
      ScenarioConfig free = c;
      free.sequence = "fid";
      free.duration = sw.end;
      auto fid_one = [&](const SpinSystem& sys) {
        const auto plan = detail::plan_for(free);
        SequenceOptions so;
        so.dt = c.dt;
        so.strict = ctx.strict;
        so.observables = detail::build_observables({"sigma_x_sum"}, sys);
        return run_sequence(sys, plan.segments, std::nullopt, detail::initial_state("thermal", sys.spin_count()), so);
      };
      const Trajectory fid = detail::run_over_systems(free, ctx, fid_one, ctx.threads);
      const DecayFit ff = envelope_decay(fid.times, fid.values.front());
      const DecayFit mf = envelope_decay(traj.times, traj.values.front());
      const auto rep = narrowing_report(decay_time_of(ff, "free"), decay_time_of(mf, "modulated"), true);
      res["narrowing"] = {{"free_decay_s", ff.t2_eff},
                          {"modulated_decay_s", mf.t2_eff},
                          {"ratio", rep.ratio},
                          {"note", rep.note}};
    } catch (const std::exception& e) {
      res["narrowing_error"] = e.what();
    }
  }
  out.summary = res;
  return out;
}

/// simulate: one sequence run (or a sweep for the fig2_sweep preset).
inline RunOutput run_simulate(const ScenarioConfig& c, const RunContext& ctx) {
  RunOutput out;
  if (c.sequence == "fig2_sweep") {
    out = run_sweep(c, ctx);
  } else {
    const auto plan = detail::plan_for(c);
    auto one = [&](const SpinSystem& sys) {
      SequenceOptions so;
      so.dt = c.dt;
      so.record_stride = c.record_stride;
      so.strict = ctx.strict;
      so.observables = detail::build_observables(plan.observables, sys);
      return run_sequence(sys, plan.segments, plan.cycle, detail::initial_state(plan.initial, sys.spin_count()), so);
    };
    const Trajectory traj = detail::run_over_systems(c, ctx, one, ctx.threads);
    out.add(c.name + "_trajectory.csv", to_csv(trajectory_table(traj), c.raw));
    Json res;
    res["samples"] = traj.size();
    res["system"] = detail::system_json(c);
    Json fin = Json::object();
    const auto fv = traj.final_values();
    for (std::size_t k = 0; k < traj.names.size(); ++k) fin[traj.names[k]] = fv[k];
    res["final"] = fin;
    res["analysis"] = analyze_channels(traj, c.sequence == "fid", out, c);
    out.summary = res;
  }
  Json doc;
  doc["metadata"] = metadata_block(c.raw);
  doc["command"] = "simulate";
  doc["results"] = out.summary;
  out.add(c.name + ".json", doc.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// aht

inline Json terms_json(const std::vector<PauliString>& terms) {
  Json arr = Json::array();
  for (const auto& t : terms) {
    arr.push_back({{"label", t.label()}, {"coefficient_hz", rad_to_hz(t.coefficient.real())}});
  }
  return arr;
}

inline std::string terms_csv(const std::vector<PauliString>& terms, const Json& config) {
  std::ostringstream os;
  os << csv_metadata(config) << "label,coefficient_hz\n";
  for (const auto& t : terms) os << t.label() << ',' << format_number(rad_to_hz(t.coefficient.real())) << '\n';
  return os.str();
}

/// Residual inter-group coupling after averaging in the pair frame and then
/// in the frame of the remaining drive part. Returns (max coefficient,
/// root-sum-square), both rad/s.
inline std::pair<double, double> residual_coupling(const SpinSystem& sys, const DriveSpec& drive, int samples) {
  const auto h = pair_interaction_frame(sys, drive);
  const auto r = average_hamiltonian(h, kTwoPi / drive.modulation, samples);
  Operator hbar = r.h0;
  if (drive.amplitude > 0.0) {
    std::vector<int> paired;
    for (const auto& p : sys.pairs()) {
      paired.push_back(p[0]);
      paired.push_back(p[1]);
    }
    const Operator g = drive_part(r.h0_terms, paired, sys.spin_count());
    hbar = second_frame_average(r.h0, g, 4.0 * std::numbers::pi / drive.amplitude, samples);
  }
  const auto groups = pair_groups(sys);
  const auto terms = pauli_decompose(hbar, 1e-12 * std::max(1.0, max_abs(hbar)));
  double rss = 0.0;
  for (const auto& t : terms) {
    std::set<int> gs;
    for (std::size_t s = 0; s < t.factors.size(); ++s) {
      if (t.factors[s] != PauliLabel::I) gs.insert(groups[s]);
    }
    if (gs.size() > 1) rss += std::norm(t.coefficient);
  }
  return {max_cross_group_coefficient(terms, groups), std::sqrt(rss)};
}

inline RunOutput run_aht(const ScenarioConfig& c, const RunContext& ctx) {
  RunOutput out;
  Json res;
  const double ws = c.system.strong();
  if (c.aht.scenario == "three_spin") {
    const SpinSystem sys = c.system.build(c.seed);
    const auto h = pair_interaction_frame(sys, c.drive);
    const double period = kTwoPi / c.drive.modulation;
    const auto r = average_hamiltonian(h, period, c.aht.samples);
    res["frame"] = "interaction frame of the strong pair couplings";
    res["period_s"] = period;
    res["samples"] = r.samples;
    res["quadrature_error_hz"] = rad_to_hz(r.error_estimate);
    res["h0"] = terms_json(r.h0_terms);
    res["h1"] = terms_json(r.h1_terms);
    res["system"] = detail::system_json(c);
    res["drive_amplitude_hz"] = rad_to_hz(c.drive.amplitude);
    if (sys.spin_count() == 3) {
      // reference coefficients for the pair (0, 1) with spectator 2
      Json ref = Json::array();
      auto expect = [&](const std::string& label, double value) {
        const double got = coefficient_of(r.h0_terms, label).real();
        ref.push_back({{"label", label}, {"expected_hz", rad_to_hz(value)}, {"computed_hz", rad_to_hz(got)}});
      };
      expect("ZIZ", sys.coupling(0, 2) / 2.0);
      expect("IZZ", sys.coupling(1, 2) / 2.0);
      expect("XII", c.drive.amplitude / 4.0);
      expect("IXI", c.drive.amplitude / 4.0);
      res["reference"] = ref;
    }
    try {
      const auto [mx, rss] = residual_coupling(sys, c.drive, c.aht.samples);
      res["second_frame_residual_max_hz"] = rad_to_hz(mx);
      res["second_frame_residual_rss_hz"] = rad_to_hz(rss);
    } catch (const std::exception& e) {
      res["second_frame_error"] = e.what();
    }
    out.add(c.name + "_h0.csv", terms_csv(r.h0_terms, c.raw));
  } else {
    // isolated pair in the toggling frame of the drive, swept over amplitude
    TopologySpec pair;
    pair.pair_count = 1;
    pair.strong_coupling = ws;
    const SpinSystem sys = build_system(pair);
    const int steps = c.aht.steps;
    std::vector<double> ratio(static_cast<std::size_t>(steps) + 1), bessel(ratio.size()), xx(ratio.size()),
        yz(ratio.size()), rem(ratio.size());
    std::vector<std::exception_ptr> errors(ratio.size());
    std::atomic<int> next{0};
    auto work = [&] {
      for (int k = next++; k <= steps; k = next++) {
        try {
          const auto idx = static_cast<std::size_t>(k);
          ratio[idx] = c.aht.max_factor * k / steps;
          DriveSpec d = c.drive;
          d.amplitude = ratio[idx] * ws;
          const auto r = average_hamiltonian(drive_frame(sys, d), kTwoPi / d.modulation, c.aht.samples);
          const auto f = pair_average_form(r.h0, 0, 1);
          bessel[idx] = f.bessel_term;
          xx[idx] = f.xx;
          yz[idx] = 0.5 * (f.yy + f.zz);
          rem[idx] = f.remainder;
        } catch (...) {
          errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::max(1, ctx.threads); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    const BesselFit fit = fit_bessel_j0(ratio, bessel);
    const double c_ref = 3.0 * ws / 8.0;
    double di_err = 0.0;
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      di_err = std::max({di_err, std::abs(xx[k] - (-ws / 4.0)) / (ws / 4.0), std::abs(yz[k] - ws / 8.0) / (ws / 8.0)});
    }
    Table t;
    t.add("amplitude_over_strong", ratio);
    std::vector<double> b_hz, xx_hz, yz_hz, rem_hz, model_hz;
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      b_hz.push_back(rad_to_hz(bessel[k]));
      xx_hz.push_back(rad_to_hz(xx[k]));
      yz_hz.push_back(rad_to_hz(yz[k]));
      rem_hz.push_back(rad_to_hz(rem[k]));
      model_hz.push_back(rad_to_hz(fit.c * bessel_j0(fit.a * ratio[k])));
    }
    t.add("zz_minus_yy_hz", b_hz);
    t.add("fit_hz", model_hz);
    t.add("xx_hz", xx_hz);
    t.add("yy_plus_zz_half_hz", yz_hz);
    t.add("remainder_hz", rem_hz);
    out.add(c.name + "_bessel.csv", to_csv(t, c.raw));
    res["frame"] = "toggling frame of the amplitude-modulated drive";
    res["fit"] = {{"a", fit.a},
                  {"c_hz", rad_to_hz(fit.c)},
                  {"c_over_3wd_8", fit.c / c_ref},
                  {"max_residual_over_c", fit.max_residual},
                  {"quoted_a", 4.0},
                  {"quoted_c_hz", rad_to_hz(c_ref)},
                  {"a_discrepancy", fit.a - 4.0}};
    res["drive_independent_max_rel_error"] = di_err;
    res["points"] = ratio.size();
  }
  Json doc;
  doc["metadata"] = metadata_block(c.raw);
  doc["command"] = "aht";
  doc["results"] = res;
  out.summary = res;
  out.add(c.name + ".json", doc.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// scan

struct ScanPoint {
  double amplitude = 0.0;  // rad/s
  double decay_time = 0.0;
  double fit_residual = 0.0;
  double residual_max = 0.0;
  double residual_rss = 0.0;
};

/// Envelope decay time of <sum sigma_x> under a matched drive of amplitude
/// `amplitude`, ensemble-averaged when the config has disorder.
inline ScanPoint scan_point(const ScenarioConfig& c, const RunContext& ctx, double amplitude, double duration) {
  ScenarioConfig pc = c;
  pc.drive.amplitude = amplitude;
  pc.sequence = "fig4_modulated";
  pc.duration = duration;
  pc.observables = {"sigma_x_sum"};
  const auto plan = detail::plan_for(pc);
  auto one = [&](const SpinSystem& sys) {
    SequenceOptions so;
    so.dt = c.dt;
    so.strict = ctx.strict;
    so.observables = detail::build_observables(plan.observables, sys);
    return run_sequence(sys, plan.segments, std::nullopt, DensityState::thermal_deviation(sys.spin_count()), so);
  };
  const Trajectory traj = detail::run_over_systems(pc, ctx, one, 1);
  ScanPoint p;
  p.amplitude = amplitude;
  const DecayFit f = envelope_decay(traj.times, traj.values.front());
  p.decay_time = f.t2_eff;
  p.fit_residual = f.residual;
  TopologySpec clean = c.system.topology;
  clean.disorder.reset();
  const SpinSystem sys = c.system.preset == "three_spin" ? c.system.build(c.seed) : build_system(clean);
  std::tie(p.residual_max, p.residual_rss) = residual_coupling(sys, pc.drive, c.aht.samples);
  return p;
}

inline RunOutput run_scan(const ScenarioConfig& c, const RunContext& ctx) {
  if (c.scan_amplitudes.empty()) throw ConfigError("scan needs a nonempty scan.amplitudes_hz or scan.amplitude_factors");
  RunOutput out;
  const double duration = c.duration >= 0.0 ? c.duration : cfg::us(600.0);
  std::vector<ScanPoint> pts(c.scan_amplitudes.size());
  std::vector<std::exception_ptr> errors(pts.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < pts.size(); k = next++) {
      try {
        pts[k] = scan_point(c, ctx, c.scan_amplitudes[k], duration);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::max(1, std::min<int>(ctx.threads, static_cast<int>(pts.size()))); ++w) {
    pool.emplace_back(work);
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Table t;
  std::vector<double> a_hz, ratio, tau, fres, rmax, rrss;
  Json rows = Json::array();
  for (const auto& p : pts) {
    a_hz.push_back(rad_to_hz(p.amplitude));
    ratio.push_back(p.amplitude / c.system.strong());
    tau.push_back(p.decay_time);
    fres.push_back(p.fit_residual);
    rmax.push_back(rad_to_hz(p.residual_max));
    rrss.push_back(rad_to_hz(p.residual_rss));
  }
  t.add("amplitude_hz", a_hz);
  t.add("amplitude_over_strong", ratio);
  t.add("decay_time_s", tau);
  t.add("decay_fit_residual", fres);
  t.add("residual_coupling_max_hz", rmax);
  t.add("residual_coupling_rss_hz", rrss);
  out.add(c.name + "_scan.csv", to_csv(t, c.raw));
  std::size_t best = 0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k].decay_time > pts[best].decay_time) best = k;
  }
  Json res;
  res["points"] = pts.size();
  res["longest_decay_amplitude_hz"] = a_hz[best];
  res["longest_decay_s"] = tau[best];
  res["system"] = detail::system_json(c);
  res["duration_s"] = duration;
  Json doc;
  doc["metadata"] = metadata_block(c.raw);
  doc["command"] = "scan";
  doc["results"] = res;
  out.summary = res;
  out.add(c.name + ".json", doc.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// spectrum

inline RunOutput run_spectrum(const ScenarioConfig& c, const std::string& input_override) {
  const std::string path = input_override.empty() ? c.spectrum.input : input_override;
  if (path.empty()) throw ConfigError("spectrum needs an input CSV (spectrum.input or --input)");
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  const Table in = read_csv(f);
  if (in.header.size() < 2) throw DomainError("input CSV needs a time column and at least one signal column");
  std::size_t col = 1;
  if (!c.spectrum.column.empty()) {
    const auto it = std::find(in.header.begin(), in.header.end(), c.spectrum.column);
    if (it == in.header.end()) throw ConfigError("column '" + c.spectrum.column + "' not found in " + path);
    col = static_cast<std::size_t>(it - in.header.begin());
  }
  const Spectrum s = fft_spectrum(in.columns[0], in.columns[col], c.spectrum.options);
  RunOutput out;
  Json echo = c.raw;
  echo["spectrum"]["input"] = path;
  out.add(c.name + "_spectrum.csv", to_csv(spectrum_table(s), echo));
  Json res;
  res["column"] = in.header[col];
  res["samples"] = s.samples;
  res["bin_width_hz"] = s.bin_width();
  res["peaks"] = peaks_json(s);
  if (s.peaks.size() >= 2) res["splitting_hz"] = std::abs(s.peaks[0].center_hz - s.peaks[1].center_hz);
  res["parseval_ratio"] = s.parseval_ratio();
  Json doc;
  doc["metadata"] = metadata_block(echo);
  doc["command"] = "spectrum";
  doc["results"] = res;
  out.summary = res;
  out.add(c.name + "_spectrum.json", doc.dump(2) + "\n");
  return out;
}

}  // namespace pairdec
