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

#include "pairdec/pairdec.hpp"
#include "pairdec/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr const char* kUnitsRule =
    "Units rule: every frequency in a config file (keys ending in _hz) is in Hz and every time (keys ending "
    "in _us) is in microseconds. They are converted once, on input, to rad/s (x 2 pi) and seconds; "
    "all internal computation uses rad/s with hbar = 1. Output files report Hz and seconds.";

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  bool strict = false;
  int threads = 1;
  std::string input;
};

int emit(const pairdec::RunOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : out.files) {
    const auto path = (std::filesystem::path(dir) / name).string();
    pairdec::write_text(path, content);
    std::cout << path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("pairdec: dipolar spin-pair dynamics under amplitude-modulated RF.\n") + kUnitsRule};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", o.config, "scenario config file (JSON)");
    if (need_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (created if missing)");
    sub->add_option("--seed", o.seed, "override the config seed for disorder draws");
    sub->add_flag("--strict", o.strict, "turn time-step warnings into errors");
    sub->add_option("--threads", o.threads, "worker threads; results do not depend on this")
        ->check(CLI::Range(1, 256));
  };

  auto* simulate = app.add_subcommand("simulate", "run a sequence preset or explicit segment list");
  add_common(simulate, true);
  auto* aht = app.add_subcommand("aht", "average Hamiltonian tables (three_spin or pair_bessel scenario)");
  add_common(aht, true);
  auto* scan = app.add_subcommand("scan", "decay time and residual coupling over a grid of drive amplitudes");
  add_common(scan, true);
  auto* spectrum = app.add_subcommand("spectrum", "FFT of a column of an existing CSV file");
  add_common(spectrum, false);
  spectrum->add_option("--input", o.input, "CSV file to transform (overrides spectrum.input)");

  for (auto* sub : {simulate, aht, scan, spectrum}) sub->footer(kUnitsRule);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    pairdec::RunContext ctx;
    ctx.threads = o.threads;
    ctx.strict = o.strict;
    pairdec::ScenarioConfig cfg = o.config.empty() ? pairdec::parse_scenario(pairdec::Json::object(), o.seed)
                                                   : pairdec::load_scenario(o.config, o.seed);
    if (simulate->parsed()) return emit(pairdec::run_simulate(cfg, ctx), o.out);
    if (aht->parsed()) return emit(pairdec::run_aht(cfg, ctx), o.out);
    if (scan->parsed()) return emit(pairdec::run_scan(cfg, ctx), o.out);
    if (spectrum->parsed()) {
      if (o.config.empty()) cfg.name = "spectrum";
      return emit(pairdec::run_spectrum(cfg, o.input), o.out);
    }
  } catch (const pairdec::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const pairdec::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
