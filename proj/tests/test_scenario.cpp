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

#include "pairdec/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pairdec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RunContext quiet() {
  RunContext ctx;
  ctx.warn = nullptr;
  return ctx;
}

const std::string& file(const RunOutput& out, const std::string& name) {
  for (const auto& [n, content] : out.files) {
    if (n == name) return content;
  }
  FAIL("no output named " << name);
  static const std::string empty;
  return empty;
}

Table table_of(const std::string& csv) {
  std::istringstream is(csv);
  return read_csv(is);
}

}  // namespace

TEST_CASE("config defaults", "[scenario]") {
  const auto c = parse_scenario(Json::object());
  CHECK(c.name == "run");
  CHECK(c.system.preset == "pair");
  CHECK(c.system.topology.pair_count == 1);
  CHECK(c.system.weak() == 0.0);
  CHECK(c.drive.amplitude == 0.0);
  CHECK_THAT(c.drive.modulation, WithinRel(1.5 * hz_to_rad(14800.0), 1e-15));
  CHECK(c.sequence == "fid");
  CHECK(c.seed == 1);
  CHECK(c.duration < 0.0);
  CHECK(c.sweep.step == cfg::us(5.5));
}

TEST_CASE("config units are converted at the boundary", "[scenario]") {
  const Json j = {{"system", {{"preset", "four_spin"}, {"strong_hz", 10000.0}, {"weak_hz", 2000.0}}},
                  {"drive", {{"amplitude_hz", 7500.0}, {"axis", "y"}}},
                  {"timing", {{"duration_us", 250.0}, {"dt_us", 0.2}, {"record_stride", 4}}}};
  const auto c = parse_scenario(j);
  CHECK(c.system.strong() == hz_to_rad(10000.0));
  CHECK(c.system.weak() == hz_to_rad(2000.0));
  CHECK(c.drive.amplitude == hz_to_rad(7500.0));
  CHECK(c.drive.axis == Axis::Y);
  CHECK_THAT(c.drive.modulation, WithinRel(hz_to_rad(15000.0), 1e-15));
  CHECK_THAT(c.duration, WithinRel(250e-6, 1e-15));
  CHECK_THAT(c.dt, WithinRel(0.2e-6, 1e-15));
  CHECK(c.record_stride == 4);

  const auto f = parse_scenario({{"drive", {{"amplitude_factor", 0.75}}}});
  CHECK_THAT(f.drive.amplitude, WithinRel(0.75 * hz_to_rad(14800.0), 1e-15));
}

TEST_CASE("config errors", "[scenario]") {
  CHECK_THROWS_AS(parse_scenario({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"system", "graphite"}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"system", {{"preset", "pair"}, {"strong", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"drive", {{"amplitude_hz", 1.0}, {"amplitude_factor", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"drive", {{"axis", "z"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"drive", {{"amplitude_hz", -5.0}}}}), DomainError);
  CHECK_THROWS_AS(parse_scenario({{"sequence", "fig9"}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"sequence", {{"segments", {{{"type", "laser"}}}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"timing", {{"dt_us", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"sweep", {{"start_us", 10.0}, {"end_us", 5.0}}}}), DomainError);
  CHECK_THROWS_AS(parse_scenario({{"seed", -3}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"name", "a/b"}}), ConfigError);
  CHECK_THROWS_AS(parse_scenario({{"system", {{"preset", "three_spin"}, {"weak_hz", 20000.0}}}}), DomainError);
  CHECK_THROWS_AS(parse_scenario({{"system", {{"preset", "pair"}, {"weak13_hz", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/config.json"), ConfigError);

  const auto bad_obs = parse_scenario({{"sequence", {{"preset", "fid"}, {"observables", {"sigma_q"}}}}});
  CHECK_THROWS_AS(run_simulate(bad_obs, quiet()), ConfigError);
}

TEST_CASE("custom weak-link table from config", "[scenario]") {
  const Json j = {{"system",
                   {{"preset", "custom"},
                    {"pair_count", 2},
                    {"weak_pattern", "table"},
                    {"weak_table", {{{"spin_a", 0}, {"spin_b", 3}, {"coupling_hz", 1000.0}}}}}}};
  const auto sys = parse_scenario(j).system.build(1);
  CHECK(sys.coupling(0, 3) == hz_to_rad(1000.0));
  CHECK(sys.coupling(1, 2) == 0.0);
}

TEST_CASE("seed override is echoed", "[scenario]") {
  const Json j = {{"seed", 5}, {"system", {{"preset", "four_spin"}, {"disorder", {{"spread", 0.3}, {"realizations", 2}}}}}};
  const auto c = parse_scenario(j, 77);
  CHECK(c.seed == 77);
  CHECK(c.raw.at("seed") == 77);
  CHECK(c.system.is_ensemble());
  CHECK(parse_scenario(j).seed == 5);
}

TEST_CASE("empty explicit sequence gives a single sample", "[scenario]") {
  const auto c = parse_scenario({{"name", "empty"}, {"sequence", {{"segments", Json::array()}}}});
  const auto out = run_simulate(c, quiet());
  const auto t = table_of(file(out, "empty_trajectory.csv"));
  CHECK(t.header == std::vector<std::string>{"time_s", "sigma_x_sum", "two_spin"});
  REQUIRE(t.rows() == 1);
  CHECK(t.columns[0][0] == 0.0);
  CHECK(t.columns[1][0] == 0.0);
}

TEST_CASE("explicit segments and cycles", "[scenario]") {
  const Json j = {{"sequence",
                   {{"segments",
                     {{{"type", "rotation"}, {"phase_deg", 90.0}},
                      {{"type", "free"}, {"duration_us", 20.0}},
                      {{"type", "rotation"}},
                      {{"type", "rotation"}}}},
                    {"cycle", "dq"},
                    {"observables", {"two_spin", "XZ"}}}}};
  const auto c = parse_scenario(j);
  REQUIRE(c.segments.size() == 4);
  REQUIRE(c.cycle);
  CHECK(c.cycle->steps.front().phase_offsets.size() == 4);
  const auto* r = std::get_if<IdealRotation>(&c.segments[0]);
  REQUIRE(r != nullptr);
  CHECK_THAT(r->phase, WithinAbs(kPhaseY, 1e-15));
  CHECK_THAT(r->angle, WithinAbs(std::numbers::pi / 2, 1e-15));

  const Json crush = Json::parse(
      R"({"sequence": {"segments": [{"type": "crusher", "kind": "explicit", "retain": ["XI", "IX"]}]}})");
  const auto crushed = parse_scenario(crush);
  const auto* cr = std::get_if<Crusher>(&crushed.segments[0]);
  REQUIRE(cr != nullptr);
  CHECK(cr->retain == std::vector<std::string>{"XI", "IX"});

  const Json bad_cycle =
      Json::parse(R"({"sequence": {"segments": [{"type": "rotation"}], "cycle": [{"offsets_deg": [0, 90]}]}})");
  CHECK_THROWS_AS(parse_scenario(bad_cycle), DomainError);
}

TEST_CASE("fid of an isolated pair shows the pair splitting", "[scenario]") {
  const auto c = parse_scenario({{"name", "fid"}, {"sequence", "fid"}});
  const auto out = run_simulate(c, quiet());
  REQUIRE(out.files.size() == 3);
  const auto& a = out.summary.at("analysis");
  REQUIRE(a.contains("splitting_hz"));
  CHECK_THAT(a.at("splitting_hz").get<double>(), WithinAbs(3.0 * 14800.0, a.at("bin_width_hz").get<double>()));
  // sum sigma_x returns to its start once per 2 pi / (3 wD / 2)
  CHECK_THAT(out.summary.at("final").at("sigma_x_sum").get<double>(),
             WithinAbs(2.0 * std::cos(1.5 * hz_to_rad(14800.0) * 1e-3), 1e-6));
  const Json doc = Json::parse(file(out, "fid.json"));
  CHECK(doc.at("metadata").at("config") == c.raw);
  CHECK(doc.at("metadata").contains("units"));
}

TEST_CASE("preset plans", "[scenario]") {
  auto c = parse_scenario({{"sequence", "fig3b"}, {"drive", {{"amplitude_factor", 0.5}}}});
  const auto p = detail::plan_for(c);
  REQUIRE(p.segments.size() == 4);
  REQUIRE(p.cycle);
  CHECK(p.cycle->steps.size() == 4);
  const auto* am = std::get_if<AmModulation>(&p.segments[1]);
  REQUIRE(am != nullptr);
  CHECK(am->drive.amplitude == c.drive.amplitude);
  CHECK_THAT(am->duration, WithinAbs(500e-6, 1e-18));
  c.sequence = "fig3a";
  CHECK(detail::plan_for(c).segments.size() == 5);
  c.sequence = "fig2_sweep";
  CHECK_THROWS_AS(detail::plan_for(c), ConfigError);
}

TEST_CASE("fig2 sweep has 510 points", "[scenario]") {
  const auto c = parse_scenario({{"name", "sweep"}, {"sequence", "fig2_sweep"}, {"drive", {{"amplitude_factor", 0.75}}}});
  const auto out = run_simulate(c, quiet());
  CHECK(out.summary.at("points") == 510);
  const auto t = table_of(file(out, "sweep_sweep.csv"));
  CHECK(t.rows() == 510);
  CHECK_THAT(t.columns[0].front(), WithinAbs(100e-6, 1e-15));
  CHECK_THAT(t.columns[0].back(), WithinAbs(2899.5e-6, 1e-12));
  CHECK(out.summary.contains("peaks"));
}

TEST_CASE("aht three-spin references", "[scenario]") {
  const auto c = parse_scenario({{"name", "three"},
                                 {"system", {{"preset", "three_spin"}}},
                                 {"drive", {{"amplitude_factor", 0.5}}},
                                 {"aht", {{"scenario", "three_spin"}, {"samples", 128}}}});
  const auto out = run_aht(c, quiet());
  for (const auto& r : out.summary.at("reference")) {
    CHECK_THAT(r.at("computed_hz").get<double>(), WithinRel(r.at("expected_hz").get<double>(), 1e-6));
  }
  CHECK(out.summary.at("second_frame_residual_max_hz").get<double>() < 1e-3 * 5500.0);
  CHECK(file(out, "three_h0.csv").find("\nlabel,coefficient_hz\n") != std::string::npos);
}

TEST_CASE("aht without drive", "[scenario]") {
  const auto c = parse_scenario({{"system", {{"preset", "three_spin"}}}, {"aht", {{"samples", 64}}}});
  const auto out = run_aht(c, quiet());
  const auto& h0 = out.summary.at("h0");
  REQUIRE(h0.size() == 2);
  for (const auto& term : h0) {
    CHECK((term.at("label") == "IZZ" || term.at("label") == "ZIZ"));
    CHECK_THAT(term.at("coefficient_hz").get<double>(), WithinRel(2750.0, 1e-9));
  }
}

TEST_CASE("aht pair Bessel sweep", "[scenario]") {
  const auto c = parse_scenario({{"name", "bessel"}, {"aht", {{"scenario", "pair_bessel"}, {"steps", 8}, {"samples", 128}}}});
  RunContext ctx = quiet();
  ctx.threads = 2;
  const auto out = run_aht(c, ctx);
  const auto& fit = out.summary.at("fit");
  CHECK_THAT(fit.at("a").get<double>(), WithinRel(4.0 / 3.0, 1e-6));
  CHECK_THAT(fit.at("c_over_3wd_8").get<double>(), WithinRel(1.0, 1e-6));
  CHECK(out.summary.at("points") == 9);
  CHECK(table_of(file(out, "bessel_bessel.csv")).rows() == 9);
}

TEST_CASE("scan", "[scenario]") {
  const Json base = {{"name", "scan"},
                     {"system", {{"preset", "four_spin"}}},
                     {"timing", {{"duration_us", 150.0}}},
                     {"aht", {{"samples", 64}}},
                     {"scan", {{"amplitude_factors", {0.0, 0.75}}}}};
  const auto c = parse_scenario(base);
  RunContext one = quiet();
  RunContext two = quiet();
  two.threads = 2;
  const auto a = run_scan(c, one);
  const auto b = run_scan(c, two);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) CHECK(a.files[k].second == b.files[k].second);
  const auto t = table_of(file(a, "scan_scan.csv"));
  CHECK(t.header == std::vector<std::string>{"amplitude_hz", "amplitude_over_strong", "decay_time_s",
                                             "decay_fit_residual", "residual_coupling_max_hz",
                                             "residual_coupling_rss_hz"});
  REQUIRE(t.rows() == 2);
  CHECK(t.columns[1][1] == 0.75);

  // zero amplitude reproduces the free-evolution baseline
  auto free = c;
  free.sequence = "fig4_free";
  free.observables = {"sigma_x_sum"};
  const auto plan = detail::plan_for(free);
  SequenceOptions so;
  so.observables = detail::build_observables(plan.observables, free.system.build(1));
  const auto traj =
      run_sequence(free.system.build(1), plan.segments, std::nullopt, DensityState::thermal_deviation(4), so);
  const double baseline = envelope_decay(traj.times, traj.values.front()).t2_eff;
  CHECK_THAT(t.columns[2][0], WithinRel(baseline, 1e-6));

  auto empty = c;
  empty.scan_amplitudes.clear();
  CHECK_THROWS_AS(run_scan(empty, one), ConfigError);
}

TEST_CASE("runs are deterministic", "[scenario]") {
  const Json j = {{"name", "det"},
                  {"seed", 3},
                  {"system", {{"preset", "four_spin"}, {"disorder", {{"spread", 0.4}, {"realizations", 3}}}}},
                  {"drive", {{"amplitude_factor", 0.75}}},
                  {"sequence", "fig4_modulated"},
                  {"timing", {{"duration_us", 60.0}}}};
  const auto c = parse_scenario(j);
  RunContext many = quiet();
  many.threads = 3;
  const auto a = run_simulate(c, quiet());
  const auto b = run_simulate(c, many);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) CHECK(a.files[k] == b.files[k]);
  const auto other = run_simulate(parse_scenario(j, 4), quiet());
  CHECK(file(other, "det_trajectory.csv") != file(a, "det_trajectory.csv"));
}

TEST_CASE("CSV round trip", "[scenario]") {
  Table t;
  t.add("time_s", {0.0, 1e-6, 2e-6});
  t.add("value", {1.0 / 3.0, -2.5e-17, 12345.678});
  const Json config = {{"name", "x"}, {"note", "a,b"}};
  const std::string csv = to_csv(t, config);
  CHECK(csv.rfind("#", 0) == 0);
  const auto back = table_of(csv);
  CHECK(back.header == t.header);
  CHECK(back.columns == t.columns);
  CHECK_THROWS_AS(table_of("a,b\n1,2\n3\n"), DomainError);
}

TEST_CASE("spectrum from a CSV file", "[scenario]") {
  const auto fid = run_simulate(parse_scenario({{"name", "fidcsv"}}), quiet());
  const auto dir = std::filesystem::temp_directory_path() / "pairdec_test_spectrum";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "fid.csv").string();
  write_text(path, file(fid, "fidcsv_trajectory.csv"));
  const auto c = parse_scenario({{"name", "spec"}, {"spectrum", {{"column", "sigma_x_sum"}}}});
  const auto out = run_spectrum(c, path);
  CHECK(out.summary.at("column") == "sigma_x_sum");
  CHECK_THAT(out.summary.at("splitting_hz").get<double>(),
             WithinAbs(44400.0, out.summary.at("bin_width_hz").get<double>()));
  CHECK_THAT(out.summary.at("parseval_ratio").get<double>(), WithinAbs(1.0, 1e-8));
  const Json doc = Json::parse(file(out, "spec_spectrum.json"));
  CHECK(doc.at("metadata").at("config").at("spectrum").at("input") == path);

  const auto missing = parse_scenario({{"spectrum", {{"column", "nope"}}}});
  CHECK_THROWS_AS(run_spectrum(missing, path), ConfigError);
  CHECK_THROWS_AS(run_spectrum(parse_scenario(Json::object()), ""), ConfigError);
  std::filesystem::remove_all(dir);
}
