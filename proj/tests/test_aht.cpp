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

#include "pairdec/aht.hpp"
#include "test_util.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace pairdec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("constant Hamiltonian averages to itself", "[aht]") {
  std::mt19937_64 rng(2);
  const Operator h = testutil::random_hermitian(2, rng);
  const auto r = average_hamiltonian(TimeDependentHamiltonian(h), 0.7, 64);
  CHECK(max_abs(r.h0 - h) < 1e-12);
  CHECK(max_abs(r.h1) < 1e-12);
  CHECK(r.samples == 64);
}

TEST_CASE("first-order term of a sinusoidal modulation", "[aht]") {
  // H(t) = A + sin(w t) B over one period gives h1 = (-i / w) [A, B]
  const double w = 3.0;
  std::mt19937_64 rng(4);
  const Operator a = testutil::random_hermitian(2, rng);
  const Operator b = testutil::random_hermitian(2, rng);
  TimeDependentHamiltonian h(a);
  h.add_drive(DriveTerm{[w](double t) { return std::sin(w * t); }, b});
  const auto r = average_hamiltonian(h, kTwoPi / w, 64);
  CHECK(max_abs(r.h0 - a) < 1e-9);
  const Operator expected = (-kI / w) * commutator(a, b);
  CHECK(max_abs(r.h1 - expected) < 1e-7 * max_abs(expected));
  CHECK(r.error_estimate < 1e-6);
  CHECK(is_hermitian(r.h1));
}

TEST_CASE("quadrature tolerance is enforced", "[aht]") {
  TimeDependentHamiltonian h(pauli(Axis::Z, 0, 1));
  h.add_drive(DriveTerm{[](double t) { return std::cos(40.0 * t); }, pauli(Axis::X, 0, 1)});
  MagnusOptions strict;
  strict.tolerance = 1e-30;
  strict.max_samples = 128;
  CHECK_THROWS_AS(average_hamiltonian(h, 1.0, 64, strict), NumericalError);
  CHECK_THROWS_AS(average_hamiltonian(h, 0.0, 64), DomainError);
  CHECK_THROWS_AS(average_hamiltonian(h, 1.0, 16), DomainError);
}

TEST_CASE("pair interaction frame average for a spectator", "[aht]") {
  const double strong = 1.0e4;
  const double weak = 1.5e3;
  const auto sys = three_spin_preset(strong, weak);
  const DriveSpec drive = matched_drive(strong, 0.4 * strong);
  const auto r = average_hamiltonian(pair_interaction_frame(sys, drive), kTwoPi / drive.modulation, 128);
  CHECK_THAT(coefficient_of(r.h0_terms, "ZIZ").real(), WithinRel(weak / 2.0, 1e-6));
  CHECK_THAT(coefficient_of(r.h0_terms, "IZZ").real(), WithinRel(weak / 2.0, 1e-6));
  CHECK_THAT(coefficient_of(r.h0_terms, "XII").real(), WithinRel(drive.amplitude / 4.0, 1e-6));
  CHECK_THAT(coefficient_of(r.h0_terms, "IXI").real(), WithinRel(drive.amplitude / 4.0, 1e-6));
  for (const auto& t : r.h0_terms) {
    const auto l = t.label();
    if (l == "ZIZ" || l == "IZZ" || l == "XII" || l == "IXI") continue;
    CHECK(std::abs(t.coefficient) < 1e-6 * weak);
  }
}

TEST_CASE("zero drive leaves only the secular spectator coupling", "[aht]") {
  const double strong = 1.0e4;
  const double weak = 2.0e3;
  const auto sys = three_spin_preset(strong, weak);
  DriveSpec off = matched_drive(strong, 0.0);
  const auto r = average_hamiltonian(pair_interaction_frame(sys, off), kTwoPi / off.modulation, 128);
  REQUIRE(r.h0_terms.size() == 2);
  CHECK_THAT(coefficient_of(r.h0_terms, "ZIZ").real(), WithinRel(weak / 2.0, 1e-9));
  CHECK_THAT(coefficient_of(r.h0_terms, "IZZ").real(), WithinRel(weak / 2.0, 1e-9));
}

TEST_CASE("second averaging removes symmetric spectator couplings", "[aht]") {
  const double strong = 1.0e4;
  const double weak = 1.5e3;
  const DriveSpec drive = matched_drive(strong, 0.5 * strong);
  auto residual = [&](const SpinSystem& sys) {
    const auto r = average_hamiltonian(pair_interaction_frame(sys, drive), kTwoPi / drive.modulation, 128);
    const Operator g = drive_part(r.h0_terms, {0, 1}, 3);
    const Operator h2 = second_frame_average(r.h0, g, 2.0 * kTwoPi / drive.amplitude, 128);
    return max_cross_group_coefficient(pauli_decompose(h2), pair_groups(sys));
  };
  CHECK(residual(three_spin_preset(strong, weak)) < 1e-6 * weak);
  CHECK(residual(three_spin_preset(strong, weak, 0.3 * weak)) > 1e-2 * weak);
}

TEST_CASE("drive part and group helpers", "[aht]") {
  const std::vector<PauliString> terms{PauliString::parse("XII", 2.0), PauliString::parse("IYI", 3.0),
                                       PauliString::parse("IIX", 5.0), PauliString::parse("ZII", 7.0),
                                       PauliString::parse("XXI", 11.0)};
  const Operator g = drive_part(terms, {0, 1}, 3);
  CHECK(max_abs(g - 2.0 * pauli(Axis::X, 0, 3) - 3.0 * pauli(Axis::Y, 1, 3)) < 1e-15);
  const std::vector<int> groups{0, 0, 1};
  const std::vector<PauliString> cross{PauliString::parse("XXI", 1.0), PauliString::parse("ZIZ", -4.0),
                                       PauliString::parse("IIX", 9.0)};
  CHECK(max_cross_group_coefficient(cross, groups) == 4.0);
  CHECK(pair_groups(three_spin_preset(2.0, 1.0)) == groups);
}

TEST_CASE("pair average form", "[aht]") {
  const double a = 0.7, b = -0.3;
  const Operator xx = pauli(Axis::X, 0, 2) * pauli(Axis::X, 1, 2);
  const Operator yy = pauli(Axis::Y, 0, 2) * pauli(Axis::Y, 1, 2);
  const Operator zz = pauli(Axis::Z, 0, 2) * pauli(Axis::Z, 1, 2);
  const Operator h = a * (2.0 * xx - yy - zz) + b * (zz - yy) + 0.01 * pauli(Axis::X, 0, 2);
  const auto f = pair_average_form(h, 0, 1);
  CHECK_THAT(f.drive_independent, WithinAbs(a, 1e-14));
  CHECK_THAT(f.bessel_term, WithinAbs(b, 1e-14));
  CHECK_THAT(f.remainder, WithinAbs(0.01, 1e-14));
}

TEST_CASE("drive frame of an isolated pair", "[aht]") {
  const double strong = 1.0e4;
  const auto sys = testutil::isolated_pair(strong);
  SECTION("no drive gives the bare pair coupling") {
    const DriveSpec d = matched_drive(strong, 0.0);
    CHECK_FALSE(drive_frame(sys, d).has_frames());
    const auto r = average_hamiltonian(drive_frame(sys, d), kTwoPi / d.modulation, 64);
    const auto f = pair_average_form(r.h0, 0, 1);
    CHECK_THAT(f.zz, WithinRel(strong / 2.0, 1e-12));
    CHECK_THAT(f.bessel_term, WithinRel(3.0 * strong / 8.0, 1e-12));
  }
  SECTION("drive-independent part is fixed") {
    for (double ratio : {0.3, 1.1}) {
      const DriveSpec d = matched_drive(strong, ratio * strong);
      const auto r = average_hamiltonian(drive_frame(sys, d), kTwoPi / d.modulation, 128);
      const auto f = pair_average_form(r.h0, 0, 1);
      CHECK_THAT(f.xx, WithinRel(-strong / 4.0, 1e-6));
      CHECK_THAT(0.5 * (f.yy + f.zz), WithinRel(strong / 8.0, 1e-6));
      CHECK(f.remainder < 1e-6 * strong);
      // the drive-dependent term follows J0 of the argument 4 w1 / (3 wD)
      CHECK_THAT(f.bessel_term, WithinRel(3.0 * strong / 8.0 * bessel_j0(4.0 / 3.0 * ratio), 1e-6));
    }
  }
}

TEST_CASE("Bessel J0", "[aht]") {
  CHECK(bessel_j0(0.0) == 1.0);
  CHECK_THAT(bessel_j0(1.0), WithinAbs(0.7651976865579666, 1e-15));
  CHECK_THAT(bessel_j0(2.404825557695773), WithinAbs(0.0, 1e-15));
  CHECK_THAT(bessel_j0(5.0), WithinAbs(-0.1775967713143383, 1e-14));
  CHECK(bessel_j0(-1.3) == bessel_j0(1.3));
}

TEST_CASE("Bessel fit recovers synthetic parameters", "[aht]") {
  std::vector<double> r, y;
  for (int k = 0; k <= 30; ++k) {
    r.push_back(0.1 * k);
    y.push_back(-2.5 * bessel_j0(1.7 * r.back()));
  }
  const auto fit = fit_bessel_j0(r, y);
  CHECK_THAT(fit.a, WithinRel(1.7, 1e-9));
  CHECK_THAT(fit.c, WithinRel(-2.5, 1e-9));
  CHECK(fit.max_residual < 1e-9);
  CHECK_THROWS_AS(fit_bessel_j0(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(fit_bessel_j0(std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0, 2.0}), DomainError);
}

TEST_CASE("effective versus exact dynamics", "[aht]") {
  std::mt19937_64 rng(8);
  const Operator h = testutil::random_hermitian(2, rng, true);
  const std::vector<NamedObservable> obs{{"sx", collective(Axis::X, 2)}, {"sz", collective(Axis::Z, 2)}};
  const auto state = DensityState::deviation(collective(Axis::X, 2));
  const auto rep = effective_vs_exact(TimeDependentHamiltonian(h), h, state, 1.0, 0.1, obs, 1e-3);
  CHECK(rep.times.size() == 11);
  for (double d : rep.max_deviation) CHECK(d < 1e-10);

  // a pair under a weak drive: the zeroth-order average tracks the exact motion
  const double strong = 1.0e4;
  const auto sys = testutil::isolated_pair(strong);
  const DriveSpec d = matched_drive(strong, 0.2 * strong);
  const auto framed = pair_interaction_frame(sys, d);
  const double period = kTwoPi / d.modulation;
  const auto avg = average_hamiltonian(framed, period, 128);
  const auto pair_rep =
      effective_vs_exact(framed, avg.h0, DensityState::thermal_deviation(2), 10.0 * period, period, obs, period / 200);
  CHECK(pair_rep.max_deviation[0] < 0.05);
  CHECK(pair_rep.max_deviation[1] < 0.05);

  CHECK_THROWS_AS(effective_vs_exact(TimeDependentHamiltonian(h), h, state, 0.25, 0.1, obs, 1e-3), DomainError);
}
