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

#include "pairdec/spin_algebra.hpp"
#include "test_util.hpp"

#include <catch_amalgamated.hpp>

using namespace pairdec;
using Catch::Matchers::WithinAbs;

TEST_CASE("single-spin Pauli matrices", "[spin_algebra]") {
  Operator x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  CHECK(testutil::max_abs(pauli(Axis::X, 0, 1) - x) == 0.0);
  CHECK(testutil::max_abs(pauli(Axis::Y, 0, 1) - y) == 0.0);
  CHECK(testutil::max_abs(pauli(Axis::Z, 0, 1) - z) == 0.0);
}

TEST_CASE("site 0 is the leftmost Kronecker factor", "[spin_algebra]") {
  const Operator z0 = pauli(Axis::Z, 0, 2);
  CHECK(z0(0, 0).real() == 1.0);
  CHECK(z0(1, 1).real() == 1.0);
  CHECK(z0(2, 2).real() == -1.0);
  CHECK(z0(3, 3).real() == -1.0);
  const Operator x1 = pauli(Axis::X, 1, 2);
  CHECK(x1(0, 1).real() == 1.0);
  CHECK(x1(2, 3).real() == 1.0);
  CHECK(x1(0, 2).real() == 0.0);
}

TEST_CASE("Pauli products and commutators", "[spin_algebra]") {
  for (int n = 1; n <= 3; ++n) {
    for (int s = 0; s < n; ++s) {
      const Operator x = pauli(Axis::X, s, n), y = pauli(Axis::Y, s, n), z = pauli(Axis::Z, s, n);
      const Operator id = identity(n);
      CHECK(testutil::max_abs(x * x - id) < 1e-15);
      CHECK(testutil::max_abs(x * y - kI * z) < 1e-15);
      CHECK(testutil::max_abs(x * y + y * x) < 1e-15);
      CHECK(testutil::max_abs(commutator(y, z) - 2.0 * kI * x) < 1e-15);
    }
  }
  // different sites commute
  CHECK(max_abs(commutator(pauli(Axis::X, 0, 3), pauli(Axis::Y, 2, 3))) == 0.0);
}

TEST_CASE("collective operators", "[spin_algebra]") {
  const Operator s = collective(Axis::Z, 3);
  CHECK_THAT(s(0, 0).real(), WithinAbs(3.0, 0));
  CHECK_THAT(s(7, 7).real(), WithinAbs(-3.0, 0));
  CHECK(max_abs(collective(Axis::X, {0, 2}, 3) - pauli(Axis::X, 0, 3) - pauli(Axis::X, 2, 3)) == 0.0);
}

TEST_CASE("spin budget and argument checks", "[spin_algebra]") {
  CHECK_THROWS_AS(identity(13), DomainError);
  CHECK_NOTHROW(check_spin_budget(14, 14));
  CHECK_THROWS_AS(pauli(Axis::X, 3, 3), DomainError);
  CHECK_THROWS_AS(pauli(Axis::X, -1, 3), DomainError);
  CHECK_THROWS_AS(commutator(identity(1), identity(2)), DomainError);
  CHECK_THROWS_AS(spin_count(Operator::Zero(3, 3)), DomainError);
}

TEST_CASE("Hermiticity and unitarity checks", "[spin_algebra]") {
  std::mt19937_64 rng(1);
  const Operator h = testutil::random_hermitian(2, rng);
  CHECK(is_hermitian(h));
  Operator bad = h;
  bad(0, 1) += 0.1;
  CHECK_FALSE(is_hermitian(bad));
  CHECK(unitarity_error(expm_hermitian(h, 0.7)) < 1e-13);
}

TEST_CASE("PauliString labels and operators", "[spin_algebra]") {
  const auto p = PauliString::parse("XYZ");
  CHECK(p.label() == "XYZ");
  CHECK(p.weight() == 3);
  const Operator expected = pauli(Axis::X, 0, 3) * pauli(Axis::Y, 1, 3) * pauli(Axis::Z, 2, 3);
  CHECK(max_abs(p.to_operator() - expected) < 1e-15);
  CHECK(PauliString::pair(Axis::Y, 0, Axis::Z, 1, 2).label() == "YZ");
  CHECK(PauliString::single(Axis::X, 1, 3).label() == "IXI");
  CHECK_THROWS_AS(PauliString::parse("XQ"), DomainError);
  CHECK_THROWS_AS(PauliString::parse(""), DomainError);
  CHECK_THROWS_AS(PauliString::pair(Axis::X, 1, Axis::Y, 1, 3), DomainError);
}

TEST_CASE("pauli_decompose matches brute-force projections", "[spin_algebra]") {
  std::mt19937_64 rng(11);
  for (int n = 1; n <= 3; ++n) {
    const Operator h = testutil::random_hermitian(n, rng);
    const auto terms = pauli_decompose(h);
    const double dim = static_cast<double>(h.rows());
    // every string, by explicit enumeration
    int count = 0;
    for (int code = 0; code < (1 << (2 * n)); ++code) {
      std::string label;
      for (int s = 0; s < n; ++s) label += "IXYZ"[(code >> (2 * (n - 1 - s))) & 3];
      const Complex direct = hs_inner(PauliString::parse(label).to_operator(), h) / dim;
      CHECK(std::abs(coefficient_of(terms, label) - direct) < 1e-13);
      ++count;
    }
    CHECK(count == (1 << (2 * n)));
    CHECK(max_abs(reconstruct(terms, n) - h) < 1e-13);
    // Hermitian input gives real coefficients
    for (const auto& t : terms) CHECK(std::abs(t.coefficient.imag()) < 1e-13);
  }
}

TEST_CASE("Pauli strings are orthogonal", "[spin_algebra]") {
  const std::vector<std::string> labels{"II", "XI", "IY", "ZZ", "XY", "YX", "ZI"};
  for (const auto& a : labels) {
    for (const auto& b : labels) {
      const Complex v = hs_inner(PauliString::parse(a).to_operator(), PauliString::parse(b).to_operator());
      CHECK(std::abs(v - (a == b ? 4.0 : 0.0)) < 1e-15);
    }
  }
}

TEST_CASE("decomposition cutoff drops small terms", "[spin_algebra]") {
  const Operator h = pauli(Axis::X, 0, 2) + 1e-14 * pauli(Axis::Z, 1, 2);
  CHECK(pauli_decompose(h).size() == 1);
  CHECK(pauli_decompose(h, 0.0).size() == 2);
}

TEST_CASE("Hermitian exponential agrees with a Taylor oracle", "[spin_algebra]") {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 4; ++n) {
    const Operator h = testutil::random_hermitian(n, rng);
    for (double t : {0.0, 0.3, 2.5}) {
      const Operator u = expm_hermitian(h, t);
      CHECK(max_abs(u - testutil::taylor_expm(-kI * t * h)) < 1e-11);
    }
  }
  CHECK_THROWS_AS(HermitianExponential(Operator::Ones(2, 3)), DomainError);
  Operator nh = Operator::Zero(2, 2);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(HermitianExponential(nh), DomainError);
}

TEST_CASE("HermitianExponential is a one-parameter group", "[spin_algebra]") {
  std::mt19937_64 rng(9);
  const HermitianExponential ex(testutil::random_hermitian(3, rng));
  CHECK(max_abs(ex(0.0) - identity(3)) < 1e-13);
  CHECK(max_abs(ex(0.4) * ex(0.6) - ex(1.0)) < 1e-12);
  CHECK(max_abs(ex(0.5).adjoint() - ex(-0.5)) < 1e-12);
}
