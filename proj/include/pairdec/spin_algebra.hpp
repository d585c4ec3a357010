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

// Pauli-operator algebra on n spin-1/2 Hilbert spaces.
//
// Tensor ordering: site 0 is the leftmost Kronecker factor, i.e. the most
// significant bit of a basis-state index. |0> is spin up (sigma_z = +1).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pairdec {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;

inline constexpr int kDefaultMaxSpins = 12;
inline constexpr Complex kI{0.0, 1.0};

/// Invalid argument: bad dimensions, indices, or physical parameters.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-finite values, lost unitarity, failed convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Axis { X, Y, Z };

inline char axis_name(Axis a) {
  switch (a) {
    case Axis::X: return 'X';
    case Axis::Y: return 'Y';
    case Axis::Z: return 'Z';
  }
  return '?';
}

/// Number of spins n for an operator of dimension 2^n. Throws unless the
/// operator is square with power-of-two size.
inline int spin_count(const Operator& a) {
  if (a.rows() != a.cols()) throw DomainError("operator is not square");
  const auto dim = static_cast<std::uint64_t>(a.rows());
  if (dim == 0 || !std::has_single_bit(dim)) {
    throw DomainError("operator dimension " + std::to_string(dim) + " is not a power of two");
  }
  return std::countr_zero(dim);
}

inline void check_spin_budget(int n, int max_spins = kDefaultMaxSpins) {
  if (n < 1) throw DomainError("spin count must be positive");
  if (n > max_spins) {
    throw DomainError("spin count " + std::to_string(n) + " exceeds the dense-matrix budget of " +
                      std::to_string(max_spins));
  }
}

inline Operator identity(int n, int max_spins = kDefaultMaxSpins) {
  check_spin_budget(n, max_spins);
  return Operator::Identity(Eigen::Index{1} << n, Eigen::Index{1} << n);
}

namespace detail {

inline int site_shift(int site, int n) { return n - 1 - site; }

// Sparse action of a single-site Pauli: column c maps to row c ^ flip with
// the returned amplitude.
inline Complex single_site_amplitude(Axis axis, std::uint64_t bit) {
  switch (axis) {
    case Axis::X: return 1.0;
    case Axis::Y: return bit ? -kI : kI;  // Y|0> = i|1>, Y|1> = -i|0>
    case Axis::Z: return bit ? -1.0 : 1.0;
  }
  return 0.0;
}

}  // namespace detail

/// I (x) ... (x) sigma_axis (x) ... (x) I with the Pauli matrix at `site`.
inline Operator pauli(Axis axis, int site, int n, int max_spins = kDefaultMaxSpins) {
  check_spin_budget(n, max_spins);
  if (site < 0 || site >= n) {
    throw DomainError("site " + std::to_string(site) + " out of range for " + std::to_string(n) +
                      " spins");
  }
  const auto dim = std::uint64_t{1} << n;
  const auto mask = std::uint64_t{1} << detail::site_shift(site, n);
  Operator out = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t c = 0; c < dim; ++c) {
    const std::uint64_t bit = (c & mask) ? 1 : 0;
    const std::uint64_t r = axis == Axis::Z ? c : (c ^ mask);
    out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
        detail::single_site_amplitude(axis, bit);
  }
  return out;
}

/// Collective operator sum_i sigma_axis^i over all n spins.
inline Operator collective(Axis axis, int n) {
  Operator out = Operator::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (int i = 0; i < n; ++i) out += pauli(axis, i, n);
  return out;
}

/// Sum of sigma_axis over the listed sites only.
inline Operator collective(Axis axis, const std::vector<int>& sites, int n) {
  Operator out = Operator::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (int s : sites) out += pauli(axis, s, n);
  return out;
}

inline void check_same_dim(const Operator& a, const Operator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError("operator dimension mismatch (" + std::to_string(a.rows()) + " vs " +
                      std::to_string(b.rows()) + ")");
  }
}

inline Operator commutator(const Operator& a, const Operator& b) {
  check_same_dim(a, b);
  return a * b - b * a;
}

inline double max_abs(const Operator& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline double hermiticity_error(const Operator& a) { return max_abs(a - a.adjoint()); }

/// max|A - A^dagger| <= rel_tol * max|A| (zero operators are Hermitian).
inline bool is_hermitian(const Operator& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs(a);
  return hermiticity_error(a) <= rel_tol * std::max(scale, 1e-300);
}

/// ||U^dagger U - I||_max
inline double unitarity_error(const Operator& u) {
  return max_abs(u.adjoint() * u - Operator::Identity(u.rows(), u.cols()));
}

/// Hilbert-Schmidt inner product Tr(A^dagger B).
inline Complex hs_inner(const Operator& a, const Operator& b) {
  check_same_dim(a, b);
  return (a.adjoint() * b).trace();
}

enum class PauliLabel : std::uint8_t { I, X, Y, Z };

/// A tensor product of single-site Pauli factors with a complex coefficient.
struct PauliString {
  std::vector<PauliLabel> factors;
  Complex coefficient{1.0, 0.0};

  PauliString() = default;
  explicit PauliString(std::vector<PauliLabel> f, Complex c = 1.0)
      : factors(std::move(f)), coefficient(c) {}

  /// Parses labels like "XIZ" (site 0 first). Case-insensitive.
  static PauliString parse(std::string_view label, Complex c = 1.0) {
    std::vector<PauliLabel> f;
    f.reserve(label.size());
    for (char ch : label) {
      switch (ch) {
        case 'I': case 'i': f.push_back(PauliLabel::I); break;
        case 'X': case 'x': f.push_back(PauliLabel::X); break;
        case 'Y': case 'y': f.push_back(PauliLabel::Y); break;
        case 'Z': case 'z': f.push_back(PauliLabel::Z); break;
        default: throw DomainError("bad Pauli label '" + std::string(label) + "'");
      }
    }
    if (f.empty()) throw DomainError("empty Pauli label");
    return PauliString(std::move(f), c);
  }

  /// Single-site string sigma_axis^site on n spins.
  static PauliString single(Axis axis, int site, int n, Complex c = 1.0) {
    std::vector<PauliLabel> f(static_cast<std::size_t>(n), PauliLabel::I);
    f.at(static_cast<std::size_t>(site)) = static_cast<PauliLabel>(static_cast<int>(axis) + 1);
    return PauliString(std::move(f), c);
  }

  /// Two-site string sigma_a^i sigma_b^j on n spins.
  static PauliString pair(Axis a, int i, Axis b, int j, int n, Complex c = 1.0) {
    if (i == j) throw DomainError("two-site Pauli string needs distinct sites");
    std::vector<PauliLabel> f(static_cast<std::size_t>(n), PauliLabel::I);
    f.at(static_cast<std::size_t>(i)) = static_cast<PauliLabel>(static_cast<int>(a) + 1);
    f.at(static_cast<std::size_t>(j)) = static_cast<PauliLabel>(static_cast<int>(b) + 1);
    return PauliString(std::move(f), c);
  }

  int spins() const { return static_cast<int>(factors.size()); }

  int weight() const {
    return static_cast<int>(std::count_if(factors.begin(), factors.end(),
                                          [](PauliLabel l) { return l != PauliLabel::I; }));
  }

  std::string label() const {
    static constexpr char kNames[] = {'I', 'X', 'Y', 'Z'};
    std::string s;
    s.reserve(factors.size());
    for (auto l : factors) s.push_back(kNames[static_cast<int>(l)]);
    return s;
  }

  // Binary symplectic form: P = i^{|x&z|} X^x Z^z.
  std::uint64_t x_mask() const {
    std::uint64_t m = 0;
    const int n = spins();
    for (int s = 0; s < n; ++s) {
      auto l = factors[static_cast<std::size_t>(s)];
      if (l == PauliLabel::X || l == PauliLabel::Y) m |= std::uint64_t{1} << detail::site_shift(s, n);
    }
    return m;
  }
  std::uint64_t z_mask() const {
    std::uint64_t m = 0;
    const int n = spins();
    for (int s = 0; s < n; ++s) {
      auto l = factors[static_cast<std::size_t>(s)];
      if (l == PauliLabel::Z || l == PauliLabel::Y) m |= std::uint64_t{1} << detail::site_shift(s, n);
    }
    return m;
  }

  /// Dense matrix of coefficient * P.
  Operator to_operator(int max_spins = kDefaultMaxSpins) const {
    const int n = spins();
    check_spin_budget(n, max_spins);
    const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << n);
    Operator out = Operator::Zero(dim, dim);
    accumulate_into(out);
    return out;
  }

  /// out += coefficient * P, touching only the 2^n nonzero entries.
  void accumulate_into(Operator& out) const {
    const int n = spins();
    const auto dim = std::uint64_t{1} << n;
    if (static_cast<std::uint64_t>(out.rows()) != dim) throw DomainError("Pauli string / operator size mismatch");
    const auto x = x_mask();
    const auto z = z_mask();
    Complex phase = coefficient;
    for (int k = std::popcount(x & z) % 4; k > 0; --k) phase *= kI;
    for (std::uint64_t c = 0; c < dim; ++c) {
      const double sign = (std::popcount(c & z) % 2) ? -1.0 : 1.0;
      out(static_cast<Eigen::Index>(c ^ x), static_cast<Eigen::Index>(c)) += sign * phase;
    }
  }
};

namespace detail {

// In-place unnormalized Walsh-Hadamard transform: v_z <- sum_c (-1)^{c.z} v_c.
inline void walsh_hadamard(std::vector<Complex>& v) {
  const std::size_t n = v.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const Complex a = v[j];
        const Complex b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

inline PauliString from_masks(std::uint64_t x, std::uint64_t z, int n, Complex c) {
  std::vector<PauliLabel> f(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const auto bit = std::uint64_t{1} << site_shift(s, n);
    const bool hx = x & bit;
    const bool hz = z & bit;
    f[static_cast<std::size_t>(s)] = hx ? (hz ? PauliLabel::Y : PauliLabel::X)
                                        : (hz ? PauliLabel::Z : PauliLabel::I);
  }
  return PauliString(std::move(f), c);
}

}  // namespace detail

/// Pauli-basis coefficients c_P = Tr(P^dagger A) / 2^n, omitting |c_P| below
/// `cutoff`. Results are sorted by label. Cost O(n 4^n) via Walsh-Hadamard.
inline std::vector<PauliString> pauli_decompose(const Operator& a, double cutoff = 1e-12) {
  const int n = spin_count(a);
  check_spin_budget(n);
  const auto dim = std::uint64_t{1} << n;
  const double norm = static_cast<double>(dim);
  std::vector<PauliString> out;
  std::vector<Complex> v(dim);
  for (std::uint64_t x = 0; x < dim; ++x) {
    for (std::uint64_t c = 0; c < dim; ++c) {
      v[c] = a(static_cast<Eigen::Index>(c ^ x), static_cast<Eigen::Index>(c));
    }
    detail::walsh_hadamard(v);
    for (std::uint64_t z = 0; z < dim; ++z) {
      Complex coeff = v[z] / norm;
      // conj(i^k) = (-i)^k for the Y factors
      for (int k = std::popcount(x & z) % 4; k > 0; --k) coeff *= -kI;
      if (std::abs(coeff) > cutoff) out.push_back(detail::from_masks(x, z, n, coeff));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const PauliString& l, const PauliString& r) { return l.label() < r.label(); });
  return out;
}

/// Sum of coefficient * P over the given strings (all on n spins).
inline Operator reconstruct(const std::vector<PauliString>& terms, int n) {
  check_spin_budget(n);
  const auto dim = Eigen::Index{1} << n;
  Operator out = Operator::Zero(dim, dim);
  for (const auto& t : terms) {
    if (t.spins() != n) throw DomainError("Pauli string spin count mismatch");
    t.accumulate_into(out);
  }
  return out;
}

/// Coefficient of the string `label` in a decomposition (0 when absent).
inline Complex coefficient_of(const std::vector<PauliString>& terms, std::string_view label) {
  for (const auto& t : terms) {
    if (t.label() == label) return t.coefficient;
  }
  return 0.0;
}

/// Cached eigendecomposition H = V diag(w) V^dagger of a Hermitian operator,
/// giving exp(-i t H) for any t at the cost of one matrix product.
class HermitianExponential {
 public:
  explicit HermitianExponential(const Operator& h, bool check = true) {
    if (h.rows() != h.cols()) throw DomainError("expm_hermitian: operator is not square");
    if (check && !is_hermitian(h, 1e-10)) {
      throw DomainError("expm_hermitian: operator is not Hermitian (max|H - H^dagger| = " +
                        std::to_string(hermiticity_error(h)) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
    vectors_ = es.eigenvectors();
    values_ = es.eigenvalues();
  }

  /// exp(-i t H)
  Operator operator()(double t) const {
    Eigen::VectorXcd phases(values_.size());
    for (Eigen::Index k = 0; k < values_.size(); ++k) phases(k) = std::exp(-kI * (values_(k) * t));
    return vectors_ * phases.asDiagonal() * vectors_.adjoint();
  }

  const Eigen::VectorXd& eigenvalues() const { return values_; }
  const Operator& eigenvectors() const { return vectors_; }

 private:
  Operator vectors_;
  Eigen::VectorXd values_;
};

/// exp(-i * scale * H) for Hermitian H, via eigendecomposition.
inline Operator expm_hermitian(const Operator& h, double scale) {
  return HermitianExponential(h)(scale);
}

}  // namespace pairdec
