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

// Spin systems made of strongly coupled pairs with weak inter-pair links.
// All couplings are angular frequencies (rad/s).

#pragma once

#include "pairdec/spin_algebra.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pairdec {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double hz_to_rad(double hz) { return kTwoPi * hz; }
inline double rad_to_hz(double rad) { return rad / kTwoPi; }

using SpinPair = std::array<int, 2>;

class SpinSystem {
 public:
  SpinSystem() = default;

  /// Builds and validates a system from a full coupling matrix. Spins not
  /// named in `pairs` are spectators.
  SpinSystem(Eigen::MatrixXd couplings, std::vector<SpinPair> pairs, double larmor = 0.0)
      : couplings_(std::move(couplings)), pairs_(std::move(pairs)), larmor_(larmor) {
    validate();
    std::vector<bool> paired(static_cast<std::size_t>(spin_count()), false);
    for (const auto& p : pairs_) {
      paired[static_cast<std::size_t>(p[0])] = true;
      paired[static_cast<std::size_t>(p[1])] = true;
    }
    for (int i = 0; i < spin_count(); ++i) {
      if (!paired[static_cast<std::size_t>(i)]) spectators_.push_back(i);
    }
  }

  int spin_count() const { return static_cast<int>(couplings_.rows()); }
  const Eigen::MatrixXd& couplings() const { return couplings_; }
  double coupling(int i, int j) const { return couplings_(i, j); }
  const std::vector<SpinPair>& pairs() const { return pairs_; }
  const std::vector<int>& spectators() const { return spectators_; }
  double larmor() const { return larmor_; }

  /// Index of the pair containing spin i, or -1 for spectators.
  int pair_of(int i) const {
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (pairs_[k][0] == i || pairs_[k][1] == i) return static_cast<int>(k);
    }
    return -1;
  }

  bool same_pair(int i, int j) const {
    const int p = pair_of(i);
    return p >= 0 && p == pair_of(j) && i != j;
  }

  void validate() const {
    const auto n = couplings_.rows();
    if (n != couplings_.cols()) throw DomainError("coupling matrix is not square");
    check_spin_budget(static_cast<int>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (couplings_(i, i) != 0.0) throw DomainError("self-coupling must be zero");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!std::isfinite(couplings_(i, j))) throw DomainError("non-finite coupling");
        if (couplings_(i, j) != couplings_(j, i)) throw DomainError("coupling matrix is not symmetric");
      }
    }
    std::set<int> seen;
    for (const auto& p : pairs_) {
      for (int s : p) {
        if (s < 0 || s >= n) throw DomainError("pair index out of range");
        if (!seen.insert(s).second) throw DomainError("spin assigned to more than one pair");
      }
    }
  }

  /// Every intra-pair coupling magnitude >= every inter-pair magnitude.
  bool pair_dominated() const {
    double weakest_strong = std::numeric_limits<double>::infinity();
    double strongest_weak = 0.0;
    for (int i = 0; i < spin_count(); ++i) {
      for (int j = i + 1; j < spin_count(); ++j) {
        const double c = std::abs(couplings_(i, j));
        if (same_pair(i, j)) {
          weakest_strong = std::min(weakest_strong, c);
        } else {
          strongest_weak = std::max(strongest_weak, c);
        }
      }
    }
    return weakest_strong >= strongest_weak;
  }

  void validate_pair_dominated() const {
    if (!pair_dominated()) throw DomainError("system is flagged pair-dominated but an inter-pair coupling exceeds an intra-pair one");
  }

  /// True when some spectator couples differently to the two spins of a pair.
  bool spectator_asymmetric(double rel_tol = 1e-12) const {
    for (int s : spectators_) {
      for (const auto& p : pairs_) {
        const double a = couplings_(s, p[0]);
        const double b = couplings_(s, p[1]);
        if (std::abs(a - b) > rel_tol * std::max(std::abs(a), std::abs(b))) return true;
      }
    }
    return false;
  }

 private:
  Eigen::MatrixXd couplings_;
  std::vector<SpinPair> pairs_;
  std::vector<int> spectators_;
  double larmor_ = 0.0;
};

enum class WeakPattern { UniformAllToAll, NearestNeighborPairs, ExplicitTable };

/// Inter-pair link for the explicit-table pattern (rad/s).
struct WeakLink {
  int spin_a = 0;
  int spin_b = 0;
  double coupling = 0.0;
};

struct Disorder {
  double spread = 0.0;  // fractional, in [0, 1)
  std::uint64_t seed = 0;
};

struct TopologySpec {
  int pair_count = 1;
  double strong_coupling = 0.0;
  double weak_coupling = 0.0;
  WeakPattern weak_pattern = WeakPattern::UniformAllToAll;
  std::vector<WeakLink> weak_table;
  std::optional<Disorder> disorder;
  double larmor = 0.0;

  void validate() const {
    if (pair_count < 1) throw DomainError("pair_count must be at least 1");
    check_spin_budget(2 * pair_count);
    if (!(strong_coupling > 0.0)) throw DomainError("strong coupling must be positive");
    if (!(weak_coupling >= 0.0)) throw DomainError("weak coupling must be non-negative");
    if (disorder && !(disorder->spread >= 0.0 && disorder->spread < 1.0)) {
      throw DomainError("disorder spread must lie in [0, 1)");
    }
    if (weak_pattern == WeakPattern::ExplicitTable) {
      const int n = 2 * pair_count;
      std::set<std::pair<int, int>> seen;
      for (const auto& l : weak_table) {
        if (l.spin_a < 0 || l.spin_b < 0 || l.spin_a >= n || l.spin_b >= n || l.spin_a == l.spin_b) {
          throw DomainError("malformed weak-link table: bad spin index");
        }
        if (l.spin_a / 2 == l.spin_b / 2) throw DomainError("malformed weak-link table: intra-pair link");
        if (!(l.coupling >= 0.0)) throw DomainError("malformed weak-link table: negative coupling");
        auto key = std::minmax(l.spin_a, l.spin_b);
        if (!seen.insert({key.first, key.second}).second) {
          throw DomainError("malformed weak-link table: duplicate link");
        }
      }
    }
  }
};

/// Pairs are spins (0,1), (2,3), ...; weak links follow `weak_pattern`, each
/// scaled by (1 + u), u ~ U(-spread, spread) when disorder is set. Links are
/// visited in (i < j) row-major order so the draw sequence is fixed by seed.
inline SpinSystem build_system(const TopologySpec& spec) {
  spec.validate();
  const int n = 2 * spec.pair_count;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  std::vector<SpinPair> pairs;
  for (int k = 0; k < spec.pair_count; ++k) {
    pairs.push_back({2 * k, 2 * k + 1});
    c(2 * k, 2 * k + 1) = c(2 * k + 1, 2 * k) = spec.strong_coupling;
  }
  switch (spec.weak_pattern) {
    case WeakPattern::UniformAllToAll:
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (i / 2 != j / 2) c(i, j) = c(j, i) = spec.weak_coupling;
        }
      }
      break;
    case WeakPattern::NearestNeighborPairs:
      // open chain of pairs: pair k couples to pair k + 1 through all 4 links
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (j / 2 == i / 2 + 1) c(i, j) = c(j, i) = spec.weak_coupling;
        }
      }
      break;
    case WeakPattern::ExplicitTable:
      for (const auto& l : spec.weak_table) c(l.spin_a, l.spin_b) = c(l.spin_b, l.spin_a) = l.coupling;
      break;
  }
  if (spec.disorder && spec.disorder->spread > 0.0) {
    std::mt19937_64 rng(spec.disorder->seed);
    std::uniform_real_distribution<double> u(-spec.disorder->spread, spec.disorder->spread);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (i / 2 == j / 2) continue;
        const double scale = 1.0 + u(rng);
        c(i, j) *= scale;
        c(j, i) = c(i, j);
      }
    }
  }
  return SpinSystem(std::move(c), std::move(pairs), spec.larmor);
}

inline constexpr double kGypsumStrongHz = 14800.0;
inline constexpr double kGypsumWeakHz = 5500.0;
inline constexpr double kGypsumLarmorHz = 300e6;

/// Water-proton pairs of gypsum with the field along [010]: strong 14.8 kHz,
/// uniform weak 5.5 kHz between all spins on different pairs.
inline TopologySpec gypsum_preset(int pair_count = 3) {
  TopologySpec s;
  s.pair_count = pair_count;
  s.strong_coupling = hz_to_rad(kGypsumStrongHz);
  s.weak_coupling = hz_to_rad(kGypsumWeakHz);
  s.weak_pattern = WeakPattern::UniformAllToAll;
  s.larmor = hz_to_rad(kGypsumLarmorHz);
  return s;
}

/// Spins 0 and 1 form the strong pair; spin 2 is a spectator coupled to them
/// with weak13 and weak23.
inline SpinSystem three_spin_preset(double strong, double weak13, double weak23) {
  if (!(strong > 0.0)) throw DomainError("strong coupling must be positive");
  if (!(weak13 >= 0.0 && weak23 >= 0.0)) throw DomainError("weak couplings must be non-negative");
  if (!(weak13 < strong && weak23 < strong)) throw DomainError("weak coupling must be below the strong coupling");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
  c(0, 1) = c(1, 0) = strong;
  c(0, 2) = c(2, 0) = weak13;
  c(1, 2) = c(2, 1) = weak23;
  return SpinSystem(std::move(c), {SpinPair{0, 1}});
}

inline SpinSystem three_spin_preset(double strong, double weak) {
  return three_spin_preset(strong, weak, weak);
}

}  // namespace pairdec
