#pragma once

#include <cmath>
#include <algorithm>
#include <set>
#include <vector>

#include "bosegas/random.hpp"

namespace bosegas {

/// Exhaustive check that sigma -> (sigma^int, sigma^ext) over the subsets
/// Z1 of Y and Z2 of X \ Y reaches every permutation of X exactly once.
struct PermutationSplitReport {
  int n = 0;
  unsigned y_mask = 0;
  long produced = 0;     // number of (Z1, Z2, sigma^int, sigma^ext) tuples
  long distinct = 0;     // distinct induced permutations
  long expected = 0;     // #S(X) = n!
  bool exact() const { return produced == expected && distinct == expected; }
};

namespace detail {

inline void bijections(const std::vector<int>& from, std::vector<int> to, std::vector<std::vector<int>>& out) {
  if (from.size() != to.size()) return;
  std::sort(to.begin(), to.end());
  do out.push_back(to);
  while (std::next_permutation(to.begin(), to.end()));
}

inline std::vector<int> members(unsigned mask, int n) {
  std::vector<int> v;
  for (int i = 0; i < n; ++i)
    if (mask >> i & 1u) v.push_back(i);
  return v;
}

}  // namespace detail

inline PermutationSplitReport permutation_split_check(int n, unsigned y_mask) {
  if (n < 0 || n > 8) throw InputError("permutation check supports #X <= 8");
  const unsigned all = (1u << n) - 1u;
  y_mask &= all;
  PermutationSplitReport rep{n, y_mask, 0, 0, 1};
  for (int i = 2; i <= n; ++i) rep.expected *= i;
  const unsigned rest = all & ~y_mask;
  const auto Y = detail::members(y_mask, n), R = detail::members(rest, n);
  std::set<std::vector<int>> seen;
  for (unsigned z1 = y_mask;; z1 = (z1 - 1) & y_mask) {
    for (unsigned z2 = rest;; z2 = (z2 - 1) & rest) {
      // sigma^int : Y -> Z2 u (Y \ Z1), sigma^ext : X \ Y -> Z1 u X \ (Z2 u Y)
      const auto int_range = detail::members(z2 | (y_mask & ~z1), n);
      const auto ext_range = detail::members(z1 | (all & ~(z2 | y_mask)), n);
      std::vector<std::vector<int>> ints, exts;
      detail::bijections(Y, int_range, ints);
      detail::bijections(R, ext_range, exts);
      for (const auto& a : ints)
        for (const auto& b : exts) {
          std::vector<int> sigma(n);
          for (std::size_t i = 0; i < Y.size(); ++i) sigma[Y[i]] = a[i];
          for (std::size_t i = 0; i < R.size(); ++i) sigma[R[i]] = b[i];
          ++rep.produced;
          seen.insert(sigma);
        }
      if (z2 == 0) break;
    }
    if (z1 == 0) break;
  }
  rep.distinct = static_cast<long>(seen.size());
  return rep;
}

/// Monte Carlo check of the subset-splitting identity for Poisson(|Δ|) counts:
/// E[2^N] = e^{|Δ|} (f = 1) and E[N 2^{N-1}] = |Δ| e^{|Δ|} (f = #zeta).
struct SubsetSplitReport {
  double volume = 0.0;
  long draws = 0;
  double ones = 0.0, ones_se = 0.0, ones_exact = 0.0;
  double sizes = 0.0, sizes_se = 0.0, sizes_exact = 0.0;
  bool within(double k) const {
    return std::abs(ones - ones_exact) <= k * ones_se && std::abs(sizes - sizes_exact) <= k * sizes_se;
  }
};

inline SubsetSplitReport subset_split_check(double volume, long draws, RandomStream& rng) {
  if (!(volume > 0.0) || draws < 2) throw InputError("subset check needs a positive volume and >= 2 draws");
  SubsetSplitReport rep;
  rep.volume = volume;
  rep.draws = draws;
  double s1 = 0, s11 = 0, s2 = 0, s22 = 0;
  for (long i = 0; i < draws; ++i) {
    const auto N = static_cast<double>(rng.poisson(volume));
    const double a = std::exp2(N), b = N * std::exp2(N - 1.0);
    s1 += a;
    s11 += a * a;
    s2 += b;
    s22 += b * b;
  }
  const double n = static_cast<double>(draws);
  rep.ones = s1 / n;
  rep.ones_se = std::sqrt(std::max(0.0, (s11 / n - rep.ones * rep.ones) / (n - 1)));
  rep.sizes = s2 / n;
  rep.sizes_se = std::sqrt(std::max(0.0, (s22 / n - rep.sizes * rep.sizes) / (n - 1)));
  rep.ones_exact = std::exp(volume);
  rep.sizes_exact = volume * std::exp(volume);
  return rep;
}

}  // namespace bosegas
