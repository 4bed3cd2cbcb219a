#include <gtest/gtest.h>

#include <cmath>

#include "bosegas/interactions.hpp"
#include "bosegas/random.hpp"

using namespace bosegas;

namespace {

PairPotential indicator(double R) {
  PairPotential p;
  p.range = R;
  p.phi = [R](std::span<const double> x) { return norm2(x) <= R * R ? 1.0 : 0.0; };
  return p;
}

PointCloud random_cloud(int d, int n, double lo, double hi, RandomStream& rng) {
  PointCloud xi(d);
  for (int i = 0; i < n; ++i) {
    Point x(d);
    for (auto& c : x) c = rng.uniform(lo, hi);
    xi.push(x);
  }
  return xi;
}

}  // namespace

TEST(PairEnergy, Examples) {
  auto pot = indicator(0.5);
  EXPECT_EQ(pair_energy(PointCloud(1), pot), 0.0);
  EXPECT_EQ(pair_energy(PointCloud(1, {{0.0}, {0.3}}), pot), 1.0);
  EXPECT_EQ(pair_energy(PointCloud(1, {{0.0}, {0.3}, {0.45}}), pot), 3.0);
  auto hc = hard_core_model(1, 0.2);
  EXPECT_EQ(hc(PointCloud(1, {{0.0}, {0.1}, {5.0}})), kInfinity);
  EXPECT_EQ(hc(PointCloud(1, {{0.0}, {0.3}})), 0.0);
}

TEST(DirichletEnergy, HalfOpenWindow) {
  auto model = pair_model("ind", indicator(0.5), {});
  Window w{1, 2.0};
  EXPECT_EQ(dirichlet_energy(PointCloud(1, {{0.0}, {0.3}}), w, model), 1.0);
  EXPECT_EQ(dirichlet_energy(PointCloud(1, {{0.0}, {1.5}}), w, model), kInfinity);
  EXPECT_EQ(dirichlet_energy(PointCloud(1, {{0.0}, {1.0}}), w, model), kInfinity);
  EXPECT_EQ(dirichlet_energy(PointCloud(1, {{-1.0}}), w, model), 0.0);
}

TEST(LocalEnergy, Examples) {
  auto pot = indicator(0.5);
  Box delta = Box::cube(1, 0.0, 1.0);
  EXPECT_EQ(local_energy(PointCloud(1, {{0.0}, {0.3}, {1.2}}), delta, pot), 1.0);
  EXPECT_EQ(local_energy(PointCloud(1, {{3.0}, {3.2}}), delta, pot), 0.0);
  // Cross pair at distance 0.3 across the boundary.
  EXPECT_EQ(local_energy(PointCloud(1, {{0.9}, {1.2}}), delta, pot), 1.0);
}

TEST(LocalEnergy, AdditivityWithExterior) {
  RandomStream rng(21, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 1 + trial % 3;
    auto model = trial % 2 ? bump_model(d, 1.3, 0.6) : pair_model("ind", indicator(0.4), {});
    const auto& pot = *model.pair;
    PointCloud xi = random_cloud(d, 2 + trial % 9, -1.5, 1.5, rng);
    Box delta = Box::cube(d, -0.5, 0.4);
    const PointCloud outside = xi.filter([&](auto x) { return !delta.contains(x); });
    EXPECT_NEAR(pair_energy(xi, pot), local_energy(xi, delta, pot) + pair_energy(outside, pot), 1e-12);
  }
}

TEST(CellCounts, BinningAndPartition) {
  EXPECT_TRUE(cell_counts(PointCloud(1), 1.0).empty());
  auto c = cell_counts(PointCloud(1, {{0.2}, {0.4}, {1.1}}), 1.0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ((c[{0}]), 2);
  EXPECT_EQ((c[{1}]), 1);
  // Upper face belongs to the next cell.
  auto u = cell_counts(PointCloud(1, {{0.5}, {-0.5}}), 1.0);
  EXPECT_EQ((u[{1}]), 1);
  EXPECT_EQ((u[{0}]), 1);
  RandomStream rng(22, 0);
  for (int t = 0; t < 50; ++t) {
    PointCloud xi = random_cloud(2, 30, -3.0, 3.0, rng);
    int total = 0;
    for (auto& [z, n] : cell_counts(xi, 0.7)) total += n;
    EXPECT_EQ(total, 30);
  }
}

TEST(Superstability, EmptyConfigurationMargin) {
  auto m = bump_model(2, 1.0, 0.5);
  auto res = superstability_audit(m, m.constants, PointCloud(2));
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.margin, 0.0);
}

TEST(Superstability, HardCoreCellCapacityByBruteForce) {
  // Random sequential packing never beats the certified per-cell capacity.
  RandomStream rng(23, 0);
  for (int d = 1; d <= 3; ++d) {
    const double a = 0.3;
    for (double r : {a / (2.0 * std::sqrt(double(d))), 0.5, 1.0}) {
      const int cap = hard_core_cell_capacity(d, a, r);
      int best = 0;
      for (int trial = 0; trial < 200; ++trial) {
        PointCloud xi(d);
        for (int attempt = 0; attempt < 400; ++attempt) {
          Point x(d);
          for (auto& c : x) c = rng.uniform(-r / 2.0, r / 2.0);
          bool ok = true;
          for (std::size_t i = 0; i < xi.size() && ok; ++i) ok = distance2(xi[i], x) >= a * a;
          if (ok) xi.push(x);
        }
        best = std::max(best, static_cast<int>(xi.size()));
      }
      EXPECT_LE(best, cap) << "d=" << d << " r=" << r;
    }
  }
}

TEST(Superstability, CertifiedBuiltInsPassOnRandomConfigurations) {
  RandomStream rng(24, 0);
  for (int d = 1; d <= 2; ++d) {
    auto hc = hard_core_model(d, 0.2);
    auto bump = bump_model(d, 0.7, 0.5);
    for (int t = 0; t < 300; ++t) {
      PointCloud xi = random_cloud(d, 1 + t % 25, -0.6, 0.6, rng);
      EXPECT_TRUE(superstability_audit(bump, bump.constants, xi).pass);
      if (std::isfinite(hc(xi))) EXPECT_TRUE(superstability_audit(hc, hc.constants, xi).pass);
    }
    // Dense clusters: all points in one cell.
    for (int n = 1; n <= 40; ++n) {
      PointCloud xi = random_cloud(d, n, 0.0, bump.constants.r * 0.99 - 1e-9, rng);
      EXPECT_TRUE(superstability_audit(bump, bump.constants, xi).pass) << n;
    }
  }
}

TEST(Superstability, BrokenShellModelFailsOnCrowding) {
  PairPotential shell;
  shell.range = 1.0;
  shell.phi = [](std::span<const double> x) {
    const double s = norm2(x);
    return (s >= 0.25 && s <= 1.0) ? -1.0 : 0.0;
  };
  auto broken = pair_model("shell", shell, {1.0, 0.1, 1.0, false});
  // Search over two-cluster configurations at distance 0.75.
  int found = 0;
  for (int k = 1; k <= 20 && !found; ++k) {
    PointCloud xi(1);
    for (int i = 0; i < k; ++i) {
      xi.push(Point{0.01 * i});
      xi.push(Point{0.75 + 0.01 * i});
    }
    if (!superstability_audit(broken, broken.constants, xi).pass) found = k;
  }
  EXPECT_GT(found, 0);
}

TEST(Interactions, StationarityOfBuiltIns) {
  RandomStream rng(25, 0);
  for (int t = 0; t < 100; ++t) {
    PointCloud xi = random_cloud(2, 8, -1.0, 1.0, rng);
    Point v{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    for (const auto& m : {bump_model(2, 1.0, 0.7), hard_core_model(2, 0.1), zero_model()}) {
      const double a = m(xi), b = m(xi.translated(v));
      if (std::isinf(a)) EXPECT_EQ(a, b);
      else EXPECT_NEAR(a, b, 1e-12);
    }
  }
}

TEST(Interactions, RemovingAPointNeverIncreasesNonnegativeEnergy) {
  RandomStream rng(26, 0);
  auto m = bump_model(1, 2.0, 0.5);
  for (int t = 0; t < 200; ++t) {
    PointCloud xi = random_cloud(1, 6, -1.0, 1.0, rng);
    const std::size_t drop = rng.index(xi.size());
    PointCloud less(1);
    for (std::size_t i = 0; i < xi.size(); ++i)
      if (i != drop) less.push(xi[i]);
    EXPECT_GE(m(xi), m(less));
  }
}

TEST(Interactions, PotentialsAreSymmetricAndFiniteRange) {
  RandomStream rng(27, 0);
  for (const auto& m : {bump_model(3, 1.0, 0.7), hard_core_model(3, 0.4)}) {
    const auto& p = *m.pair;
    for (int t = 0; t < 500; ++t) {
      Point x{rng.normal(), rng.normal(), rng.normal()};
      Point mx{-x[0], -x[1], -x[2]};
      EXPECT_EQ(p.phi(x), p.phi(mx));
      if (std::sqrt(norm2(x)) > p.range) EXPECT_EQ(p.phi(x), 0.0);
    }
  }
}

TEST(Interactions, ZeroModelIsFlaggedDegenerate) {
  EXPECT_TRUE(zero_model().constants.degenerate);
  EXPECT_FALSE(bump_model(1, 1.0, 1.0).constants.degenerate);
  EXPECT_EQ(zero_model()(PointCloud(1, {{0.0}, {0.0}})), 0.0);
}
