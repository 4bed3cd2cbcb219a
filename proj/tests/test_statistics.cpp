#include <gtest/gtest.h>

#include <cmath>

#include "bosegas/samplers.hpp"
#include "bosegas/statistics.hpp"

using namespace bosegas;

namespace {

Bridge line(Point a, Point b, double beta, int M) {
  Bridge br(static_cast<int>(a.size()), TimeGrid(beta, M));
  for (int k = 0; k <= M; ++k)
    for (std::size_t i = 0; i < a.size(); ++i) br.node(k)[i] = a[i] + (b[i] - a[i]) * k / M;
  std::copy(b.begin(), b.end(), br.node(M).begin());
  return br;
}

FkConfig cycle_of(const std::vector<Point>& pts, double beta = 1.0, int M = 4) {
  FkConfig g{static_cast<int>(pts.front().size()), beta, {}};
  for (std::size_t i = 0; i < pts.size(); ++i) g.bridges.push_back(line(pts[i], pts[(i + 1) % pts.size()], beta, M));
  return g;
}

FkConfig random_fk(int d, int n, RandomStream& rng, double lo = -0.5, double hi = 1.5) {
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts)
    for (auto& c : p) c = rng.uniform(lo, hi);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  FkConfig g{d, 0.5, {}};
  for (int i = 0; i < n; ++i) g.bridges.push_back(sample_bridge(pts[i], pts[perm[i]], 0.5, 8, rng));
  return g;
}

}  // namespace

TEST(CycleHistogram, Examples) {
  RandomStream rng(1, 0);
  const Loop l = sample_loop(Point{0.2, 0.3}, 3, 1.0, 4, rng);
  const FkConfig g = cut_rl_to_fk(RlConfig{2, 1.0, {l}});
  const auto c = cycle_counts(g);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[3], 1);
  EXPECT_EQ(c[1] + c[2], 0);
  const Histogram h = cycle_length_histogram(g);
  EXPECT_EQ(h.counts, (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(h.edges.front(), 0.5);
  for (int t = 0; t < 100; ++t) {
    const FkConfig r = random_fk(1, 1 + t % 7, rng);
    const auto cc = cycle_counts(r);
    long s = 0;
    for (std::size_t j = 0; j < cc.size(); ++j) s += static_cast<long>(j) * cc[j];
    EXPECT_EQ(s, static_cast<long>(r.size()));
  }
  EXPECT_EQ(cycle_length_histogram(FkConfig{1, 1.0, {}}).total(), 0.0);
}

TEST(Functionals, EmptyAndSelfBridge) {
  const FkConfig empty{2, 1.0, {}};
  EXPECT_EQ(f1(empty), 0.0);
  EXPECT_EQ(f2(empty), 0.0);
  EXPECT_EQ(f3(empty), 0.0);
  EXPECT_EQ(f4(empty), 0.0);
  const FkConfig self = cycle_of({{0.5, 0.5}});
  EXPECT_EQ(f2(self), 1.0);
  EXPECT_EQ(f4(self), 1.0);
  EXPECT_EQ(f1(self), 0.0);
}

TEST(Functionals, HandCountedValues) {
  // 2-cycle inside the box, 3-cycle half outside.
  FkConfig g = merge(cycle_of({{0.2}, {0.5}}), cycle_of({{0.9}, {1.4}, {2.0}}));
  EXPECT_NEAR(f1(g), 0.3 + 0.3 + 0.5, 1e-15);
  EXPECT_EQ(f2(g), 1.0);
  // bridges meeting [0,1]: both of the 2-cycle, 0.9->1.4 and 2.0->0.9: k = 4
  EXPECT_EQ(f3(g), 4.0);
  EXPECT_EQ(f4(g), 2.0);
  FkConfig odd = merge(g, cycle_of({{0.7}}));
  EXPECT_EQ(f3(odd), 0.0);
  EXPECT_EQ(f4(odd), 3.0);
}

TEST(Functionals, TamenessEnvelopes) {
  RandomStream rng(2, 0);
  const double delta = 0.2;
  for (int t = 0; t < 40; ++t) {
    const FkConfig g = random_fk(2, 1 + t % 5, rng);
    const double starts = static_cast<double>(proj_in(g, unit_box(2)).size());
    EXPECT_LE(f2(g), starts);
    EXPECT_LE(f4(g), starts);
    for (const auto& b : g.bridges) {
      const VolumeEstimate v = sausage_volume(b, {delta, SausageMethod::voxel, 0.0});
      // c_1 delta |sigma(beta) - sigma(0)| <= |B_delta(sigma)|, c_1 = 2
      EXPECT_LE(unit_ball_volume(1) * delta * std::sqrt(distance2(b.start(), b.end())), v.value + v.error);
    }
  }
}

TEST(Functionals, F4ChangesByAtMostTheRemovedBridges) {
  RandomStream rng(3, 0);
  for (int t = 0; t < 200; ++t) {
    const FkConfig g = random_fk(1, 2 + t % 6, rng, -0.2, 1.2);
    auto cycs = cycle_decomposition(g);
    const auto& drop = cycs[rng.index(cycs.size())];
    FkConfig h{g.dim, g.beta, {}};
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::find(drop.begin(), drop.end(), i) == drop.end()) h.bridges.push_back(g.bridges[i]);
    EXPECT_LE(std::abs(f4(g) - f4(h)), static_cast<double>(drop.size()));
  }
}

TEST(LongCycles, LiteralPredicate) {
  const FkConfig ones = merge(cycle_of({{0.2}}), cycle_of({{0.6}}));
  EXPECT_EQ(long_cycle_fraction(ones, 2), 0.0);
  EXPECT_EQ(long_cycle_fraction(ones, 5), 0.0);
  EXPECT_EQ(long_cycle_fraction(ones, 1), 2.0);
  EXPECT_EQ(long_cycle_fraction(ones, 1, LongCycleRule::period), 0.0);
  const FkConfig two = cycle_of({{0.2}, {0.6}});
  EXPECT_EQ(long_cycle_fraction(two, 2), 0.0);
  EXPECT_EQ(long_cycle_fraction(two, 1), 2.0);
  RandomStream rng(4, 0);
  for (int t = 0; t < 100; ++t) {
    const FkConfig g = random_fk(1, 1 + t % 8, rng);
    const double starts = static_cast<double>(proj_in(g, unit_box(1)).size());
    double prev = kInfinity;
    for (int n = 1; n <= 9; ++n) {
      const double v = long_cycle_fraction(g, n);
      EXPECT_LE(v, prev);
      EXPECT_LE(v, starts);
      if (n >= 2) {
        EXPECT_EQ(v, long_cycle_fraction(g, n, LongCycleRule::period));
      }
      prev = v;
    }
  }
}

TEST(Threshold, Examples) {
  EXPECT_EQ(threshold(3.0, 5.0), 0.0);
  EXPECT_EQ(threshold(7.0, 5.0), 7.0);
  EXPECT_EQ(threshold(5.0, 5.0), 0.0);
  for (double x : {0.1, 1.0, 42.0}) EXPECT_EQ(threshold(x, 0.0), x);
}

TEST(HistogramType, ValidationAndOutput) {
  EXPECT_THROW(Histogram({0.0, 1.0}, {1.0, 2.0}), InputError);
  EXPECT_THROW(Histogram({0.0, 0.0}, {1.0}), InputError);
  EXPECT_THROW(Histogram({0.0, 1.0}, {-1.0}), InputError);
  const Histogram h({0.0, 1.0, 2.0}, {1.0, 3.0});
  const Histogram n = h.normalize();
  EXPECT_TRUE(n.normalized);
  EXPECT_DOUBLE_EQ(n.counts[1], 0.75);
  EXPECT_EQ(h.table(), "lo\thi\tcount\n0\t1\t1\n1\t2\t3\n");
}

TEST(BatchMeans, IidSeries) {
  RandomStream rng(5, 0);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(rng.normal());
  const auto [m, se] = batch_means(xs);
  EXPECT_NEAR(m, 0.0, 3 * se);
  EXPECT_NEAR(se, 1.0 / std::sqrt(20000.0), 0.5 / std::sqrt(20000.0));
  EXPECT_NEAR(split_rhat(xs), 1.0, 0.01);
  std::vector<double> drift;
  for (int i = 0; i < 1000; ++i) drift.push_back(i);
  EXPECT_GT(split_rhat(drift), 1.5);
}

TEST(TwoSample, Examples) {
  const std::vector<double> a{1, 2, 3, 4}, b{10, 11, 12};
  const auto same = two_sample_test(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  EXPECT_EQ(two_sample_test(a, b).statistic, 1.0);
  // n = m = 3, D = 1: only the two separated orderings out of C(6,3) = 20.
  const auto sep = two_sample_test({1, 2, 3}, {4, 5, 6});
  EXPECT_TRUE(sep.exact);
  EXPECT_NEAR(sep.p_value, 0.1, 1e-15);
  EXPECT_THROW(two_sample_test({}, a), InputError);
}

TEST(TwoSample, KolmogorovBranchesAgree) {
  const double lo = kolmogorov_q(1.18 - 1e-12);
  const double hi = kolmogorov_q(1.18 + 1e-12);
  EXPECT_NEAR(lo, hi, 1e-9);
  EXPECT_NEAR(kolmogorov_q(1.3580986393225507), 0.05, 1e-6);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(TwoSample, ExactValuesAndAsymptoticTail) {
  // exact lattice-path values for n = m = 30, frozen from an independent implementation
  const std::vector<std::pair<int, double>> frozen = {
      {6, 0.39294501397971776}, {9, 0.07088798787114439}, {12, 0.006548396368058784}, {15, 0.0002933405491362055}};
  for (auto [shift, p] : frozen) {
    std::vector<double> x(30), y(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = i;
      y[i] = i + shift + 0.5;
    }
    const auto r = two_sample_test(x, y);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.statistic, (shift + 1) / 30.0, 1e-15);
    EXPECT_NEAR(r.p_value, p, 1e-12 * std::max(1.0, p * 1e3));
    if (shift >= 12) {
      const double en = std::sqrt(15.0);
      EXPECT_NEAR(kolmogorov_q((en + 0.12 + 0.11 / en) * r.statistic), p, 0.005);
    }
  }
  EXPECT_NEAR(ks_exact_p(30, 30, 180), 0.5940706297759378, 1e-12);
}

TEST(TwoSample, CalibrationUnderTheNull) {
  RandomStream rng(6, 0);
  for (int n : {20, 200}) {
    int rejects = 0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> x(n), y(n);
      for (auto& v : x) v = rng.uniform();
      for (auto& v : y) v = rng.uniform();
      rejects += two_sample_test(x, y).p_value <= 0.05;
    }
    const double rate = static_cast<double>(rejects) / reps;
    EXPECT_LE(rate, 0.05 + 3 * std::sqrt(0.05 * 0.95 / reps)) << n;
    EXPECT_GE(rate, 0.02) << n;
  }
}

TEST(RelativeEntropy, FormulaAndGating) {
  const ModelParams p{1.0, 0.0, 2.0, 1};
  OracleEstimate z;
  // Z = e^{m - L^d} with density identically one: P equals the reference.
  z.z = std::exp(loop_measure_mass(p) - 2.0);
  z.z_se = 1e-4 * z.z;
  const std::vector<double> zeros(100, 0.0);
  const StatRecord r = relative_entropy_estimate(zeros, z, p);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_GE(r.stderr_, 0.0);
  EXPECT_EQ(r.n_samples, 100);
  z.z_se = 0.02 * z.z;
  EXPECT_THROW(relative_entropy_estimate(zeros, z, p), ConfigError);
  EXPECT_THROW(relative_entropy_estimate(zeros, OracleEstimate{}, p), ConfigError);
}

TEST(Sausage, CubeChainOnStraightPaths) {
  const Bridge seg = line({0.0}, {1.0}, 1.0, 7);
  EXPECT_EQ(cube_chain_count(seg, 0.3), 4);
  EXPECT_EQ(cube_chain_count(seg, 2.0), 1);
  const Bridge diag = line({0.0, 0.0}, {1.0, 1.0}, 1.0, 3);
  EXPECT_EQ(cube_chain_count(diag, 0.3), 4);
  const Bridge back = line({0.0}, {0.0}, 1.0, 2);
  EXPECT_EQ(cube_chain_count(back, 0.1), 1);
  const VolumeEstimate v = path_sausage_volume(seg, 0.3);
  EXPECT_NEAR(v.value, 1.6, 1e-15);
  EXPECT_LE(v.value, 4 * 1.2);
}

TEST(Sausage, PathwiseBoundAndMoments) {
  RandomStream rng(7, 0);
  const auto r1 = sausage_diagnostics(1, 4000, 0.25, 1.0, 0.0, 64, rng);
  EXPECT_EQ(r1.violations, 0);
  EXPECT_EQ(r1.moment, 1.0);
  EXPECT_EQ(r1.subsample_spread, 1.0);
  const auto r2 = sausage_diagnostics(2, 400, 0.25, 1.0, 0.05, 32, rng);
  EXPECT_EQ(r2.violations, 0);
  EXPECT_LE(r2.max_ratio, 1.0);
  EXPECT_GT(r2.moment, 1.0);
  EXPECT_GT(r2.mean_cubes, 1.0);
}

TEST(PoissonTest, MatchesFrozenTailValues) {
  // scipy.stats.poisson cdf/sf
  EXPECT_NEAR(poisson_two_sided_p(0, 3.6), 0.05464744489458511, 1e-12);
  EXPECT_NEAR(poisson_two_sided_p(12, 3.585), 0.00071402801239388, 1e-12);
  EXPECT_NEAR(poisson_two_sided_p(4, 3.6), 0.9695677790677035, 1e-12);
  EXPECT_EQ(poisson_two_sided_p(3, 3.6), 1.0);
  EXPECT_NEAR(poisson_two_sided_p(180, 150.0), 0.018835894432107866, 1e-10);
  EXPECT_NEAR(poisson_two_sided_p(4500, 4462.0), 0.5733665242748169, 1e-9);
  EXPECT_EQ(poisson_two_sided_p(0, 0.0), 1.0);
  EXPECT_EQ(poisson_two_sided_p(1, 0.0), 0.0);
  EXPECT_THROW(poisson_two_sided_p(-1, 1.0), InputError);
}
