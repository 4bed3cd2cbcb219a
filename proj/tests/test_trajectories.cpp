#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bosegas/trajectories.hpp"

using namespace bosegas;

namespace {

Bridge straight(Point a, Point b, double t, int M) {
  Bridge br(static_cast<int>(a.size()), TimeGrid(t, M));
  for (int k = 0; k <= M; ++k)
    for (std::size_t i = 0; i < a.size(); ++i) br.node(k)[i] = a[i] + (b[i] - a[i]) * k / M;
  std::copy(b.begin(), b.end(), br.node(M).begin());
  return br;
}

Loop random_loop(int d, int j, double beta, int M, RandomStream& rng) {
  Point x(d);
  for (auto& c : x) c = rng.uniform(-1.0, 1.0);
  return Loop{j, sample_bridge(x, x, beta * j, M * j, rng)};
}

}  // namespace

TEST(TimeGrid, EndpointsAreExact) {
  TimeGrid g(0.3, 7);
  EXPECT_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(7), 0.3);
  EXPECT_EQ(g.nodes(), 8);
  EXPECT_THROW(TimeGrid(0.0, 4), InputError);
  EXPECT_THROW(TimeGrid(1.0, 1), InputError);
}

TEST(Mass, ClosedFormValues) {
  EXPECT_NEAR(unnormalized_mass(Point{0.3}, Point{0.3}, 1.0), 0.3989423, 1e-7);
  EXPECT_NEAR(unnormalized_mass(Point{0.0, 0.0}, Point{0.0, 0.0}, 1.0), 0.1591549, 1e-7);
  // exp(-1/2)/sqrt(2 pi) for unit separation at t = 1.
  EXPECT_NEAR(unnormalized_mass(Point{0.0}, Point{1.0}, 1.0), 0.24197072451914337, 1e-15);
}

TEST(Mass, Symmetry) {
  RandomStream rng(1, 0);
  for (int i = 0; i < 100; ++i) {
    Point x{rng.normal(), rng.normal()}, y{rng.normal(), rng.normal()};
    const double t = 0.1 + rng.uniform();
    EXPECT_EQ(unnormalized_mass(x, y, t), unnormalized_mass(y, x, t));
  }
}

TEST(SampleBridge, EndpointsBitExact) {
  RandomStream rng(2, 0);
  for (int i = 0; i < 50; ++i) {
    Point x{rng.normal() * 1e3, rng.uniform()}, y{rng.normal(), -rng.uniform() / 3.0};
    Bridge b = sample_bridge(x, y, 0.1 + rng.uniform(), 2 + i, rng);
    EXPECT_TRUE(bit_equal(b.start(), x));
    EXPECT_TRUE(bit_equal(b.end(), y));
    EXPECT_TRUE(b.valid());
  }
  Bridge z = sample_bridge(Point{0.0}, Point{0.0}, 2.5, 16, rng);
  EXPECT_EQ(z.node(0)[0], 0.0);
  EXPECT_EQ(z.node(16)[0], 0.0);
}

TEST(SampleBridge, RejectsNonFinite) {
  RandomStream rng(0, 0);
  EXPECT_THROW(sample_bridge(Point{std::nan("")}, Point{0.0}, 1.0, 4, rng), InputError);
  EXPECT_THROW(sample_bridge(Point{0.0}, Point{INFINITY}, 1.0, 4, rng), InputError);
}

TEST(SampleBridge, MidpointMomentsMatchBridgeLaw) {
  // Var at s is s(t-s)/t = 0.25 at s = 0.5, t = 1; mean interpolates the endpoints.
  RandomStream rng(3, 0);
  const int n = 100000;
  for (double y : {0.0, 2.0}) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = sample_bridge(Point{0.0}, Point{y}, 1.0, 8, rng).node(4)[0];
      s += v;
      s2 += v * v;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, y / 2.0, 3.0 * std::sqrt(0.25 / n));
    // sd of the sample variance for a Gaussian is var sqrt(2/n).
    EXPECT_NEAR(var, 0.25, 3.0 * 0.25 * std::sqrt(2.0 / n));
  }
}

TEST(SampleBridge, IncrementCovarianceAtOffGridTimes) {
  // Cov(B_s, B_u) = s (t - u) / t for s <= u on an uneven node pair.
  RandomStream rng(4, 0);
  const int n = 100000;
  double sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    Bridge b = sample_bridge(Point{0.0}, Point{0.0}, 2.0, 10, rng);
    sxy += b.node(2)[0] * b.node(7)[0];
  }
  const double expected = 0.4 * (2.0 - 1.4) / 2.0;
  EXPECT_NEAR(sxy / n, expected, 0.01);
}

TEST(Unfold, EndpointsAndZeroMark) {
  Bridge zero(2, TimeGrid(1.0, 8));
  Point x{0.5, -1.0}, y{2.0, 3.0};
  Bridge b = unfold(x, y, zero, 0.7);
  EXPECT_TRUE(bit_equal(b.start(), x));
  EXPECT_TRUE(bit_equal(b.end(), y));
  for (int k = 0; k <= 8; ++k)
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(b.node(k)[i], x[i] + (k / 8.0) * (y[i] - x[i]), 1e-15);
  EXPECT_DOUBLE_EQ(b.grid.duration, 0.7);
}

TEST(Unfold, StandardizeRoundTrip) {
  RandomStream rng(5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 3;
    Point x(d), y(d);
    for (int i = 0; i < d; ++i) {
      x[i] = rng.uniform(-3.0, 3.0);
      y[i] = rng.uniform(-3.0, 3.0);
    }
    const double beta = 0.1 + 2.0 * rng.uniform();
    Bridge omega = sample_standard_shape(d, 32, rng);
    Bridge b = unfold(x, y, omega, beta);
    Bridge back = standardize(b);
    EXPECT_EQ(norm2(back.start()), 0.0);
    EXPECT_EQ(norm2(back.end()), 0.0);
    for (std::size_t k = 0; k < back.nodes.size(); ++k) EXPECT_NEAR(back.nodes[k], omega.nodes[k], 1e-13);
    Bridge again = unfold(x, y, back, beta);
    EXPECT_TRUE(bit_equal(again.start(), b.start()));
    EXPECT_TRUE(bit_equal(again.end(), b.end()));
    for (std::size_t k = 0; k < b.nodes.size(); ++k) EXPECT_NEAR(again.nodes[k], b.nodes[k], 1e-13);
  }
}

TEST(Standardize, StraightAndFlatPathsGiveZeroShape) {
  Bridge s = straight({0.0, 1.0}, {2.0, -1.0}, 1.3, 16);
  for (double v : standardize(s).nodes) EXPECT_NEAR(v, 0.0, 1e-15);
  Bridge flat = straight({0.4}, {0.4}, 2.0, 8);
  for (double v : standardize(flat).nodes) EXPECT_EQ(v, 0.0);
}

TEST(Sausage, StadiumArea) {
  Bridge seg = straight({0.0, 0.0}, {2.0, 0.0}, 1.0, 16);
  auto v = sausage_volume(seg, {1.0, SausageMethod::voxel, 0.05});
  EXPECT_NEAR(v.value, 4.0 + std::numbers::pi, 0.01 * (4.0 + std::numbers::pi));
  // The default edge delta/4 stays within its own error bar.
  auto coarse = sausage_volume(seg, {1.0, SausageMethod::voxel, 0.0});
  EXPECT_NEAR(coarse.value, 4.0 + std::numbers::pi, coarse.error);
  auto fine = sausage_volume(seg, {1.0, SausageMethod::voxel, 0.02});
  EXPECT_NEAR(fine.value, 4.0 + std::numbers::pi, fine.error);
}

TEST(Sausage, DiskArea) {
  Bridge pt = straight({0.3, 0.3}, {0.3, 0.3}, 1.0, 4);
  auto v = sausage_volume(pt, {1.0, SausageMethod::voxel, 0.05});
  EXPECT_NEAR(v.value, std::numbers::pi, 0.01 * std::numbers::pi);
}

TEST(Sausage, CoarseVoxelIsConfigError) {
  Bridge pt = straight({0.0}, {1.0}, 1.0, 4);
  EXPECT_THROW(sausage_volume(pt, {1.0, SausageMethod::voxel, 0.6}), ConfigError);
}

TEST(Sausage, VoxelAndMonteCarloAgree) {
  RandomStream rng(6, 0);
  for (int t = 0; t < 5; ++t) {
    Bridge b = sample_bridge(Point{0.0, 0.0}, Point{0.5, 0.2}, 1.0, 32, rng);
    auto vox = sausage_volume(b, {0.3, SausageMethod::voxel, 0.01});
    auto mc = sausage_volume(b, {0.3, SausageMethod::montecarlo, 40000}, &rng);
    const double combined = std::sqrt(vox.error * vox.error + 9.0 * mc.error * mc.error);
    EXPECT_NEAR(vox.value, mc.value, combined + 1e-12);
  }
}

TEST(Sausage, MonotoneInThicknessAndPrefix) {
  RandomStream rng(7, 0);
  Bridge b = sample_bridge(Point{0.0, 0.0}, Point{1.0, 0.0}, 1.0, 32, rng);
  double prev = 0.0;
  for (double delta : {0.1, 0.2, 0.3, 0.5}) {
    const double v = sausage_volume(b, {delta, SausageMethod::voxel, 0.025}).value;
    EXPECT_GE(v, prev);
    prev = v;
    // A single ball is contained in the sausage.
    EXPECT_GE(v + sausage_volume(b, {delta, SausageMethod::voxel, 0.025}).error, std::numbers::pi * delta * delta);
  }
  // Prefixes on the same origin-anchored voxel lattice.
  double last = 0.0;
  for (int m = 2; m <= 32; m += 6) {
    Bridge pre(2, TimeGrid(1.0, m));
    std::copy(b.nodes.begin(), b.nodes.begin() + (m + 1) * 2, pre.nodes.begin());
    const double v = sausage_volume(pre, {0.2, SausageMethod::voxel, 0.05}).value;
    EXPECT_GE(v, last);
    last = v;
  }
}

TEST(TimeShift, ZeroAndFullPeriodAreIdentity) {
  RandomStream rng(8, 0);
  for (int j = 1; j <= 3; ++j) {
    Loop l = random_loop(2, j, 0.5, 8, rng);
    EXPECT_EQ(time_shift(l, 0.0), l);
    EXPECT_EQ(time_shift(l, 0.5 * j), l);
    EXPECT_TRUE(time_shift(l, 0.25).closed());
  }
}

TEST(TimeShift, RotationIsABijectionOfNodes) {
  RandomStream rng(9, 0);
  Loop l = random_loop(1, 3, 1.0, 8, rng);
  Loop s = time_shift(l, 1.0 / 8.0 * 5.0);
  std::vector<double> a(l.path.nodes.begin(), l.path.nodes.end() - 1), b(s.path.nodes.begin(), s.path.nodes.end() - 1);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_EQ(s.path.node(0)[0], l.path.node(5)[0]);
  // Rounds to the nearest grid step.
  EXPECT_EQ(time_shift(l, 1.0 / 8.0 * 5.3), s);
}

TEST(TimeReverse, InvolutionSwapsEndpoints) {
  RandomStream rng(10, 0);
  Bridge b = sample_bridge(Point{0.0, 1.0}, Point{2.0, 3.0}, 1.0, 16, rng);
  Bridge r = time_reverse(b);
  EXPECT_TRUE(bit_equal(r.start(), b.end()));
  EXPECT_TRUE(bit_equal(r.end(), b.start()));
  EXPECT_EQ(time_reverse(r), b);
}

TEST(DInf, Values) {
  RandomStream rng(11, 0);
  Loop a = random_loop(2, 2, 1.0, 8, rng);
  EXPECT_EQ(d_inf(a, a), 0.0);
  Loop one = random_loop(2, 1, 1.0, 8, rng);
  EXPECT_EQ(d_inf(a, one), kInfinity);
  const Point v{0.3, -0.4};
  Loop t{a.length, a.path.translated(v)};
  EXPECT_NEAR(d_inf(a, t), 0.5, 1e-12);
  Loop other{2, Bridge(2, TimeGrid(2.0, 32))};
  EXPECT_THROW(d_inf(a, other), InputError);
}

TEST(Segments, BoxIntersection) {
  Box box = Box::cube(2, 0.0, 1.0);
  EXPECT_TRUE(segment_meets_box(Point{-1.0, 0.5}, Point{2.0, 0.5}, box));
  EXPECT_FALSE(segment_meets_box(Point{-1.0, 2.0}, Point{2.0, 2.0}, box));
  EXPECT_TRUE(segment_meets_box(Point{-0.5, 0.0}, Point{0.5, -1.0}, box) == false);
  EXPECT_TRUE(segment_meets_box(Point{-0.5, 0.5}, Point{0.5, 1.5}, box));
  EXPECT_NEAR(segment_distance(Point{0.0, 1.0}, Point{-1.0, 0.0}, Point{1.0, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(segment_distance(Point{3.0, 0.0}, Point{-1.0, 0.0}, Point{1.0, 0.0}), 2.0, 1e-15);
}
