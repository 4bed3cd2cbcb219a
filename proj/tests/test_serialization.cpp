#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bosegas/serialization.hpp"

using namespace bosegas;

namespace {

FkConfig random_fk(int d, int n, double beta, int M, RandomStream& rng) {
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts)
    for (auto& c : p) c = rng.uniform(-0.5, 0.5);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  FkConfig g{d, beta, {}};
  for (int i = 0; i < n; ++i) g.bridges.push_back(sample_bridge(pts[i], pts[perm[i]], beta, M, rng));
  return g;
}

}  // namespace

TEST(Serialization, FkRoundTripIsBitExact) {
  RandomStream rng(11, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const FkConfig g = random_fk(1 + rep % 3, 1 + rep % 5, 0.7, 8, rng);
    const FkConfig back = fk_from_json(json::parse(to_json(g).dump()));
    EXPECT_EQ(back.dim, g.dim);
    ASSERT_EQ(back.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back.bridges[i], g.bridges[i]);
  }
}

TEST(Serialization, RlAndMpRoundTrip) {
  RandomStream rng(12, 0);
  RlConfig rho{2, 0.5, {}};
  for (int j = 1; j <= 3; ++j) {
    const Point x{rng.uniform(), rng.uniform()};
    rho.loops.push_back(Loop{j, sample_bridge(x, x, 0.5 * j, 4 * j, rng)});
  }
  const RlConfig rho2 = rl_from_json(json::parse(to_json(rho).dump()));
  EXPECT_EQ(rho2.loops, rho.loops);

  const MpConfig mp = encode_fk_to_mp(random_fk(2, 4, 0.5, 6, rng), 0.3);
  const MpConfig mp2 = mp_from_json(json::parse(to_json(mp).dump()));
  EXPECT_EQ(mp2.points, mp.points);
  EXPECT_EQ(mp2.r, mp.r);
}

TEST(Serialization, RejectsWrongKindVersionAndMismatchedEndpoints) {
  RandomStream rng(13, 0);
  json j = to_json(random_fk(1, 2, 1.0, 4, rng));
  EXPECT_THROW(rl_from_json(j), InputError);
  json v = j;
  v["version"] = 2;
  EXPECT_THROW(fk_from_json(v), InputError);
  json e = j;
  e["bridges"][0]["start"][0] = e["bridges"][0]["start"][0].get<double>() + 1e-15;
  EXPECT_THROW(fk_from_json(e), InputError);
  json m = j;
  m["bridges"][0].erase("nodes");
  EXPECT_THROW(fk_from_json(m), InputError);
}

TEST(Serialization, CheckpointResumesTheSameTrajectory) {
  EnergyModel model = zero_model();
  ModelParams params{1.0, -0.5, 2.0, 1};
  ChainSettings settings;
  settings.steps_per_beta = 8;
  settings.j_max = 3;
  RlChain chain(model, params, settings);
  ChainState a = chain.init(RlConfig{1, 1.0, {}}, 5, 0);
  chain.run(a, 200);
  ChainState b = checkpoint_from_json(json::parse(to_json(a).dump()), chain);
  chain.run(a, 300);
  chain.run(b, 300);
  EXPECT_EQ(a.config.loops, b.config.loops);
  EXPECT_EQ(a.step, b.step);
}

TEST(Serialization, NumbersCarrySeventeenDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(kInfinity), "\"inf\"");
  RandomStream rng(14, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.index(200)) - 100);
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
}

TEST(Serialization, RecordLineRoundTrip) {
  StatRecord r{"f1", 1.0 / 3.0, 0.01, 1000, 42, {{"beta", 0.5}, {"L", 1.0}}};
  const std::string line = record_line(r, "00ff");
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const json j = json::parse(line);
  EXPECT_EQ(j.at("config_hash"), "00ff");
  EXPECT_EQ(j.at("seed"), 42);
  const StatRecord back = record_from_line(line);
  EXPECT_EQ(back.value, r.value);
  EXPECT_EQ(back.params, r.params);
}

TEST(Serialization, ConfigHashIsOrderInsensitiveAndSensitiveToValues) {
  const json a = json::parse(R"({"b":1,"a":[1,2]})");
  const json b = json::parse(R"({"a":[1,2],"b":1})");
  const json c = json::parse(R"({"a":[1,2],"b":2})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(fnv1a(""), 14695981039346656037ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
