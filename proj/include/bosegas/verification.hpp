#pragma once

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bosegas/samplers.hpp"
#include "bosegas/statistics.hpp"

namespace bosegas {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  /// Runtime allowance in seconds; 0 means none.
  double limit = 0.0;
  /// Key numbers behind the verdict.
  std::vector<StatRecord> records;

  void add(std::string key, double value, double se, long n, std::uint64_t seed) {
    records.push_back({"criterion" + std::to_string(id) + "." + key, value, se, n, seed, {}});
  }
};

/// Built-in pair potential with its parameters.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::bump;
  double eps = 1.0;
  double R = 0.5;
  /// Hard-core diameter.
  double a = 0.1;

  EnergyModel model(int dim) const {
    switch (kind) {
      case PotentialKind::bump: return bump_model(dim, eps, R);
      case PotentialKind::hard_core: return hard_core_model(dim, a);
      case PotentialKind::zero: return zero_model();
      default: throw ConfigError("custom potentials are registered programmatically only");
    }
  }
};

/// Small interacting system truncated to at most n_max bridges.
struct TinySystem {
  ModelParams params{0.5, 0.5, 1.0, 1};
  PotentialSpec potential;
  int n_max = 3;
  QuadratureRule rule = QuadratureRule::left;
  /// Replaces the built-in superstability constants.
  std::optional<SuperstabilityConstants> constants;

  EnergyModel model() const {
    EnergyModel m = potential.model(params.dim);
    if (constants) m.constants = *constants;
    return m;
  }
  void validate() const {
    params.validate();
    if (n_max < 1 || n_max > 6) throw ConfigError("n_max must lie in [1, 6]");
    model();
  }
};

struct VerifySettings {
  std::uint64_t seed = 20240601;
  int steps_per_beta = 16;
  TinySystem tiny;

  int oracle_nodes = 6;
  long oracle_samples = 100000;
  double mp_r = 4.0;
  double mp_kappa = 0.5;

  long roundtrips = 1000;

  ModelParams ideal{1.0, -1.0, 4.0, 1};
  long ideal_draws = 50000;
  long confinement_draws = 200000;
  int ideal_lengths = 6;

  long burn_in = 10000;
  long thin = 10;
  long chain_samples = 50000;

  TinySystem invariance{{1.0, 1.0, 2.0, 1}, {}, 6, QuadratureRule::midpoint, {}};
  long ks_samples = 5000;
  long ks_thin = 400;
  std::vector<double> shifts{0.25, 0.5, 1.3};  // in units of beta

  Box dlr_delta = Box::cube(1, -0.45, 0.45);
  long dlr_samples = 40000;
  long dlr_thin = 20;
  long dlr_mcmc_steps = 200;
  long dlr_retry_cap = 100000;
  std::vector<DlrMode> dlr_modes{DlrMode::rejection, DlrMode::mcmc};
  /// Local-energy lower bound for rejection mode; defaults to the potential's.
  std::optional<double> dlr_lower_bound;

  TinySystem entropy{{1.0, 0.0, 1.0, 1}, {}, 3, QuadratureRule::left, {}};
  long entropy_samples = 20000;

  int sausage_dim = 2;
  long sausage_paths = 10000;
  double sausage_delta = 0.25;
  double sausage_T = 1.0;
  double sausage_eps = 0.05;
  int sausage_M = 64;
  int sausage_subsamples = 4;

  int permutation_max = 5;
  long mecke_draws = 1000000;
  double mecke_volume = 1.0;

  /// Cell sides used by the well-posedness guard.
  std::vector<double> guard_radii{0.3, 4.0};
  /// Criteria to run; empty means all.
  std::set<int> only;

  bool selected(int id) const { return only.empty() || only.count(id) > 0; }

  void validate() const {
    for (const TinySystem* t : {&tiny, &invariance, &entropy}) t->validate();
    ideal.validate();
    if (steps_per_beta < 1 || oracle_nodes < 1 || oracle_samples < 2) throw ConfigError("invalid oracle settings");
    if (roundtrips < 1 || ideal_draws < 2 || confinement_draws < 2 || ideal_lengths < 1) throw ConfigError("invalid sample sizes");
    if (burn_in < 0 || thin < 1 || chain_samples < 40 || ks_samples < 2 || ks_thin < 1) throw ConfigError("invalid chain settings");
    if (dlr_samples < 40 || dlr_thin < 1 || dlr_mcmc_steps < 1 || entropy_samples < 40) throw ConfigError("invalid chain settings");
    if (dlr_delta.dim() != tiny.params.dim) throw ConfigError("compact dimension differs from the model");
    if (sausage_dim < 1 || sausage_paths < sausage_subsamples || sausage_subsamples < 2 || sausage_M < 1)
      throw ConfigError("invalid sausage settings");
    if (!(sausage_delta > 0.0) || !(sausage_T > 0.0) || !(sausage_eps >= 0.0)) throw ConfigError("invalid sausage settings");
    if (permutation_max < 0 || permutation_max > 8 || mecke_draws < 2 || !(mecke_volume > 0.0))
      throw ConfigError("invalid combinatorics settings");
    if (shifts.empty()) throw ConfigError("need at least one time shift");
    if (dlr_modes.empty() || dlr_retry_cap < 1) throw ConfigError("invalid resampling settings");
    for (double r : guard_radii)
      if (!(r > 0.0)) throw ConfigError("guard radii must be positive");
    for (int id : only)
      if (id < 1 || id > 12) throw ConfigError("criterion ids are 1..12");
  }
};

namespace detail {

inline std::string strf(const char* fmt, ...) {
  va_list ap, copy;
  va_start(ap, fmt);
  va_copy(copy, ap);
  const int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(static_cast<std::size_t>(std::max(n, 0)) + 1, '\0');
  std::vsnprintf(out.data(), out.size(), fmt, ap);
  va_end(ap);
  out.pop_back();
  return out;
}

inline double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double max_length(const RlConfig& rho) {
  int m = 0;
  for (const auto& l : rho.loops) m = std::max(m, l.length);
  return m;
}

}  // namespace detail

/// Inline checks applied to every sampled configuration: the density upper
/// bound and the marked-point encoding round trip.
struct Guards {
  std::vector<double> radii{0.3, 4.0};
  long density_checks = 0;
  long density_violations = 0;
  /// max over checks of log density - bound.
  double worst_margin = -kInfinity;
  long mp_checks = 0;
  long mp_failures = 0;
  std::string first_failure;

  void density(double log_density, const ModelParams& p, const SuperstabilityConstants& c) {
    if (c.degenerate || !(c.B > 0.0)) return;
    const double bound = density_upper_bound(p, c);
    ++density_checks;
    worst_margin = std::max(worst_margin, log_density - bound);
    if (log_density > bound + 1e-12 * std::abs(bound)) ++density_violations;
  }

  void mp(const FkConfig& g) {
    for (double r : radii) {
      ++mp_checks;
      try {
        const MpConfig m = encode_fk_to_mp(g, r);
        if (!is_authorized(m) || !mp_permutation_wise(m)) throw StructuralError("encoding is not authorized and permutation-wise");
        const FkConfig back = decode_mp_to_fk(m);
        if (back.size() != g.size()) throw StructuralError("decode changed the number of bridges");
        for (std::size_t i = 0; i < g.size(); ++i)
          if (!bit_equal(back.bridges[i].start(), g.bridges[i].start()) || !bit_equal(back.bridges[i].end(), g.bridges[i].end()))
            throw StructuralError("decode changed an endpoint");
      } catch (const Error& e) {
        if (mp_failures++ == 0) first_failure = e.what();
      }
    }
  }

  void check(double log_density, const FkConfig& g, const ModelParams& p, const SuperstabilityConstants& c) {
    density(log_density, p, c);
    mp(g);
  }
};

struct ChainRun {
  long burn_in = 10000;
  long thin = 10;
  long samples = 1000;
};

/// Runs the rooted-loop chain from the empty configuration and calls
/// visit(state, cut configuration) on every retained sample.
template <class Visit>
std::array<MoveStats, 6> sample_chain(const EnergyModel& model, const ModelParams& p, const ChainSettings& cs,
                                      const ChainRun& run, std::uint64_t seed, std::uint64_t stream, Guards& guards,
                                      Visit&& visit) {
  RlChain chain(model, p, cs);
  ChainState st = chain.init(RlConfig{p.dim, p.beta, {}}, seed, stream);
  chain.run(st, run.burn_in);
  for (long i = 0; i < run.samples; ++i) {
    chain.run(st, run.thin);
    const FkConfig g = cut_rl_to_fk(st.config);
    guards.check(st.log_density, g, p, model.constants);
    visit(st, g);
  }
  return st.moves;
}

inline ChainSettings chain_settings(const TinySystem& t, int steps_per_beta) {
  ChainSettings cs;
  cs.steps_per_beta = steps_per_beta;
  cs.j_max = t.n_max;
  cs.n_max = t.n_max;
  cs.quad.rule = t.rule;
  return cs;
}

inline OracleSpec oracle_spec(const VerifySettings& s, const TinySystem& t) {
  OracleSpec o;
  o.n_max = t.n_max;
  o.nodes = s.oracle_nodes;
  o.samples = s.oracle_samples;
  o.steps_per_beta = s.steps_per_beta;
  o.mp_r = s.mp_r;
  o.mp_kappa = s.mp_kappa;
  o.quad.rule = t.rule;
  return o;
}

namespace verify {

inline double bridge_count(const FkConfig& g) { return static_cast<double>(g.size()); }

/// 1: Z from the permutation sum, the cycle-type sum and the marked-point integral.
inline CriterionResult equivalence(const VerifySettings& s) {
  CriterionResult r{1, "three-way model equivalence", false, "", 0.0, 300.0, {}};
  const auto model = s.tiny.model();
  const auto res = enumeration_oracle(oracle_spec(s, s.tiny), model, s.tiny.params, bridge_count, s.seed);
  const double z[3] = {res.fk.z, res.cycle_type.z, res.mp.z};
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) worst = std::max(worst, std::abs(z[a] - z[b]) / std::min(z[a], z[b]));
  r.pass = worst <= 0.02;
  r.add("Z_fk", res.fk.z, res.fk.z_se, res.fk.samples, s.seed);
  r.add("Z_cycle", res.cycle_type.z, res.cycle_type.z_se, res.cycle_type.samples, s.seed);
  r.add("Z_mp", res.mp.z, res.mp.z_se, res.mp.samples, s.seed);
  r.add("max_rel_diff", worst, 0.0, 1, s.seed);
  r.detail = detail::strf("Z_fk=%.6g Z_cycle=%.6g Z_mp=%.6g max_rel_diff=%.3g (tol 0.02); E[N]: %.5g %.5g %.5g", z[0], z[1],
                          z[2], worst, res.fk.ef, res.cycle_type.ef, res.mp.ef);
  return r;
}

/// 2: encode/decode identity on random permutation-wise configurations.
inline CriterionResult encode_decode(const VerifySettings& s) {
  CriterionResult r{2, "encode/decode identity", false, "", 0.0, 30.0, {}};
  RandomStream rng(s.seed, 200);
  long bad = 0;
  for (long t = 0; t < s.roundtrips; ++t) {
    const int d = 1 + static_cast<int>(t % 3);
    const int n = 1 + static_cast<int>(t % 6);
    const double beta = 0.25 + rng.uniform();
    const double radius = 0.2 + 1.3 * rng.uniform();
    std::vector<Point> pts(n, Point(d));
    for (auto& p : pts)
      for (auto& c : p) c = rng.uniform(-1.0, 1.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    FkConfig g{d, beta, {}};
    for (int i = 0; i < n; ++i) g.bridges.push_back(sample_bridge(pts[i], pts[perm[i]], beta, 8, rng));
    try {
      const MpConfig m = encode_fk_to_mp(g, radius);
      bool ok = is_authorized(m) && mp_permutation_wise(m);
      const FkConfig back = decode_mp_to_fk(m);
      ok = ok && back.size() == g.size();
      for (std::size_t i = 0; ok && i < g.size(); ++i)
        ok = bit_equal(m.points[i].x, g.bridges[i].start()) && bit_equal(back.bridges[i].start(), g.bridges[i].start()) &&
             bit_equal(back.bridges[i].end(), g.bridges[i].end());
      ok = ok && mp_targets(encode_fk_to_mp(back, radius)) == mp_targets(m);
      bad += !ok;
    } catch (const Error&) {
      ++bad;
    }
  }
  r.pass = bad == 0;
  r.add("failures", static_cast<double>(bad), 0.0, s.roundtrips, s.seed);
  r.detail = detail::strf("%ld configurations, %ld failures", s.roundtrips, bad);
  return r;
}

/// Two-sided tail mass beyond 3 standard deviations of a normal.
inline constexpr double kThreeSigmaP = 0.0026997960632601866;

/// 3: per-length loop counts of the ideal gas against their Poisson means.
inline CriterionResult ideal_gas(const VerifySettings& s, Guards& guards) {
  CriterionResult r{3, "ideal-gas loop statistics", false, "", 0.0, 120.0, {}};
  const ModelParams& p = s.ideal;
  const int J = s.ideal_lengths;
  const Window w = p.window();
  RandomStream rng(s.seed, 300);
  std::vector<double> sum(J + 1, 0.0), sum2(J + 1, 0.0);
  const IdealSpec spec{s.steps_per_beta, 0};
  for (long t = 0; t < s.ideal_draws; ++t) {
    const RlConfig rho = sample_ideal_rl(p, spec, rng);
    guards.mp(cut_rl_to_fk(rho));
    std::vector<int> c(J + 1, 0);
    for (const auto& l : rho.loops)
      if (l.length <= J) ++c[l.length];
    for (int j = 1; j <= J; ++j) {
      sum[j] += c[j];
      sum2[j] += static_cast<double>(c[j]) * c[j];
    }
  }
  // Confinement probabilities from an independent stream.
  RandomStream qrng(s.seed, 301);
  bool pass = true;
  std::string det;
  const double n = static_cast<double>(s.ideal_draws);
  for (int j = 1; j <= J; ++j) {
    long hit = 0;
    for (long t = 0; t < s.confinement_draws; ++t)
      hit += loop_confined(sample_loop(uniform_point(w, qrng), j, p.beta, s.steps_per_beta, qrng), w);
    const double q = static_cast<double>(hit) / static_cast<double>(s.confinement_draws);
    const double q_se = std::sqrt(q * (1.0 - q) / static_cast<double>(s.confinement_draws));
    const double base = w.volume() * loop_length_weight(j, p.beta, p.mu, p.dim);
    const double mean = sum[j] / n;
    const double se = std::sqrt(std::max(0.0, sum2[j] / n - mean * mean) / (n - 1.0));
    // The pooled count is Poisson(n base q); the exact two-sided tail is
    // compared at the 3 sigma level. q is estimated, so the test is run at
    // both ends of q +- 3 q_se and passes if either end does.
    const long k = std::lround(sum[j]);
    double pv = 0.0;
    for (double qq : {q, std::max(0.0, q - 3.0 * q_se), q + 3.0 * q_se})
      pv = std::max(pv, poisson_two_sided_p(k, n * base * qq));
    pass = pass && pv >= kThreeSigmaP;
    r.add(detail::strf("count_j%d", j), mean, se, s.ideal_draws, s.seed);
    r.add(detail::strf("expected_j%d", j), base * q, base * q_se, s.confinement_draws, s.seed);
    r.add(detail::strf("p_j%d", j), pv, 0.0, s.ideal_draws, s.seed);
    det += detail::strf("%sj=%d %.4g/%.4g (p=%.3g)", j > 1 ? "; " : "", j, mean, base * q, pv);
  }
  r.pass = pass;
  r.detail = det;
  return r;
}

/// 4: chain estimates of E[#bridges] and E[f1] against the enumeration oracle.
inline CriterionResult chain_vs_oracle(const VerifySettings& s, Guards& guards) {
  CriterionResult r{4, "MCMC vs oracle", false, "", 0.0, 600.0, {}};
  const auto model = s.tiny.model();
  const ModelParams& p = s.tiny.params;
  std::vector<double> nb, f;
  nb.reserve(s.chain_samples);
  f.reserve(s.chain_samples);
  sample_chain(model, p, chain_settings(s.tiny, s.steps_per_beta), {s.burn_in, s.thin, s.chain_samples}, s.seed, 400,
               guards, [&](const ChainState&, const FkConfig& g) {
                 nb.push_back(static_cast<double>(g.size()));
                 f.push_back(f1(g));
               });
  OracleSpec o = oracle_spec(s, s.tiny);
  o.cycle_route = o.mp_route = false;
  const auto on = enumeration_oracle(o, model, p, bridge_count, s.seed + 1).fk;
  const auto of = enumeration_oracle(o, model, p, [](const FkConfig& g) { return f1(g); }, s.seed + 2).fk;
  const auto [mn, sn] = batch_means(nb);
  const auto [mf, sf] = batch_means(f);
  const double zn = (mn - on.ef) / std::hypot(sn, on.ef_se);
  const double zf = (mf - of.ef) / std::hypot(sf, of.ef_se);
  r.pass = std::abs(zn) <= 3.0 && std::abs(zf) <= 3.0;
  r.add("chain_bridges", mn, sn, s.chain_samples, s.seed);
  r.add("oracle_bridges", on.ef, on.ef_se, on.samples, s.seed + 1);
  r.add("chain_f1", mf, sf, s.chain_samples, s.seed);
  r.add("oracle_f1", of.ef, of.ef_se, of.samples, s.seed + 2);
  r.detail = detail::strf("E[N] chain=%.5g+-%.2g oracle=%.5g+-%.2g (z=%.2f); E[f1] chain=%.5g+-%.2g oracle=%.5g+-%.2g (z=%.2f); "
                          "split-Rhat=%.4f",
                          mn, sn, on.ef, on.ef_se, zn, mf, sf, of.ef, of.ef_se, zf, split_rhat(nb));
  return r;
}

struct InvarianceSample {
  std::vector<double> f1, loops, longest;
};

template <class Transform>
InvarianceSample invariance_sample(const VerifySettings& s, std::uint64_t stream, Guards& guards, Transform transform) {
  InvarianceSample out;
  const auto model = s.invariance.model();
  const ModelParams& p = s.invariance.params;
  sample_chain(model, p, chain_settings(s.invariance, s.steps_per_beta), {s.burn_in, s.ks_thin, s.ks_samples}, s.seed,
               stream, guards, [&](const ChainState& st, const FkConfig&) {
                 const RlConfig rho = transform(st.config);
                 out.f1.push_back(f1(cut_rl_to_fk(rho)));
                 out.loops.push_back(static_cast<double>(rho.loops.size()));
                 out.longest.push_back(detail::max_length(rho));
               });
  return out;
}

inline std::pair<bool, std::string> ks_block(const InvarianceSample& a, const InvarianceSample& b, const std::string& label,
                                             CriterionResult& r, std::uint64_t seed) {
  const auto t1 = two_sample_test(a.f1, b.f1);
  const auto t2 = two_sample_test(a.loops, b.loops);
  const auto t3 = two_sample_test(a.longest, b.longest);
  const long n = static_cast<long>(a.f1.size());
  r.add(label + ".ks_p.f1", t1.p_value, 0.0, n, seed);
  r.add(label + ".ks_p.loops", t2.p_value, 0.0, n, seed);
  r.add(label + ".ks_p.max_length", t3.p_value, 0.0, n, seed);
  const bool ok = t1.p_value > 0.01 && t2.p_value > 0.01 && t3.p_value > 0.01;
  return {ok, detail::strf("%s: p(f1)=%.3g p(#loops)=%.3g p(max length)=%.3g", label.c_str(), t1.p_value, t2.p_value,
                           t3.p_value)};
}

/// 5: KS comparison of unshifted samples with independently drawn shifted ones.
inline CriterionResult time_shift_invariance(const VerifySettings& s, Guards& guards) {
  CriterionResult r{5, "time-shift invariance", false, "", 0.0, 120.0, {}};
  const auto identity = [](const RlConfig& rho) { return rho; };
  const InvarianceSample base = invariance_sample(s, 500, guards, identity);
  const double beta = s.invariance.params.beta;
  bool pass = true;
  for (std::size_t i = 0; i < s.shifts.size(); ++i) {
    const double shift = s.shifts[i] * beta;
    const InvarianceSample shifted =
        invariance_sample(s, 501 + i, guards, [shift](const RlConfig& rho) { return time_shift_config(rho, shift); });
    auto [ok, det] = ks_block(base, shifted, detail::strf("shift%zu", i + 1), r, s.seed);
    det = detail::strf("s=%.3gb ", s.shifts[i]) + det;
    pass = pass && ok;
    r.detail += (i ? "; " : "") + det;
  }
  r.pass = pass;
  return r;
}

/// 6: the same protocol under time reversal of every bridge.
inline CriterionResult time_reversal_invariance(const VerifySettings& s, Guards& guards) {
  CriterionResult r{6, "time-reversal invariance", false, "", 0.0, 120.0, {}};
  const InvarianceSample base = invariance_sample(s, 600, guards, [](const RlConfig& rho) { return rho; });
  const InvarianceSample rev = invariance_sample(s, 601, guards, [](const RlConfig& rho) {
    return assemble_fk_to_rl(time_reverse_config(cut_rl_to_fk(rho)));
  });
  auto [ok, det] = ks_block(base, rev, "reversed", r, s.seed);
  r.pass = ok;
  r.detail = det;
  return r;
}

/// 7: E[f] before and after resampling the interior of the compact.
inline CriterionResult dlr_consistency(const VerifySettings& s, Guards& guards) {
  CriterionResult r{7, "DLR consistency", false, "", 0.0, 600.0, {}};
  const auto model = s.tiny.model();
  const ModelParams& p = s.tiny.params;
  const Box& delta = s.dlr_delta;
  const int n = s.tiny.n_max;
  // f1, #starts in the compact, cycle counts by length 1..n.
  auto observe = [&](const FkConfig& g) {
    std::vector<double> v{f1(g), static_cast<double>(proj_in(g, delta).size())};
    auto c = cycle_counts(g);
    c.resize(n + 1, 0);
    for (int j = 1; j <= n; ++j) v.push_back(static_cast<double>(c[j]));
    return v;
  };
  std::vector<std::string> names{"f1", "N_in"};
  for (int j = 1; j <= n; ++j) names.push_back("c" + std::to_string(j));
  const std::size_t K = names.size();
  bool pass = true;
  std::optional<double> lower = s.dlr_lower_bound;
  if (!lower && model.pair) lower = model.pair->lower_bound;
  for (DlrMode mode : s.dlr_modes) {
    DlrSpec spec{delta, mode, lower, s.dlr_retry_cap, s.steps_per_beta, n, 4, 4, s.dlr_mcmc_steps, {s.tiny.rule}};
    const std::uint64_t stream = mode == DlrMode::rejection ? 700 : 710;
    RandomStream rng(s.seed, stream + 1);
    std::vector<std::vector<double>> before(K), diff(K);
    DlrStats stats;
    sample_chain(model, p, chain_settings(s.tiny, s.steps_per_beta), {s.burn_in, s.dlr_thin, s.dlr_samples}, s.seed,
                 stream, guards, [&](const ChainState&, const FkConfig& g) {
                   const FkConfig h = dlr_resample(g, spec, model, p, rng, &stats);
                   const RlConfig rho = assemble_fk_to_rl(h);
                   guards.check(log_density_rl(rho, model, p, {s.tiny.rule}), h, p, model.constants);
                   const auto a = observe(g), b = observe(h);
                   for (std::size_t k = 0; k < K; ++k) {
                     before[k].push_back(a[k]);
                     diff[k].push_back(b[k] - a[k]);
                   }
                 });
    if (!r.detail.empty()) r.detail += " | ";
    r.detail += mode == DlrMode::rejection ? "rejection:" : "mcmc:";
    for (std::size_t k = 0; k < K; ++k) {
      const auto [m, se] = batch_means(diff[k]);
      const bool ok = std::abs(m) <= 3.0 * se || m == 0.0;
      pass = pass && ok;
      r.add(std::string(mode == DlrMode::rejection ? "rejection." : "mcmc.") + names[k] + ".difference", m, se,
            static_cast<long>(diff[k].size()), s.seed);
      r.detail += detail::strf(" %s=%.4g d=%.2g+-%.2g", names[k].c_str(), detail::mean_of(before[k]), m, se);
    }
    if (mode == DlrMode::rejection)
      r.detail += detail::strf(" (acceptance %.3g)", static_cast<double>(stats.accepted) / std::max<long>(1, stats.attempts));
  }
  r.pass = pass;
  return r;
}

/// 8: relative entropy per volume against the superstability bound.
inline CriterionResult entropy_bound(const VerifySettings& s, Guards& guards) {
  CriterionResult r{8, "entropy bound", false, "", 0.0, 300.0, {}};
  const auto model = s.entropy.model();
  const ModelParams& p = s.entropy.params;
  const double reference = entropy_bound_constant({1.0, 0.0, 1.0, 1}, {0.0, 1.0, 1.0, false});
  std::vector<double> logd;
  logd.reserve(s.entropy_samples);
  sample_chain(model, p, chain_settings(s.entropy, s.steps_per_beta), {s.burn_in, s.thin, s.entropy_samples}, s.seed, 800,
               guards, [&](const ChainState& st, const FkConfig&) { logd.push_back(st.log_density); });
  OracleSpec o = oracle_spec(s, s.entropy);
  o.cycle_route = o.mp_route = false;
  const auto z = enumeration_oracle(o, model, p, bridge_count, s.seed + 3).fk;
  const StatRecord est = relative_entropy_estimate(logd, z, p, s.seed);
  const double bound = entropy_bound_constant(p, model.constants);
  const bool constant_ok = std::abs(reference - 1.0421) <= 1e-4;
  r.add("relative_entropy", est.value, est.stderr_, est.n_samples, s.seed);
  r.add("bound", bound, 0.0, 1, s.seed);
  r.add("bound_constant_reference", reference, 0.0, 1, s.seed);
  r.pass = constant_ok && est.value <= bound + 3.0 * est.stderr_ && est.value >= -3.0 * est.stderr_;
  r.detail = detail::strf("I/L^d=%.5g+-%.2g bound=%.5g; constant at A=0,B=1,r=1: %.7f", est.value, est.stderr_, bound,
                          reference);
  return r;
}

/// 9: cube-chain bound on every path and stability of the exponential moment.
inline CriterionResult wiener_sausage(const VerifySettings& s) {
  CriterionResult r{9, "Wiener sausage", false, "", 0.0, 180.0, {}};
  RandomStream rng(s.seed, 900);
  const auto rep = sausage_diagnostics(s.sausage_dim, s.sausage_paths, s.sausage_delta, s.sausage_T, s.sausage_eps,
                                       s.sausage_M, rng, s.sausage_subsamples);
  r.add("violations", static_cast<double>(rep.violations), 0.0, rep.paths, s.seed);
  r.add("moment", rep.moment, rep.moment_se, rep.paths, s.seed);
  r.add("subsample_ratio", rep.subsample_spread, 0.0, rep.paths, s.seed);
  r.pass = rep.violations == 0 && rep.subsample_spread >= 0.5 && rep.subsample_spread <= 2.0;
  r.detail = detail::strf("%ld paths, %ld violations, max |S|/bound=%.3g, E[exp(eps|S|^2)]=%.5g+-%.2g, subsample ratio=%.4f",
                          rep.paths, rep.violations, rep.max_ratio, rep.moment, rep.moment_se, rep.subsample_spread);
  return r;
}

/// 11: exhaustive permutation splitting and the Mecke identity E[2^N] = e^|Δ|.
inline CriterionResult combinatorics(const VerifySettings& s) {
  CriterionResult r{11, "combinatorial lemmas", false, "", 0.0, 30.0, {}};
  long checked = 0, failed = 0;
  for (int n = 0; n <= s.permutation_max; ++n)
    for (unsigned y = 0; y < (1u << n); ++y) {
      ++checked;
      failed += !permutation_split_check(n, y).exact();
    }
  RandomStream rng(s.seed, 1100);
  const auto rep = subset_split_check(s.mecke_volume, s.mecke_draws, rng);
  const bool mecke = std::abs(rep.ones - rep.ones_exact) <= 3.0 * rep.ones_se &&
                     std::abs(rep.sizes - rep.sizes_exact) <= 3.0 * rep.sizes_se;
  r.add("permutation_failures", static_cast<double>(failed), 0.0, checked, s.seed);
  r.add("mean_two_pow_N", rep.ones, rep.ones_se, rep.draws, s.seed);
  r.add("mean_N_two_pow_N_minus_1", rep.sizes, rep.sizes_se, rep.draws, s.seed);
  r.pass = failed == 0 && mecke;
  r.detail = detail::strf("%ld (n, Y) cases, %ld failures; E[2^N]=%.5g+-%.2g vs %.5g; E[N 2^(N-1)]=%.5g+-%.2g vs %.5g", checked,
                          failed, rep.ones, rep.ones_se, rep.ones_exact, rep.sizes, rep.sizes_se, rep.sizes_exact);
  return r;
}

inline CriterionResult density_guard(const Guards& g, std::uint64_t seed) {
  CriterionResult r{10, "density upper bound", false, "", 0.0, 0.0, {}};
  r.pass = g.density_checks > 0 && g.density_violations == 0;
  r.add("violations", static_cast<double>(g.density_violations), 0.0, std::max(1L, g.density_checks), seed);
  r.detail = detail::strf("%ld samples checked, %ld violations, max(log density - bound)=%.4g", g.density_checks,
                          g.density_violations, g.worst_margin);
  return r;
}

inline CriterionResult mp_guard(const Guards& g, std::uint64_t seed) {
  CriterionResult r{12, "mp well-posedness", false, "", 0.0, 0.0, {}};
  r.pass = g.mp_checks > 0 && g.mp_failures == 0;
  r.add("failures", static_cast<double>(g.mp_failures), 0.0, std::max(1L, g.mp_checks), seed);
  r.detail = detail::strf("%ld encodings checked, %ld failures", g.mp_checks, g.mp_failures);
  if (!g.first_failure.empty()) r.detail += "; first: " + g.first_failure;
  return r;
}

}  // namespace verify

/// Runs the selected criteria; results come back ordered by id. Criteria 10
/// and 12 summarize the guards applied to every sample of the other runs.
inline std::vector<CriterionResult> run_acceptance(const VerifySettings& s,
                                                   const std::function<void(const CriterionResult&)>& progress = {}) {
  s.validate();
  Guards guards;
  guards.radii = s.guard_radii;
  std::vector<CriterionResult> out;
  auto timed = [&](int id, const char* name, double limit, auto&& body) {
    if (!s.selected(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = body();
    } catch (const Error& e) {
      r = CriterionResult{id, name, false, std::string(e.category()) + " error: " + e.what(), 0.0, limit, {}};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.limit > 0.0 && r.seconds > r.limit) {
      r.pass = false;
      r.detail += detail::strf(" [runtime %.0f s exceeds %.0f s]", r.seconds, r.limit);
    }
    if (progress) progress(r);
    out.push_back(std::move(r));
  };
  timed(1, "three-way model equivalence", 300, [&] { return verify::equivalence(s); });
  timed(2, "encode/decode identity", 30, [&] { return verify::encode_decode(s); });
  timed(3, "ideal-gas loop statistics", 120, [&] { return verify::ideal_gas(s, guards); });
  timed(4, "MCMC vs oracle", 600, [&] { return verify::chain_vs_oracle(s, guards); });
  timed(5, "time-shift invariance", 120, [&] { return verify::time_shift_invariance(s, guards); });
  timed(6, "time-reversal invariance", 120, [&] { return verify::time_reversal_invariance(s, guards); });
  timed(7, "DLR consistency", 600, [&] { return verify::dlr_consistency(s, guards); });
  timed(8, "entropy bound", 300, [&] { return verify::entropy_bound(s, guards); });
  timed(9, "Wiener sausage", 180, [&] { return verify::wiener_sausage(s); });
  timed(11, "combinatorial lemmas", 30, [&] { return verify::combinatorics(s); });
  timed(10, "density upper bound", 0, [&] { return verify::density_guard(guards, s.seed); });
  timed(12, "mp well-posedness", 0, [&] { return verify::mp_guard(guards, s.seed); });
  std::sort(out.begin(), out.end(), [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
  return out;
}

inline std::string format_result(const CriterionResult& r, bool with_time = true) {
  const std::string head = detail::strf("[%s] criterion %2d  %-28s ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str());
  return head + (with_time ? detail::strf("%7.1fs  ", r.seconds) : std::string(" ")) + r.detail;
}

}  // namespace bosegas
