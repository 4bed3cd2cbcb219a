#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bosegas/hamiltonians.hpp"
#include "bosegas/random.hpp"
#include "bosegas/representations.hpp"
#include "bosegas/samplers/oracle.hpp"
#include "bosegas/trajectories.hpp"

namespace bosegas {

struct StatRecord {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  long n_samples = 1;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;

  void validate() const {
    if (!(stderr_ >= 0.0)) throw InputError("stderr must be nonnegative");
    if (n_samples < 1) throw InputError("a record needs at least one sample");
  }
};

struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;
  bool normalized = false;

  Histogram() = default;
  Histogram(std::vector<double> e, std::vector<double> c, bool norm = false)
      : edges(std::move(e)), counts(std::move(c)), normalized(norm) {
    validate();
  }
  void validate() const {
    if (edges.size() != counts.size() + 1) throw InputError("histogram needs one more edge than bins");
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (!(edges[i] > edges[i - 1])) throw InputError("histogram edges must increase strictly");
    for (double c : counts)
      if (c < 0.0) throw InputError("histogram counts must be nonnegative");
  }
  double total() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
  }
  Histogram normalize() const {
    Histogram h = *this;
    const double t = total();
    if (t > 0.0)
      for (auto& c : h.counts) c /= t;
    h.normalized = true;
    return h;
  }
  /// Tab-separated table with a header line: lo, hi, count.
  std::string table() const {
    std::ostringstream os;
    os.precision(17);
    os << "lo\thi\t" << (normalized ? "fraction" : "count") << "\n";
    for (std::size_t i = 0; i < counts.size(); ++i) os << edges[i] << "\t" << edges[i + 1] << "\t" << counts[i] << "\n";
    return os.str();
  }
};

/// counts[j] = number of sigma_gamma-cycles of length j (counts[0] = 0).
inline std::vector<long> cycle_counts(const FkConfig& g) {
  std::vector<long> c(1, 0);
  for (const auto& cyc : cycle_decomposition(g)) {
    if (cyc.size() >= c.size()) c.resize(cyc.size() + 1, 0);
    ++c[cyc.size()];
  }
  return c;
}

/// Cycle-length histogram with unit bins centered on 1..max_length.
inline Histogram cycle_length_histogram(const FkConfig& g, int max_length = 0) {
  auto c = cycle_counts(g);
  const int top = std::max<int>(max_length, static_cast<int>(c.size()) - 1);
  c.resize(top + 1, 0);
  std::vector<double> edges, counts;
  for (int j = 1; j <= top + 1; ++j) edges.push_back(j - 0.5);
  if (top == 0) edges = {0.5, 1.5};
  for (int j = 1; j <= std::max(top, 1); ++j) counts.push_back(j <= top ? static_cast<double>(c[j]) : 0.0);
  return Histogram(edges, counts);
}

inline Box unit_box(int d) { return Box::cube(d, 0.0, 1.0); }

/// f1 = sum over bridges starting in [0,1]^d of |sigma(beta) - sigma(0)|.
inline double f1(const FkConfig& g) {
  const Box box = unit_box(g.dim);
  double s = 0.0;
  for (const auto& b : g.bridges)
    if (box.contains(b.start())) s += std::sqrt(distance2(b.start(), b.end()));
  return s;
}

/// f2 = sum over bridges of 1/period when the whole cycle lies in [0,1]^d,
/// i.e. the number of cycles inside the unit box.
inline double f2(const FkConfig& g) {
  const Box box = unit_box(g.dim);
  double s = 0.0;
  for (const auto& cyc : cycle_decomposition(g)) {
    const bool inside = std::all_of(cyc.begin(), cyc.end(), [&](std::size_t i) { return path_inside_box(g.bridges[i], box); });
    if (!inside) continue;
    for (std::size_t k = 0; k < cyc.size(); ++k) s += 1.0 / static_cast<double>(cyc.size());
  }
  return s;
}

/// f3 = k 1{k even}, k = number of bridges meeting [0,1]^d.
inline double f3(const FkConfig& g) {
  const Box box = unit_box(g.dim);
  long k = 0;
  for (const auto& b : g.bridges) k += path_meets_box(b, box);
  return k % 2 == 0 ? static_cast<double>(k) : 0.0;
}

/// f4 = number of bridges starting in [0,1]^d with sigma^2 = sigma.
inline double f4(const FkConfig& g) {
  const Box box = unit_box(g.dim);
  const auto succ = successor_table(g);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (box.contains(g.bridges[i].start()) && succ[succ[i]] == i) s += 1.0;
  return s;
}

enum class LongCycleRule {
  /// no j in [2, n] with sigma^j = sigma
  literal,
  /// cycle length > n
  period
};

/// Number of bridges starting in [0,1]^d whose cycle passes the rule. For
/// n >= 2 both rules agree: a 1-cycle returns at every j, so it is not counted.
inline double long_cycle_fraction(const FkConfig& g, int n, LongCycleRule rule = LongCycleRule::literal) {
  const Box box = unit_box(g.dim);
  double s = 0.0;
  for (const auto& cyc : cycle_decomposition(g)) {
    const auto p = static_cast<int>(cyc.size());
    bool keep;
    if (rule == LongCycleRule::period) {
      keep = p > n;
    } else {
      keep = true;
      for (int j = 2; j <= n && keep; ++j) keep = j % p != 0;
    }
    if (!keep) continue;
    for (std::size_t i : cyc) s += box.contains(g.bridges[i].start());
  }
  return s;
}

/// Theta_m(x) = 0 if x <= m, else x.
inline double threshold(double x, double m) { return x <= m ? 0.0 : x; }

/// Mean and standard error by nonoverlapping batch means.
inline std::pair<double, double> batch_means(const std::vector<double>& xs, int batches = 20) {
  if (xs.empty()) throw InputError("batch means of an empty series");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  batches = std::min<int>(batches, static_cast<int>(xs.size()));
  if (batches < 2) return {mean, 0.0};
  const std::size_t b = xs.size() / batches;
  double v = 0.0;
  for (int i = 0; i < batches; ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < b; ++k) m += xs[i * b + k];
    m /= static_cast<double>(b);
    v += (m - mean) * (m - mean);
  }
  return {mean, std::sqrt(v / (batches - 1) / batches)};
}

/// Split-chain potential scale reduction of one series (halves compared).
inline double split_rhat(const std::vector<double>& xs) {
  const std::size_t n = xs.size() / 2;
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double m[2] = {0, 0}, v[2] = {0, 0};
  for (int h = 0; h < 2; ++h) {
    for (std::size_t i = 0; i < n; ++i) m[h] += xs[h * n + i];
    m[h] /= n;
    for (std::size_t i = 0; i < n; ++i) v[h] += (xs[h * n + i] - m[h]) * (xs[h * n + i] - m[h]);
    v[h] /= n - 1;
  }
  const double W = 0.5 * (v[0] + v[1]);
  const double mu = 0.5 * (m[0] + m[1]);
  const double B = n * ((m[0] - mu) * (m[0] - mu) + (m[1] - mu) * (m[1] - mu));
  if (W == 0.0) return B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(((n - 1.0) / n * W + B / n) / W);
}

/// Per-volume relative entropy (1/L^d) I(P | Pi) of the rooted-loop model
/// against its Poisson reference, from samples of beta mu sum j - H_rl under P
/// and the oracle partition function Z (FK normalization, same truncation):
/// I = E_P[beta mu sum j - H] - log Z - L^d + |loop measure|.
inline StatRecord relative_entropy_estimate(const std::vector<double>& log_densities, const OracleEstimate& z,
                                            const ModelParams& p, std::uint64_t seed = 0) {
  if (!(z.z > 0.0) || !std::isfinite(z.z)) throw ConfigError("relative entropy needs an oracle partition function");
  if (!(z.z_se < 0.01 * z.z)) throw ConfigError("oracle log Z is not accurate to 1%; refusing the entropy estimate");
  const auto [mean, se] = batch_means(log_densities);
  const double vol = std::pow(p.L, p.dim);
  StatRecord r;
  r.name = "relative_entropy_per_volume";
  r.value = (mean - std::log(z.z) - vol + loop_measure_mass(p)) / vol;
  r.stderr_ = std::hypot(se, z.z_se / z.z) / vol;
  r.n_samples = static_cast<long>(log_densities.size());
  r.seed = seed;
  r.params = {{"beta", p.beta}, {"mu", p.mu}, {"L", p.L}, {"d", static_cast<double>(p.dim)}};
  return r;
}

/// Number of pieces N_T of the cube chain: anchors move to the first point at
/// sup-distance delta from the previous anchor (segments clipped exactly).
inline long cube_chain_count(const Bridge& path, double delta) {
  if (!(delta > 0.0)) throw InputError("cube size must be positive");
  const int d = path.dim;
  Point anchor = path.start_point();
  long exits = 0;
  for (int k = 0; k < path.steps(); ++k) {
    Point p(path.node(k).begin(), path.node(k).end());
    const auto q = path.node(k + 1);
    while (true) {
      double s_exit = kInfinity;
      for (int i = 0; i < d; ++i) {
        const double dir = q[i] - p[i];
        if (dir == 0.0) continue;
        const double wall = anchor[i] + (dir > 0 ? delta : -delta);
        const double s = (wall - p[i]) / dir;
        if (s >= 0.0 && s < s_exit) s_exit = s;
      }
      if (!(s_exit < 1.0)) break;
      for (int i = 0; i < d; ++i) p[i] += s_exit * (q[i] - p[i]);
      anchor = p;
      ++exits;
    }
  }
  return exits + 1;
}

struct SausageReport {
  long paths = 0;
  long violations = 0;
  double max_ratio = 0.0;  // max |S| / (N_T (4 delta)^d)
  double mean_cubes = 0.0;
  double moment = 0.0;     // mean of exp(eps |S|^2)
  double moment_se = 0.0;
  std::vector<double> subsample_moments;
  double subsample_spread = 1.0;  // max / min of the subsample means
};

/// Sausage volume of a discretized path: exact in d = 1, voxel estimate otherwise.
inline VolumeEstimate path_sausage_volume(const Bridge& path, double delta, SausageSpec spec = {}) {
  if (path.dim == 1) {
    double lo = kInfinity, hi = -kInfinity;
    for (int k = 0; k <= path.steps(); ++k) {
      lo = std::min(lo, path.node(k)[0]);
      hi = std::max(hi, path.node(k)[0]);
    }
    return {hi - lo + 2.0 * delta, 0.0};
  }
  spec.thickness = delta;
  return sausage_volume(path, spec);
}

/// Brownian paths from 0 on [0, T] with M steps: pathwise check of
/// |S| <= N_T (4 delta)^d and the moment E[exp(eps |S|^2)] over disjoint subsamples.
inline SausageReport sausage_diagnostics(int d, long n_paths, double delta, double T, double eps, int M,
                                         RandomStream& rng, int subsamples = 4) {
  if (n_paths < subsamples || subsamples < 1) throw InputError("need at least one path per subsample");
  SausageReport rep;
  rep.paths = n_paths;
  const double cube = std::pow(4.0 * delta, d);
  const double sd = std::sqrt(T / M);
  std::vector<double> moments;
  moments.reserve(n_paths);
  double cubes = 0.0;
  for (long n = 0; n < n_paths; ++n) {
    Bridge path(d, TimeGrid(T, M));
    for (int k = 1; k <= M; ++k)
      for (int i = 0; i < d; ++i) path.node(k)[i] = path.node(k - 1)[i] + sd * rng.normal();
    const long N = cube_chain_count(path, delta);
    const VolumeEstimate v = path_sausage_volume(path, delta);
    const double bound = static_cast<double>(N) * cube;
    if (v.value - v.error > bound) ++rep.violations;
    rep.max_ratio = std::max(rep.max_ratio, v.value / bound);
    cubes += static_cast<double>(N);
    moments.push_back(std::exp(eps * v.value * v.value));
  }
  rep.mean_cubes = cubes / n_paths;
  double m = 0, m2 = 0;
  for (double x : moments) {
    m += x;
    m2 += x * x;
  }
  rep.moment = m / n_paths;
  rep.moment_se = std::sqrt(std::max(0.0, m2 / n_paths - rep.moment * rep.moment) / std::max<long>(1, n_paths - 1));
  const long per = n_paths / subsamples;
  double lo = kInfinity, hi = 0.0;
  for (int s = 0; s < subsamples; ++s) {
    double a = 0;
    for (long i = 0; i < per; ++i) a += moments[s * per + i];
    a /= per;
    rep.subsample_moments.push_back(a);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  rep.subsample_spread = hi / lo;
  return rep;
}

/// Sum of Poisson(lambda) probabilities from k stepping by dir (+1 or -1)
/// while the terms shrink; only valid moving away from the mode.
inline double poisson_tail_from(long k, double lambda, int dir) {
  double term = std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(k + 1.0));
  double sum = 0.0;
  for (long i = k; i >= 0; i += dir) {
    sum += term;
    if (term <= 1e-18 * sum) break;
    term *= dir > 0 ? lambda / static_cast<double>(i + 1) : static_cast<double>(i) / lambda;
  }
  return std::min(sum, 1.0);
}

/// Two-sided exact Poisson p-value 2 min(P(X <= k), P(X >= k)), capped at 1.
inline double poisson_two_sided_p(long k, double lambda) {
  if (k < 0 || !(lambda >= 0.0)) throw InputError("poisson test needs k >= 0 and lambda >= 0");
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  const double mode = std::floor(lambda);
  const double lower = k <= mode ? poisson_tail_from(k, lambda, -1) : 1.0 - poisson_tail_from(k + 1, lambda, +1);
  const double upper = k >= mode ? poisson_tail_from(k, lambda, +1) : 1.0 - poisson_tail_from(k - 1, lambda, -1);
  return std::clamp(2.0 * std::min(lower, upper), 0.0, 1.0);
}

struct TwoSampleResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) s += std::pow(y, (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(s, 0.0, 1.0);
}

/// P(D >= d) under H0 for sample sizes n, m by lattice-path counting, with
/// d given as the integer D n m.
inline double ks_exact_p(int n, int m, long dnm) {
  std::vector<long double> row(m + 1, 0.0L);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= m; ++j) {
      const long gap = std::labs(static_cast<long>(i) * m - static_cast<long>(j) * n);
      if (gap >= dnm) {
        row[j] = 0.0L;
        continue;
      }
      if (i == 0 && j == 0) row[j] = 1.0L;
      else row[j] = (i > 0 ? row[j] : 0.0L) + (j > 0 ? row[j - 1] : 0.0L);
    }
  }
  long double total = 1.0L;
  for (int k = 1; k <= m; ++k) total = total * (n + k) / k;
  return std::clamp(static_cast<double>(1.0L - row[m] / total), 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test; exact p-values for n, m <= 30.
inline TwoSampleResult two_sample_test(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw InputError("two-sample test needs nonempty samples");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const std::size_t n = xs.size(), m = ys.size();
  std::size_t i = 0, j = 0;
  long best = 0;  // max |i m - j n|
  while (i < n || j < m) {
    const double v = j == m || (i < n && xs[i] <= ys[j]) ? xs[i] : ys[j];
    while (i < n && xs[i] == v) ++i;
    while (j < m && ys[j] == v) ++j;
    best = std::max(best, std::labs(static_cast<long>(i * m) - static_cast<long>(j * n)));
  }
  TwoSampleResult r;
  r.statistic = static_cast<double>(best) / static_cast<double>(n * m);
  if (best == 0) return r;
  if (n <= 30 && m <= 30) {
    r.exact = true;
    r.p_value = ks_exact_p(static_cast<int>(n), static_cast<int>(m), best);
    return r;
  }
  const double en = std::sqrt(static_cast<double>(n * m) / static_cast<double>(n + m));
  r.p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * r.statistic);
  return r;
}

}  // namespace bosegas
