#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include "bosegas/hamiltonians.hpp"
#include "bosegas/random.hpp"
#include "bosegas/representations.hpp"
#include "bosegas/trajectories.hpp"

namespace bosegas {

using Observable = std::function<double(const FkConfig&)>;

/// Gauss-Legendre nodes and weights on [lo, hi].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw InputError("quadrature order must be >= 1");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * z;
    w[i] = (hi - lo) / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

struct OracleSpec {
  int n_max = 3;
  /// Gauss-Legendre order per axis for the first point; point i uses nodes + 2i,
  /// so quadrature positions of different points never coincide.
  int nodes = 6;
  /// Bridge Monte Carlo samples per term (one term per (N, sigma), cycle type, or N).
  long samples = 100000;
  int steps_per_beta = kDefaultStepsPerBeta;
  double budget = 1e6;
  double mp_r = 4.0;
  double mp_kappa = 0.5;
  bool fk_route = true;
  bool cycle_route = true;
  bool mp_route = true;
  QuadratureSpec quad;

  /// sum_{N <= n_max} N! prod_{i < N} (nodes + 2i)^d.
  double cost(int d) const {
    double total = 0.0, perms = 1.0, tuples = 1.0;
    for (int N = 0; N <= n_max; ++N) {
      if (N > 0) {
        perms *= N;
        tuples *= std::pow(nodes + 2.0 * (N - 1), d);
      }
      total += perms * tuples;
    }
    return total;
  }

  void validate(int d) const {
    if (n_max < 0 || n_max > 6) throw ConfigError("oracle n_max must lie in [0, 6]");
    if (nodes < 1) throw ConfigError("oracle needs at least one quadrature node");
    if (samples < 2) throw ConfigError("oracle needs at least two samples per term");
    if (steps_per_beta < 1) throw ConfigError("steps_per_beta must be >= 1");
    if (!(mp_r > 0.0) || !(mp_kappa > 0.0 && mp_kappa < 1.0)) throw ConfigError("mp route needs r > 0, kappa in (0,1)");
    const double c = cost(d);
    if (c > budget) throw BudgetError("oracle cost exceeds budget", c);
  }
};

/// Z and E[f] = F/Z with standard errors; the E[f] error uses the delta method.
struct OracleEstimate {
  double z = 0.0;
  double z_se = 0.0;
  double ef = 0.0;
  double ef_se = 0.0;
  long samples = 0;
};

struct OracleResult {
  OracleEstimate fk;
  OracleEstimate cycle_type;
  OracleEstimate mp;
  double cost = 0.0;
};

namespace detail {

struct OracleAccumulator {
  double z = 0.0, f = 0.0, var_z = 0.0, var_f = 0.0, cov = 0.0;
  long samples = 0;

  void add_exact(double w, double fv) {
    z += w;
    f += w * fv;
  }

  /// One quadrature cell: weight W times the MC mean of (g, g f) over K draws.
  template <class Draw>
  void add_cell(double W, long K, Draw&& draw) {
    double sg = 0, sgf = 0, sgg = 0, sgfgf = 0, sggf = 0;
    for (long k = 0; k < K; ++k) {
      const auto [g, fv] = draw();
      const double gf = g == 0.0 ? 0.0 : g * fv;
      sg += g;
      sgf += gf;
      sgg += g * g;
      sgfgf += gf * gf;
      sggf += g * gf;
    }
    const double n = static_cast<double>(K);
    const double mg = sg / n, mgf = sgf / n;
    const double vg = std::max(0.0, (sgg - n * mg * mg) / (n - 1));
    const double vgf = std::max(0.0, (sgfgf - n * mgf * mgf) / (n - 1));
    const double cv = (sggf - n * mg * mgf) / (n - 1);
    z += W * mg;
    f += W * mgf;
    var_z += W * W * vg / n;
    var_f += W * W * vgf / n;
    cov += W * W * cv / n;
    samples += K;
  }

  OracleEstimate result() const {
    OracleEstimate e;
    e.z = z;
    e.z_se = std::sqrt(var_z);
    e.ef = f / z;
    e.ef_se = std::sqrt(std::max(0.0, var_f - 2.0 * e.ef * cov + e.ef * e.ef * var_z)) / z;
    e.samples = samples;
    return e;
  }
};

/// Tensor quadrature for k points: point i uses order base + 2i per axis on the window.
struct PositionRule {
  std::vector<std::vector<Point>> positions;  // per point index
  std::vector<std::vector<double>> weights;

  PositionRule(int k, int d, int base, double L) {
    for (int i = 0; i < k; ++i) {
      auto [x, w] = gauss_legendre(base + 2 * i, -L / 2.0, L / 2.0);
      std::vector<Point> pos{Point{}};
      std::vector<double> wt{1.0};
      for (int a = 0; a < d; ++a) {
        std::vector<Point> np;
        std::vector<double> nw;
        for (std::size_t t = 0; t < pos.size(); ++t)
          for (std::size_t q = 0; q < x.size(); ++q) {
            Point p = pos[t];
            p.push_back(x[q]);
            np.push_back(std::move(p));
            nw.push_back(wt[t] * w[q]);
          }
        pos = std::move(np);
        wt = std::move(nw);
      }
      positions.push_back(std::move(pos));
      weights.push_back(std::move(wt));
    }
  }

  std::size_t tuples() const {
    std::size_t t = 1;
    for (const auto& p : positions) t *= p.size();
    return t;
  }

  /// Calls fn(points, weight) for every tuple.
  template <class Fn>
  void for_each(Fn&& fn) const {
    const std::size_t k = positions.size();
    std::vector<std::size_t> idx(k, 0);
    std::vector<Point> pts(k);
    while (true) {
      double w = 1.0;
      for (std::size_t i = 0; i < k; ++i) {
        pts[i] = positions[i][idx[i]];
        w *= weights[i][idx[i]];
      }
      fn(static_cast<const std::vector<Point>&>(pts), w);
      std::size_t i = 0;
      while (i < k && ++idx[i] == positions[i].size()) idx[i++] = 0;
      if (i == k) break;
    }
  }
};

inline std::vector<std::vector<int>> partitions(int n, int max_part) {
  if (n == 0) return {{}};
  std::vector<std::vector<int>> out;
  for (int j = std::min(n, max_part); j >= 1; --j)
    for (auto rest : partitions(n - j, j)) {
      rest.insert(rest.begin(), j);
      out.push_back(std::move(rest));
    }
  return out;
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace detail

/// All cycle types of N as non-increasing part lists.
inline std::vector<std::vector<int>> cycle_types(int N) { return detail::partitions(N, N); }

/// 1 / prod_j (delta_j! j^delta_j): fraction of S_N with the given cycle type, times N!.
inline double cycle_type_coefficient(const std::vector<int>& type) {
  std::map<int, int> delta;
  for (int j : type) ++delta[j];
  double c = 1.0;
  for (auto [j, n] : delta) c /= detail::factorial(n) * std::pow(static_cast<double>(j), n);
  return c;
}

/// Brute-force partition function of the FK model truncated to N <= n_max:
/// Z = sum_N e^{-L^d}/N! int dx^N sum_sigma e^{beta mu N} prod W-mass E[e^{-H_FK}],
/// together with the cycle-type and marked-point expansions of the same Z.
inline OracleResult enumeration_oracle(const OracleSpec& spec, const EnergyModel& model, const ModelParams& params,
                                       const Observable& f, std::uint64_t seed) {
  params.validate();
  spec.validate(params.dim);
  const int d = params.dim;
  const double beta = params.beta;
  const int M = spec.steps_per_beta;
  const double prefactor = std::exp(-std::pow(params.L, d));
  const FkConfig empty{d, beta, {}};
  const double w0 = prefactor * std::exp(-h_fk(empty, model, params, spec.quad));
  const double f0 = f(empty);
  OracleResult res;
  res.cost = spec.cost(d);

  auto cell_samples = [&](std::size_t tuples) {
    return std::max<long>(2, (spec.samples + static_cast<long>(tuples) - 1) / static_cast<long>(tuples));
  };

  if (spec.fk_route) {
    detail::OracleAccumulator acc;
    acc.add_exact(w0, f0);
    RandomStream rng(seed, 1);
    for (int N = 1; N <= spec.n_max; ++N) {
      const detail::PositionRule rule(N, d, spec.nodes, params.L);
      const long K = cell_samples(rule.tuples());
      std::vector<int> sigma(N);
      std::iota(sigma.begin(), sigma.end(), 0);
      do {
        rule.for_each([&](const std::vector<Point>& x, double w) {
          double W = prefactor / detail::factorial(N) * w * std::exp(beta * params.mu * N);
          for (int i = 0; i < N; ++i) W *= unnormalized_mass(x[i], x[sigma[i]], beta);
          acc.add_cell(W, K, [&]() {
            FkConfig g{d, beta, {}};
            for (int i = 0; i < N; ++i) g.bridges.push_back(sample_bridge(x[i], x[sigma[i]], beta, M, rng));
            const double h = h_fk(g, model, params, spec.quad);
            if (std::isinf(h)) return std::pair{0.0, 0.0};
            return std::pair{std::exp(-h), f(g)};
          });
        });
      } while (std::next_permutation(sigma.begin(), sigma.end()));
    }
    res.fk = acc.result();
  }

  if (spec.cycle_route) {
    detail::OracleAccumulator acc;
    acc.add_exact(w0, f0);
    RandomStream rng(seed, 2);
    for (int N = 1; N <= spec.n_max; ++N) {
      for (const auto& type : cycle_types(N)) {
        const int k = static_cast<int>(type.size());
        const detail::PositionRule rule(k, d, spec.nodes, params.L);
        const long K = cell_samples(rule.tuples());
        double base = prefactor * cycle_type_coefficient(type) * std::exp(beta * params.mu * N);
        for (int j : type) base *= std::pow(2.0 * std::numbers::pi * beta * j, -d / 2.0);
        rule.for_each([&](const std::vector<Point>& x, double w) {
          acc.add_cell(base * w, K, [&]() {
            RlConfig rho{d, beta, {}};
            for (int i = 0; i < k; ++i)
              rho.loops.push_back(Loop{type[i], sample_bridge(x[i], x[i], beta * type[i], M * type[i], rng)});
            const double h = h_rl(rho, model, params, spec.quad);
            if (std::isinf(h)) return std::pair{0.0, 0.0};
            return std::pair{std::exp(-h), f(cut_rl_to_fk(rho))};
          });
        });
      }
    }
    res.cycle_type = acc.result();
  }

  if (spec.mp_route) {
    detail::OracleAccumulator acc;
    acc.add_exact(w0, f0);
    RandomStream rng(seed, 3);
    const CellMass nu{spec.mp_r, beta, spec.mp_kappa};
    for (int N = 1; N <= spec.n_max; ++N) {
      const detail::PositionRule rule(N, d, spec.nodes, params.L);
      const long K = cell_samples(rule.tuples()) * static_cast<long>(detail::factorial(N));
      rule.for_each([&](const std::vector<Point>& x, double w) {
        const double W = prefactor / detail::factorial(N) * w * std::exp(beta * params.mu * N);
        acc.add_cell(W, K, [&]() {
          MpConfig g{d, beta, spec.mp_r, {}};
          for (int i = 0; i < N; ++i)
            g.points.push_back({x[i], MarkTriple{nu.sample(d, rng), rng.uniform(), sample_standard_shape(d, M, rng)}});
          const double h = h_mp(g, model, params, nu, spec.quad);
          if (std::isinf(h)) return std::pair{0.0, 0.0};
          return std::pair{std::exp(-h), f(decode_mp_to_fk(g))};
        });
      });
    }
    res.mp = acc.result();
  }
  return res;
}

}  // namespace bosegas
