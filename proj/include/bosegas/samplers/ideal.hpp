#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "bosegas/hamiltonians.hpp"
#include "bosegas/random.hpp"
#include "bosegas/representations.hpp"
#include "bosegas/trajectories.hpp"

namespace bosegas {

/// Uniform point in a window or a box.
inline Point uniform_point(const Window& w, RandomStream& rng) {
  Point x(w.dim);
  for (auto& c : x) {
    c = rng.uniform(-w.side / 2.0, w.side / 2.0);
    if (c >= w.side / 2.0) c = -w.side / 2.0;  // rounding guard for the half-open window
  }
  return x;
}

inline Point uniform_point(const Box& b, RandomStream& rng) {
  Point x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
  return x;
}

template <class Region>
bool loop_confined(const Loop& l, const Region& region) {
  for (int k = 0; k <= l.path.steps(); ++k)
    if (!region.contains(l.path.node(k))) return false;
  return true;
}

/// Free rooted loop of length j through x: a bridge x -> x over beta j on M j steps.
inline Loop sample_loop(std::span<const double> x, int j, double beta, int steps_per_beta, RandomStream& rng) {
  return Loop{j, sample_bridge(x, x, beta * j, steps_per_beta * j, rng)};
}

/// Length intensity w(j) = e^{beta mu j} (2 pi beta j)^{-d/2} / j of the tilted loop measure.
inline double loop_length_weight(int j, double beta, double mu, int d) {
  return std::exp(beta * mu * j) * std::pow(2.0 * std::numbers::pi * beta * j, -d / 2.0) / j;
}

/// Tail sum_{j > j_max} e^{beta mu j} j^{-d/2-1}; +inf when it diverges.
inline double length_tail_bound(double beta, double mu, int d, int j_max) {
  if (beta * mu > 0.0) return kInfinity;
  if (beta * mu == 0.0 && d / 2.0 + 1.0 <= 1.0) return kInfinity;
  double sum = 0.0;
  for (int j = j_max + 1; j < j_max + 200000; ++j) {
    const double t = std::exp(beta * mu * j) * std::pow(static_cast<double>(j), -d / 2.0 - 1.0);
    sum += t;
    if (t < 1e-18 * sum) break;
  }
  return sum;
}

struct IdealSpec {
  int steps_per_beta = kDefaultStepsPerBeta;
  /// Largest loop length; 0 means untruncated (requires beta mu < 0).
  int j_max = 0;
};

/// Ideal-gas loop soup in a region: for every length j a Poisson number of
/// loops with mean |region| w(j), uniform roots, free shapes, then thinning to
/// the loops whose grid nodes all lie in the region.
template <class Region>
RlConfig sample_ideal_loops(const Region& region, int dim, double beta, double mu, const IdealSpec& spec,
                            RandomStream& rng) {
  if (spec.j_max <= 0 && !(beta * mu < 0.0))
    throw ConfigError("ideal sampler needs beta*mu < 0 or a finite j_max");
  RlConfig rho{dim, beta, {}};
  const double vol = region.volume();
  auto emit = [&](int j) {
    const Point x = uniform_point(region, rng);
    Loop l = sample_loop(x, j, beta, spec.steps_per_beta, rng);
    if (loop_confined(l, region)) rho.loops.push_back(std::move(l));
  };
  if (spec.j_max > 0) {
    for (int j = 1; j <= spec.j_max; ++j) {
      const std::uint64_t n = rng.poisson(vol * loop_length_weight(j, beta, mu, dim));
      for (std::uint64_t i = 0; i < n; ++i) emit(j);
    }
    return rho;
  }
  // Untruncated: explicit lengths up to J, then the remaining Poisson tail
  // mass with lengths drawn by inversion.
  const int J = 64;
  for (int j = 1; j <= J; ++j) {
    const std::uint64_t n = rng.poisson(vol * loop_length_weight(j, beta, mu, dim));
    for (std::uint64_t i = 0; i < n; ++i) emit(j);
  }
  double tail = 0.0;
  for (int j = J + 1;; ++j) {
    const double w = vol * loop_length_weight(j, beta, mu, dim);
    tail += w;
    if (w < 1e-17 * tail || w == 0.0) break;
  }
  const std::uint64_t n_tail = rng.poisson(tail);
  for (std::uint64_t i = 0; i < n_tail; ++i) {
    double target = rng.uniform() * tail;
    int j = J + 1;
    for (;; ++j) {
      target -= vol * loop_length_weight(j, beta, mu, dim);
      if (target <= 0.0) break;
    }
    emit(j);
  }
  return rho;
}

inline RlConfig sample_ideal_rl(const ModelParams& p, const IdealSpec& spec, RandomStream& rng) {
  return sample_ideal_loops(p.window(), p.dim, p.beta, p.mu, spec, rng);
}

struct ConfinedBridge {
  Bridge bridge;
  long attempts = 0;
  double acceptance() const { return 1.0 / static_cast<double>(attempts); }
};

/// Bridge x -> y over t conditioned to keep every grid node in Δ, by rejection.
inline ConfinedBridge confined_bridge(std::span<const double> x, std::span<const double> y, double t, const Box& delta,
                                      int M, RandomStream& rng, long retry_cap = 100000) {
  if (!delta.contains(x) || !delta.contains(y)) throw InputError("confined bridge endpoints must lie in the compact");
  for (long a = 1; a <= retry_cap; ++a) {
    Bridge b = sample_bridge(x, y, t, M, rng);
    if (path_inside_box(b, delta)) return {std::move(b), a};
  }
  throw StructuralError("confined bridge retry cap exceeded; enlarge the compact or decrease beta");
}

/// Empirical-field shift: gamma + v with v uniform in the window.
inline std::pair<FkConfig, Point> empirical_shift(const FkConfig& g, const ModelParams& p, RandomStream& rng) {
  Point v = uniform_point(p.window(), rng);
  return {g.translated(v), v};
}

}  // namespace bosegas
