#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "bosegas/core.hpp"
#include "bosegas/interactions.hpp"
#include "bosegas/representations.hpp"
#include "bosegas/trajectories.hpp"

namespace bosegas {

struct ModelParams {
  double beta = 1.0;
  double mu = 0.0;
  double L = 1.0;
  int dim = 1;

  Window window() const { return {dim, L}; }
  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
    if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("L must be positive");
    if (dim < 1) throw ConfigError("dimension must be >= 1");
  }
};

enum class QuadratureRule { left, midpoint };

/// Time discretization of the slice integrals. Left: U at nodes 0..M-1.
/// Midpoint: U at the segment midpoints, which makes s -> beta - s an exact
/// permutation of the quadrature points.
struct QuadratureSpec {
  QuadratureRule rule = QuadratureRule::left;
};

namespace detail {

/// Collects, for quadrature point k, the positions of all bridges.
template <class Paths>
PointCloud quadrature_slice(const Paths& paths, int dim, int k, QuadratureRule rule) {
  PointCloud xi(dim);
  xi.coords.reserve(paths.size() * static_cast<std::size_t>(dim));
  for (const Bridge* b : paths) {
    if (rule == QuadratureRule::left) {
      xi.push(b->node(k));
    } else {
      auto a = b->node(k), c = b->node(k + 1);
      for (int i = 0; i < dim; ++i) xi.coords.push_back(0.5 * (a[i] + c[i]));
    }
  }
  return xi;
}

template <class Paths>
bool all_nodes_in(const Paths& paths, const Window& w) {
  for (const Bridge* b : paths)
    for (int k = 0; k <= b->steps(); ++k)
      if (!w.contains(b->node(k))) return false;
  return true;
}

/// beta/M * sum_k energy(slice_k); +inf as soon as one slice is +inf.
template <class Paths, class SliceEnergy>
double slice_integral(const Paths& paths, int dim, double beta, QuadratureRule rule, SliceEnergy energy) {
  if (paths.empty()) return beta * energy(PointCloud(dim));
  const int M = paths.front()->steps();
  for (const Bridge* b : paths)
    if (b->steps() != M) throw InputError("bridges on different time grids");
  double total = 0.0;
  for (int k = 0; k < M; ++k) {
    const double u = energy(quadrature_slice(paths, dim, k, rule));
    if (std::isinf(u) && u > 0) return kInfinity;
    total += u;
  }
  return checked_energy(total * (beta / M));
}

inline std::vector<const Bridge*> pointers(const FkConfig& g) {
  std::vector<const Bridge*> v;
  v.reserve(g.size());
  for (const auto& b : g.bridges) v.push_back(&b);
  return v;
}

}  // namespace detail

/// H_FK(gamma) = int_0^beta U^dir({sigma(s)}) ds; +inf if any node leaves the window.
inline double h_fk(const FkConfig& g, const EnergyModel& model, const ModelParams& params, QuadratureSpec quad = {}) {
  const auto paths = detail::pointers(g);
  if (!detail::all_nodes_in(paths, params.window())) return kInfinity;
  return detail::slice_integral(paths, params.dim, params.beta, quad.rule,
                                [&](const PointCloud& xi) { return model(xi); });
}

/// H_rl(rho) = int_0^beta U^dir({l(beta j + s)}) ds, evaluated on the loops
/// directly (loop order, then j), the same slices as the cut configuration.
inline double h_rl(const RlConfig& rho, const EnergyModel& model, const ModelParams& params, QuadratureSpec quad = {}) {
  const Window w = params.window();
  for (const auto& l : rho.loops)
    for (int k = 0; k <= l.path.steps(); ++k)
      if (!w.contains(l.path.node(k))) return kInfinity;
  const int d = params.dim;
  if (rho.loops.empty()) return params.beta * model(PointCloud(d));
  const int M = rho.loops.front().steps_per_bridge();
  double total = 0.0;
  PointCloud xi(d);
  for (int k = 0; k < M; ++k) {
    xi.clear();
    for (const auto& l : rho.loops) {
      if (l.steps_per_bridge() != M) throw InputError("loops on different time grids");
      for (int j = 0; j < l.length; ++j) {
        const int n = j * M + k;
        if (quad.rule == QuadratureRule::left) {
          xi.push(l.path.node(n));
        } else {
          auto a = l.path.node(n), c = l.path.node(n + 1);
          for (int i = 0; i < d; ++i) xi.coords.push_back(0.5 * (a[i] + c[i]));
        }
      }
    }
    const double u = model(xi);
    if (std::isinf(u) && u > 0) return kInfinity;
    total += u;
  }
  return checked_energy(total * (params.beta / M));
}

/// H^loc(gamma) = int_0^beta U_{Δ,loc}({sigma(s)} ∩ (Δ + B_R)) ds.
inline double h_loc(const FkConfig& g, const Box& delta, const PairPotential& pot, const ModelParams& params,
                    QuadratureSpec quad = {}) {
  const auto paths = detail::pointers(g);
  return detail::slice_integral(paths, params.dim, params.beta, quad.rule,
                                [&](const PointCloud& xi) { return local_energy(xi, delta, pot); });
}

/// H^ext(gamma) = int_0^beta U^dir({sigma(s)} ∩ Δ^c) ds.
inline double h_ext(const FkConfig& g, const Box& delta, const EnergyModel& model, const ModelParams& params,
                    QuadratureSpec quad = {}) {
  const auto paths = detail::pointers(g);
  if (!detail::all_nodes_in(paths, params.window())) return kInfinity;
  return detail::slice_integral(paths, params.dim, params.beta, quad.rule, [&](const PointCloud& xi) {
    return model(xi.filter([&](auto x) { return !delta.contains(x); }));
  });
}

/// Unnormalized log-density of the rooted-loop model against its Poisson
/// reference: beta mu sum_l length(l) - H_rl(rho).
inline double log_density_rl(const RlConfig& rho, const EnergyModel& model, const ModelParams& params,
                             QuadratureSpec quad = {}) {
  const double h = h_rl(rho, model, params, quad);
  if (std::isinf(h)) return -kInfinity;
  return params.beta * params.mu * static_cast<double>(rho.total_length()) - h;
}

/// Riemann zeta for s > 1: partial sum up to J plus the Euler-Maclaurin tail
/// J^{1-s}/(s-1) + J^{-s}/2 + s J^{-s-1}/12, whose remainder is below 1e-13.
inline double zeta(double s) {
  if (!(s > 1.0)) throw InputError("zeta series needs s > 1");
  constexpr int J = 2000;
  double sum = 0.0;
  for (int j = J - 1; j >= 1; --j) sum += std::pow(static_cast<double>(j), -s);
  const double Jd = J;
  return sum + std::pow(Jd, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(Jd, -s) + s * std::pow(Jd, -s - 1.0) / 12.0;
}

/// Total mass L^d (2 pi beta)^{-d/2} zeta(d/2 + 1) of the rooted loop measure.
inline double loop_measure_mass(const ModelParams& p) {
  return std::pow(p.L, p.dim) * std::pow(2.0 * std::numbers::pi * p.beta, -p.dim / 2.0) * zeta(p.dim / 2.0 + 1.0);
}

/// Per-volume entropy bound (2 pi beta)^{-d/2} zeta(d/2+1) + beta (1/r+1)^d (A+mu)^2 / (4B).
inline double entropy_bound_constant(const ModelParams& p, const SuperstabilityConstants& c) {
  if (!(c.B > 0.0)) throw InputError("entropy bound needs B > 0");
  const double am = c.A + p.mu;
  return std::pow(2.0 * std::numbers::pi * p.beta, -p.dim / 2.0) * zeta(p.dim / 2.0 + 1.0) +
         p.beta * std::pow(1.0 / c.r + 1.0, p.dim) * am * am / (4.0 * c.B);
}

/// beta (L/r+1)^d (A+mu)^2 / (4B): upper bound of log_density_rl.
inline double density_upper_bound(const ModelParams& p, const SuperstabilityConstants& c) {
  if (!(c.B > 0.0)) throw InputError("density bound needs B > 0");
  const double am = c.A + p.mu;
  return p.beta * std::pow(p.L / c.r + 1.0, p.dim) * am * am / (4.0 * c.B);
}

/// Standard normal mass of [a, b].
inline double normal_interval(double a, double b) {
  if (a >= 0.0) return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
  if (b <= 0.0) return normal_interval(-b, -a);
  return 1.0 - normal_interval(-kInfinity, a) - normal_interval(b, kInfinity);
}

/// Lattice offset distribution nu(p) = prod_i P(N(0,1) in a [p_i - 1/2, p_i + 1/2]),
/// a = r sqrt((1 - kappa)/beta).
struct CellMass {
  double r = 1.0;
  double beta = 1.0;
  double kappa = 0.5;

  double scale() const { return r * std::sqrt((1.0 - kappa) / beta); }
  double operator()(const std::vector<long>& p) const {
    const double a = scale();
    double v = 1.0;
    for (long k : p) {
      const double m = std::abs(static_cast<double>(k));
      v *= normal_interval((m - 0.5) * a, (m + 0.5) * a);
    }
    return v;
  }
  double log(const std::vector<long>& p) const { return std::log((*this)(p)); }
  /// Draws p by rounding a centered Gaussian of variance 1/a^2 per axis.
  std::vector<long> sample(int d, RandomStream& rng) const {
    const double sd = 1.0 / scale();
    std::vector<long> p(d);
    for (auto& k : p) k = static_cast<long>(std::floor(sd * rng.normal() + 0.5));
    return p;
  }
  /// Half-width of the window ||p||_inf <= 8/a + 2 holding all but 1e-8 of the mass.
  long truncation() const { return static_cast<long>(std::ceil(8.0 / scale())) + 2; }
};

inline double gaussian_cell_mass(const std::vector<long>& p, double r, double beta, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw InputError("kappa must lie in (0, 1)");
  return CellMass{r, beta, kappa}(p);
}

/// Per-point part of H_mp: (d/2) log(2 pi beta) + |sigma(x) - x|^2/(2 beta) + log nu(p) - log n_r(x + r p).
inline double h_mp_point_terms(const MpConfig& g, const std::vector<std::size_t>& target, const CellMass& nu) {
  const PointCloud xi = g.positions();
  double total = 0.0;
  const double d = g.dim;
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    const auto& m = g.points[i];
    const double n = static_cast<double>(target_cell(xi, m.x, m.mark.p, g.r).size());
    total += d / 2.0 * std::log(2.0 * std::numbers::pi * g.beta) + distance2(g.points[target[i]].x, m.x) / (2.0 * g.beta) +
             nu.log(m.mark.p) - std::log(n);
  }
  return total;
}

/// H_mp; +inf when the configuration is not authorized and permutation-wise.
inline double h_mp(const MpConfig& g, const EnergyModel& model, const ModelParams& params, const CellMass& nu,
                   QuadratureSpec quad = {}) {
  std::vector<std::size_t> target;
  try {
    target = mp_targets(g);
  } catch (const StructuralError&) {
    return kInfinity;
  }
  FkConfig decoded{g.dim, g.beta, {}};
  for (std::size_t i = 0; i < g.points.size(); ++i)
    decoded.bridges.push_back(unfold(g.points[i].x, g.points[target[i]].x, g.points[i].mark, g.beta));
  return add_energy(h_mp_point_terms(g, target, nu), h_fk(decoded, model, params, quad));
}

}  // namespace bosegas
