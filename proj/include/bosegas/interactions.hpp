#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bosegas/core.hpp"

namespace bosegas {

/// Finite point configuration in R^d stored as flat coordinates.
struct PointCloud {
  int dim = 1;
  std::vector<double> coords;

  PointCloud() = default;
  explicit PointCloud(int d) : dim(d) {}
  PointCloud(int d, std::initializer_list<Point> pts) : dim(d) {
    for (const auto& p : pts) push(p);
  }

  std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }
  bool empty() const { return coords.empty(); }
  std::span<const double> operator[](std::size_t i) const { return {coords.data() + i * dim, static_cast<std::size_t>(dim)}; }
  void push(std::span<const double> x) { coords.insert(coords.end(), x.begin(), x.end()); }
  void clear() { coords.clear(); }

  PointCloud translated(std::span<const double> v) const {
    PointCloud out = *this;
    for (std::size_t i = 0; i < out.coords.size(); ++i) out.coords[i] += v[i % dim];
    return out;
  }
  template <class Pred>
  PointCloud filter(Pred keep) const {
    PointCloud out(dim);
    for (std::size_t i = 0; i < size(); ++i)
      if (keep((*this)[i])) out.push((*this)[i]);
    return out;
  }
};

enum class PotentialKind { hard_core, bump, zero, custom };

/// Symmetric pair potential with finite range: phi(x) = 0 for |x| > range.
struct PairPotential {
  std::function<double(std::span<const double>)> phi;
  double range = 0.0;
  PotentialKind kind = PotentialKind::custom;
  /// Lower bound of phi, used as the local-energy lower bound in the DLR kernel.
  double lower_bound = 0.0;
};

/// Hyp II constants: U(xi) >= -A #xi + B sum_z n_z^2 with cells z + [-r/2, r/2)^d.
struct SuperstabilityConstants {
  double A = 0.0;
  double B = 1.0;
  double r = 1.0;
  /// True for the free gas, which is superstable only in a degenerate sense.
  bool degenerate = false;
};

/// Interaction U over finite point configurations.
struct EnergyModel {
  std::string name;
  std::function<double(const PointCloud&)> evaluate;
  SuperstabilityConstants constants;
  std::optional<PairPotential> pair;

  double operator()(const PointCloud& xi) const { return checked_energy(evaluate(xi)); }
  double empty_energy(int dim) const { return (*this)(PointCloud(dim)); }
};

/// U(xi) = 1/2 sum_{x != y} phi(x - y); +inf propagates.
inline double pair_energy(const PointCloud& xi, const PairPotential& pot) {
  double total = 0.0;
  Point diff(xi.dim);
  const double r2 = pot.range * pot.range;
  for (std::size_t i = 0; i < xi.size(); ++i)
    for (std::size_t j = i + 1; j < xi.size(); ++j) {
      auto a = xi[i], b = xi[j];
      double s = 0.0;
      for (int k = 0; k < xi.dim; ++k) {
        diff[k] = a[k] - b[k];
        s += diff[k] * diff[k];
      }
      if (s > r2) continue;
      const double v = pot.phi(diff);
      if (std::isinf(v) && v > 0) return kInfinity;
      total += v;
    }
  return checked_energy(total);
}

/// U^dir(xi): U(xi) if xi lies in the half-open window, else +inf.
inline double dirichlet_energy(const PointCloud& xi, const Window& window, const EnergyModel& model) {
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (!window.contains(xi[i])) return kInfinity;
  return model(xi);
}

/// U_{Δ,loc}(xi) = 1/2 sum_{x≠y ∈ xi∩Δ} phi(x-y) + sum_{x ∈ xi∩Δ} sum_{y ∈ xi∩((Δ+B_R)\Δ)} phi(x-y).
inline double local_energy(const PointCloud& xi, const Box& delta, const PairPotential& pot) {
  const PointCloud inner = xi.filter([&](auto x) { return delta.contains(x); });
  const PointCloud shell = xi.filter([&](auto x) { return !delta.contains(x) && delta.distance(x) <= pot.range; });
  double total = pair_energy(inner, pot);
  if (std::isinf(total)) return total;
  const double r2 = pot.range * pot.range;
  Point diff(xi.dim);
  for (std::size_t i = 0; i < inner.size(); ++i)
    for (std::size_t j = 0; j < shell.size(); ++j) {
      double s = 0.0;
      for (int k = 0; k < xi.dim; ++k) {
        diff[k] = inner[i][k] - shell[j][k];
        s += diff[k] * diff[k];
      }
      if (s > r2) continue;
      const double v = pot.phi(diff);
      if (std::isinf(v) && v > 0) return kInfinity;
      total += v;
    }
  return checked_energy(total);
}

/// Index k of the half-open cell origin + r k + [-r/2, r/2)^d containing x.
/// Every lattice binning in the library goes through this function.
inline std::vector<long> lattice_index(std::span<const double> x, std::span<const double> origin, double r) {
  std::vector<long> k(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) k[i] = static_cast<long>(std::floor((x[i] - origin[i]) / r + 0.5));
  return k;
}

/// Occupation numbers n_z of the cells z + C_r, z in r Z^d, keyed by z / r.
inline std::map<std::vector<long>, int> cell_counts(const PointCloud& xi, double r) {
  if (!(r > 0.0)) throw InputError("cell side must be positive");
  const Point origin(xi.dim, 0.0);
  std::map<std::vector<long>, int> counts;
  for (std::size_t i = 0; i < xi.size(); ++i) ++counts[lattice_index(xi[i], origin, r)];
  return counts;
}

struct AuditResult {
  bool pass = true;
  double margin = 0.0;  // U(xi) - (-A #xi + B sum n_z^2)
};

inline AuditResult superstability_audit(const EnergyModel& model, const SuperstabilityConstants& c, const PointCloud& xi,
                                        double tolerance = 1e-12) {
  const double u = model(xi);
  double squares = 0.0;
  for (const auto& [z, n] : cell_counts(xi, c.r)) squares += static_cast<double>(n) * n;
  const double rhs = -c.A * static_cast<double>(xi.size()) + c.B * squares;
  const double margin = std::isinf(u) ? kInfinity : u - rhs;
  return {margin >= -tolerance, margin};
}

inline EnergyModel pair_model(std::string name, PairPotential pot, SuperstabilityConstants c) {
  EnergyModel m;
  m.name = std::move(name);
  m.constants = c;
  m.pair = pot;
  m.evaluate = [pot](const PointCloud& xi) { return pair_energy(xi, pot); };
  return m;
}

/// Upper bound on the number of points with pairwise distances >= a inside a
/// half-open cube of side r (ball packing into the a/2-enlarged cube).
inline int hard_core_cell_capacity(int d, double a, double r) {
  if (r * std::sqrt(static_cast<double>(d)) < a) return 1;
  return static_cast<int>(std::floor(std::pow(r + a, d) / (unit_ball_volume(d) * std::pow(a / 2.0, d))));
}

/// phi = +inf on |x| < a. Admissible configurations have U = 0 and at most
/// k_max points per cell, so A = B k_max certifies Hyp II.
inline EnergyModel hard_core_model(int d, double a, double r = -1.0, double B = 1.0) {
  if (!(a > 0.0)) throw ConfigError("hard-core diameter must be positive");
  if (r <= 0.0) r = a / (2.0 * std::sqrt(static_cast<double>(d)));
  PairPotential pot;
  pot.kind = PotentialKind::hard_core;
  pot.range = a;
  pot.phi = [a](std::span<const double> x) { return norm2(x) < a * a ? kInfinity : 0.0; };
  const int kmax = hard_core_cell_capacity(d, a, r);
  return pair_model("hard_core", pot, {B * kmax, B, r, false});
}

/// Smooth nonnegative bump phi(x) = eps exp(1 - 1/(1 - (|x|/R)^2)) on |x| < R.
/// Two points of one cell of side R/(2 sqrt d) are closer than R/2, where
/// phi >= eps e^{-1/3}; hence A = B = eps e^{-1/3} / 2.
inline EnergyModel bump_model(int d, double eps, double R) {
  if (!(eps > 0.0) || !(R > 0.0)) throw ConfigError("bump strength and range must be positive");
  PairPotential pot;
  pot.kind = PotentialKind::bump;
  pot.range = R;
  pot.phi = [eps, R](std::span<const double> x) {
    const double q = norm2(x) / (R * R);
    return q < 1.0 ? eps * std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
  };
  const double half = eps * std::exp(-1.0 / 3.0) / 2.0;
  return pair_model("bump", pot, {half, half, R / (2.0 * std::sqrt(static_cast<double>(d))), false});
}

/// Free gas. Flagged degenerate: no B > 0 satisfies Hyp II.
inline EnergyModel zero_model(double r = 1.0) {
  PairPotential pot;
  pot.kind = PotentialKind::zero;
  pot.range = 0.0;
  pot.phi = [](std::span<const double>) { return 0.0; };
  EnergyModel m = pair_model("zero", pot, {0.0, 0.0, r, true});
  m.evaluate = [](const PointCloud&) { return 0.0; };
  return m;
}

}  // namespace bosegas
