#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bosegas/core.hpp"
#include "bosegas/random.hpp"

namespace bosegas {

inline constexpr int kDefaultStepsPerBeta = 64;

/// Uniform time grid 0 = s_0 < ... < s_M = duration.
struct TimeGrid {
  double duration = 1.0;
  int steps = kDefaultStepsPerBeta;

  TimeGrid() = default;
  TimeGrid(double t, int m) : duration(t), steps(m) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InputError("time grid duration must be positive and finite");
    if (m < 2) throw InputError("time grid needs at least 2 steps");
  }

  double spacing() const { return duration / steps; }
  /// Node time; the last node is the stored duration itself.
  double time(int k) const { return k == steps ? duration : duration * k / steps; }
  int nodes() const { return steps + 1; }
  bool operator==(const TimeGrid&) const = default;
};

/// Discretized continuous path on a uniform grid, stored as (M+1) x d
/// row-major node coordinates. Used both for bridges of C_beta and for the
/// standardized mark shapes.
struct Bridge {
  int dim = 1;
  TimeGrid grid;
  std::vector<double> nodes;

  Bridge() = default;
  Bridge(int d, TimeGrid g) : dim(d), grid(g), nodes(static_cast<std::size_t>(g.nodes()) * d, 0.0) {
    if (d < 1) throw InputError("dimension must be >= 1");
  }

  int steps() const { return grid.steps; }
  std::span<double> node(int k) { return {nodes.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> node(int k) const {
    return {nodes.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> start() const { return node(0); }
  std::span<const double> end() const { return node(grid.steps); }
  Point start_point() const { return Point(start().begin(), start().end()); }
  Point end_point() const { return Point(end().begin(), end().end()); }

  bool valid() const {
    return dim >= 1 && grid.steps >= 2 && nodes.size() == static_cast<std::size_t>(grid.nodes()) * dim && all_finite(nodes);
  }
  bool operator==(const Bridge& o) const { return dim == o.dim && grid == o.grid && nodes == o.nodes; }

  Bridge translated(std::span<const double> v) const {
    Bridge b = *this;
    for (int k = 0; k < grid.nodes(); ++k)
      for (int i = 0; i < dim; ++i) b.node(k)[i] += v[i];
    return b;
  }
};

/// Rooted loop of length j: a closed path over [0, beta*j].
struct Loop {
  int length = 1;
  Bridge path;

  double beta() const { return path.grid.duration / length; }
  /// Grid steps per unit length (M of the bridges it cuts into).
  int steps_per_bridge() const { return path.grid.steps / length; }
  std::span<const double> root() const { return path.start(); }
  bool closed() const { return bit_equal(path.start(), path.end()); }
  bool operator==(const Loop&) const = default;
};

/// Mark (p, u, omega) attached to a point in the marked-point encoding.
struct MarkTriple {
  std::vector<long> p;
  double u = 0.0;
  Bridge omega;  // duration 1, omega(0) = omega(1) = 0

  bool valid() const {
    return u >= 0.0 && u <= 1.0 && omega.valid() && static_cast<int>(p.size()) == omega.dim &&
           norm2(omega.start()) == 0.0 && norm2(omega.end()) == 0.0;
  }
  bool operator==(const MarkTriple&) const = default;
};

/// W^t_{x,y}(C_t) = (2 pi t)^{-d/2} exp(-|y-x|^2 / 2t).
inline double unnormalized_mass(std::span<const double> x, std::span<const double> y, double t) {
  if (!(t > 0.0)) throw InputError("bridge duration must be positive");
  if (x.size() != y.size()) throw InputError("dimension mismatch");
  const double d = static_cast<double>(x.size());
  return std::pow(2.0 * std::numbers::pi * t, -d / 2.0) * std::exp(-distance2(x, y) / (2.0 * t));
}

/// log of unnormalized_mass, safe for large separations.
inline double log_unnormalized_mass(std::span<const double> x, std::span<const double> y, double t) {
  const double d = static_cast<double>(x.size());
  return -d / 2.0 * std::log(2.0 * std::numbers::pi * t) - distance2(x, y) / (2.0 * t);
}

/// Brownian bridge from x to y over [0,t], exact on the grid nodes: each node
/// is drawn from the Gaussian conditional law given the previous node and y.
inline Bridge sample_bridge(std::span<const double> x, std::span<const double> y, double t, int M, RandomStream& rng) {
  if (x.size() != y.size() || x.empty()) throw InputError("bridge endpoints must share a dimension >= 1");
  if (!all_finite(x) || !all_finite(y)) throw InputError("bridge endpoints must be finite");
  const int d = static_cast<int>(x.size());
  Bridge b(d, TimeGrid(t, M));
  std::copy(x.begin(), x.end(), b.node(0).begin());
  for (int k = 0; k + 1 < M; ++k) {
    const double remaining = t - b.grid.time(k);
    const double dt = b.grid.time(k + 1) - b.grid.time(k);
    const double frac = dt / remaining;
    const double sd = std::sqrt(dt * (remaining - dt) / remaining);
    auto cur = b.node(k);
    auto nxt = b.node(k + 1);
    for (int i = 0; i < d; ++i) nxt[i] = cur[i] + (y[i] - cur[i]) * frac + sd * rng.normal();
  }
  std::copy(y.begin(), y.end(), b.node(M).begin());
  return b;
}

/// Standard bridge shape on [0,1] from 0 to 0.
inline Bridge sample_standard_shape(int d, int M, RandomStream& rng) {
  const Point zero(static_cast<std::size_t>(d), 0.0);
  return sample_bridge(zero, zero, 1.0, M, rng);
}

/// s -> x + (s/beta)(target - x) + sqrt(beta) omega(s/beta), on omega's grid.
inline Bridge unfold(std::span<const double> x, std::span<const double> target, const Bridge& omega, double beta) {
  const int d = omega.dim;
  const int M = omega.steps();
  Bridge b(d, TimeGrid(beta, M));
  const double sb = std::sqrt(beta);
  for (int k = 0; k <= M; ++k) {
    auto out = b.node(k);
    if (k == 0) {
      std::copy(x.begin(), x.end(), out.begin());
    } else if (k == M) {
      std::copy(target.begin(), target.end(), out.begin());
    } else {
      const double s = omega.grid.time(k);
      auto w = omega.node(k);
      for (int i = 0; i < d; ++i) out[i] = x[i] + s * (target[i] - x[i]) + sb * w[i];
    }
  }
  return b;
}

inline Bridge unfold(std::span<const double> x, std::span<const double> target, const MarkTriple& mark, double beta) {
  return unfold(x, target, mark.omega, beta);
}

/// Inverse of unfold: omega(s) = (bridge(beta s) - x - s (y - x)) / sqrt(beta).
inline Bridge standardize(const Bridge& b) {
  const int d = b.dim;
  const int M = b.steps();
  Bridge w(d, TimeGrid(1.0, M));
  const double sb = std::sqrt(b.grid.duration);
  auto x = b.start();
  auto y = b.end();
  for (int k = 1; k < M; ++k) {
    const double s = w.grid.time(k);
    auto src = b.node(k);
    auto out = w.node(k);
    for (int i = 0; i < d; ++i) out[i] = (src[i] - x[i] - s * (y[i] - x[i])) / sb;
  }
  return w;
}

/// Rotate a loop's root by round(s / spacing) grid steps (the operator Theta_s).
inline Loop time_shift(const Loop& loop, double s) {
  const int n = loop.path.steps();
  const long shift_raw = std::lround(s / loop.path.grid.spacing());
  const int shift = static_cast<int>(((shift_raw % n) + n) % n);
  if (shift == 0) return loop;
  Loop out = loop;
  for (int k = 0; k < n; ++k) {
    auto src = loop.path.node((k + shift) % n);
    std::copy(src.begin(), src.end(), out.path.node(k).begin());
  }
  std::copy(out.path.node(0).begin(), out.path.node(0).end(), out.path.node(n).begin());
  return out;
}

/// s -> sigma(beta - s).
inline Bridge time_reverse(const Bridge& b) {
  Bridge out = b;
  const int M = b.steps();
  for (int k = 0; k <= M; ++k) {
    auto src = b.node(M - k);
    std::copy(src.begin(), src.end(), out.node(k).begin());
  }
  return out;
}

/// sup_s |l(s) - l'(s)|, or +inf when the lengths differ.
inline double d_inf(const Loop& a, const Loop& b) {
  if (a.path.dim != b.path.dim) throw InputError("loops of different dimension");
  if (a.length != b.length) return kInfinity;
  if (!(a.path.grid == b.path.grid)) throw InputError("loops on incompatible grids");
  double best = 0.0;
  for (int k = 0; k <= a.path.steps(); ++k) best = std::max(best, distance2(a.path.node(k), b.path.node(k)));
  return std::sqrt(best);
}

/// Euclidean distance from p to the segment [a, b].
inline double segment_distance(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
  double ab2 = 0.0, apab = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = b[i] - a[i];
    ab2 += e * e;
    apab += (p[i] - a[i]) * e;
  }
  const double t = ab2 > 0.0 ? std::clamp(apab / ab2, 0.0, 1.0) : 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = a[i] + t * (b[i] - a[i]) - p[i];
    s += q * q;
  }
  return std::sqrt(s);
}

/// Whether the closed segment [a, b] meets the closed box (slab clipping).
inline bool segment_meets_box(std::span<const double> a, std::span<const double> b, const Box& box) {
  double t0 = 0.0, t1 = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = b[i] - a[i];
    if (e == 0.0) {
      if (a[i] < box.lo[i] || a[i] > box.hi[i]) return false;
      continue;
    }
    double ta = (box.lo[i] - a[i]) / e, tb = (box.hi[i] - a[i]) / e;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

/// Polyline-level sigma ∩ Δ ≠ ∅.
inline bool path_meets_box(const Bridge& b, const Box& box) {
  if (box.contains(b.node(0))) return true;
  for (int k = 0; k < b.steps(); ++k)
    if (segment_meets_box(b.node(k), b.node(k + 1), box)) return true;
  return false;
}

/// Polyline-level sigma ⊂ Δ (boxes are convex, so checking nodes suffices).
inline bool path_inside_box(const Bridge& b, const Box& box) {
  for (int k = 0; k <= b.steps(); ++k)
    if (!box.contains(b.node(k))) return false;
  return true;
}

enum class SausageMethod { voxel, montecarlo };

struct SausageSpec {
  double thickness = 1.0;
  SausageMethod method = SausageMethod::voxel;
  /// Voxel edge length (voxel method; <= 0 selects thickness/4) or sample count (montecarlo).
  double resolution = 0.0;
};

struct VolumeEstimate {
  double value = 0.0;
  /// Voxel: h^d times the number of voxels whose center lies within h sqrt(d)/2
  /// of the sausage boundary, a bound on the discretization error.
  /// Montecarlo: binomial standard error.
  double error = 0.0;
};

/// Volume of the delta-neighborhood of the polyline through the path nodes.
inline VolumeEstimate sausage_volume(const Bridge& path, const SausageSpec& spec, RandomStream* rng = nullptr) {
  const double delta = spec.thickness;
  if (!(delta > 0.0)) throw InputError("sausage thickness must be positive");
  const int d = path.dim;
  const int nn = path.grid.nodes();
  Point lo(d, kInfinity), hi(d, -kInfinity);
  for (int k = 0; k < nn; ++k)
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], path.node(k)[i] - delta);
      hi[i] = std::max(hi[i], path.node(k)[i] + delta);
    }
  auto min_distance = [&](std::span<const double> p) {
    double best = kInfinity;
    for (int k = 0; k + 1 < nn; ++k) best = std::min(best, segment_distance(p, path.node(k), path.node(k + 1)));
    return best;
  };

  if (spec.method == SausageMethod::montecarlo) {
    if (rng == nullptr) throw ConfigError("montecarlo sausage estimate needs a random stream");
    const double samples = spec.resolution > 0.0 ? spec.resolution : 1e4;
    const auto n = static_cast<std::uint64_t>(samples);
    double box_volume = 1.0;
    for (int i = 0; i < d; ++i) box_volume *= hi[i] - lo[i];
    std::uint64_t hits = 0;
    Point p(d);
    for (std::uint64_t s = 0; s < n; ++s) {
      for (int i = 0; i < d; ++i) p[i] = rng->uniform(lo[i], hi[i]);
      if (min_distance(p) <= delta) ++hits;
    }
    const double f = static_cast<double>(hits) / n;
    return {f * box_volume, box_volume * std::sqrt(f * (1.0 - f) / n)};
  }

  const double h = spec.resolution > 0.0 ? spec.resolution : delta / 4.0;
  if (h > delta / 2.0) throw ConfigError("voxel edge exceeds half the sausage thickness");
  // Voxels are the cells h*(k + [0,1)^d) of an origin-anchored lattice.
  std::vector<long> first(d), count(d);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    first[i] = static_cast<long>(std::floor(lo[i] / h));
    count[i] = static_cast<long>(std::floor(hi[i] / h)) - first[i] + 1;
    total *= static_cast<std::size_t>(count[i]);
  }
  if (total > (std::size_t{1} << 30)) throw ConfigError("voxel grid too large for sausage estimate");
  std::vector<double> best(total, kInfinity);
  const double reach = delta + h * std::sqrt(static_cast<double>(d));
  std::vector<long> klo(d), khi(d), k(d);
  Point center(d);
  for (int s = 0; s + 1 < nn; ++s) {
    auto a = path.node(s), b = path.node(s + 1);
    for (int i = 0; i < d; ++i) {
      klo[i] = static_cast<long>(std::floor((std::min(a[i], b[i]) - reach) / h)) - first[i];
      khi[i] = static_cast<long>(std::floor((std::max(a[i], b[i]) + reach) / h)) - first[i];
      klo[i] = std::max(klo[i], 0L);
      khi[i] = std::min(khi[i], count[i] - 1);
      if (klo[i] > khi[i]) goto next_segment;
    }
    k = klo;
    while (true) {
      std::size_t idx = 0;
      for (int i = d - 1; i >= 0; --i) {
        idx = idx * static_cast<std::size_t>(count[i]) + static_cast<std::size_t>(k[i]);
        center[i] = (static_cast<double>(first[i] + k[i]) + 0.5) * h;
      }
      best[idx] = std::min(best[idx], segment_distance(center, a, b));
      int i = 0;
      while (i < d && ++k[i] > khi[i]) {
        k[i] = klo[i];
        ++i;
      }
      if (i == d) break;
    }
  next_segment:;
  }
  const double cell = std::pow(h, d);
  const double band = h * std::sqrt(static_cast<double>(d)) / 2.0;
  std::size_t inside = 0, boundary = 0;
  for (double v : best) {
    if (v <= delta) ++inside;
    if (std::abs(v - delta) <= band) ++boundary;
  }
  return {static_cast<double>(inside) * cell, static_cast<double>(boundary) * cell};
}

}  // namespace bosegas
