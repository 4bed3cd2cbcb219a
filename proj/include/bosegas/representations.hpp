#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "bosegas/core.hpp"
#include "bosegas/interactions.hpp"
#include "bosegas/trajectories.hpp"

namespace bosegas {

/// Finite FK configuration: bridges of common duration beta.
struct FkConfig {
  int dim = 1;
  double beta = 1.0;
  std::vector<Bridge> bridges;

  std::size_t size() const { return bridges.size(); }
  bool empty() const { return bridges.empty(); }

  PointCloud starts() const {
    PointCloud xi(dim);
    for (const auto& b : bridges) xi.push(b.start());
    return xi;
  }
  /// Positions {sigma(s_k)} of all bridges at grid node k.
  PointCloud slice(int k) const {
    PointCloud xi(dim);
    for (const auto& b : bridges) xi.push(b.node(k));
    return xi;
  }
  FkConfig translated(std::span<const double> v) const {
    FkConfig out{dim, beta, {}};
    out.bridges.reserve(bridges.size());
    for (const auto& b : bridges) out.bridges.push_back(b.translated(v));
    return out;
  }
};

/// Finite configuration of rooted loops.
struct RlConfig {
  int dim = 1;
  double beta = 1.0;
  std::vector<Loop> loops;

  long total_length() const {
    long n = 0;
    for (const auto& l : loops) n += l.length;
    return n;
  }
};

struct MarkedPoint {
  Point x;
  MarkTriple mark;
  bool operator==(const MarkedPoint&) const = default;
};

/// Marked-point configuration; marks select targets in x-centered cells of side r.
struct MpConfig {
  int dim = 1;
  double beta = 1.0;
  double r = 1.0;
  std::vector<MarkedPoint> points;

  PointCloud positions() const {
    PointCloud xi(dim);
    for (const auto& m : points) xi.push(m.x);
    return xi;
  }
};

/// Indices of the starts sorted lexicographically.
inline std::vector<std::size_t> lex_order(const PointCloud& xi) {
  std::vector<std::size_t> idx(xi.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lex_less(xi[a], xi[b]); });
  return idx;
}

namespace detail {

/// Bridges whose start equals x bit-exactly, found by binary search in the
/// lexicographic order of the starts.
inline std::pair<std::size_t, std::size_t> equal_starts(const PointCloud& starts, const std::vector<std::size_t>& order,
                                                        std::span<const double> x) {
  auto lo = std::lower_bound(order.begin(), order.end(), x,
                             [&](std::size_t i, std::span<const double> v) { return lex_less(starts[i], v); });
  auto hi = std::upper_bound(lo, order.end(), x,
                             [&](std::span<const double> v, std::size_t i) { return lex_less(v, starts[i]); });
  return {static_cast<std::size_t>(lo - order.begin()), static_cast<std::size_t>(hi - order.begin())};
}

}  // namespace detail

/// Successor table: succ[i] is the unique bridge starting where bridge i ends.
/// Throws StructuralError if some bridge has zero or several successors or
/// some bridge is the successor of several bridges.
inline std::vector<std::size_t> successor_table(const FkConfig& g) {
  const PointCloud starts = g.starts();
  const auto order = lex_order(starts);
  std::vector<std::size_t> succ(g.size());
  std::vector<int> hits(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto [lo, hi] = detail::equal_starts(starts, order, g.bridges[i].end());
    if (hi - lo != 1) throw StructuralError(hi == lo ? "bridge without successor" : "bridge with several successors");
    succ[i] = order[lo];
    if (++hits[succ[i]] > 1) throw StructuralError("bridge with several predecessors");
  }
  return succ;
}

inline bool is_permutation_wise(const FkConfig& g) {
  try {
    successor_table(g);
    return true;
  } catch (const StructuralError&) {
    return false;
  }
}

/// sigma_gamma(sigma) for the bridge with index i.
inline const Bridge& successor(const FkConfig& g, std::size_t i) { return g.bridges[successor_table(g)[i]]; }

/// Cycles of sigma_gamma as index lists in successor order, each starting at
/// its lexicographically smallest start point.
inline std::vector<std::vector<std::size_t>> cycle_decomposition(const FkConfig& g) {
  const auto succ = successor_table(g);
  std::vector<char> seen(g.size(), 0);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> cyc;
    std::size_t j = i;
    do {
      if (cyc.size() > g.size()) throw StructuralError("successor walk does not close; corrupt configuration");
      seen[j] = 1;
      cyc.push_back(j);
      j = succ[j];
    } while (j != i);
    auto root = std::min_element(cyc.begin(), cyc.end(), [&](std::size_t a, std::size_t b) {
      return lex_less(g.bridges[a].start(), g.bridges[b].start());
    });
    std::rotate(cyc.begin(), root, cyc.end());
    out.push_back(std::move(cyc));
  }
  return out;
}

/// Cuts every length-j loop into the j bridges s -> l(beta j' + s).
inline FkConfig cut_rl_to_fk(const RlConfig& rho) {
  FkConfig g{rho.dim, rho.beta, {}};
  for (const auto& loop : rho.loops) {
    const int M = loop.steps_per_bridge();
    const int d = loop.path.dim;
    for (int j = 0; j < loop.length; ++j) {
      Bridge b(d, TimeGrid(rho.beta, M));
      std::copy(loop.path.nodes.begin() + static_cast<std::ptrdiff_t>(j) * M * d,
                loop.path.nodes.begin() + static_cast<std::ptrdiff_t>(j + 1) * M * d + d, b.nodes.begin());
      g.bridges.push_back(std::move(b));
    }
  }
  return g;
}

/// Concatenates the bridges of one cycle (in successor order) into a loop.
inline Loop concatenate(const FkConfig& g, const std::vector<std::size_t>& cyc) {
  const int d = g.dim;
  const int M = g.bridges[cyc.front()].steps();
  const int j = static_cast<int>(cyc.size());
  Loop loop{j, Bridge(d, TimeGrid(g.beta * j, M * j))};
  for (int i = 0; i < j; ++i) {
    const auto& b = g.bridges[cyc[i]];
    if (b.steps() != M) throw InputError("bridges of one cycle use different grids");
    std::copy(b.nodes.begin(), b.nodes.end(), loop.path.nodes.begin() + static_cast<std::ptrdiff_t>(i) * M * d);
  }
  return loop;
}

/// Inverse of cut_rl_to_fk: one loop per cycle, rooted at the bridge with the
/// lexicographically smallest start.
inline RlConfig assemble_fk_to_rl(const FkConfig& g) {
  RlConfig rho{g.dim, g.beta, {}};
  for (const auto& cyc : cycle_decomposition(g)) rho.loops.push_back(concatenate(g, cyc));
  return rho;
}

/// Re-roots every loop at its lexicographically smallest bridge start and
/// sorts the loops by root, giving a canonical form for set comparison.
inline RlConfig canonical(const RlConfig& rho) { return assemble_fk_to_rl(cut_rl_to_fk(rho)); }

/// Bridges sorted by start point; equality of sorted lists is set equality.
inline std::vector<Bridge> sorted_bridges(const FkConfig& g) {
  std::vector<Bridge> v = g.bridges;
  std::sort(v.begin(), v.end(), [](const Bridge& a, const Bridge& b) {
    if (lex_less(a.start(), b.start())) return true;
    if (lex_less(b.start(), a.start())) return false;
    return a.nodes < b.nodes;
  });
  return v;
}

inline bool same_bridge_set(const FkConfig& a, const FkConfig& b) { return sorted_bridges(a) == sorted_bridges(b); }

/// Points of xi in the cell x + r p + C_r, in lexicographic order.
inline std::vector<std::size_t> target_cell(const PointCloud& xi, std::span<const double> x, const std::vector<long>& p,
                                            double r) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (lattice_index(xi[i], x, r) == p) members.push_back(i);
  std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) { return lex_less(xi[a], xi[b]); });
  return members;
}

/// Selection index max(1, ceil(n u)) in 1..n.
inline std::size_t selection_index(std::size_t n, double u) {
  const double c = std::ceil(static_cast<double>(n) * u);
  return std::clamp<std::size_t>(c < 1.0 ? 1 : static_cast<std::size_t>(c), 1, n);
}

inline bool is_simple(const PointCloud& xi) {
  const auto order = lex_order(xi);
  for (std::size_t i = 1; i < order.size(); ++i)
    if (bit_equal(xi[order[i - 1]], xi[order[i]])) return false;
  return true;
}

/// Target indices sigma_mp(x) of every marked point. Throws StructuralError
/// if the configuration is not simple, not authorized or the selection is
/// not a bijection.
inline std::vector<std::size_t> mp_targets(const MpConfig& g) {
  const PointCloud xi = g.positions();
  if (!is_simple(xi)) throw StructuralError("marked configuration is not simple");
  std::vector<std::size_t> target(g.points.size());
  std::vector<char> used(g.points.size(), 0);
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    const auto& m = g.points[i];
    const auto cell = target_cell(xi, m.x, m.mark.p, g.r);
    if (cell.empty()) throw StructuralError("marked configuration is not authorized: empty target cell");
    target[i] = cell[selection_index(cell.size(), m.mark.u) - 1];
    if (used[target[i]]++) throw StructuralError("marked configuration is not permutation-wise");
  }
  return target;
}

inline bool is_authorized(const MpConfig& g) {
  const PointCloud xi = g.positions();
  for (const auto& m : g.points)
    if (target_cell(xi, m.x, m.mark.p, g.r).empty()) return false;
  return true;
}

inline bool mp_permutation_wise(const MpConfig& g) {
  try {
    mp_targets(g);
    return true;
  } catch (const StructuralError&) {
    return false;
  }
}

/// Decodes marked points into bridges x -> sigma_mp(x) unfolded from omega.
inline FkConfig decode_mp_to_fk(const MpConfig& g) {
  const auto target = mp_targets(g);
  FkConfig out{g.dim, g.beta, {}};
  out.bridges.reserve(g.points.size());
  for (std::size_t i = 0; i < g.points.size(); ++i)
    out.bridges.push_back(unfold(g.points[i].x, g.points[target[i]].x, g.points[i].mark, g.beta));
  return out;
}

/// Encodes a permutation-wise FK configuration with x-centered cells of side r.
inline MpConfig encode_fk_to_mp(const FkConfig& g, double r) {
  const PointCloud xi = g.starts();
  if (!is_simple(xi)) throw StructuralError("duplicated start points; configuration is not simple");
  successor_table(g);
  MpConfig out{g.dim, g.beta, r, {}};
  out.points.reserve(g.size());
  for (const auto& b : g.bridges) {
    MarkedPoint m;
    m.x = b.start_point();
    m.mark.p = lattice_index(b.end(), b.start(), r);
    const auto cell = target_cell(xi, b.start(), m.mark.p, r);
    std::size_t k = 0;
    while (k < cell.size() && !bit_equal(xi[cell[k]], b.end())) ++k;
    if (k == cell.size()) throw StructuralError("bridge end is not a start point");
    m.mark.u = (static_cast<double>(k + 1) - 0.5) / static_cast<double>(cell.size());
    m.mark.omega = standardize(b);
    out.points.push_back(std::move(m));
  }
  return out;
}

/// P^∈: bridges starting in Δ.
inline FkConfig proj_in(const FkConfig& g, const Box& delta) {
  FkConfig out{g.dim, g.beta, {}};
  for (const auto& b : g.bridges)
    if (delta.contains(b.start())) out.bridges.push_back(b);
  return out;
}

/// P^∩: bridges whose polyline meets Δ.
inline FkConfig proj_cap(const FkConfig& g, const Box& delta) {
  FkConfig out{g.dim, g.beta, {}};
  for (const auto& b : g.bridges)
    if (path_meets_box(b, delta)) out.bridges.push_back(b);
  return out;
}

/// Mask of bridges with some iterate sigma_gamma^k, |k| <= n, meeting Δ.
inline std::vector<char> capn_mask(const FkConfig& g, const Box& delta, int n) {
  const auto succ = successor_table(g);
  std::vector<char> mask(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!path_meets_box(g.bridges[i], delta)) continue;
    // i is an iterate of j = sigma^{-k}(i) and of sigma^{k}(i) for k <= n.
    std::size_t j = i;
    for (int k = 0; k <= n; ++k) {
      mask[j] = 1;
      j = succ[j];
    }
  }
  std::vector<char> back(g.size(), 0);
  std::vector<std::size_t> pred(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pred[succ[i]] = i;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!path_meets_box(g.bridges[i], delta)) continue;
    std::size_t j = i;
    for (int k = 0; k <= n; ++k) {
      back[j] = 1;
      j = pred[j];
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) mask[i] = mask[i] || back[i];
  return mask;
}

/// P^∩n: bridges with an iterate sigma_gamma^k, k in [-n, n], meeting Δ.
inline FkConfig proj_capn(const FkConfig& g, const Box& delta, int n) {
  const auto mask = capn_mask(g, delta, n);
  FkConfig out{g.dim, g.beta, {}};
  for (std::size_t i = 0; i < g.size(); ++i)
    if (mask[i]) out.bridges.push_back(g.bridges[i]);
  return out;
}

/// Cycles of length <= n with at least one bridge meeting Δ.
inline std::vector<std::vector<std::size_t>> cycles(const FkConfig& g, const Box& delta, int n) {
  std::vector<std::vector<std::size_t>> out;
  for (auto& cyc : cycle_decomposition(g)) {
    if (static_cast<int>(cyc.size()) > n) continue;
    const bool hit = std::any_of(cyc.begin(), cyc.end(), [&](std::size_t i) { return path_meets_box(g.bridges[i], delta); });
    if (hit) out.push_back(std::move(cyc));
  }
  return out;
}

struct BoundarySets {
  PointCloud inward;
  PointCloud outward;
  FkConfig exterior;
  FkConfig interior;
};

/// Splits gamma into exterior bridges (not inside Δ) and interior ones, and
/// computes the inward and outward boundaries.
inline BoundarySets dlr_split(const FkConfig& g, const Box& delta) {
  BoundarySets out{PointCloud(g.dim), PointCloud(g.dim), {g.dim, g.beta, {}}, {g.dim, g.beta, {}}};
  for (const auto& b : g.bridges) (path_inside_box(b, delta) ? out.interior : out.exterior).bridges.push_back(b);
  const PointCloud ext_starts = out.exterior.starts();
  PointCloud ext_ends(g.dim);
  for (const auto& b : out.exterior.bridges) ext_ends.push(b.end());
  auto contains = [](const PointCloud& xi, std::span<const double> x) {
    for (std::size_t i = 0; i < xi.size(); ++i)
      if (bit_equal(xi[i], x)) return true;
    return false;
  };
  for (std::size_t i = 0; i < ext_ends.size(); ++i)
    if (delta.contains(ext_ends[i]) && !contains(ext_starts, ext_ends[i]) && !contains(out.inward, ext_ends[i]))
      out.inward.push(ext_ends[i]);
  for (std::size_t i = 0; i < ext_starts.size(); ++i)
    if (delta.contains(ext_starts[i]) && !contains(ext_ends, ext_starts[i]) && !contains(out.outward, ext_starts[i]))
      out.outward.push(ext_starts[i]);
  return out;
}

inline FkConfig merge(const FkConfig& a, const FkConfig& b) {
  FkConfig out = a;
  out.bridges.insert(out.bridges.end(), b.bridges.begin(), b.bridges.end());
  return out;
}

/// R_FK: every bridge replaced by s -> sigma(beta - s).
inline FkConfig time_reverse_config(const FkConfig& g) {
  FkConfig out{g.dim, g.beta, {}};
  out.bridges.reserve(g.size());
  for (const auto& b : g.bridges) out.bridges.push_back(time_reverse(b));
  return out;
}

inline RlConfig time_shift_config(const RlConfig& rho, double s) {
  RlConfig out{rho.dim, rho.beta, {}};
  for (const auto& l : rho.loops) out.loops.push_back(time_shift(l, s));
  return out;
}

}  // namespace bosegas
