#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "bosegas/hamiltonians.hpp"
#include "bosegas/random.hpp"
#include "bosegas/representations.hpp"
#include "bosegas/samplers/ideal.hpp"

namespace bosegas {

enum class DlrMode { rejection, mcmc };

struct DlrSpec {
  Box delta;
  DlrMode mode = DlrMode::mcmc;
  /// C with U_loc >= C on every slice; required by the rejection mode (0 for nonnegative potentials).
  std::optional<double> lower_bound;
  long retry_cap = 100000;
  int steps_per_beta = kDefaultStepsPerBeta;
  /// Cap on the total number of bridges of the conditioned model; 0 disables it.
  long n_max = 0;
  /// Without a cap the rejection proposal truncates chain lengths and loop lengths here.
  int m_max = 4;
  int j_max = 4;
  long mcmc_steps = 200;
  QuadratureSpec quad;
};

struct DlrStats {
  long attempts = 0;
  long proposed = 0;
  long accepted = 0;
};

namespace detail {

/// Cuts a path of n * M steps into n bridges of M steps over beta.
inline void cut_path(const Bridge& path, int n, double beta, std::vector<Bridge>& out) {
  const int M = path.steps() / n;
  for (int i = 0; i < n; ++i) {
    Bridge b(path.dim, TimeGrid(beta, M));
    for (int k = 0; k <= M; ++k) {
      auto src = path.node(i * M + k);
      std::copy(src.begin(), src.end(), b.node(k).begin());
    }
    out.push_back(std::move(b));
  }
}

inline void check_dlr(const DlrSpec& spec, const EnergyModel& model, const ModelParams& params) {
  params.validate();
  if (spec.delta.dim() != params.dim) throw InputError("compact has the wrong dimension");
  for (int i = 0; i < params.dim; ++i)
    if (!(spec.delta.lo[i] > -params.L / 2.0 && spec.delta.hi[i] < params.L / 2.0))
      throw ConfigError("compact must lie strictly inside the window");
  if (!model.pair) throw ConfigError("resampling needs a pair potential for the local energy");
  if (spec.mode == DlrMode::rejection && !spec.lower_bound)
    throw ConfigError("rejection mode needs a local-energy lower bound");
  if (spec.retry_cap < 1 || spec.steps_per_beta < 1) throw ConfigError("invalid resampling settings");
}

class DlrChain {
 public:
  DlrChain(const FkConfig& exterior, const BoundarySets& split, const FkConfig& interior, const DlrSpec& spec,
           const EnergyModel& model, const ModelParams& params, RandomStream& rng)
      : ext_(exterior), spec_(spec), model_(model), params_(params), rng_(rng), k_(split.inward.size()) {
    for (std::size_t i = 0; i < k_; ++i) starts_.emplace_back(split.inward[i].begin(), split.inward[i].end());
    for (std::size_t i = 0; i < k_; ++i) out_.emplace_back(split.outward[i].begin(), split.outward[i].end());
    auto find = [](const std::vector<Point>& v, std::span<const double> x) {
      for (std::size_t i = 0; i < v.size(); ++i)
        if (bit_equal(v[i], x)) return static_cast<long>(i);
      return -1L;
    };
    std::vector<const Bridge*> order(k_, nullptr);
    std::vector<const Bridge*> rest;
    for (const auto& b : interior.bridges) {
      const long i = find(starts_, b.start());
      if (i >= 0) order[i] = &b;
      else rest.push_back(&b);
    }
    for (const Bridge* b : order)
      if (!b) throw StructuralError("inward boundary point without an interior bridge");
    for (const Bridge* b : rest) {
      starts_.push_back(b->start_point());
      order.push_back(b);
    }
    for (const Bridge* b : order) {
      long t = find(out_, b->end());
      if (t < 0) {
        t = find(starts_, b->end());
        if (t < static_cast<long>(k_)) throw StructuralError("interior bridge ends outside the interior starts");
      }
      target_.push_back(static_cast<std::size_t>(t));
      bridges_.push_back(*b);
    }
    energy_ = h_loc(config(), spec_.delta, *model_.pair, params_, spec_.quad);
    if (std::isinf(energy_)) throw StructuralError("conditioning configuration has infinite local energy");
  }

  FkConfig config() const {
    FkConfig g = ext_;
    g.bridges.insert(g.bridges.end(), bridges_.begin(), bridges_.end());
    return g;
  }

  void run(long steps, DlrStats& stats) {
    for (long s = 0; s < steps; ++s) {
      const double u = rng_.uniform();
      ++stats.proposed;
      bool ok;
      if (u < 1.0 / 3.0) ok = reshape();
      else if (u < 2.0 / 3.0) ok = transpose();
      else ok = rng_.uniform() < 0.5 ? birth() : death();
      stats.accepted += ok;
    }
  }

 private:
  std::span<const double> end_point(std::size_t t) const { return t < k_ ? out_[t] : starts_[t]; }
  double log_mass(std::span<const double> x, std::span<const double> y) const {
    return log_unnormalized_mass(x, y, params_.beta);
  }
  Bridge fresh(std::span<const double> x, std::span<const double> y) {
    return sample_bridge(x, y, params_.beta, spec_.steps_per_beta, rng_);
  }
  std::size_t zeta_count() const { return starts_.size() - k_; }

  /// Accepts the trial state (already written into the members) or restores the backup.
  template <class Backup>
  bool finish(double log_ratio_without_h, Backup&& restore) {
    const double h = h_loc(config(), spec_.delta, *model_.pair, params_, spec_.quad);
    const double lr = std::isinf(h) ? -kInfinity : log_ratio_without_h - (h - energy_);
    if (lr >= 0.0 || rng_.uniform() < std::exp(lr)) {
      energy_ = h;
      return true;
    }
    restore();
    return false;
  }

  bool reshape() {
    if (bridges_.empty()) return false;
    const std::size_t i = rng_.index(bridges_.size());
    Bridge nb = fresh(starts_[i], end_point(target_[i]));
    if (!path_inside_box(nb, spec_.delta)) return false;
    std::swap(bridges_[i], nb);
    return finish(0.0, [&] { std::swap(bridges_[i], nb); });
  }

  bool transpose() {
    const std::size_t c = bridges_.size();
    if (c < 2) return false;
    const std::size_t i = rng_.index(c);
    std::size_t k = rng_.index(c - 1);
    if (k >= i) ++k;
    const std::size_t ti = target_[i], tk = target_[k];
    Bridge bi = fresh(starts_[i], end_point(tk)), bk = fresh(starts_[k], end_point(ti));
    if (!path_inside_box(bi, spec_.delta) || !path_inside_box(bk, spec_.delta)) return false;
    const double lr = log_mass(starts_[i], end_point(tk)) + log_mass(starts_[k], end_point(ti)) -
                      log_mass(starts_[i], end_point(ti)) - log_mass(starts_[k], end_point(tk));
    std::swap(bridges_[i], bi);
    std::swap(bridges_[k], bk);
    std::swap(target_[i], target_[k]);
    return finish(lr, [&] {
      std::swap(bridges_[i], bi);
      std::swap(bridges_[k], bk);
      std::swap(target_[i], target_[k]);
    });
  }

  bool birth() {
    const std::size_t c = bridges_.size(), n = zeta_count();
    if (spec_.n_max > 0 && static_cast<long>(ext_.size() + c + 1) > spec_.n_max) return false;
    const Point z = uniform_point(spec_.delta, rng_);
    const std::size_t o = rng_.index(c + 1);
    const double base = params_.beta * params_.mu + std::log(spec_.delta.volume()) + std::log(c + 1.0) - std::log(n + 1.0);
    const auto saved_bridges = bridges_;
    const auto saved_target = target_;
    if (o == c) {
      Bridge b = fresh(z, z);
      if (!path_inside_box(b, spec_.delta)) return false;
      starts_.push_back(z);
      target_.push_back(c);
      bridges_.push_back(std::move(b));
      return finish(base + log_mass(z, z), [&] { undo_birth(saved_bridges, saved_target); });
    }
    const std::size_t t = target_[o];
    const Point y(end_point(t).begin(), end_point(t).end());
    Bridge b1 = fresh(starts_[o], z), b2 = fresh(z, y);
    if (!path_inside_box(b1, spec_.delta) || !path_inside_box(b2, spec_.delta)) return false;
    const double lr = base + log_mass(starts_[o], z) + log_mass(z, y) - log_mass(starts_[o], y);
    starts_.push_back(z);
    target_[o] = c;
    target_.push_back(t);
    bridges_[o] = std::move(b1);
    bridges_.push_back(std::move(b2));
    return finish(lr, [&] { undo_birth(saved_bridges, saved_target); });
  }

  void undo_birth(const std::vector<Bridge>& b, const std::vector<std::size_t>& t) {
    starts_.pop_back();
    bridges_ = b;
    target_ = t;
  }

  bool death() {
    const std::size_t c = bridges_.size(), n = zeta_count();
    if (n == 0) return false;
    const std::size_t q = k_ + rng_.index(n);
    const Point z = starts_[q];
    const double base = -params_.beta * params_.mu - std::log(spec_.delta.volume()) - std::log(static_cast<double>(c)) +
                        std::log(static_cast<double>(n));
    const auto saved_starts = starts_;
    const auto saved_bridges = bridges_;
    const auto saved_target = target_;
    auto restore = [&] {
      starts_ = saved_starts;
      bridges_ = saved_bridges;
      target_ = saved_target;
    };
    double lr = base;
    if (target_[q] == q) {
      lr -= log_mass(z, z);
    } else {
      std::size_t p = 0;
      while (target_[p] != q) ++p;
      const std::size_t y = target_[q];
      Bridge nb = fresh(starts_[p], end_point(y));
      if (!path_inside_box(nb, spec_.delta)) return false;
      lr -= log_mass(starts_[p], z) + log_mass(z, end_point(y)) - log_mass(starts_[p], end_point(y));
      bridges_[p] = std::move(nb);
      target_[p] = y;
    }
    starts_.erase(starts_.begin() + static_cast<std::ptrdiff_t>(q));
    bridges_.erase(bridges_.begin() + static_cast<std::ptrdiff_t>(q));
    target_.erase(target_.begin() + static_cast<std::ptrdiff_t>(q));
    for (auto& t : target_)
      if (t > q) --t;
    return finish(lr, restore);
  }

  const FkConfig& ext_;
  const DlrSpec& spec_;
  const EnergyModel& model_;
  const ModelParams& params_;
  RandomStream& rng_;
  std::size_t k_;
  std::vector<Point> starts_;  // inward boundary, then the interior points zeta
  std::vector<Point> out_;     // outward boundary; end index t >= k_ refers to starts_[t]
  std::vector<std::size_t> target_;
  std::vector<Bridge> bridges_;
  double energy_ = 0.0;
};

}  // namespace detail

/// Resamples the bridges inside Δ given the rest of gamma. The exterior
/// bridges are returned unchanged (bit-equal, same order) followed by the new interior.
inline FkConfig dlr_resample(const FkConfig& g, const DlrSpec& spec, const EnergyModel& model, const ModelParams& params,
                             RandomStream& rng, DlrStats* stats = nullptr) {
  detail::check_dlr(spec, model, params);
  DlrStats local;
  DlrStats& st = stats ? *stats : local;
  const BoundarySets split = dlr_split(g, spec.delta);
  const std::size_t k = split.inward.size();
  if (k != split.outward.size())
    throw StructuralError("inward and outward boundaries differ in size; no interior bijection exists");
  const int d = params.dim, M = spec.steps_per_beta;
  const double beta = params.beta;
  for (const auto& b : g.bridges)
    if (b.steps() != M) throw InputError("bridge grid differs from the resampling grid");

  if (spec.mode == DlrMode::mcmc) {
    detail::DlrChain chain(split.exterior, split, split.interior, spec, model, params, rng);
    chain.run(spec.mcmc_steps, st);
    ++st.attempts;
    return chain.config();
  }

  long remaining = -1;
  if (spec.n_max > 0) {
    remaining = spec.n_max - static_cast<long>(split.exterior.size() + k);
    if (remaining < 0) throw StructuralError("configuration exceeds the bridge cap");
  }
  const int m_hi = remaining >= 0 ? static_cast<int>(remaining) : spec.m_max;
  const int j_hi = remaining >= 0 ? static_cast<int>(remaining) : spec.j_max;
  double chain_bound = 0.0;
  for (int m = 0; m <= m_hi; ++m)
    chain_bound = std::max(chain_bound, std::exp(beta * params.mu * m) * std::pow(2.0 * std::numbers::pi * beta * (m + 1), -d / 2.0));
  const double C = *spec.lower_bound;

  std::vector<std::size_t> perm(k);
  for (long attempt = 1; attempt <= spec.retry_cap; ++attempt) {
    ++st.attempts;
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    for (std::size_t i = k; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    std::vector<Bridge> eta;
    long used = 0;
    bool ok = true;
    for (std::size_t a = 0; a < k && ok; ++a) {
      const int m = static_cast<int>(rng.index(static_cast<std::size_t>(m_hi) + 1));
      const auto x = split.inward[a], y = split.outward[perm[a]];
      const double t = beta * (m + 1);
      const double w = std::exp(beta * params.mu * m) * unnormalized_mass(x, y, t);
      if (rng.uniform() * chain_bound >= w) {
        ok = false;
        break;
      }
      Bridge path = sample_bridge(x, y, t, M * (m + 1), rng);
      if (!path_inside_box(path, spec.delta)) {
        ok = false;
        break;
      }
      detail::cut_path(path, m + 1, beta, eta);
      used += m;
    }
    if (!ok || (remaining >= 0 && used > remaining)) continue;
    if (j_hi >= 1) {
      const RlConfig soup = sample_ideal_loops(spec.delta, d, beta, params.mu, IdealSpec{M, j_hi}, rng);
      used += static_cast<long>(soup.total_length());
      if (remaining >= 0 && used > remaining) continue;
      for (const auto& b : cut_rl_to_fk(soup).bridges) eta.push_back(b);
    }
    FkConfig out = split.exterior;
    out.bridges.insert(out.bridges.end(), eta.begin(), eta.end());
    const double h = h_loc(out, spec.delta, *model.pair, params, spec.quad);
    if (std::isinf(h)) continue;
    const double log_acc = -(h - beta * C);
    if (log_acc > 1e-9 * std::max(1.0, std::abs(h)))
      throw ConfigError("local energy fell below the supplied lower bound");
    ++st.proposed;
    if (rng.uniform() < std::exp(log_acc)) {
      ++st.accepted;
      return out;
    }
  }
  throw StructuralError("resampling retry cap exceeded; the interior partition function may vanish");
}

}  // namespace bosegas
