#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bosegas/hamiltonians.hpp"
#include "bosegas/random.hpp"
#include "bosegas/samplers/ideal.hpp"

namespace bosegas {

enum class Move { birth, death, translate, reshape, merge, split };
inline constexpr std::array<const char*, 6> kMoveNames = {"birth", "death", "translate", "reshape", "merge", "split"};

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct ChainSettings {
  int steps_per_beta = kDefaultStepsPerBeta;
  /// Largest loop length reachable by births and merges.
  int j_max = 8;
  /// Cap on the total length sum_l length(l); 0 disables it.
  long n_max = 0;
  double translate_sd = 0.2;
  /// Relative frequencies of birth/death, translate, reshape, merge/split.
  double w_birth_death = 0.4;
  double w_translate = 0.2;
  double w_reshape = 0.2;
  double w_merge_split = 0.2;
  QuadratureSpec quad;
};

/// Metropolis-Hastings state for the rooted-loop model.
struct ChainState {
  RlConfig config;
  double energy = 0.0;       // H_rl(config)
  double log_density = 0.0;  // beta mu sum j - H_rl(config)
  std::array<MoveStats, 6> moves{};
  RandomStream rng;
  std::uint64_t stream_id = 0;
  long step = 0;
};

/// Target: density exp(beta mu sum_l j_l - H_rl) against the Poisson loop
/// reference, i.e. product of w(j_l) e^{-H_rl} against the unit-rate Poisson
/// process on window x lengths x normalized loop shapes.
class RlChain {
 public:
  RlChain(const EnergyModel& model, const ModelParams& params, ChainSettings settings)
      : model_(model), params_(params), s_(settings) {
    params_.validate();
    if (s_.j_max < 1) throw ConfigError("chain needs j_max >= 1");
    for (int j = 1; j <= s_.j_max; ++j) {
      weights_.push_back(loop_length_weight(j, params_.beta, params_.mu, params_.dim));
      total_weight_ += weights_.back();
    }
    mass_ = params_.window().volume() * total_weight_;
  }

  ChainState init(RlConfig start, std::uint64_t seed, std::uint64_t stream) const {
    ChainState st;
    st.config = std::move(start);
    st.config.dim = params_.dim;
    st.config.beta = params_.beta;
    st.rng = RandomStream(seed, stream);
    st.stream_id = stream;
    refresh(st);
    if (!std::isfinite(st.log_density)) throw StructuralError("chain started from a configuration of zero density");
    return st;
  }

  void refresh(ChainState& st) const {
    st.energy = h_rl(st.config, model_, params_, s_.quad);
    st.log_density = density_of(st.config, st.energy);
  }

  /// |cached - recomputed| log-density.
  double cache_drift(const ChainState& st) const {
    const double h = h_rl(st.config, model_, params_, s_.quad);
    return std::abs(density_of(st.config, h) - st.log_density);
  }

  void run(ChainState& st, long n_steps) const {
    for (long i = 0; i < n_steps; ++i) step(st);
  }

  void step(ChainState& st) const {
    ++st.step;
    const double total = s_.w_birth_death + s_.w_translate + s_.w_reshape + s_.w_merge_split;
    double u = st.rng.uniform() * total;
    if ((u -= s_.w_birth_death) < 0.0) {
      st.rng.uniform() < 0.5 ? birth(st) : death(st);
    } else if ((u -= s_.w_translate) < 0.0) {
      translate(st);
    } else if ((u -= s_.w_reshape) < 0.0) {
      reshape(st);
    } else {
      st.rng.uniform() < 0.5 ? merge(st) : split(st);
    }
  }

  double reference_mass() const { return mass_; }
  double weight(int j) const { return weights_[j - 1]; }
  const ChainSettings& settings() const { return s_; }
  const ModelParams& params() const { return params_; }

  /// log acceptance ratio of a birth adding a loop to a configuration of n loops.
  double log_birth_ratio(std::size_t n, double delta_h) const { return std::log(mass_ / (n + 1.0)) - delta_h; }
  double log_death_ratio(std::size_t n, double delta_h) const { return std::log(n / mass_) - delta_h; }
  /// n loops before a merge of lengths ja, jb.
  double log_merge_ratio(std::size_t n, int ja, int jb, double delta_h) const {
    const int jc = ja + jb;
    return std::log(weight(jc) / (weight(ja) * weight(jb))) +
           std::log(static_cast<double>(n) / ((jc - 1) * params_.window().volume())) - delta_h;
  }
  /// n loops before a split of a length-jc loop into ja + jb.
  double log_split_ratio(std::size_t n, int ja, int jb, double delta_h) const {
    return -log_merge_ratio(n + 1, ja, jb, -delta_h);
  }

 private:
  double density_of(const RlConfig& c, double h) const {
    if (std::isinf(h)) return -kInfinity;
    return params_.beta * params_.mu * static_cast<double>(c.total_length()) - h;
  }

  bool accept(ChainState& st, Move m, double log_ratio) const {
    auto& ms = st.moves[static_cast<int>(m)];
    ++ms.proposed;
    if (std::isnan(log_ratio) || log_ratio == -kInfinity) return false;
    if (log_ratio >= 0.0 || st.rng.uniform() < std::exp(log_ratio)) {
      ++ms.accepted;
      return true;
    }
    return false;
  }

  void commit(ChainState& st, RlConfig&& next, double h) const {
    st.config = std::move(next);
    st.energy = h;
    st.log_density = density_of(st.config, h);
  }

  int draw_length(RandomStream& rng) const {
    double u = rng.uniform() * total_weight_;
    for (int j = 1; j <= s_.j_max; ++j)
      if ((u -= weights_[j - 1]) < 0.0) return j;
    return s_.j_max;
  }

  void birth(ChainState& st) const {
    const int j = draw_length(st.rng);
    const Point x = uniform_point(params_.window(), st.rng);
    Loop l = sample_loop(x, j, params_.beta, s_.steps_per_beta, st.rng);
    if (s_.n_max > 0 && st.config.total_length() + j > s_.n_max) {
      accept(st, Move::birth, -kInfinity);
      return;
    }
    RlConfig next = st.config;
    next.loops.push_back(std::move(l));
    const double h = h_rl(next, model_, params_, s_.quad);
    if (accept(st, Move::birth, log_birth_ratio(st.config.loops.size(), h - st.energy))) commit(st, std::move(next), h);
  }

  void death(ChainState& st) const {
    const std::size_t n = st.config.loops.size();
    if (n == 0) {
      accept(st, Move::death, -kInfinity);
      return;
    }
    RlConfig next = st.config;
    next.loops.erase(next.loops.begin() + static_cast<std::ptrdiff_t>(st.rng.index(n)));
    const double h = h_rl(next, model_, params_, s_.quad);
    if (accept(st, Move::death, log_death_ratio(n, h - st.energy))) commit(st, std::move(next), h);
  }

  void translate(ChainState& st) const {
    const std::size_t n = st.config.loops.size();
    if (n == 0) {
      accept(st, Move::translate, -kInfinity);
      return;
    }
    const std::size_t i = st.rng.index(n);
    Point v(params_.dim);
    for (auto& c : v) c = s_.translate_sd * st.rng.normal();
    RlConfig next = st.config;
    next.loops[i].path = next.loops[i].path.translated(v);
    const double h = h_rl(next, model_, params_, s_.quad);
    if (accept(st, Move::translate, st.energy - h)) commit(st, std::move(next), h);
  }

  void reshape(ChainState& st) const {
    const std::size_t n = st.config.loops.size();
    if (n == 0) {
      accept(st, Move::reshape, -kInfinity);
      return;
    }
    const std::size_t i = st.rng.index(n);
    RlConfig next = st.config;
    const Loop& old = st.config.loops[i];
    next.loops[i] = sample_loop(old.root(), old.length, params_.beta, s_.steps_per_beta, st.rng);
    const double h = h_rl(next, model_, params_, s_.quad);
    if (accept(st, Move::reshape, st.energy - h)) commit(st, std::move(next), h);
  }

  void merge(ChainState& st) const {
    const std::size_t n = st.config.loops.size();
    if (n < 2) {
      accept(st, Move::merge, -kInfinity);
      return;
    }
    const std::size_t a = st.rng.index(n);
    std::size_t b = st.rng.index(n - 1);
    if (b >= a) ++b;
    const int ja = st.config.loops[a].length, jb = st.config.loops[b].length;
    if (ja + jb > s_.j_max) {
      accept(st, Move::merge, -kInfinity);
      return;
    }
    Loop c = sample_loop(st.config.loops[a].root(), ja + jb, params_.beta, s_.steps_per_beta, st.rng);
    RlConfig next{st.config.dim, st.config.beta, {}};
    for (std::size_t i = 0; i < n; ++i)
      if (i != a && i != b) next.loops.push_back(st.config.loops[i]);
    next.loops.push_back(std::move(c));
    const double h = h_rl(next, model_, params_, s_.quad);
    if (accept(st, Move::merge, log_merge_ratio(n, ja, jb, h - st.energy))) commit(st, std::move(next), h);
  }

  void split(ChainState& st) const {
    const std::size_t n = st.config.loops.size();
    if (n == 0) {
      accept(st, Move::split, -kInfinity);
      return;
    }
    const std::size_t c = st.rng.index(n);
    const int jc = st.config.loops[c].length;
    if (jc < 2) {
      accept(st, Move::split, -kInfinity);
      return;
    }
    const int ja = 1 + static_cast<int>(st.rng.index(static_cast<std::size_t>(jc - 1)));
    const int jb = jc - ja;
    Loop la = sample_loop(st.config.loops[c].root(), ja, params_.beta, s_.steps_per_beta, st.rng);
    Loop lb = sample_loop(uniform_point(params_.window(), st.rng), jb, params_.beta, s_.steps_per_beta, st.rng);
    RlConfig next{st.config.dim, st.config.beta, {}};
    for (std::size_t i = 0; i < n; ++i)
      if (i != c) next.loops.push_back(st.config.loops[i]);
    next.loops.push_back(std::move(la));
    next.loops.push_back(std::move(lb));
    const double h = h_rl(next, model_, params_, s_.quad);
    if (accept(st, Move::split, log_split_ratio(n, ja, jb, h - st.energy))) commit(st, std::move(next), h);
  }

  const EnergyModel& model_;
  ModelParams params_;
  ChainSettings s_;
  std::vector<double> weights_;
  double total_weight_ = 0.0;
  double mass_ = 0.0;
};

/// Runs n_steps of the chain on state in place and returns it.
inline ChainState& mh_rl_chain(ChainState& state, const EnergyModel& model, const ModelParams& params,
                               const ChainSettings& settings, long n_steps) {
  RlChain(model, params, settings).run(state, n_steps);
  return state;
}

}  // namespace bosegas
