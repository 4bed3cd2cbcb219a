#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bosegas/serialization.hpp"
#include "bosegas/verification.hpp"

namespace bosegas {

inline const std::vector<std::string> kSubcommands = {"sample",     "oracle",  "equivalence", "dlr",
                                                      "invariance", "entropy", "sausage",     "verify"};
inline const std::vector<std::string> kStatistics = {"bridges", "loops", "f1", "f2", "f3", "f4",
                                                     "long_cycles", "long_cycles_period", "log_density"};

struct SamplerSection {
  int j_max = 0;  // 0: the model's n_max
  long burn_in = 10000;
  long thin = 10;
  long samples = 5000;
  double translate_sd = 0.2;
  double w_birth_death = 0.4;
  double w_translate = 0.2;
  double w_reshape = 0.2;
  double w_merge_split = 0.2;
  /// Start configuration (rl or fk document); empty starts from nothing.
  std::string initial;
  /// Write every k-th sample configuration; 0 disables.
  long save_every = 0;
};

struct OutputSection {
  std::string dir = "bosegas-out";
  bool save_configurations = false;
  bool plots = false;
};

/// Everything one run needs. Sections not used by a subcommand are ignored
/// but still validated.
struct ExperimentConfig {
  TinySystem model{{0.5, 0.5, 1.0, 1}, {}, 3, QuadratureRule::left, {}};
  int steps_per_beta = 16;
  double kappa = 0.5;
  SamplerSection sampler;
  OracleSpec oracle;
  /// Settings of the full acceptance run.
  VerifySettings verify;
  /// Settings of the single-check subcommands, tuned by the dlr,
  /// invariance and sausage sections.
  VerifySettings checks;
  bool custom_delta = false;
  std::vector<std::string> statistics{"bridges", "f1", "f2", "f3", "f4", "long_cycles"};
  int long_cycle_n = 2;
  std::uint64_t seed = 1;
  int replicas = 1;
  OutputSection output;
  /// Parsed document with overrides applied; the config hash is taken from it.
  json document = json::object();

  std::string hash() const { return config_hash(document); }
  ChainSettings chain_settings() const;
  /// Verification settings for the single-check subcommands: the model,
  /// sampler and oracle sections replace the corresponding systems.
  VerifySettings check_settings() const;
};

namespace detail {

/// Reads keys of one object and rejects the ones nobody asked for.
class SectionReader {
 public:
  SectionReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + " must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(where(key) + " must be finite");
  }
  template <class Int>
  void integer(const char* key, Int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (v.is_number_integer()) {
      out = v.get<Int>();
      return;
    }
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::floor(x) == x && std::abs(x) < 9e15) {
        out = static_cast<Int>(x);
        return;
      }
    }
    throw ConfigError(where(key) + " must be an integer");
  }
  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) throw ConfigError(where(key) + " must be true or false");
    out = j_.at(key).get<bool>();
  }
  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(where(key) + " must be a string");
    out = j_.at(key).get<std::string>();
  }
  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
      out.push_back(x.get<double>());
    }
  }
  void strings(const char* key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of strings");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(where(key) + " must be an array of strings");
      out.push_back(x.get<std::string>());
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + where(item.key().c_str()));
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline QuadratureRule parse_rule(const std::string& s, const std::string& where) {
  if (s == "left") return QuadratureRule::left;
  if (s == "midpoint") return QuadratureRule::midpoint;
  throw ConfigError(where + " must be \"left\" or \"midpoint\"");
}

inline void read_potential(const json& j, const std::string& path, PotentialSpec& p) {
  SectionReader r(j, path);
  std::string kind = "bump";
  r.string("kind", kind);
  if (kind == "bump") p.kind = PotentialKind::bump;
  else if (kind == "hard_core") p.kind = PotentialKind::hard_core;
  else if (kind == "zero") p.kind = PotentialKind::zero;
  else throw ConfigError(path + ".kind must be bump, hard_core or zero");
  r.number("eps", p.eps);
  r.number("R", p.R);
  r.number("a", p.a);
  r.finish();
  require(p.eps > 0.0 && p.R > 0.0 && p.a > 0.0, path + ": eps, R and a must be positive");
}

inline void read_params(SectionReader& r, const std::string& path, ModelParams& p) {
  r.number("beta", p.beta);
  r.number("mu", p.mu);
  r.number("L", p.L);
  r.integer("dim", p.dim);
  require(p.beta > 0.0 && p.beta <= 100.0, path + ".beta must lie in (0, 100]");
  require(std::abs(p.mu) <= 100.0, path + ".mu must lie in [-100, 100]");
  require(p.L > 0.0 && p.L <= 1000.0, path + ".L must lie in (0, 1000]");
  require(p.dim >= 1 && p.dim <= 3, path + ".dim must be 1, 2 or 3");
}

/// System: beta, mu, L, dim, n_max, quadrature, potential, constants.
inline void read_system(const json& j, const std::string& path, TinySystem& t, int* steps = nullptr, double* kappa = nullptr) {
  SectionReader r(j, path);
  read_params(r, path, t.params);
  r.integer("n_max", t.n_max);
  require(t.n_max >= 1 && t.n_max <= 6, path + ".n_max must lie in [1, 6]");
  if (r.has("quadrature")) {
    std::string q;
    r.string("quadrature", q);
    t.rule = parse_rule(q, path + ".quadrature");
  }
  if (r.has("potential")) read_potential(r.at("potential"), path + ".potential", t.potential);
  if (r.has("constants")) {
    SuperstabilityConstants c = t.potential.model(t.params.dim).constants;
    SectionReader cr(r.at("constants"), path + ".constants");
    cr.number("A", c.A);
    cr.number("B", c.B);
    cr.number("r", c.r);
    cr.finish();
    require(c.B > 0.0 && c.r > 0.0, path + ".constants: B and r must be positive");
    c.degenerate = false;
    t.constants = c;
  }
  if (steps) {
    r.integer("steps_per_beta", *steps);
    require(*steps >= 1 && *steps <= 4096, path + ".steps_per_beta must lie in [1, 4096]");
  }
  if (kappa) {
    r.number("kappa", *kappa);
    require(*kappa > 0.0 && *kappa < 1.0, path + ".kappa must lie in (0, 1)");
  }
  r.finish();
}

inline Box read_box(const json& j, const std::string& path) {
  SectionReader r(j, path);
  Box b;
  std::vector<double> lo, hi;
  r.numbers("lo", lo);
  r.numbers("hi", hi);
  r.finish();
  require(!lo.empty() && lo.size() == hi.size(), path + " needs lo and hi of equal nonzero length");
  for (std::size_t i = 0; i < lo.size(); ++i) require(lo[i] < hi[i], path + ": lo must be below hi");
  b.lo = lo;
  b.hi = hi;
  return b;
}

inline void read_sampler(const json& j, SamplerSection& s) {
  SectionReader r(j, "sampler");
  r.integer("j_max", s.j_max);
  r.integer("burn_in", s.burn_in);
  r.integer("thin", s.thin);
  r.integer("samples", s.samples);
  r.number("translate_sd", s.translate_sd);
  if (r.has("weights")) {
    SectionReader w(r.at("weights"), "sampler.weights");
    w.number("birth_death", s.w_birth_death);
    w.number("translate", s.w_translate);
    w.number("reshape", s.w_reshape);
    w.number("merge_split", s.w_merge_split);
    w.finish();
  }
  r.string("initial", s.initial);
  r.integer("save_every", s.save_every);
  r.finish();
  require(s.j_max >= 0 && s.j_max <= 64, "sampler.j_max must lie in [0, 64]");
  require(s.burn_in >= 0 && s.thin >= 1 && s.samples >= 2, "sampler: burn_in >= 0, thin >= 1, samples >= 2");
  require(s.translate_sd > 0.0, "sampler.translate_sd must be positive");
  require(s.w_birth_death > 0.0 && s.w_translate >= 0.0 && s.w_reshape >= 0.0 && s.w_merge_split >= 0.0,
          "sampler.weights must be nonnegative with birth_death > 0");
  require(s.save_every >= 0, "sampler.save_every must be >= 0");
}

inline void read_oracle(const json& j, OracleSpec& o) {
  SectionReader r(j, "oracle");
  r.integer("nodes", o.nodes);
  r.integer("samples", o.samples);
  r.number("budget", o.budget);
  r.number("mp_r", o.mp_r);
  if (r.has("routes")) {
    std::vector<std::string> routes;
    r.strings("routes", routes);
    o.fk_route = o.cycle_route = o.mp_route = false;
    for (const auto& s : routes) {
      if (s == "fk") o.fk_route = true;
      else if (s == "cycle") o.cycle_route = true;
      else if (s == "mp") o.mp_route = true;
      else throw ConfigError("oracle.routes entries must be fk, cycle or mp");
    }
  }
  r.finish();
  require(o.nodes >= 1 && o.nodes <= 64, "oracle.nodes must lie in [1, 64]");
  require(o.samples >= 2, "oracle.samples must be >= 2");
  require(o.budget > 0.0, "oracle.budget must be positive");
  require(o.mp_r > 0.0, "oracle.mp_r must be positive");
  require(o.fk_route || o.cycle_route || o.mp_route, "oracle.routes must name at least one route");
}

inline void dlr_modes(SectionReader& r, const char* key, VerifySettings& v) {
  if (!r.has(key)) return;
  std::vector<std::string> modes;
  r.strings(key, modes);
  v.dlr_modes.clear();
  for (const auto& m : modes) {
    if (m == "rejection") v.dlr_modes.push_back(DlrMode::rejection);
    else if (m == "mcmc") v.dlr_modes.push_back(DlrMode::mcmc);
    else throw ConfigError(r.where(key) + " entries must be rejection or mcmc");
  }
  if (v.dlr_modes.empty()) throw ConfigError(r.where(key) + " must name at least one mode");
}

inline void read_verify(const json& j, VerifySettings& v) {
  SectionReader r(j, "verify");
  r.integer("seed", v.seed);
  r.integer("steps_per_beta", v.steps_per_beta);
  if (r.has("tiny")) read_system(r.at("tiny"), "verify.tiny", v.tiny);
  if (r.has("invariance")) read_system(r.at("invariance"), "verify.invariance", v.invariance);
  if (r.has("entropy")) read_system(r.at("entropy"), "verify.entropy", v.entropy);
  if (r.has("ideal")) {
    SectionReader ir(r.at("ideal"), "verify.ideal");
    read_params(ir, "verify.ideal", v.ideal);
    ir.finish();
  }
  r.integer("oracle_nodes", v.oracle_nodes);
  r.integer("oracle_samples", v.oracle_samples);
  r.number("mp_r", v.mp_r);
  r.number("mp_kappa", v.mp_kappa);
  r.integer("roundtrips", v.roundtrips);
  r.integer("ideal_draws", v.ideal_draws);
  r.integer("confinement_draws", v.confinement_draws);
  r.integer("ideal_lengths", v.ideal_lengths);
  r.integer("burn_in", v.burn_in);
  r.integer("thin", v.thin);
  r.integer("chain_samples", v.chain_samples);
  r.integer("ks_samples", v.ks_samples);
  r.integer("ks_thin", v.ks_thin);
  r.numbers("shifts", v.shifts);
  if (r.has("dlr_delta")) v.dlr_delta = read_box(r.at("dlr_delta"), "verify.dlr_delta");
  r.integer("dlr_samples", v.dlr_samples);
  r.integer("dlr_thin", v.dlr_thin);
  r.integer("dlr_mcmc_steps", v.dlr_mcmc_steps);
  r.integer("dlr_retry_cap", v.dlr_retry_cap);
  dlr_modes(r, "dlr_modes", v);
  if (r.has("dlr_lower_bound")) {
    double lb = 0.0;
    r.number("dlr_lower_bound", lb);
    v.dlr_lower_bound = lb;
  }
  r.integer("entropy_samples", v.entropy_samples);
  r.integer("sausage_dim", v.sausage_dim);
  r.integer("sausage_paths", v.sausage_paths);
  r.number("sausage_delta", v.sausage_delta);
  r.number("sausage_T", v.sausage_T);
  r.number("sausage_eps", v.sausage_eps);
  r.integer("sausage_M", v.sausage_M);
  r.integer("sausage_subsamples", v.sausage_subsamples);
  r.integer("permutation_max", v.permutation_max);
  r.integer("mecke_draws", v.mecke_draws);
  r.number("mecke_volume", v.mecke_volume);
  r.numbers("guard_radii", v.guard_radii);
  if (r.has("only")) {
    const json& o = r.at("only");
    if (!o.is_array()) throw ConfigError("verify.only must be an array of criterion ids");
    v.only.clear();
    for (const auto& x : o) {
      if (!x.is_number_integer()) throw ConfigError("verify.only must be an array of criterion ids");
      v.only.insert(x.get<int>());
    }
  }
  r.finish();
  v.validate();
}

inline void read_dlr(const json& j, VerifySettings& v, bool& custom_delta) {
  SectionReader r(j, "dlr");
  if (r.has("delta")) {
    v.dlr_delta = read_box(r.at("delta"), "dlr.delta");
    custom_delta = true;
  }
  dlr_modes(r, "modes", v);
  if (r.has("lower_bound")) {
    double lb = 0.0;
    r.number("lower_bound", lb);
    v.dlr_lower_bound = lb;
  }
  r.integer("retry_cap", v.dlr_retry_cap);
  r.integer("mcmc_steps", v.dlr_mcmc_steps);
  r.integer("samples", v.dlr_samples);
  r.integer("thin", v.dlr_thin);
  r.finish();
}

}  // namespace detail

inline ChainSettings ExperimentConfig::chain_settings() const {
  ChainSettings cs;
  cs.steps_per_beta = steps_per_beta;
  cs.j_max = sampler.j_max > 0 ? sampler.j_max : model.n_max;
  cs.n_max = model.n_max;
  cs.translate_sd = sampler.translate_sd;
  cs.w_birth_death = sampler.w_birth_death;
  cs.w_translate = sampler.w_translate;
  cs.w_reshape = sampler.w_reshape;
  cs.w_merge_split = sampler.w_merge_split;
  cs.quad.rule = model.rule;
  return cs;
}

inline VerifySettings ExperimentConfig::check_settings() const {
  VerifySettings v = checks;
  v.seed = seed;
  if (!custom_delta) {
    const double h = 0.45 * model.params.L;
    v.dlr_delta = Box::cube(model.params.dim, -h, h);
  }
  v.steps_per_beta = steps_per_beta;
  v.tiny = v.invariance = v.entropy = model;
  v.oracle_nodes = oracle.nodes;
  v.oracle_samples = oracle.samples;
  v.mp_r = oracle.mp_r;
  v.mp_kappa = kappa;
  v.burn_in = sampler.burn_in;
  v.thin = sampler.thin;
  v.chain_samples = sampler.samples;
  v.entropy_samples = sampler.samples;
  v.ks_samples = sampler.samples;
  v.only.clear();
  v.validate();
  return v;
}

/// Parses and validates a config document. Seed and replica overrides are
/// applied by the caller before hashing through apply_overrides.
inline ExperimentConfig parse_experiment(const json& doc) {
  ExperimentConfig c;
  detail::SectionReader r(doc, "");
  if (r.has("model")) detail::read_system(r.at("model"), "model", c.model, &c.steps_per_beta, &c.kappa);
  if (r.has("sampler")) detail::read_sampler(r.at("sampler"), c.sampler);
  if (r.has("oracle")) detail::read_oracle(r.at("oracle"), c.oracle);
  if (r.has("verify")) detail::read_verify(r.at("verify"), c.verify);
  // dlr, invariance and sausage sections tune the single-check subcommands.
  if (r.has("dlr")) detail::read_dlr(r.at("dlr"), c.checks, c.custom_delta);
  if (r.has("invariance")) {
    detail::SectionReader ir(r.at("invariance"), "invariance");
    ir.numbers("shifts", c.checks.shifts);
    ir.integer("thin", c.checks.ks_thin);
    ir.finish();
  }
  if (r.has("sausage")) {
    detail::SectionReader sr(r.at("sausage"), "sausage");
    sr.integer("dim", c.checks.sausage_dim);
    sr.integer("paths", c.checks.sausage_paths);
    sr.number("delta", c.checks.sausage_delta);
    sr.number("T", c.checks.sausage_T);
    sr.number("eps", c.checks.sausage_eps);
    sr.integer("M", c.checks.sausage_M);
    sr.integer("subsamples", c.checks.sausage_subsamples);
    sr.finish();
  }
  r.strings("statistics", c.statistics);
  for (const auto& s : c.statistics)
    if (std::find(kStatistics.begin(), kStatistics.end(), s) == kStatistics.end())
      throw ConfigError("unknown statistic \"" + s + "\"");
  r.integer("long_cycle_n", c.long_cycle_n);
  detail::require(c.long_cycle_n >= 1, "long_cycle_n must be >= 1");
  r.integer("seed", c.seed);
  r.integer("replicas", c.replicas);
  if (r.has("output")) {
    detail::SectionReader o(r.at("output"), "output");
    o.string("dir", c.output.dir);
    o.boolean("save_configurations", c.output.save_configurations);
    o.boolean("plots", c.output.plots);
    o.finish();
  }
  r.finish();
  detail::require(c.replicas >= 1 && c.replicas <= 1024, "replicas must lie in [1, 1024]");
  detail::require(!c.custom_delta || c.checks.dlr_delta.dim() == c.model.params.dim, "dlr.delta dimension differs from the model");
  c.oracle.n_max = c.model.n_max;
  c.oracle.steps_per_beta = c.steps_per_beta;
  c.oracle.mp_kappa = c.kappa;
  c.oracle.quad.rule = c.model.rule;
  c.verify.validate();
  c.document = doc;
  return c;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Sets seed and replicas in both the parsed config and the hashed document.
/// A seed override also replaces the acceptance seed.
inline void apply_overrides(ExperimentConfig& c, std::optional<std::uint64_t> seed, std::optional<int> replicas) {
  if (seed) {
    c.seed = *seed;
    c.verify.seed = *seed;
  }
  if (replicas) {
    detail::require(*replicas >= 1 && *replicas <= 1024, "replicas must lie in [1, 1024]");
    c.replicas = *replicas;
  }
  c.document["seed"] = c.seed;
  if (seed) c.document["verify"]["seed"] = *seed;
  c.document["replicas"] = c.replicas;
}

}  // namespace bosegas
