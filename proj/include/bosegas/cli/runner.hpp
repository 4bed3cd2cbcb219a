#pragma once

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "bosegas/cli/experiment.hpp"

namespace bosegas {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitStructural = 4;
inline constexpr int kExitAcceptance = 5;

/// Output directory with a single record stream; every record is stamped
/// with the config hash.
class OutputSink {
 public:
  OutputSink(const std::filesystem::path& dir, std::string hash) : dir_(dir), hash_(std::move(hash)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string());
    records_.open(dir_ / "records.jsonl", std::ios::trunc);
    if (!records_) throw ConfigError("cannot write to " + dir_.string());
  }

  void record(const StatRecord& r) {
    r.validate();
    records_ << record_line(r, hash_) << '\n';
  }
  void text(const std::string& name, const std::string& content) const {
    std::ofstream out(dir_ / name, std::ios::trunc);
    out << content;
    if (!out) throw ConfigError("cannot write " + name);
  }
  void document(const std::string& name, const json& j) const { text(name, j.dump(1) + "\n"); }
  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::ofstream records_;
};

/// Minimal static SVG bar chart of a histogram.
inline std::string histogram_svg(const Histogram& h, const std::string& title) {
  const double W = 480, H = 300, pad = 40;
  double top = 0.0;
  for (double c : h.counts) top = std::max(top, c);
  if (top <= 0.0) top = 1.0;
  const double lo = h.edges.front(), hi = h.edges.back();
  auto x = [&](double v) { return pad + (v - lo) / (hi - lo) * (W - 2 * pad); };
  auto y = [&](double v) { return H - pad - v / top * (H - 2 * pad); };
  std::string s = detail::strf(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H);
  s += detail::strf("<text x=\"%.0f\" y=\"20\">%s</text>\n", pad, title.c_str());
  s += detail::strf("<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n", pad, H - pad, W - pad, H - pad);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double x0 = x(h.edges[i]) + 1, x1 = x(h.edges[i + 1]) - 1;
    s += detail::strf("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"steelblue\"/>\n", x0, y(h.counts[i]),
                      x1 - x0, H - pad - y(h.counts[i]));
    s += detail::strf("<text x=\"%.2f\" y=\"%.0f\" text-anchor=\"middle\">%g</text>\n", 0.5 * (x0 + x1), H - pad + 15,
                      0.5 * (h.edges[i] + h.edges[i + 1]));
  }
  return s + "</svg>\n";
}

/// Runs f(i) for every replica on up to hardware_concurrency threads and
/// returns the results in replica order. The first failure by replica
/// index is rethrown.
template <class R, class F>
std::vector<R> run_replicas(int replicas, F&& f) {
  std::vector<R> out(static_cast<std::size_t>(replicas));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replicas));
  const int width = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  for (int first = 0; first < replicas; first += width) {
    std::vector<std::thread> pool;
    for (int i = first; i < std::min(replicas, first + width); ++i)
      pool.emplace_back([&, i] {
        try {
          out[i] = f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace detail {

inline std::map<std::string, double> model_params(const ExperimentConfig& c) {
  const auto& p = c.model.params;
  return {{"beta", p.beta}, {"mu", p.mu}, {"L", p.L}, {"d", static_cast<double>(p.dim)},
          {"n_max", static_cast<double>(c.model.n_max)}, {"M", static_cast<double>(c.steps_per_beta)}};
}

/// Scalar statistic of a sample; chain-only statistics need st.
inline double statistic(const std::string& name, const FkConfig& g, int n, const ChainState* st = nullptr) {
  if (name == "bridges") return static_cast<double>(g.size());
  if ((name == "loops" || name == "log_density") && !st) throw ConfigError(name + " is only defined for chain samples");
  if (name == "loops") return static_cast<double>(st->config.loops.size());
  if (name == "f1") return f1(g);
  if (name == "f2") return f2(g);
  if (name == "f3") return f3(g);
  if (name == "f4") return f4(g);
  if (name == "long_cycles") return long_cycle_fraction(g, n, LongCycleRule::literal);
  if (name == "long_cycles_period") return long_cycle_fraction(g, n, LongCycleRule::period);
  if (name == "log_density") return st->log_density;
  throw ConfigError("unknown statistic " + name);
}

inline RlConfig initial_configuration(const ExperimentConfig& c) {
  const auto& p = c.model.params;
  if (c.sampler.initial.empty()) return RlConfig{p.dim, p.beta, {}};
  const json j = load_json_file(c.sampler.initial);
  const std::string kind = j.value("kind", "");
  RlConfig rho = kind == "fk" ? assemble_fk_to_rl(fk_from_json(j)) : rl_from_json(j);
  if (rho.dim != p.dim || rho.beta != p.beta) throw InputError("initial configuration does not match the model");
  return rho;
}

struct ReplicaOutput {
  std::vector<std::vector<double>> series;
  std::vector<double> cycles;
  std::array<MoveStats, 6> moves{};
  json checkpoint;
  json final_config;
  std::string saved;
};

inline int run_sample(const ExperimentConfig& c, OutputSink& sink) {
  const auto model = c.model.model();
  const auto& p = c.model.params;
  const ChainSettings cs = c.chain_settings();
  const RlConfig start = initial_configuration(c);
  const std::size_t S = c.statistics.size();
  auto outputs = run_replicas<ReplicaOutput>(c.replicas, [&](int i) {
    ReplicaOutput o;
    o.series.resize(S);
    RlChain chain(model, p, cs);
    ChainState st = chain.init(start, c.seed, static_cast<std::uint64_t>(i));
    chain.run(st, c.sampler.burn_in);
    for (long k = 0; k < c.sampler.samples; ++k) {
      chain.run(st, c.sampler.thin);
      const FkConfig g = cut_rl_to_fk(st.config);
      for (std::size_t a = 0; a < S; ++a) o.series[a].push_back(statistic(c.statistics[a], g, c.long_cycle_n, &st));
      const auto cc = cycle_counts(g);
      if (o.cycles.size() < cc.size()) o.cycles.resize(cc.size(), 0.0);
      for (std::size_t j = 1; j < cc.size(); ++j) o.cycles[j] += static_cast<double>(cc[j]);
      if (c.sampler.save_every > 0 && (k + 1) % c.sampler.save_every == 0) o.saved += to_json(g).dump() + "\n";
    }
    o.moves = st.moves;
    if (c.output.save_configurations) {
      o.checkpoint = to_json(st);
      o.final_config = to_json(cut_rl_to_fk(st.config));
    }
    return o;
  });

  const auto base = model_params(c);
  std::vector<double> pooled_cycles;
  for (int i = 0; i < c.replicas; ++i) {
    const auto& o = outputs[i];
    auto params = base;
    params["replica"] = i;
    for (std::size_t a = 0; a < S; ++a) {
      const auto [m, se] = batch_means(o.series[a]);
      auto pr = params;
      pr["split_rhat"] = split_rhat(o.series[a]);
      sink.record({c.statistics[a], m, se, c.sampler.samples, c.seed, pr});
    }
    for (std::size_t mv = 0; mv < o.moves.size(); ++mv)
      sink.record({std::string("acceptance.") + kMoveNames[mv], o.moves[mv].rate(), 0.0,
                   std::max(1L, o.moves[mv].proposed), c.seed, params});
    if (pooled_cycles.size() < o.cycles.size()) pooled_cycles.resize(o.cycles.size(), 0.0);
    for (std::size_t j = 0; j < o.cycles.size(); ++j) pooled_cycles[j] += o.cycles[j];
    if (c.output.save_configurations) {
      sink.document("checkpoint_replica_" + std::to_string(i) + ".json", o.checkpoint);
      sink.document("final_replica_" + std::to_string(i) + ".json", o.final_config);
    }
    if (c.sampler.save_every > 0) sink.text("samples_replica_" + std::to_string(i) + ".jsonl", o.saved);
  }
  if (c.replicas > 1) {
    // Pooled estimate with the spread of replica means as its error.
    for (std::size_t a = 0; a < S; ++a) {
      std::vector<double> means;
      for (const auto& o : outputs) means.push_back(detail::mean_of(o.series[a]));
      const double m = detail::mean_of(means);
      double v = 0.0;
      for (double x : means) v += (x - m) * (x - m);
      auto params = base;
      params["replica"] = -1;
      sink.record({c.statistics[a], m, std::sqrt(v / (means.size() - 1) / means.size()),
                   c.sampler.samples * c.replicas, c.seed, params});
    }
  }
  const int top = std::max(1, static_cast<int>(pooled_cycles.size()) - 1);
  std::vector<double> edges, counts;
  for (int j = 1; j <= top + 1; ++j) edges.push_back(j - 0.5);
  for (int j = 1; j <= top; ++j) counts.push_back(j < static_cast<int>(pooled_cycles.size()) ? pooled_cycles[j] : 0.0);
  const Histogram h(edges, counts);
  sink.text("cycle_lengths.tsv", h.table());
  if (c.output.plots) sink.text("cycle_lengths.svg", histogram_svg(h, "cycle lengths"));
  return kExitOk;
}

inline int run_oracle(const ExperimentConfig& c, OutputSink& sink) {
  const auto model = c.model.model();
  const auto& p = c.model.params;
  c.oracle.validate(p.dim);
  std::vector<std::string> names;
  for (const auto& s : c.statistics)
    if (s != "log_density" && s != "loops") names.push_back(s);
  if (names.empty()) names.push_back("bridges");
  const int n = c.long_cycle_n;
  auto results = run_replicas<std::vector<OracleResult>>(c.replicas, [&](int i) {
    std::vector<OracleResult> v;
    for (std::size_t a = 0; a < names.size(); ++a) {
      const std::string name = names[a];
      const Observable f = [&, name](const FkConfig& g) { return statistic(name, g, n); };
      const std::uint64_t seed = c.seed + 1000003ull * static_cast<std::uint64_t>(i) + 7919ull * a;
      v.push_back(enumeration_oracle(c.oracle, model, p, f, seed));
    }
    return v;
  });
  for (int i = 0; i < c.replicas; ++i) {
    auto params = model_params(c);
    params["replica"] = i;
    params["cost"] = c.oracle.cost(p.dim);
    for (std::size_t a = 0; a < names.size(); ++a) {
      const OracleResult& r = results[i][a];
      auto emit = [&](const char* route, bool on, const OracleEstimate& e) {
        if (!on) return;
        if (a == 0) sink.record({std::string("oracle.") + route + ".Z", e.z, e.z_se, e.samples, c.seed, params});
        sink.record({std::string("oracle.") + route + "." + names[a], e.ef, e.ef_se, e.samples, c.seed, params});
      };
      emit("fk", c.oracle.fk_route, r.fk);
      emit("cycle", c.oracle.cycle_route, r.cycle_type);
      emit("mp", c.oracle.mp_route, r.mp);
    }
  }
  return kExitOk;
}

inline int report(const std::vector<CriterionResult>& results, OutputSink& sink, std::ostream& log) {
  std::string text;
  bool ok = true;
  for (const auto& r : results) {
    for (const auto& rec : r.records) sink.record(rec);
    sink.record({"criterion" + std::to_string(r.id) + ".pass", r.pass ? 1.0 : 0.0, 0.0, 1, 0, {}});
    text += format_result(r, false) + "\n";
    log << format_result(r) << "\n";
    ok = ok && r.pass;
  }
  sink.text("report.txt", text);
  return ok ? kExitOk : kExitAcceptance;
}

}  // namespace detail

/// Executes one subcommand and writes its artifacts; returns the exit code.
/// Errors propagate as bosegas::Error.
inline int run_subcommand(const std::string& sub, const ExperimentConfig& c, std::ostream& log = std::cerr) {
  OutputSink sink(c.output.dir, c.hash());
  sink.document("config.json", c.document);
  if (sub == "sample") return detail::run_sample(c, sink);
  if (sub == "oracle") return detail::run_oracle(c, sink);
  if (sub == "verify") {
    return detail::report(run_acceptance(c.verify), sink, log);
  }
  const VerifySettings v = c.check_settings();
  Guards guards;
  guards.radii = v.guard_radii;
  std::vector<CriterionResult> results;
  auto timed = [&](auto&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r = body();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  };
  if (sub == "equivalence") {
    timed([&] { return verify::equivalence(v); });
    timed([&] { return verify::chain_vs_oracle(v, guards); });
  } else if (sub == "dlr") {
    timed([&] { return verify::dlr_consistency(v, guards); });
  } else if (sub == "invariance") {
    timed([&] { return verify::time_shift_invariance(v, guards); });
    timed([&] { return verify::time_reversal_invariance(v, guards); });
  } else if (sub == "entropy") {
    timed([&] { return verify::entropy_bound(v, guards); });
  } else if (sub == "sausage") {
    timed([&] { return verify::wiener_sausage(v); });
  } else {
    throw ConfigError("unknown subcommand " + sub);
  }
  if (guards.density_checks > 0) results.push_back(verify::density_guard(guards, v.seed));
  if (guards.mp_checks > 0) results.push_back(verify::mp_guard(guards, v.seed));
  return detail::report(results, sink, log);
}

/// Machine-readable error record.
inline json error_record(const std::string& category, const std::string& message, int code, const std::string& hash = "") {
  json j{{"error", category}, {"message", message}, {"exit_code", code}};
  if (!hash.empty()) j["config_hash"] = hash;
  return j;
}

}  // namespace bosegas
