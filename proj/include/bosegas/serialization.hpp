#pragma once

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bosegas/representations.hpp"
#include "bosegas/samplers/chain.hpp"
#include "bosegas/statistics.hpp"

namespace bosegas {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kFormatName = "bosegas-configuration";

/// Decimal with 17 significant digits; inf and nan are written as strings.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "\"nan\"";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Hash of the canonical (key-sorted, compact) dump of a config document.
inline std::string config_hash(const json& config) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config.dump());
  return os.str();
}

namespace detail {

inline Point to_point(std::span<const double> x) { return Point(x.begin(), x.end()); }

inline json bridge_json(const Bridge& b) {
  json nodes = json::array();
  for (int k = 0; k <= b.steps(); ++k) nodes.push_back(to_point(b.node(k)));
  return {{"duration", b.grid.duration}, {"start", to_point(b.start())}, {"end", to_point(b.end())}, {"nodes", nodes}};
}

inline Bridge bridge_from(const json& j, int dim) {
  const double duration = j.at("duration").get<double>();
  const auto& nodes = j.at("nodes");
  if (!nodes.is_array() || nodes.size() < 2) throw InputError("bridge needs at least two nodes");
  Bridge b(dim, TimeGrid(duration, static_cast<int>(nodes.size()) - 1));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto v = nodes[k].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dim) throw InputError("node has the wrong dimension");
    std::copy(v.begin(), v.end(), b.node(static_cast<int>(k)).begin());
  }
  if (!b.valid()) throw InputError("bridge contains non-finite nodes");
  // start and end are redundant; they must match the nodes bit for bit.
  if (j.contains("start") && !bit_equal(j.at("start").get<Point>(), b.start())) throw InputError("bridge start does not match its nodes");
  if (j.contains("end") && !bit_equal(j.at("end").get<Point>(), b.end())) throw InputError("bridge end does not match its nodes");
  return b;
}

inline json header(const char* kind, int dim, double beta) {
  return json{{"format", kFormatName}, {"version", kFormatVersion}, {"kind", kind}, {"dim", dim}, {"beta", beta}};
}

inline void check_header(const json& j, const char* kind) {
  if (j.value("format", "") != kFormatName) throw InputError("not a configuration document");
  if (j.value("version", 0) != kFormatVersion) throw InputError("unsupported configuration version");
  if (j.value("kind", "") != std::string(kind)) throw InputError(std::string("expected a configuration of kind ") + kind);
}

}  // namespace detail

inline json to_json(const FkConfig& g) {
  json j = detail::header("fk", g.dim, g.beta);
  j["bridges"] = json::array();
  for (const auto& b : g.bridges) j["bridges"].push_back(detail::bridge_json(b));
  return j;
}

inline json to_json(const RlConfig& rho) {
  json j = detail::header("rl", rho.dim, rho.beta);
  j["loops"] = json::array();
  for (const auto& l : rho.loops) {
    json lj = detail::bridge_json(l.path);
    lj["length"] = l.length;
    j["loops"].push_back(std::move(lj));
  }
  return j;
}

inline json to_json(const MpConfig& g) {
  json j = detail::header("mp", g.dim, g.beta);
  j["r"] = g.r;
  j["points"] = json::array();
  for (const auto& m : g.points)
    j["points"].push_back({{"x", m.x},
                           {"p", m.mark.p},
                           {"u", m.mark.u},
                           {"omega", detail::bridge_json(m.mark.omega)}});
  return j;
}

inline FkConfig fk_from_json(const json& j) {
  try {
    detail::check_header(j, "fk");
    FkConfig g{j.at("dim").get<int>(), j.at("beta").get<double>(), {}};
    for (const auto& b : j.at("bridges")) g.bridges.push_back(detail::bridge_from(b, g.dim));
    return g;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed configuration: ") + e.what());
  }
}

inline RlConfig rl_from_json(const json& j) {
  try {
    detail::check_header(j, "rl");
    RlConfig rho{j.at("dim").get<int>(), j.at("beta").get<double>(), {}};
    for (const auto& l : j.at("loops")) {
      Loop loop{l.at("length").get<int>(), detail::bridge_from(l, rho.dim)};
      if (loop.length < 1 || !loop.closed()) throw InputError("loop is not closed or has length < 1");
      rho.loops.push_back(std::move(loop));
    }
    return rho;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed configuration: ") + e.what());
  }
}

inline MpConfig mp_from_json(const json& j) {
  try {
    detail::check_header(j, "mp");
    MpConfig g{j.at("dim").get<int>(), j.at("beta").get<double>(), j.at("r").get<double>(), {}};
    for (const auto& p : j.at("points")) {
      MarkedPoint m;
      m.x = p.at("x").get<Point>();
      m.mark.p = p.at("p").get<std::vector<long>>();
      m.mark.u = p.at("u").get<double>();
      m.mark.omega = detail::bridge_from(p.at("omega"), g.dim);
      if (static_cast<int>(m.x.size()) != g.dim || !m.mark.valid()) throw InputError("invalid marked point");
      g.points.push_back(std::move(m));
    }
    return g;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed configuration: ") + e.what());
  }
}

/// Chain checkpoint: configuration, step counter and generator state.
inline json to_json(const ChainState& st) {
  json j = detail::header("checkpoint", st.config.dim, st.config.beta);
  j["config"] = to_json(st.config);
  j["step"] = st.step;
  j["stream"] = st.stream_id;
  j["rng"] = st.rng.serialize();
  return j;
}

/// Restores a checkpoint; energies are recomputed by the chain that resumes it.
inline ChainState checkpoint_from_json(const json& j, const RlChain& chain) {
  try {
    detail::check_header(j, "checkpoint");
    ChainState st;
    st.config = rl_from_json(j.at("config"));
    st.step = j.at("step").get<long>();
    st.stream_id = j.at("stream").get<std::uint64_t>();
    st.rng.deserialize(j.at("rng").get<std::string>());
    chain.refresh(st);
    return st;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

/// One line of line-delimited records; numbers carry 17 significant digits.
inline std::string record_line(const StatRecord& r, const std::string& hash) {
  std::string s = "{\"name\":" + json(r.name).dump() + ",\"value\":" + format_number(r.value) +
                  ",\"stderr\":" + format_number(r.stderr_) + ",\"n_samples\":" + std::to_string(r.n_samples) +
                  ",\"seed\":" + std::to_string(r.seed) + ",\"config_hash\":" + json(hash).dump() + ",\"params\":{";
  bool first = true;
  for (const auto& [k, v] : r.params) {
    if (!first) s += ",";
    first = false;
    s += json(k).dump() + ":" + format_number(v);
  }
  return s + "}}";
}

inline StatRecord record_from_line(const std::string& line) {
  const json j = json::parse(line);
  auto num = [](const json& v) {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
      return s == "inf" ? kInfinity : -kInfinity;
    }
    return v.get<double>();
  };
  StatRecord r;
  r.name = j.at("name").get<std::string>();
  r.value = num(j.at("value"));
  r.stderr_ = num(j.at("stderr"));
  r.n_samples = j.at("n_samples").get<long>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("params").items()) r.params[k] = num(v);
  return r;
}

}  // namespace bosegas
