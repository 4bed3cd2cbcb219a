#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bosegas/cli/runner.hpp"

namespace {

template <class T>
std::optional<T> from_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != std::string(v).size() || x < 0) throw std::invalid_argument(name);
    return static_cast<T>(x);
  } catch (const std::exception&) {
    throw bosegas::ConfigError(std::string(name) + " must be a nonnegative integer");
  }
}

int fail(const std::string& category, const std::string& message, int code, const std::string& dir,
         const std::string& hash, std::optional<double> cost = std::nullopt) {
  auto j = bosegas::error_record(category, message, code, hash);
  if (cost) j["estimated_cost"] = *cost;
  std::cerr << j.dump() << "\n";
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream(std::filesystem::path(dir) / "error.json") << j.dump(1) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-space Bose gas sampler, oracles and checks"};
  std::string sub, flag_sub, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  app.add_option("command", sub, "sample | oracle | equivalence | dlr | invariance | entropy | sausage | verify")
      ->check(CLI::IsMember(bosegas::kSubcommands));
  app.add_option("--subcommand", flag_sub, "same as the positional command")->check(CLI::IsMember(bosegas::kSubcommands));
  app.add_option("-c,--config", config, "JSON experiment file");
  app.add_option("--seed", seed, "master seed (overrides BOSEGAS_SEED and the config)");
  app.add_option("--replicas", replicas, "independent replicas (overrides BOSEGAS_REPLICAS and the config)");
  app.add_option("-o,--out", out, "output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what(), bosegas::kExitConfig, "", "");
  }
  if (!flag_sub.empty() && !sub.empty() && flag_sub != sub)
    return fail("config", "positional command and --subcommand disagree", bosegas::kExitConfig, "", "");
  if (sub.empty()) sub = flag_sub;
  if (sub.empty()) return fail("config", "no subcommand given", bosegas::kExitConfig, "", "");

  std::string dir = out, hash;
  try {
    const bosegas::json doc = config.empty() ? bosegas::json::object() : bosegas::load_json_file(config);
    bosegas::ExperimentConfig c = bosegas::parse_experiment(doc);
    if (!seed) seed = from_env<std::uint64_t>("BOSEGAS_SEED");
    if (!replicas) replicas = from_env<int>("BOSEGAS_REPLICAS");
    bosegas::apply_overrides(c, seed, replicas);
    if (!out.empty()) c.output.dir = out;
    dir = c.output.dir;
    hash = c.hash();
    return bosegas::run_subcommand(sub, c);
  } catch (const bosegas::BudgetError& e) {
    return fail(e.category(), e.what(), e.exit_code(), dir, hash, e.estimated_cost());
  } catch (const bosegas::Error& e) {
    return fail(e.category(), e.what(), e.exit_code(), dir, hash);
  } catch (const std::exception& e) {
    return fail("structural", e.what(), bosegas::kExitStructural, dir, hash);
  }
}
