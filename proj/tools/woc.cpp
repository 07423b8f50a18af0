// woc: social-weight and unimodality analysis of pre/post-social predictions.
#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>

#include "woc/errors.hpp"
#include "woc/pipeline.hpp"

namespace {

constexpr int kUsageExit = 2;
constexpr int kUnknownExit = 1;

struct Flags {
  std::string records, truths, config, out, dip_cache;
  std::size_t min_prior = woc::kDefaultMinPrior;
  std::string alpha_grid;
  std::size_t B = woc::kDefaultBootstrapReplicates;
  std::size_t M = woc::kDefaultDipReplicates;
  std::size_t n_min = woc::kDefaultDipMinN;
  std::string error_mode = "absolute";
  std::string resample_mode = "pooled";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

// config-file key -> option name, used to tell which values came from flags
const std::map<std::string, std::string, std::less<>> kKeyToOption = {
    {"records", "--records"},       {"truths", "--truths"},
    {"output_dir", "--out"},        {"min_prior", "--min-prior"},
    {"alpha_grid", "--alpha-grid"}, {"B", "-B"},
    {"M", "-M"},                    {"n_min", "--n-min"},
    {"error_mode", "--error-mode"}, {"resample_mode", "--resample-mode"},
    {"seed", "--seed"},             {"threads", "--threads"},
    {"dip_cache", "--dip-cache"},
};

void add_common(CLI::App& sub, Flags& f) {
  sub.add_option("--records", f.records, "records CSV");
  sub.add_option("--truths", f.truths, "truths CSV (round_id,truth)");
  sub.add_option("-c,--config", f.config, "TOML or JSON config; flags take precedence");
  sub.add_option("-o,--out", f.out, "output directory (default $WOC_OUTPUT_DIR or ./woc-out)");
  sub.add_option("--min-prior", f.min_prior, "minimum shown-crowd size")->capture_default_str();
  sub.add_option("--alpha-grid", f.alpha_grid,
                 "alpha grid: N points on [-1,1], start:stop:N, or a comma list");
  sub.add_option("-B,--bootstrap", f.B, "bootstrap replicates")->capture_default_str();
  sub.add_option("-M,--monte-carlo", f.M, "dip null replicates")->capture_default_str();
  sub.add_option("--n-min", f.n_min, "smallest sample given a dip p-value")->capture_default_str();
  sub.add_option("--error-mode", f.error_mode, "absolute or percent")
      ->check(CLI::IsMember({"absolute", "percent"}))
      ->capture_default_str();
  sub.add_option("--resample-mode", f.resample_mode, "pooled or stratified")
      ->check(CLI::IsMember({"pooled", "stratified"}))
      ->capture_default_str();
  sub.add_option("--seed", f.seed, "random seed")->capture_default_str();
  sub.add_option("--threads", f.threads, "worker threads, 0 = all cores")->capture_default_str();
  sub.add_option("--dip-cache", f.dip_cache, "dip null-distribution cache file");
}

woc::RunConfig to_config(woc::Command command, const Flags& f, const CLI::App& sub) {
  woc::RunConfig c;
  c.command = command;
  c.records_path = f.records;
  c.truths_path = f.truths;
  c.output_dir = f.out;
  c.min_prior = f.min_prior;
  if (!f.alpha_grid.empty()) c.alpha_grid = woc::parse_alpha_grid(f.alpha_grid);
  c.bootstrap_replicates = f.B;
  c.dip_replicates = f.M;
  c.n_min = f.n_min;
  c.error_mode = *woc::parse_error_mode(f.error_mode);
  c.resample_mode = *woc::parse_resample_mode(f.resample_mode);
  c.seed = f.seed;
  c.threads = f.threads;
  c.dip_cache_path = f.dip_cache;

  if (!f.config.empty()) {
    woc::merge_config_file(c, f.config, [&](std::string_view key) {
      if (key == "command") return true;
      const auto it = kKeyToOption.find(key);
      return it != kKeyToOption.end() && sub.count(it->second) > 0;
    });
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social weight, alpha sweep and dip-test unimodality analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "do not list written files");

  std::vector<std::pair<woc::Command, CLI::App*>> subs;
  const std::pair<woc::Command, const char*> commands[] = {
      {woc::Command::Analyze, "SW per record and the direction/outcome table"},
      {woc::Command::Sweep, "alpha sweep with bootstrap intervals"},
      {woc::Command::Unimodality, "dip flags and uni/non-uni proportion tests"},
      {woc::Command::Simulate, "generate a synthetic dataset from a scenario config"},
      {woc::Command::All, "every analysis"},
  };
  for (const auto& [cmd, help] : commands) {
    auto* sub = app.add_subcommand(std::string(woc::to_string(cmd)), help);
    add_common(*sub, flags);
    subs.emplace_back(cmd, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    for (const auto& [cmd, sub] : subs) {
      if (!sub->parsed()) continue;
      const auto outcome = woc::run(to_config(cmd, flags, *sub));
      if (!quiet) {
        for (const auto& f : outcome.files) std::cout << outcome.output_dir << '/' << f << '\n';
      }
    }
  } catch (const woc::Error& e) {
    std::cerr << "woc: " << woc::to_string(e.code()) << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "woc: " << e.what() << '\n';
    return kUnknownExit;
  }
  return 0;
}
