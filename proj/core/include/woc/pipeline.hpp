#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "woc/alpha_sweep.hpp"
#include "woc/crowd_sim.hpp"
#include "woc/dip_test.hpp"
#include "woc/social_weight.hpp"

namespace woc {

enum class Command { Analyze, Sweep, Unimodality, Simulate, All };
std::string_view to_string(Command c) noexcept;
std::optional<Command> parse_command(std::string_view text) noexcept;

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::size_t kDefaultMinPrior = 3;
inline constexpr std::size_t kDefaultBootstrapReplicates = 100;
inline constexpr const char* kOutputDirEnv = "WOC_OUTPUT_DIR";

struct RunConfig {
  Command command = Command::All;
  std::string records_path;
  std::string truths_path;
  std::string config_path;  // provenance only; merged before run()
  std::string output_dir;
  std::size_t min_prior = kDefaultMinPrior;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::size_t bootstrap_replicates = kDefaultBootstrapReplicates;  // B
  std::size_t dip_replicates = kDefaultDipReplicates;              // M
  std::size_t n_min = kDefaultDipMinN;
  ErrorMode error_mode = ErrorMode::Absolute;
  std::uint64_t seed = 0;
  ResampleMode resample_mode = ResampleMode::Pooled;
  std::size_t threads = 0;  // 0 = hardware concurrency; never affects output
  std::vector<ScenarioSpec> scenarios;
  std::string dip_cache_path;  // optional null-distribution cache
};

/// "41" (count from -1 to 1), "start:stop:count", or a comma list.
std::vector<double> parse_alpha_grid(std::string_view spec);

/// Merges a JSON/TOML config file under already-set values: a key is taken
/// from the file only when `set_explicitly(key)` is false. Keys use the
/// RunConfig field names; scenarios come from "scenario"/"scenarios" or a
/// top-level scenario table.
void merge_config_file(RunConfig& config, const std::string& path,
                       const std::function<bool(std::string_view)>& set_explicitly);

/// Checks counts and that every input path is readable. Throws ConfigInvalid
/// or IoError before any computation.
void validate(const RunConfig& config);

struct RunOutcome {
  std::string output_dir;
  std::vector<std::string> files;  // names written, sorted
};

/// Runs the requested stage(s) and writes report.json plus CSV plot data.
/// Files are staged and moved into `output_dir` only after every stage
/// succeeds.
RunOutcome run(const RunConfig& config);

}  // namespace woc
