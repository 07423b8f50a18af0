#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "woc/dataset.hpp"

namespace woc {

/// How agents' social weights are drawn (once per agent, kept across rounds).
struct SwDistribution {
  enum class Kind { Constant, Uniform, TwoPoint };
  Kind kind = Kind::Constant;
  double a = 0.5;       // constant value, uniform lower bound, or first point
  double b = 0.5;       // uniform upper bound or second point
  double weight = 0.5;  // probability of `a` for TwoPoint

  static SwDistribution constant(double c) { return {Kind::Constant, c, c, 1.0}; }
  static SwDistribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi, 0.5}; }
  static SwDistribution two_point(double first, double second, double p_first) {
    return {Kind::TwoPoint, first, second, p_first};
  }
};

/// Where the population's pre-social beliefs sit relative to the truth, in
/// log space. Accurate centres them on the truth, Biased on truth*e^offset,
/// Bimodal splits them into clusters at +/- separation/2 (`weight` is the
/// share of the upper cluster).
struct CrowdMode {
  enum class Kind { Accurate, Biased, Bimodal };
  Kind kind = Kind::Accurate;
  double offset = 0.0;
  double separation = 0.0;
  double weight = 0.5;

  static CrowdMode accurate() { return {}; }
  static CrowdMode biased(double offset) { return {Kind::Biased, offset, 0.0, 0.5}; }
  static CrowdMode bimodal(double separation, double weight = 0.5) {
    return {Kind::Bimodal, 0.0, separation, weight};
  }
};

/// Each agent's log belief is  centre + s * pre_bias + pre_sigma * z  with a
/// fair random sign s, so pre_bias pushes individuals away from their
/// cluster centre without moving the crowd's geometric mean.
struct ScenarioSpec {
  std::string name;  // id prefix when scenarios are combined
  std::size_t n_rounds = 6;
  std::vector<double> truth_per_round{100.0, 100.0, 100.0, 100.0, 100.0, 100.0};
  std::size_t n_agents = 200;
  SwDistribution sw_distribution;
  double pre_bias = 0.0;
  double pre_sigma = 0.1;
  CrowdMode crowd_mode;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t cold_start = 3;  // agents acting before this many others see no crowd
};

/// Throws SpecInvalid(reason).
void validate(const ScenarioSpec& spec);

/// post = exp((1 - sw) ln pre + sw ln geomean + noise). Throws
/// NonPositiveInput when pre or geomean is not positive.
double apply_social_update(double pre, double geomean, double sw, double noise);

struct SimulatedData {
  Dataset dataset;
  /// Ground-truth SW per record, in dataset order.
  std::vector<std::pair<std::string, double>> true_sw;
};

/// Every agent acts once per round in a seeded random order and sees the
/// pre-social predictions of everyone who acted before. Deterministic in the
/// spec; prices keep full double precision (the CSV form rounds to 12
/// significant digits).
SimulatedData generate_dataset(const ScenarioSpec& spec);

/// Concatenates several scenarios into one dataset. With more than one spec,
/// round, user and record ids are prefixed by the spec name (or "s<i>").
SimulatedData generate_composite(std::span<const ScenarioSpec> specs);

/// record_id,true_sw
void write_true_sw_csv(std::ostream& out, const SimulatedData& data);

/// Scenario files: a JSON or TOML document holding either one scenario or a
/// "scenarios" array. The format is chosen by extension (.toml, else JSON).
std::vector<ScenarioSpec> parse_scenarios(std::string_view text, bool toml);
std::vector<ScenarioSpec> load_scenarios(const std::string& path);

}  // namespace woc
