#include "woc/crowd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "csv.hpp"
#include "woc/errors.hpp"
#include "woc/random.hpp"
#include "woc/stats.hpp"

namespace woc {
namespace {

[[noreturn]] void invalid(const std::string& reason) {
  throw Error(ErrorCode::SpecInvalid, "invalid scenario: " + reason);
}

bool in_unit_range(double v) { return v >= -1.0 && v <= 1.0; }

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

constexpr std::int64_t kEpochBase = 1'500'000'000;
constexpr std::int64_t kRoundSpacing = 10'000'000;
constexpr std::int64_t kActionSpacing = 60;

}  // namespace

void validate(const ScenarioSpec& spec) {
  if (spec.n_rounds == 0) invalid("n_rounds must be >= 1");
  if (spec.truth_per_round.size() != spec.n_rounds) {
    invalid("truth_per_round has " + std::to_string(spec.truth_per_round.size()) +
            " entries for " + std::to_string(spec.n_rounds) + " rounds");
  }
  for (double t : spec.truth_per_round) {
    if (!(t > 0.0) || !std::isfinite(t)) invalid("truths must be positive and finite");
  }
  if (spec.n_agents == 0) invalid("n_agents must be >= 1");
  if (!(spec.pre_sigma >= 0.0) || !std::isfinite(spec.pre_sigma)) invalid("pre_sigma must be >= 0");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    invalid("noise_sigma must be >= 0");
  }
  if (!std::isfinite(spec.pre_bias)) invalid("pre_bias must be finite");

  const auto& sw = spec.sw_distribution;
  switch (sw.kind) {
    case SwDistribution::Kind::Constant:
      if (!in_unit_range(sw.a)) invalid("constant sw must lie in [-1, 1]");
      break;
    case SwDistribution::Kind::Uniform:
      if (!in_unit_range(sw.a) || !in_unit_range(sw.b) || sw.a > sw.b) {
        invalid("uniform sw bounds must satisfy -1 <= a <= b <= 1");
      }
      break;
    case SwDistribution::Kind::TwoPoint:
      if (!in_unit_range(sw.a) || !in_unit_range(sw.b)) invalid("two-point sw values must lie in [-1, 1]");
      if (!(sw.weight >= 0.0 && sw.weight <= 1.0)) invalid("two-point weight must lie in [0, 1]");
      break;
  }

  const auto& crowd = spec.crowd_mode;
  if (!std::isfinite(crowd.offset)) invalid("crowd offset must be finite");
  if (crowd.kind == CrowdMode::Kind::Bimodal) {
    if (!(crowd.separation >= 0.0) || !std::isfinite(crowd.separation)) {
      invalid("bimodal separation must be >= 0");
    }
    if (!(crowd.weight >= 0.0 && crowd.weight <= 1.0)) invalid("bimodal weight must lie in [0, 1]");
  }
}

double apply_social_update(double pre, double geomean, double sw, double noise) {
  if (!(pre > 0.0) || !(geomean > 0.0)) {
    throw Error(ErrorCode::NonPositiveInput, "social update requires positive prices");
  }
  return std::exp((1.0 - sw) * std::log(pre) + sw * std::log(geomean) + noise);
}

SimulatedData generate_dataset(const ScenarioSpec& spec) {
  validate(spec);

  const std::size_t width = std::to_string(spec.n_agents).size();
  std::vector<std::string> users(spec.n_agents);
  for (std::size_t a = 0; a < spec.n_agents; ++a) users[a] = "u" + padded(a + 1, width);

  std::vector<double> agent_sw(spec.n_agents);
  {
    auto rng = stream_for(spec.seed, {0});
    const auto& d = spec.sw_distribution;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& w : agent_sw) {
      const double u = unif(rng);
      switch (d.kind) {
        case SwDistribution::Kind::Constant: w = d.a; break;
        case SwDistribution::Kind::Uniform: w = d.a + (d.b - d.a) * u; break;
        case SwDistribution::Kind::TwoPoint: w = u < d.weight ? d.a : d.b; break;
      }
    }
  }

  SimulatedData out;
  out.dataset.meta.push_back("simulated scenario '" + spec.name + "' seed " +
                             std::to_string(spec.seed));
  for (std::size_t r = 0; r < spec.n_rounds; ++r) {
    auto rng = stream_for(spec.seed, {1, r});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Round round;
    round.round_id = "r" + std::to_string(r + 1);
    round.truth = spec.truth_per_round[r];

    std::vector<std::size_t> order(spec.n_agents);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> earlier;
    earlier.reserve(spec.n_agents);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t agent = order[pos];
      const double u_cluster = unif(rng);
      const double u_sign = unif(rng);
      const double z_pre = normal(rng);
      const double z_noise = normal(rng);

      double centre = 0.0;
      switch (spec.crowd_mode.kind) {
        case CrowdMode::Kind::Accurate: centre = 0.0; break;
        case CrowdMode::Kind::Biased: centre = spec.crowd_mode.offset; break;
        case CrowdMode::Kind::Bimodal:
          centre = (u_cluster < spec.crowd_mode.weight ? 0.5 : -0.5) * spec.crowd_mode.separation;
          break;
      }
      const double sign = u_sign < 0.5 ? 1.0 : -1.0;
      const double pre = round.truth * std::exp(centre + sign * spec.pre_bias + spec.pre_sigma * z_pre);

      double post = pre;
      if (!earlier.empty() && earlier.size() >= spec.cold_start) {
        post = apply_social_update(pre, stats::geometric_mean(earlier), agent_sw[agent],
                                   spec.noise_sigma * z_noise);
      }

      PredictionRecord rec;
      rec.round_id = round.round_id;
      rec.user_id = users[agent];
      rec.record_id = round.round_id + "-" + users[agent];
      rec.timestamp = Timestamp{kEpochBase + static_cast<std::int64_t>(r) * kRoundSpacing +
                                    static_cast<std::int64_t>(pos) * kActionSpacing,
                                TimeFormat::Epoch};
      rec.pre_social = pre;
      rec.post_social = post;
      out.true_sw.emplace_back(rec.record_id, agent_sw[agent]);
      round.records.push_back(std::move(rec));
      earlier.push_back(pre);
    }
    out.dataset.rounds.push_back(std::move(round));
  }
  normalize(out.dataset);
  return out;
}

SimulatedData generate_composite(std::span<const ScenarioSpec> specs) {
  if (specs.empty()) invalid("no scenarios given");
  if (specs.size() == 1) return generate_dataset(specs.front());

  SimulatedData merged;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string prefix = (specs[i].name.empty() ? "s" + std::to_string(i) : specs[i].name) + ".";
    auto part = generate_dataset(specs[i]);
    for (auto& round : part.dataset.rounds) {
      round.round_id = prefix + round.round_id;
      for (auto& rec : round.records) {
        rec.round_id = round.round_id;
        rec.user_id = prefix + rec.user_id;
        rec.record_id = prefix + rec.record_id;
      }
      merged.dataset.rounds.push_back(std::move(round));
    }
    for (auto& [id, sw] : part.true_sw) merged.true_sw.emplace_back(prefix + id, sw);
    for (auto& m : part.dataset.meta) merged.dataset.meta.push_back(std::move(m));
  }
  normalize(merged.dataset);
  return merged;
}

void write_true_sw_csv(std::ostream& out, const SimulatedData& data) {
  out << "record_id,true_sw\n";
  for (const auto& [id, sw] : data.true_sw) {
    out << csv::escape(id) << ',' << csv::format_double(sw) << '\n';
  }
}

}  // namespace woc
