#include "woc/alpha_sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_set>

#include "csv.hpp"
#include "woc/errors.hpp"
#include "woc/parallel.hpp"
#include "woc/random.hpp"
#include "woc/stats.hpp"

namespace woc {
namespace {

struct Member {
  std::size_t round;
  double pre;
  double post;
};

struct RoundSums {
  double pre = 0.0;
  double post = 0.0;
  std::size_t n = 0;
};

RoundImprovement improvement_from(const RoundSums& s, const Round& round, ErrorMode mode) {
  RoundImprovement ri;
  ri.round_id = round.round_id;
  ri.n = s.n;
  ri.mean_pre = s.pre / static_cast<double>(s.n);
  ri.mean_post = s.post / static_cast<double>(s.n);
  ri.err_pre = prediction_error(ri.mean_pre, round.truth, mode);
  ri.err_post = prediction_error(ri.mean_post, round.truth, mode);
  ri.improvement = ri.err_pre - ri.err_post;
  return ri;
}

// I(alpha) over the rounds that received at least one member.
double mean_over_rounds(const std::vector<RoundSums>& sums, const Dataset& dataset,
                        ErrorMode mode, std::size_t* contributing = nullptr) {
  double total = 0.0;
  std::size_t rounds = 0;
  for (std::size_t r = 0; r < sums.size(); ++r) {
    if (sums[r].n == 0) continue;
    total += improvement_from(sums[r], dataset.rounds[r], mode).improvement;
    ++rounds;
  }
  if (contributing) *contributing = rounds;
  return total / static_cast<double>(rounds);
}

std::vector<Member> collect_members(const Dataset& dataset,
                                    const std::vector<SocialWeightResult>& results,
                                    double alpha) {
  const RecordIndex index(dataset);
  std::vector<Member> members;
  for (const auto& r : results) {
    if (r.excluded != Exclusion::None || !r.sw || !in_alpha_subset(*r.sw, alpha)) continue;
    const auto* loc = index.find(r.record_id);
    if (!loc) {
      throw Error(ErrorCode::InvalidArgument,
                  "result for unknown record '" + r.record_id + "'");
    }
    const auto& rec = dataset.rounds[loc->round].records[loc->record];
    members.push_back({loc->round, rec.pre_social, rec.post_social});
  }
  return members;
}

void check_alpha(double alpha) {
  if (!(alpha >= -1.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::AlphaOutOfRange,
                "alpha must lie in [-1, 1], got " + csv::format_double(alpha));
  }
}

}  // namespace

bool in_alpha_subset(double sw, double alpha) noexcept {
  if (alpha > 0.0) return sw >= 0.0 && sw <= alpha;
  if (alpha < 0.0) return sw >= alpha && sw <= 0.0;
  return sw == 0.0;
}

FilteredSubset filter_by_alpha(const std::vector<SocialWeightResult>& results, double alpha) {
  check_alpha(alpha);
  FilteredSubset subset{alpha, {}};
  for (const auto& r : results) {
    if (r.excluded == Exclusion::None && r.sw && in_alpha_subset(*r.sw, alpha)) {
      subset.record_ids.push_back(r.record_id);
    }
  }
  return subset;
}

std::optional<RoundImprovement> round_improvement(const Round& round,
                                                  const FilteredSubset& subset,
                                                  ErrorMode mode) {
  const std::unordered_set<std::string_view> ids(subset.record_ids.begin(),
                                                 subset.record_ids.end());
  RoundSums sums;
  for (const auto& rec : round.records) {
    if (!ids.count(rec.record_id)) continue;
    sums.pre += rec.pre_social;
    sums.post += rec.post_social;
    ++sums.n;
  }
  if (sums.n == 0) return std::nullopt;
  return improvement_from(sums, round, mode);
}

double mean_improvement(std::span<const RoundImprovement> per_round) {
  if (per_round.empty()) throw Error(ErrorCode::NoRounds, "no rounds to average");
  double total = 0.0;
  for (const auto& r : per_round) total += r.improvement;
  return total / static_cast<double>(per_round.size());
}

std::string_view to_string(ResampleMode m) noexcept {
  return m == ResampleMode::Pooled ? "pooled" : "stratified";
}

std::optional<ResampleMode> parse_resample_mode(std::string_view text) noexcept {
  if (text == "pooled") return ResampleMode::Pooled;
  if (text == "stratified") return ResampleMode::Stratified;
  return std::nullopt;
}

std::string_view to_string(PointFlag f) noexcept {
  switch (f) {
    case PointFlag::Ok: return "ok";
    case PointFlag::Degenerate: return "degenerate";
    case PointFlag::Empty: return "empty";
  }
  return "ok";
}

std::vector<std::size_t> bootstrap_draw(std::span<const std::size_t> member_round,
                                        std::size_t n_rounds, std::size_t replicate,
                                        std::uint64_t seed, ResampleMode mode) {
  const std::size_t n = member_round.size();
  std::vector<std::size_t> drawn;
  drawn.reserve(n);
  if (n == 0) return drawn;
  auto rng = stream_for(seed, {replicate});
  if (mode == ResampleMode::Pooled) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) drawn.push_back(pick(rng));
    return drawn;
  }
  std::vector<std::vector<std::size_t>> by_round(n_rounds);
  for (std::size_t i = 0; i < n; ++i) by_round.at(member_round[i]).push_back(i);
  for (const auto& members : by_round) {
    if (members.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t k = 0; k < members.size(); ++k) drawn.push_back(members[pick(rng)]);
  }
  return drawn;
}

AlphaSweepPoint bootstrap_improvement(const Dataset& dataset,
                                      const std::vector<SocialWeightResult>& results,
                                      double alpha, const BootstrapOptions& options) {
  check_alpha(alpha);
  if (options.replicates < 1) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least one replicate");
  }
  const auto members = collect_members(dataset, results, alpha);
  if (members.empty()) {
    throw Error(ErrorCode::EmptySubset,
                "no records with SW between 0 and alpha=" + csv::format_double(alpha));
  }

  const std::size_t n_rounds = dataset.rounds.size();
  AlphaSweepPoint point;
  point.alpha = alpha;
  point.flag = alpha == 0.0 ? PointFlag::Degenerate : PointFlag::Ok;
  point.n_records = members.size();

  std::vector<RoundSums> sums(n_rounds);
  for (const auto& m : members) {
    sums[m.round].pre += m.pre;
    sums[m.round].post += m.post;
    ++sums[m.round].n;
  }
  point.mean_improvement =
      mean_over_rounds(sums, dataset, options.error_mode, &point.n_rounds);
  point.empty_rounds = n_rounds - point.n_rounds;

  std::vector<std::size_t> member_round(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) member_round[i] = members[i].round;

  point.bootstrap_samples.assign(options.replicates, 0.0);
  parallel_for(options.replicates, options.threads, [&](std::size_t b) {
    const auto drawn = bootstrap_draw(member_round, n_rounds, b, options.seed, options.resample);
    std::vector<RoundSums> rs(n_rounds);
    for (std::size_t i : drawn) {
      const auto& m = members[i];
      rs[m.round].pre += m.pre;
      rs[m.round].post += m.post;
      ++rs[m.round].n;
    }
    point.bootstrap_samples[b] = mean_over_rounds(rs, dataset, options.error_mode);
  });

  std::vector<double> sorted = point.bootstrap_samples;
  std::sort(sorted.begin(), sorted.end());
  point.ci_low = stats::quantile_sorted(sorted, kCiLowProb);
  point.ci_high = stats::quantile_sorted(sorted, kCiHighProb);
  return point;
}

std::vector<AlphaSweepPoint> sweep_alpha(const Dataset& dataset,
                                         const std::vector<SocialWeightResult>& results,
                                         std::span<const double> grid,
                                         const BootstrapOptions& options) {
  std::vector<double> alphas(grid.begin(), grid.end());
  for (double a : alphas) check_alpha(a);
  std::sort(alphas.begin(), alphas.end());

  std::vector<AlphaSweepPoint> points;
  points.reserve(alphas.size());
  for (double alpha : alphas) {
    try {
      points.push_back(bootstrap_improvement(dataset, results, alpha, options));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySubset) throw;
      AlphaSweepPoint empty;
      empty.alpha = alpha;
      empty.flag = PointFlag::Empty;
      empty.mean_improvement = std::numeric_limits<double>::quiet_NaN();
      empty.ci_low = empty.ci_high = empty.mean_improvement;
      empty.empty_rounds = dataset.rounds.size();
      points.push_back(std::move(empty));
    }
  }
  return points;
}

std::vector<double> default_alpha_grid(std::size_t points) {
  std::vector<double> grid;
  if (points == 0) return grid;
  if (points == 1) return {0.0};
  const double steps = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid.push_back((2.0 * static_cast<double>(i) - steps) / steps);
  }
  return grid;
}

void write_sweep_csv(std::ostream& out, std::span<const AlphaSweepPoint> points) {
  out << "alpha,mean_improvement,ci_low,ci_high,n_records,flag\n";
  for (const auto& p : points) {
    out << csv::format_double(p.alpha) << ',';
    if (p.flag != PointFlag::Empty) {
      out << csv::format_double(p.mean_improvement) << ',' << csv::format_double(p.ci_low)
          << ',' << csv::format_double(p.ci_high);
    } else {
      out << ",,";
    }
    out << ',' << p.n_records << ',' << to_string(p.flag) << '\n';
  }
}

}  // namespace woc
