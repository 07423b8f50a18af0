#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "woc/dataset.hpp"
#include "woc/social_weight.hpp"

namespace woc {

/// Records whose SW lies between 0 and alpha (inclusive, same sign as
/// alpha). alpha == 0 selects SW == 0 exactly.
struct FilteredSubset {
  double alpha = 0.0;
  std::vector<std::string> record_ids;  // in input order
};

bool in_alpha_subset(double sw, double alpha) noexcept;

/// Throws AlphaOutOfRange unless -1 <= alpha <= 1. Excluded records and
/// undefined SWs are never selected.
FilteredSubset filter_by_alpha(const std::vector<SocialWeightResult>& results,
                               double alpha);

struct RoundImprovement {
  std::string round_id;
  double mean_pre = 0.0;
  double mean_post = 0.0;
  double err_pre = 0.0;
  double err_post = 0.0;
  double improvement = 0.0;  // err_pre - err_post
  std::size_t n = 0;
};

/// Aggregate improvement of the round restricted to the subset. nullopt when
/// the round has no member in the subset.
std::optional<RoundImprovement> round_improvement(
    const Round& round, const FilteredSubset& subset,
    ErrorMode mode = ErrorMode::Absolute);

/// Unweighted mean over rounds. Throws NoRounds on an empty list.
double mean_improvement(std::span<const RoundImprovement> per_round);

enum class ResampleMode { Pooled, Stratified };
std::string_view to_string(ResampleMode m) noexcept;
std::optional<ResampleMode> parse_resample_mode(std::string_view text) noexcept;

enum class PointFlag { Ok, Degenerate, Empty };
std::string_view to_string(PointFlag f) noexcept;

struct AlphaSweepPoint {
  double alpha = 0.0;
  double mean_improvement = 0.0;  // NaN for an empty subset
  std::vector<double> bootstrap_samples;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_records = 0;
  std::size_t n_rounds = 0;     // rounds contributing to the plug-in mean
  std::size_t empty_rounds = 0; // rounds with no subset member
  PointFlag flag = PointFlag::Ok;
};

struct BootstrapOptions {
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  ResampleMode resample = ResampleMode::Pooled;
  ErrorMode error_mode = ErrorMode::Absolute;
  std::size_t threads = 1;
};

inline constexpr double kCiLowProb = 0.025;
inline constexpr double kCiHighProb = 0.975;

/// Member indices drawn for one bootstrap replicate. `member_round[i]` is
/// the round (0..n_rounds-1) of subset member i. Pooled mode draws
/// member_round.size() members uniformly from the whole subset; stratified
/// mode draws each round's own count from that round. The draw depends only
/// on (seed, replicate).
std::vector<std::size_t> bootstrap_draw(std::span<const std::size_t> member_round,
                                        std::size_t n_rounds, std::size_t replicate,
                                        std::uint64_t seed, ResampleMode mode);

/// Plug-in I(alpha) plus its bootstrap distribution and 95% percentile
/// interval. Throws EmptySubset when no record passes the filter.
AlphaSweepPoint bootstrap_improvement(const Dataset& dataset,
                                      const std::vector<SocialWeightResult>& results,
                                      double alpha, const BootstrapOptions& options);

/// One point per grid value, ordered by alpha. Empty subsets yield a point
/// flagged Empty instead of an error.
std::vector<AlphaSweepPoint> sweep_alpha(const Dataset& dataset,
                                         const std::vector<SocialWeightResult>& results,
                                         std::span<const double> grid,
                                         const BootstrapOptions& options);

/// `points` evenly spaced values from -1 to 1 (41 by default).
std::vector<double> default_alpha_grid(std::size_t points = 41);

/// CSV columns: alpha,mean_improvement,ci_low,ci_high,n_records,flag
void write_sweep_csv(std::ostream& out, std::span<const AlphaSweepPoint> points);

}  // namespace woc
