#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "woc/dataset.hpp"

namespace woc {

enum class Direction { TowardCrowd, AwayFromCrowd, NoChange, Undefined };

/// How a prediction's distance from the truth is measured.
enum class ErrorMode { Absolute, Percent };

enum class Exclusion { None, InsufficientPrior, UndefinedSw };

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(ErrorMode m) noexcept;
std::string_view to_string(Exclusion e) noexcept;
std::optional<ErrorMode> parse_error_mode(std::string_view text) noexcept;

inline constexpr double kDefaultSwEps = 1e-12;

/// Social weight of one revision under the log-linear model
///   log post = (1 - sw) log pre + sw log geomean,
/// i.e. sw = (log post - log pre) / (log geomean - log pre).
/// When |log geomean - log pre| < eps the crowd gives no reference direction:
/// the result is 0 if the prediction did not move (|log post - log pre| < eps)
/// and nullopt (undefined) otherwise. Throws NonPositiveInput on prices <= 0.
std::optional<double> compute_sw(double pre, double post, double geomean,
                                  double eps = kDefaultSwEps);

Direction direction_of(const std::optional<double>& sw) noexcept;

double prediction_error(double price, double truth, ErrorMode mode) noexcept;

/// Positive when the post-social prediction is closer to the truth.
double individual_improvement(double pre, double post, double truth,
                              ErrorMode mode) noexcept;

struct SocialWeightResult {
  std::string record_id;
  std::optional<double> sw;
  Direction direction = Direction::Undefined;
  double individual_improvement = 0.0;
  Exclusion excluded = Exclusion::None;
  std::size_t shown_n = 0;  // size of the crowd the author saw
};

/// One result per record, in dataset order. Records whose shown crowd is
/// insufficient or whose SW is undefined are flagged via `excluded`.
std::vector<SocialWeightResult> classify_records(
    const Dataset& dataset, std::size_t min_prior,
    ErrorMode mode = ErrorMode::Absolute, double eps = kDefaultSwEps);

/// Cross-tabulation of movement direction against individual outcome over
/// the records with a defined SW.
struct SignSummary {
  enum Outcome { Improved = 0, Worsened = 1, Unchanged = 2 };
  // rows: TowardCrowd, AwayFromCrowd, NoChange
  std::array<std::array<std::size_t, 3>, 3> counts{};

  std::size_t at(Direction d, Outcome o) const;
  std::size_t total() const noexcept;
};

SignSummary sw_sign_summary(const std::vector<SocialWeightResult>& results);

/// CSV columns: record_id,sw,direction,improvement,excluded_reason
void write_sw_results_csv(std::ostream& out,
                          const std::vector<SocialWeightResult>& results);

}  // namespace woc
