#include "woc/social_weight.hpp"

#include <cmath>
#include <ostream>

#include "csv.hpp"
#include "woc/errors.hpp"

namespace woc {

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::TowardCrowd: return "toward_crowd";
    case Direction::AwayFromCrowd: return "away_from_crowd";
    case Direction::NoChange: return "no_change";
    case Direction::Undefined: return "undefined";
  }
  return "undefined";
}

std::string_view to_string(ErrorMode m) noexcept {
  return m == ErrorMode::Absolute ? "absolute" : "percent";
}

std::string_view to_string(Exclusion e) noexcept {
  switch (e) {
    case Exclusion::None: return "";
    case Exclusion::InsufficientPrior: return "insufficient_prior";
    case Exclusion::UndefinedSw: return "undefined_sw";
  }
  return "";
}

std::optional<ErrorMode> parse_error_mode(std::string_view text) noexcept {
  if (text == "absolute") return ErrorMode::Absolute;
  if (text == "percent") return ErrorMode::Percent;
  return std::nullopt;
}

std::optional<double> compute_sw(double pre, double post, double geomean, double eps) {
  if (!(pre > 0.0) || !(post > 0.0) || !(geomean > 0.0)) {
    throw Error(ErrorCode::NonPositiveInput, "compute_sw requires positive prices");
  }
  const double log_pre = std::log(pre);
  const double moved = std::log(post) - log_pre;
  const double reference = std::log(geomean) - log_pre;
  if (std::fabs(reference) < eps) {
    if (std::fabs(moved) < eps) return 0.0;
    return std::nullopt;
  }
  return moved / reference;
}

Direction direction_of(const std::optional<double>& sw) noexcept {
  if (!sw) return Direction::Undefined;
  if (*sw > 0.0) return Direction::TowardCrowd;
  if (*sw < 0.0) return Direction::AwayFromCrowd;
  return Direction::NoChange;
}

double prediction_error(double price, double truth, ErrorMode mode) noexcept {
  const double abs_err = std::fabs(price - truth);
  return mode == ErrorMode::Absolute ? abs_err : 100.0 * abs_err / truth;
}

double individual_improvement(double pre, double post, double truth,
                              ErrorMode mode) noexcept {
  return prediction_error(pre, truth, mode) - prediction_error(post, truth, mode);
}

std::vector<SocialWeightResult> classify_records(const Dataset& dataset,
                                                 std::size_t min_prior, ErrorMode mode,
                                                 double eps) {
  std::vector<SocialWeightResult> results;
  results.reserve(dataset.record_count());
  for (const auto& round : dataset.rounds) {
    for (std::size_t i = 0; i < round.records.size(); ++i) {
      const auto& rec = round.records[i];
      SocialWeightResult res;
      res.record_id = rec.record_id;
      res.individual_improvement =
          individual_improvement(rec.pre_social, rec.post_social, round.truth, mode);
      const auto crowd = shown_crowd_for(round, i, min_prior);
      if (!crowd) {
        res.excluded = Exclusion::InsufficientPrior;
      } else {
        res.shown_n = crowd->sample.size();
        res.sw = compute_sw(rec.pre_social, rec.post_social, crowd->geomean, eps);
        res.direction = direction_of(res.sw);
        if (!res.sw) res.excluded = Exclusion::UndefinedSw;
      }
      results.push_back(std::move(res));
    }
  }
  return results;
}

std::size_t SignSummary::at(Direction d, Outcome o) const {
  switch (d) {
    case Direction::TowardCrowd: return counts[0][o];
    case Direction::AwayFromCrowd: return counts[1][o];
    case Direction::NoChange: return counts[2][o];
    case Direction::Undefined: break;
  }
  return 0;
}

std::size_t SignSummary::total() const noexcept {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (std::size_t c : row) n += c;
  return n;
}

SignSummary sw_sign_summary(const std::vector<SocialWeightResult>& results) {
  SignSummary summary;
  for (const auto& r : results) {
    if (!r.sw || r.excluded != Exclusion::None) continue;
    std::size_t row = 0;
    switch (r.direction) {
      case Direction::TowardCrowd: row = 0; break;
      case Direction::AwayFromCrowd: row = 1; break;
      case Direction::NoChange: row = 2; break;
      case Direction::Undefined: continue;
    }
    const auto outcome = r.individual_improvement > 0.0   ? SignSummary::Improved
                         : r.individual_improvement < 0.0 ? SignSummary::Worsened
                                                          : SignSummary::Unchanged;
    ++summary.counts[row][outcome];
  }
  return summary;
}

void write_sw_results_csv(std::ostream& out, const std::vector<SocialWeightResult>& results) {
  out << "record_id,sw,direction,improvement,excluded_reason\n";
  for (const auto& r : results) {
    out << csv::escape(r.record_id) << ',';
    if (r.sw) out << csv::format_double(*r.sw);
    out << ',' << to_string(r.direction) << ',' << csv::format_double(r.individual_improvement)
        << ',' << to_string(r.excluded) << '\n';
  }
}

}  // namespace woc
