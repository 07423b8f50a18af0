#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace woc {

enum class TimeFormat { Epoch, Iso8601 };

/// Event time. Epoch timestamps keep the integer as written; ISO-8601
/// timestamps are stored as microseconds since 1970-01-01T00:00:00Z.
/// A dataset uses one format throughout, so ordering compares `value` only.
struct Timestamp {
  std::int64_t value = 0;
  TimeFormat format = TimeFormat::Epoch;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp& a, const Timestamp& b) {
    return a.value <=> b.value;
  }
};

/// Parses an integer epoch or an ISO-8601 date/date-time. Returns nullopt on
/// malformed input.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(const Timestamp& ts);

/// One pre/post-social prediction pair.
struct PredictionRecord {
  std::string record_id;
  std::string round_id;
  std::string user_id;
  Timestamp timestamp;
  double pre_social = 0.0;
  double post_social = 0.0;
  std::optional<double> confidence;  // stored, never analyzed
  std::optional<std::vector<double>> shown_sample;
  std::optional<double> shown_geomean;

  friend bool operator==(const PredictionRecord&,
                         const PredictionRecord&) = default;
};

struct Round {
  std::string round_id;
  double truth = 0.0;
  std::vector<PredictionRecord> records;  // sorted by (timestamp, record_id)

  friend bool operator==(const Round&, const Round&) = default;
};

struct Dataset {
  std::vector<Round> rounds;
  std::vector<std::string> meta;  // provenance only; not serialized

  std::size_t record_count() const noexcept;
};

/// Sorts records by (timestamp, record_id) and validates the Round/Dataset
/// invariants. Throws woc::Error on duplicate ids or non-positive prices.
void normalize(Dataset& dataset);

/// Records CSV:  record_id,round_id,user_id,timestamp,pre_social,post_social,
///               confidence,shown_sample
/// Truths CSV:   round_id,truth
/// Rounds keep the order of the truths file.
Dataset parse_dataset(std::istream& records_csv, std::istream& truths_csv);
Dataset load_dataset(const std::string& records_path,
                     const std::string& truths_path);

/// Writes both CSVs; prices with 12 significant digits.
void serialize_dataset(const Dataset& dataset, std::ostream& records_csv,
                       std::ostream& truths_csv);

/// Canonical text form of a price (12 significant digits).
std::string format_price(double value);

struct ShownCrowd {
  std::vector<double> sample;
  double geomean = 0.0;
};

/// The crowd a record's author saw: every pre-social prediction by another
/// user that precedes `index` in the round's (timestamp, record_id) order.
/// Returns nullopt (insufficient) when fewer than `min_prior` exist.
std::optional<ShownCrowd> reconstruct_shown_crowd(const Round& round,
                                                  std::size_t index,
                                                  std::size_t min_prior);

/// Same as reconstruct_shown_crowd, except that an explicitly recorded
/// shown_sample takes precedence over reconstruction.
std::optional<ShownCrowd> shown_crowd_for(const Round& round,
                                          std::size_t index,
                                          std::size_t min_prior);

struct RecordLocation {
  std::size_t round = 0;
  std::size_t record = 0;
};

/// record_id -> position in the dataset.
class RecordIndex {
 public:
  explicit RecordIndex(const Dataset& dataset);
  const RecordLocation* find(std::string_view record_id) const;

 private:
  std::unordered_map<std::string, RecordLocation> locations_;
};

}  // namespace woc
