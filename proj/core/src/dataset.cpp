#include "woc/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "csv.hpp"
#include "woc/errors.hpp"
#include "woc/stats.hpp"

namespace woc {
namespace {

constexpr std::string_view kRecordsHeader =
    "record_id,round_id,user_id,timestamp,pre_social,post_social,confidence,"
    "shown_sample";
constexpr std::string_view kTruthsHeader = "round_id,truth";

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<int> fixed_int(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) return std::nullopt;
  const auto part = s.substr(pos, len);
  if (!all_digits(part)) return std::nullopt;
  int v = 0;
  std::from_chars(part.data(), part.data() + part.size(), v);
  return v;
}

std::optional<Timestamp> parse_iso(std::string_view s) {
  using namespace std::chrono;
  // YYYY-MM-DD
  const auto y = fixed_int(s, 0, 4);
  const auto mo = fixed_int(s, 5, 2);
  const auto d = fixed_int(s, 8, 2);
  if (!y || !mo || !d || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;

  std::int64_t micros = 0;
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    const auto hh = fixed_int(s, pos, 2);
    const auto mm = fixed_int(s, pos + 3, 2);
    if (!hh || !mm || s[pos + 2] != ':' || *hh > 23 || *mm > 59) return std::nullopt;
    micros += (std::int64_t{*hh} * 3600 + std::int64_t{*mm} * 60) * 1'000'000;
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
      const auto ss = fixed_int(s, pos + 1, 2);
      if (!ss || *ss > 60) return std::nullopt;
      micros += std::int64_t{*ss} * 1'000'000;
      pos += 3;
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        ++pos;
        std::int64_t frac = 0;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
          if (digits < 6) {
            frac = frac * 10 + (s[pos] - '0');
            ++digits;
          }
          ++pos;
        }
        if (digits == 0) return std::nullopt;
        while (digits < 6) {
          frac *= 10;
          ++digits;
        }
        micros += frac;
      }
    }
    if (pos < s.size()) {
      if (s[pos] == 'Z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '+' ? 1 : -1;
        const auto oh = fixed_int(s, pos + 1, 2);
        const auto om = fixed_int(s, pos + 4, 2);
        if (!oh || !om || s[pos + 3] != ':') return std::nullopt;
        micros -= sign * (std::int64_t{*oh} * 3600 + std::int64_t{*om} * 60) * 1'000'000;
        pos += 6;
      }
    }
    if (pos != s.size()) return std::nullopt;
  }
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{days * 86'400'000'000 + micros, TimeFormat::Iso8601};
}

double parse_price(std::string_view field, std::size_t line, const char* name) {
  const auto value = csv::parse_double(field);
  if (!value || !std::isfinite(*value)) {
    throw MalformedRow(line, std::string(name) + " is not a number: '" +
                                 std::string(field) + "'");
  }
  if (*value <= 0.0) throw NonPositivePrice(line, name);
  return *value;
}

void expect_header(std::istream& in, std::string_view expected, const char* what) {
  std::string line;
  if (!csv::read_line(in, line)) throw MalformedRow(1, std::string(what) + " is empty");
  if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF) {
    line.erase(0, 3);  // UTF-8 BOM
  }
  if (csv::trim(line) != expected) {
    throw MalformedRow(1, std::string(what) + " header must be '" +
                              std::string(expected) + "'");
  }
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  text = csv::trim(text);
  std::string_view digits = text;
  if (!digits.empty() && digits.front() == '-') digits.remove_prefix(1);
  if (all_digits(digits)) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return Timestamp{v, TimeFormat::Epoch};
  }
  return parse_iso(text);
}

std::string format_timestamp(const Timestamp& ts) {
  using namespace std::chrono;
  if (ts.format == TimeFormat::Epoch) return std::to_string(ts.value);
  const std::int64_t per_day = 86'400'000'000;
  std::int64_t days = ts.value / per_day;
  std::int64_t rem = ts.value % per_day;
  if (rem < 0) {
    rem += per_day;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const std::int64_t secs = rem / 1'000'000;
  const std::int64_t frac = rem % 1'000'000;
  char buf[64];
  int len = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld",
                          static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()),
                          static_cast<unsigned>(ymd.day()),
                          static_cast<long long>(secs / 3600),
                          static_cast<long long>((secs / 60) % 60),
                          static_cast<long long>(secs % 60));
  if (frac != 0) {
    len += std::snprintf(buf + len, sizeof buf - len, ".%06lld",
                         static_cast<long long>(frac));
  }
  std::snprintf(buf + len, sizeof buf - len, "Z");
  return buf;
}

std::string format_price(double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 12);
  return std::string(buf, ptr);
}

std::size_t Dataset::record_count() const noexcept {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.records.size();
  return n;
}

void normalize(Dataset& dataset) {
  std::unordered_set<std::string> round_ids;
  std::unordered_set<std::string> record_ids;
  for (auto& round : dataset.rounds) {
    if (!round_ids.insert(round.round_id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate round_id '" + round.round_id + "'");
    }
    if (!(round.truth > 0.0)) {
      throw Error(ErrorCode::NonPositivePrice,
                  "non-positive truth for round '" + round.round_id + "'");
    }
    for (auto& rec : round.records) {
      if (!record_ids.insert(rec.record_id).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate record_id '" + rec.record_id + "'");
      }
      if (!(rec.pre_social > 0.0) || !(rec.post_social > 0.0)) {
        throw Error(ErrorCode::NonPositivePrice,
                    "non-positive price in record '" + rec.record_id + "'");
      }
      if (rec.shown_sample && !rec.shown_sample->empty()) {
        rec.shown_geomean = stats::geometric_mean(*rec.shown_sample);
      }
    }
    std::sort(round.records.begin(), round.records.end(),
              [](const PredictionRecord& a, const PredictionRecord& b) {
                if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                return a.record_id < b.record_id;
              });
  }
}

Dataset parse_dataset(std::istream& records_csv, std::istream& truths_csv) {
  Dataset dataset;
  std::unordered_map<std::string, std::size_t> round_pos;
  std::string line;

  expect_header(truths_csv, kTruthsHeader, "truths CSV");
  for (std::size_t line_no = 2; csv::read_line(truths_csv, line); ++line_no) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (!fields || fields->size() != 2) {
      throw MalformedRow(line_no, "truths row must have 2 fields");
    }
    const std::string id(csv::trim((*fields)[0]));
    if (id.empty()) throw MalformedRow(line_no, "empty round_id");
    if (round_pos.count(id)) throw MalformedRow(line_no, "duplicate round_id '" + id + "'");
    Round round;
    round.round_id = id;
    round.truth = parse_price((*fields)[1], line_no, "truth");
    round_pos.emplace(id, dataset.rounds.size());
    dataset.rounds.push_back(std::move(round));
  }

  expect_header(records_csv, kRecordsHeader, "records CSV");
  std::optional<TimeFormat> time_format;
  std::unordered_set<std::string> record_ids;
  for (std::size_t line_no = 2; csv::read_line(records_csv, line); ++line_no) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (!fields) throw MalformedRow(line_no, "unterminated quote");
    if (fields->size() != 8) {
      throw MalformedRow(line_no, "expected 8 fields, got " + std::to_string(fields->size()));
    }
    const auto& f = *fields;
    PredictionRecord rec;
    rec.record_id = std::string(csv::trim(f[0]));
    rec.round_id = std::string(csv::trim(f[1]));
    rec.user_id = std::string(csv::trim(f[2]));
    if (rec.record_id.empty()) throw MalformedRow(line_no, "empty record_id");
    if (rec.round_id.empty()) throw MalformedRow(line_no, "empty round_id");
    if (rec.user_id.empty()) throw MalformedRow(line_no, "empty user_id");
    if (!record_ids.insert(rec.record_id).second) {
      throw MalformedRow(line_no, "duplicate record_id '" + rec.record_id + "'");
    }

    const auto ts = parse_timestamp(f[3]);
    if (!ts) throw MalformedRow(line_no, "unparseable timestamp '" + f[3] + "'");
    if (!time_format) time_format = ts->format;
    if (*time_format != ts->format) {
      throw MalformedRow(line_no, "timestamp format differs from earlier rows");
    }
    rec.timestamp = *ts;

    rec.pre_social = parse_price(f[4], line_no, "pre_social");
    rec.post_social = parse_price(f[5], line_no, "post_social");

    if (!csv::trim(f[6]).empty()) {
      const auto c = csv::parse_double(f[6]);
      if (!c || !(*c >= 0.0 && *c <= 1.0)) {
        throw MalformedRow(line_no, "confidence must be a number in [0,1]");
      }
      rec.confidence = *c;
    }

    const auto shown = csv::trim(f[7]);
    if (!shown.empty()) {
      std::vector<double> sample;
      std::size_t start = 0;
      while (start <= shown.size()) {
        const auto end = std::min(shown.find(';', start), shown.size());
        sample.push_back(parse_price(shown.substr(start, end - start), line_no, "shown_sample"));
        start = end + 1;
      }
      rec.shown_sample = std::move(sample);
    }

    const auto it = round_pos.find(rec.round_id);
    if (it == round_pos.end()) throw UnknownRound(rec.round_id);
    dataset.rounds[it->second].records.push_back(std::move(rec));
  }

  normalize(dataset);
  return dataset;
}

Dataset load_dataset(const std::string& records_path, const std::string& truths_path) {
  std::ifstream records(records_path);
  if (!records) throw IoError(records_path, "cannot open records file");
  std::ifstream truths(truths_path);
  if (!truths) throw IoError(truths_path, "cannot open truths file");
  return parse_dataset(records, truths);
}

void serialize_dataset(const Dataset& dataset, std::ostream& records_csv,
                       std::ostream& truths_csv) {
  truths_csv << kTruthsHeader << '\n';
  records_csv << kRecordsHeader << '\n';
  for (const auto& round : dataset.rounds) {
    truths_csv << csv::escape(round.round_id) << ',' << format_price(round.truth) << '\n';
    for (const auto& rec : round.records) {
      records_csv << csv::escape(rec.record_id) << ',' << csv::escape(rec.round_id) << ','
                  << csv::escape(rec.user_id) << ',' << format_timestamp(rec.timestamp) << ','
                  << format_price(rec.pre_social) << ',' << format_price(rec.post_social)
                  << ',';
      if (rec.confidence) records_csv << format_price(*rec.confidence);
      records_csv << ',';
      if (rec.shown_sample) {
        for (std::size_t i = 0; i < rec.shown_sample->size(); ++i) {
          if (i) records_csv << ';';
          records_csv << format_price((*rec.shown_sample)[i]);
        }
      }
      records_csv << '\n';
    }
  }
}

std::optional<ShownCrowd> reconstruct_shown_crowd(const Round& round, std::size_t index,
                                                  std::size_t min_prior) {
  const auto& self = round.records.at(index);
  ShownCrowd crowd;
  for (std::size_t i = 0; i < index; ++i) {
    const auto& other = round.records[i];
    if (other.user_id != self.user_id) crowd.sample.push_back(other.pre_social);
  }
  if (crowd.sample.empty() || crowd.sample.size() < min_prior) return std::nullopt;
  crowd.geomean = stats::geometric_mean(crowd.sample);
  return crowd;
}

std::optional<ShownCrowd> shown_crowd_for(const Round& round, std::size_t index,
                                          std::size_t min_prior) {
  const auto& rec = round.records.at(index);
  if (!rec.shown_sample) return reconstruct_shown_crowd(round, index, min_prior);
  if (rec.shown_sample->empty() || rec.shown_sample->size() < min_prior) return std::nullopt;
  ShownCrowd crowd{*rec.shown_sample, 0.0};
  crowd.geomean = rec.shown_geomean ? *rec.shown_geomean : stats::geometric_mean(crowd.sample);
  return crowd;
}

RecordIndex::RecordIndex(const Dataset& dataset) {
  for (std::size_t r = 0; r < dataset.rounds.size(); ++r) {
    const auto& recs = dataset.rounds[r].records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      locations_.emplace(recs[i].record_id, RecordLocation{r, i});
    }
  }
}

const RecordLocation* RecordIndex::find(std::string_view record_id) const {
  const auto it = locations_.find(std::string(record_id));
  return it == locations_.end() ? nullptr : &it->second;
}

}  // namespace woc
