#include "woc/unimodality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "csv.hpp"
#include "woc/errors.hpp"
#include "woc/stats.hpp"

namespace woc {

std::string_view to_string(ModalityClass k) noexcept {
  return k == ModalityClass::Uni ? "uni" : "non_uni";
}

std::vector<UserSubsetImprovement> user_subset_improvements(const Dataset& dataset,
                                                            const DipFlags& flags,
                                                            ErrorMode mode) {
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  using Key = std::tuple<std::string, std::string, ModalityClass>;
  std::map<Key, Acc> groups;

  for (const auto& round : dataset.rounds) {
    for (const auto& rec : round.records) {
      const auto it = flags.find(rec.record_id);
      if (it == flags.end()) {
        throw Error(ErrorCode::MissingFlag, "no dip flag for record '" + rec.record_id + "'");
      }
      if (it->second.flag == Modality::Indeterminate) continue;
      const auto k = it->second.flag == Modality::Unimodal ? ModalityClass::Uni
                                                           : ModalityClass::NonUni;
      auto& acc = groups[Key{round.round_id, rec.user_id, k}];
      acc.sum += individual_improvement(rec.pre_social, rec.post_social, round.truth, mode);
      ++acc.n;
    }
  }

  std::vector<UserSubsetImprovement> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                   acc.sum / static_cast<double>(acc.n), acc.n});
  }
  return out;
}

ProportionTestResult proportion_test(std::size_t improved, std::size_t worsened,
                                     std::size_t unchanged, ModalityClass k) {
  const std::size_t m = improved + worsened;
  if (m == 0) {
    throw Error(ErrorCode::NoDecisiveEntries,
                std::string("no improved or worsened entries in class ") +
                    std::string(to_string(k)));
  }
  ProportionTestResult r;
  r.k = k;
  r.n_improved = improved;
  r.n_worsened = worsened;
  r.n_unchanged = unchanged;
  const double md = static_cast<double>(m);
  r.p_hat = static_cast<double>(improved) / md;
  // (p_hat - 1/2) / sqrt(1/(4m)) rearranged to stay exact on integer counts.
  r.z = (2.0 * static_cast<double>(improved) - md) / std::sqrt(md);
  r.p_value = stats::normal_two_sided_p(r.z);
  return r;
}

namespace {

struct Counts {
  std::size_t improved = 0;
  std::size_t worsened = 0;
  std::size_t unchanged = 0;

  void add(double improvement) {
    if (improvement > 0.0) {
      ++improved;
    } else if (improvement < 0.0) {
      ++worsened;
    } else {
      ++unchanged;
    }
  }
};

}  // namespace

ProportionTestResult proportion_test(std::span<const UserSubsetImprovement> entries,
                                     ModalityClass k) {
  Counts c;
  for (const auto& e : entries) {
    if (e.k == k) c.add(e.mean_improvement);
  }
  return proportion_test(c.improved, c.worsened, c.unchanged, k);
}

std::vector<RoundProportion> per_round_proportions(
    std::span<const UserSubsetImprovement> entries) {
  std::map<std::pair<std::string, ModalityClass>, Counts> by_round;
  for (const auto& e : entries) by_round[{e.round_id, e.k}].add(e.mean_improvement);

  std::vector<RoundProportion> rows;
  for (const auto& [key, c] : by_round) {
    RoundProportion row{key.first, key.second, c.improved, c.worsened, c.unchanged, {}};
    if (c.improved + c.worsened > 0) {
      row.test = proportion_test(c.improved, c.worsened, c.unchanged, key.second);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ImprovementCurve sorted_improvement_curve(std::span<const UserSubsetImprovement> entries,
                                          ModalityClass k) {
  ImprovementCurve curve;
  curve.k = k;
  for (const auto& e : entries) {
    if (e.k == k) curve.values.push_back(e.mean_improvement);
  }
  std::sort(curve.values.begin(), curve.values.end(), std::greater<>());
  if (!curve.values.empty()) curve.mean = stats::mean(curve.values);
  return curve;
}

void write_user_improvements_csv(std::ostream& out,
                                 std::span<const UserSubsetImprovement> entries) {
  out << "round_id,user_id,k,mean_improvement,n\n";
  for (const auto& e : entries) {
    out << csv::escape(e.round_id) << ',' << csv::escape(e.user_id) << ',' << to_string(e.k)
        << ',' << csv::format_double(e.mean_improvement) << ',' << e.n << '\n';
  }
}

void write_proportions_csv(std::ostream& out, std::span<const ProportionTestResult> tests) {
  out << "k,n_improved,n_worsened,n_unchanged,p_hat,z,p_value\n";
  for (const auto& t : tests) {
    out << to_string(t.k) << ',' << t.n_improved << ',' << t.n_worsened << ','
        << t.n_unchanged << ',' << csv::format_double(t.p_hat) << ','
        << csv::format_double(t.z) << ',' << csv::format_double(t.p_value) << '\n';
  }
}

void write_round_proportions_csv(std::ostream& out, std::span<const RoundProportion> rows) {
  out << "round_id,k,n_improved,n_worsened,n_unchanged,p_hat,z,p_value\n";
  for (const auto& r : rows) {
    out << csv::escape(r.round_id) << ',' << to_string(r.k) << ',' << r.n_improved << ','
        << r.n_worsened << ',' << r.n_unchanged << ',';
    if (r.test) {
      out << csv::format_double(r.test->p_hat) << ',' << csv::format_double(r.test->z) << ','
          << csv::format_double(r.test->p_value);
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

void write_curves_csv(std::ostream& out, std::span<const ImprovementCurve> curves) {
  out << "k,rank,improvement\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      out << to_string(c.k) << ',' << (i + 1) << ',' << csv::format_double(c.values[i]) << '\n';
    }
  }
}

}  // namespace woc
