#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "woc/dataset.hpp"
#include "woc/dip_test.hpp"
#include "woc/social_weight.hpp"

namespace woc {

enum class ModalityClass { Uni, NonUni };
std::string_view to_string(ModalityClass k) noexcept;

/// Dip outcome of the crowd each record's author saw, keyed by record_id.
using DipFlags = std::unordered_map<std::string, DipResult>;

/// Average individual improvement of one user's predictions in one round,
/// restricted to one modality class.
struct UserSubsetImprovement {
  std::string round_id;
  std::string user_id;
  ModalityClass k = ModalityClass::Uni;
  double mean_improvement = 0.0;
  std::size_t n = 0;
};

/// Every record needs a flag (MissingFlag otherwise); Indeterminate records
/// are left out of both classes. Output ordered by (round_id, user_id, k).
std::vector<UserSubsetImprovement> user_subset_improvements(
    const Dataset& dataset, const DipFlags& flags, ErrorMode mode = ErrorMode::Absolute);

/// One-sample z-test of the improved share among decisive entries against
/// 1/2, without continuity correction, two-sided.
struct ProportionTestResult {
  ModalityClass k = ModalityClass::Uni;
  std::size_t n_improved = 0;
  std::size_t n_worsened = 0;
  std::size_t n_unchanged = 0;
  double p_hat = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

/// Throws NoDecisiveEntries when improved + worsened == 0.
ProportionTestResult proportion_test(std::size_t improved, std::size_t worsened,
                                     std::size_t unchanged,
                                     ModalityClass k = ModalityClass::Uni);
ProportionTestResult proportion_test(std::span<const UserSubsetImprovement> entries,
                                     ModalityClass k);

struct RoundProportion {
  std::string round_id;
  ModalityClass k = ModalityClass::Uni;
  std::size_t n_improved = 0;
  std::size_t n_worsened = 0;
  std::size_t n_unchanged = 0;
  std::optional<ProportionTestResult> test;  // absent without decisive entries
};

/// Per-round counts and tests, ordered by (round_id, k).
std::vector<RoundProportion> per_round_proportions(
    std::span<const UserSubsetImprovement> entries);

struct ImprovementCurve {
  ModalityClass k = ModalityClass::Uni;
  std::vector<double> values;  // descending
  std::optional<double> mean;  // absent for an empty class
};

ImprovementCurve sorted_improvement_curve(std::span<const UserSubsetImprovement> entries,
                                          ModalityClass k);

/// round_id,user_id,k,mean_improvement,n
void write_user_improvements_csv(std::ostream& out,
                                 std::span<const UserSubsetImprovement> entries);
/// k,n_improved,n_worsened,n_unchanged,p_hat,z,p_value
void write_proportions_csv(std::ostream& out,
                           std::span<const ProportionTestResult> tests);
/// round_id,k,n_improved,n_worsened,n_unchanged,p_hat,z,p_value
void write_round_proportions_csv(std::ostream& out,
                                 std::span<const RoundProportion> rows);
/// k,rank,improvement  (rank 1 = largest)
void write_curves_csv(std::ostream& out, std::span<const ImprovementCurve> curves);

}  // namespace woc
