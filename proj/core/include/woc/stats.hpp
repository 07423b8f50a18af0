#pragma once

#include <span>

namespace woc::stats {

double mean(std::span<const double> values);

/// exp(mean(log x)); every value must be positive.
double geometric_mean(std::span<const double> values);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Standard normal CDF.
double normal_cdf(double z);

/// Two-sided tail probability P(|Z| >= |z|) for a standard normal Z.
double normal_two_sided_p(double z);

}  // namespace woc::stats
