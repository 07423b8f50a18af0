#include "woc/dip_test.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <random>

#include "woc/errors.hpp"
#include "woc/parallel.hpp"
#include "woc/random.hpp"

namespace woc {

// Greatest-convex-minorant / least-concave-majorant cycling over a shrinking
// modal interval [low, high]. Works in "count" units (2n * dip) throughout
// and divides once at the end. Arrays are 1-based to keep the index algebra
// readable; x[0] is unused.
DipFit dip_sorted(std::span<const double> sorted) {
  const std::size_t n_sz = sorted.size();
  if (n_sz == 0) throw Error(ErrorCode::EmptySample, "dip of an empty sample");
  for (double v : sorted) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite value in sample");
  }
  const long n = static_cast<long>(n_sz);
  std::vector<double> x(n_sz + 1);
  for (long i = 1; i <= n; ++i) x[i] = sorted[i - 1];

  long low = 1;
  long high = n;
  double dip = 1.0;
  auto finish = [&] {
    return DipFit{dip / (2.0 * static_cast<double>(n)), static_cast<std::size_t>(low - 1),
                  static_cast<std::size_t>(high - 1)};
  };
  if (n < 2 || x[n] == x[1]) return finish();

  std::vector<long> mn(n_sz + 1), mj(n_sz + 1), gcm(n_sz + 2), lcm(n_sz + 2);

  // Predecessor links of the convex minorant through (x[j], j).
  mn[1] = 1;
  for (long j = 2; j <= n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      const long mnj = mn[j];
      const long mnmnj = mn[mnj];
      if (mnj == 1 || (x[j] - x[mnj]) * static_cast<double>(mnj - mnmnj) <
                          (x[mnj] - x[mnmnj]) * static_cast<double>(j - mnj)) {
        break;
      }
      mn[j] = mnmnj;
    }
  }

  // Successor links of the concave majorant.
  mj[n] = n;
  for (long k = n - 1; k >= 1; --k) {
    mj[k] = k + 1;
    for (;;) {
      const long mjk = mj[k];
      const long mjmjk = mj[mjk];
      if (mjk == n || (x[k] - x[mjk]) * static_cast<double>(mjk - mjmjk) <
                          (x[mjk] - x[mjmjk]) * static_cast<double>(k - mjk)) {
        break;
      }
      mj[k] = mjmjk;
    }
  }

  // Each pass either grows the dip or shrinks [low, high]; the cap only
  // guards against a non-terminating cycle on pathological input.
  for (long pass = 0; pass <= 2 * n + 4; ++pass) {
    long i = 1;
    gcm[1] = high;
    while (gcm[i] > low) {
      gcm[i + 1] = mn[gcm[i]];
      ++i;
    }
    long ig = i;
    const long l_gcm = i;
    long ix = ig - 1;

    i = 1;
    lcm[1] = low;
    while (lcm[i] < high) {
      lcm[i + 1] = mj[lcm[i]];
      ++i;
    }
    long ih = i;
    const long l_lcm = i;
    long iv = 2;

    // Largest vertical distance between the GCM and LCM over [low, high].
    long double d = 0.0L;
    if (l_gcm != 2 || l_lcm != 2) {
      do {
        const long gcmix = gcm[ix];
        const long lcmiv = lcm[iv];
        if (gcmix > lcmiv) {
          const long gcmi1 = gcm[ix + 1];
          const long double dx =
              static_cast<long double>(lcmiv - gcmi1 + 1) -
              (static_cast<long double>(x[lcmiv]) - x[gcmi1]) * (gcmix - gcmi1) /
                  (x[gcmix] - x[gcmi1]);
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          const long lcmiv1 = lcm[iv - 1];
          const long double dx =
              (static_cast<long double>(x[gcmix]) - x[lcmiv1]) * (lcmiv - lcmiv1) /
                  (x[lcmiv] - x[lcmiv1]) -
              static_cast<long double>(gcmix - lcmiv1 - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 1) ix = 1;
        if (iv > l_lcm) iv = l_lcm;
      } while (gcm[ix] != lcm[iv]);
    } else {
      d = 1.0L;
    }

    if (d < dip) break;

    // Dip of the ECDF against the convex minorant on the left piece.
    double dip_l = 0.0;
    for (long j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const long jb = gcm[j + 1];
      const long je = gcm[j];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = static_cast<double>(je - jb) / (x[je] - x[jb]);
        for (long jj = jb; jj <= je; ++jj) {
          const double t = static_cast<double>(jj - jb + 1) - (x[jj] - x[jb]) * c;
          max_t = std::max(max_t, t);
        }
      }
      dip_l = std::max(dip_l, max_t);
    }

    // ... and against the concave majorant on the right piece.
    double dip_u = 0.0;
    for (long j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      const long jb = lcm[j];
      const long je = lcm[j + 1];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = static_cast<double>(je - jb) / (x[je] - x[jb]);
        for (long jj = jb; jj <= je; ++jj) {
          const double t = (x[jj] - x[jb]) * c - static_cast<double>(jj - jb - 1);
          max_t = std::max(max_t, t);
        }
      }
      dip_u = std::max(dip_u, max_t);
    }

    dip = std::max(dip, std::max(dip_l, dip_u));

    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return finish();
}

double dip_statistic(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  return dip_sorted(sorted).dip;
}

DipNullDistribution DipNullDistribution::simulate(std::size_t n, std::size_t replicates,
                                                  std::uint64_t seed, std::size_t threads) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "null distribution needs n >= 1");
  std::vector<double> dips(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    auto rng = stream_for(seed, {n, r});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> u(n);
    for (auto& v : u) v = unif(rng);
    std::sort(u.begin(), u.end());
    dips[r] = dip_sorted(u).dip;
  });
  return from_sorted(n, seed, std::move(dips));
}

DipNullDistribution DipNullDistribution::from_sorted(std::size_t n, std::uint64_t seed,
                                                     std::vector<double> dips) {
  DipNullDistribution null;
  null.n_ = n;
  null.seed_ = seed;
  std::sort(dips.begin(), dips.end());
  null.sorted_ = std::move(dips);
  return null;
}

double DipNullDistribution::p_value(double dip) const {
  const auto first_ge = std::lower_bound(sorted_.begin(), sorted_.end(), dip);
  const auto at_least = static_cast<double>(sorted_.end() - first_ge);
  return (1.0 + at_least) / (static_cast<double>(sorted_.size()) + 1.0);
}

namespace {

void check_replicates(std::size_t replicates) {
  if (replicates < kMinDipReplicates) {
    throw Error(ErrorCode::InvalidArgument, "dip p-values need at least " +
                                                std::to_string(kMinDipReplicates) +
                                                " Monte-Carlo replicates");
  }
}

}  // namespace

double dip_pvalue(double dip, std::size_t n, std::size_t replicates, std::uint64_t seed,
                  std::size_t n_min, std::size_t threads) {
  if (n < n_min || n == 0) {
    throw Error(ErrorCode::TooFewPoints, "dip p-value needs n >= " + std::to_string(n_min) +
                                             ", got " + std::to_string(n));
  }
  check_replicates(replicates);
  return DipNullDistribution::simulate(n, replicates, seed, threads).p_value(dip);
}

DipNullCache::DipNullCache(std::size_t replicates, std::uint64_t seed, std::size_t threads)
    : replicates_(replicates), seed_(seed), threads_(threads) {
  check_replicates(replicates);
}

std::size_t DipNullCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::shared_ptr<const DipNullDistribution> DipNullCache::get(std::size_t n) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(n); it != entries_.end()) return it->second;
  }
  auto null = std::make_shared<const DipNullDistribution>(
      DipNullDistribution::simulate(n, replicates_, seed_, threads_));
  std::lock_guard lock(mutex_);
  // Another thread may have won the race; both results are identical.
  return entries_.emplace(n, std::move(null)).first->second;
}

void DipNullCache::prepare(std::span<const std::size_t> sizes) {
  std::vector<std::size_t> missing;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t n : sizes) {
      if (n > 0 && !entries_.count(n)) missing.push_back(n);
    }
  }
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  std::vector<std::shared_ptr<const DipNullDistribution>> built(missing.size());
  parallel_for(missing.size(), threads_, [&](std::size_t i) {
    built[i] = std::make_shared<const DipNullDistribution>(
        DipNullDistribution::simulate(missing[i], replicates_, seed_, 1));
  });
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < missing.size(); ++i) entries_.emplace(missing[i], built[i]);
}

void DipNullCache::save(std::ostream& out) const {
  nlohmann::json doc;
  doc["format"] = "woc-dip-null";
  doc["version"] = 1;
  doc["replicates"] = replicates_;
  doc["seed"] = seed_;
  auto& list = doc["null"] = nlohmann::json::array();
  std::lock_guard lock(mutex_);
  for (const auto& [n, null] : entries_) {
    list.push_back({{"n", n}, {"sorted_dips", null->sorted()}});
  }
  out << doc.dump() << '\n';
}

void DipNullCache::load(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("dip cache is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != "woc-dip-null" || doc.value("version", 0) != 1) {
    throw Error(ErrorCode::ConfigInvalid, "unrecognized dip cache format or version");
  }
  if (doc.value("replicates", std::size_t{0}) != replicates_ ||
      doc.value("seed", std::uint64_t{0}) != seed_) {
    throw Error(ErrorCode::ConfigInvalid, "dip cache was built for different (M, seed)");
  }
  std::lock_guard lock(mutex_);
  for (const auto& entry : doc.at("null")) {
    const auto n = entry.at("n").get<std::size_t>();
    auto dips = entry.at("sorted_dips").get<std::vector<double>>();
    if (dips.size() != replicates_) {
      throw Error(ErrorCode::ConfigInvalid, "dip cache entry has the wrong replicate count");
    }
    entries_.emplace(n, std::make_shared<const DipNullDistribution>(
                            DipNullDistribution::from_sorted(n, seed_, std::move(dips))));
  }
}

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Unimodal: return "unimodal";
    case Modality::NonUnimodal: return "non_unimodal";
    case Modality::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

namespace {

DipResult flag_with(std::span<const double> sample, std::size_t n_min,
                    const auto& p_value_for) {
  DipResult result;
  result.n = sample.size();
  result.dip = sample.empty() ? std::nan("") : dip_statistic(sample);
  if (result.n < n_min || result.n == 0) {
    result.flag = Modality::Indeterminate;
    return result;
  }
  result.p_value = p_value_for(result.n, result.dip);
  result.flag = *result.p_value < kUnimodalityLevel ? Modality::NonUnimodal : Modality::Unimodal;
  return result;
}

}  // namespace

DipResult flag_unimodality(std::span<const double> sample, const DipOptions& options) {
  check_replicates(options.replicates);
  return flag_with(sample, options.n_min, [&](std::size_t n, double dip) {
    return DipNullDistribution::simulate(n, options.replicates, options.seed, options.threads)
        .p_value(dip);
  });
}

DipResult flag_unimodality(std::span<const double> sample, std::size_t n_min,
                           DipNullCache& cache) {
  return flag_with(sample, n_min,
                   [&](std::size_t n, double dip) { return cache.get(n)->p_value(dip); });
}

}  // namespace woc
