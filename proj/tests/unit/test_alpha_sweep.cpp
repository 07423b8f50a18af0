#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "woc/alpha_sweep.hpp"
#include "woc/crowd_sim.hpp"
#include "woc/errors.hpp"
#include "woc/stats.hpp"

using namespace woc;

namespace {

std::vector<SocialWeightResult> with_sws(std::initializer_list<std::optional<double>> sws) {
  std::vector<SocialWeightResult> out;
  int i = 0;
  for (const auto& sw : sws) {
    SocialWeightResult r;
    r.record_id = "r" + std::to_string(i++);
    r.sw = sw;
    r.direction = direction_of(sw);
    if (!sw) r.excluded = Exclusion::UndefinedSw;
    out.push_back(r);
  }
  return out;
}

std::vector<std::string> ids_for(const std::vector<SocialWeightResult>& rs,
                                 std::initializer_list<int> which) {
  std::vector<std::string> ids;
  for (int i : which) ids.push_back(rs[static_cast<std::size_t>(i)].record_id);
  return ids;
}

PredictionRecord rec(std::string id, std::string round, int ts, double pre, double post) {
  PredictionRecord r;
  r.record_id = std::move(id);
  r.round_id = std::move(round);
  r.user_id = "u" + r.record_id;
  r.timestamp = {ts, TimeFormat::Epoch};
  r.pre_social = pre;
  r.post_social = post;
  return r;
}

SimulatedData accurate_scenario(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.pre_bias = 0.5;
  spec.pre_sigma = 0.05;
  spec.sw_distribution = SwDistribution::uniform(-1.0, 1.0);
  spec.seed = seed;
  return generate_dataset(spec);
}

}  // namespace

TEST(FilterByAlpha, SpecExamples) {
  const auto rs = with_sws({-0.5, 0.0, 0.3, 0.9});
  EXPECT_EQ(filter_by_alpha(rs, 0.5).record_ids, ids_for(rs, {1, 2}));
  EXPECT_EQ(filter_by_alpha(rs, -0.5).record_ids, ids_for(rs, {0, 1}));
  EXPECT_EQ(filter_by_alpha(rs, 0.0).record_ids, ids_for(rs, {1}));
  EXPECT_EQ(filter_by_alpha(rs, 1.0).record_ids, ids_for(rs, {1, 2, 3}));
}

TEST(FilterByAlpha, NeverSelectsUndefinedOrOutOfRange) {
  const auto rs = with_sws({std::nullopt, 1.5, -2.0, 0.2});
  EXPECT_EQ(filter_by_alpha(rs, 1.0).record_ids, ids_for(rs, {3}));
  EXPECT_TRUE(filter_by_alpha(rs, -1.0).record_ids.empty());
}

TEST(FilterByAlpha, RejectsOutOfRange) {
  const auto rs = with_sws({0.1});
  for (double a : {1.0001, -1.5, std::nan("")}) {
    try {
      filter_by_alpha(rs, a);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::AlphaOutOfRange);
    }
  }
}

TEST(FilterByAlpha, NestedSubsets) {
  const auto sim = accurate_scenario(1);
  const auto rs = classify_records(sim.dataset, 3);
  for (double sign : {1.0, -1.0}) {
    std::vector<std::string> prev;
    for (double a = 0.05; a <= 1.0; a += 0.05) {
      auto cur = filter_by_alpha(rs, sign * a).record_ids;
      std::set<std::string> s(cur.begin(), cur.end());
      for (const auto& id : prev) EXPECT_TRUE(s.count(id));
      prev = cur;
    }
  }
}

TEST(RoundImprovement, HandExample) {
  Round round{"A", 100.0, {rec("a", "A", 1, 80, 90), rec("b", "A", 2, 90, 100), rec("c", "A", 3, 50, 60)}};
  FilteredSubset s{0.5, {"a", "b"}};
  const auto ri = round_improvement(round, s);
  ASSERT_TRUE(ri);
  EXPECT_DOUBLE_EQ(ri->mean_pre, 85.0);
  EXPECT_DOUBLE_EQ(ri->err_pre, 15.0);
  EXPECT_DOUBLE_EQ(ri->mean_post, 95.0);
  EXPECT_DOUBLE_EQ(ri->err_post, 5.0);
  EXPECT_DOUBLE_EQ(ri->improvement, 10.0);
  EXPECT_EQ(ri->n, 2u);

  EXPECT_FALSE(round_improvement(round, FilteredSubset{0.5, {"zzz"}}));

  Round still{"B", 10.0, {rec("x", "B", 1, 7, 7)}};
  EXPECT_EQ(round_improvement(still, FilteredSubset{0.0, {"x"}})->improvement, 0.0);
}

TEST(RoundImprovement, PercentMode) {
  Round round{"A", 200.0, {rec("a", "A", 1, 100, 150)}};
  const auto ri = round_improvement(round, FilteredSubset{1.0, {"a"}}, ErrorMode::Percent);
  EXPECT_DOUBLE_EQ(ri->err_pre, 50.0);
  EXPECT_DOUBLE_EQ(ri->err_post, 25.0);
}

TEST(MeanImprovement, Examples) {
  auto make = [](std::initializer_list<double> v) {
    std::vector<RoundImprovement> out;
    for (double x : v) {
      RoundImprovement r;
      r.improvement = x;
      out.push_back(r);
    }
    return out;
  };
  EXPECT_DOUBLE_EQ(mean_improvement(make({10, -4})), 3.0);
  EXPECT_DOUBLE_EQ(mean_improvement(make({7})), 7.0);
  EXPECT_DOUBLE_EQ(mean_improvement(make({0, 0, 0})), 0.0);
  try {
    mean_improvement({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRounds);
  }
}

TEST(BootstrapDraw, PooledAndStratified) {
  const std::vector<std::size_t> member_round{0, 0, 0, 1, 2, 2};
  const auto pooled = bootstrap_draw(member_round, 3, 4, 99, ResampleMode::Pooled);
  EXPECT_EQ(pooled.size(), member_round.size());
  for (auto i : pooled) EXPECT_LT(i, member_round.size());
  EXPECT_EQ(pooled, bootstrap_draw(member_round, 3, 4, 99, ResampleMode::Pooled));
  EXPECT_NE(pooled, bootstrap_draw(member_round, 3, 5, 99, ResampleMode::Pooled));

  for (std::size_t b = 0; b < 50; ++b) {
    const auto strat = bootstrap_draw(member_round, 3, b, 7, ResampleMode::Stratified);
    std::vector<int> per_round(3, 0);
    for (auto i : strat) ++per_round[member_round[i]];
    EXPECT_EQ(per_round, (std::vector<int>{3, 1, 2}));
  }
}

TEST(BootstrapImprovement, SingletonIsDegenerate) {
  Dataset d;
  d.rounds.push_back(Round{"A", 100.0, {rec("a", "A", 1, 80, 90)}});
  auto rs = with_sws({0.4});
  rs[0].record_id = "a";
  BootstrapOptions opt;
  opt.seed = 3;
  const auto p = bootstrap_improvement(d, rs, 0.5, opt);
  EXPECT_EQ(p.bootstrap_samples.size(), 100u);
  for (double x : p.bootstrap_samples) EXPECT_EQ(x, p.mean_improvement);
  EXPECT_EQ(p.ci_low, p.mean_improvement);
  EXPECT_EQ(p.ci_high, p.mean_improvement);
  EXPECT_DOUBLE_EQ(p.mean_improvement, 10.0);
}

TEST(BootstrapImprovement, EmptySubsetThrows) {
  Dataset d;
  d.rounds.push_back(Round{"A", 100.0, {rec("a", "A", 1, 80, 90)}});
  auto rs = with_sws({0.4});
  rs[0].record_id = "a";
  try {
    bootstrap_improvement(d, rs, -0.5, BootstrapOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySubset);
  }
}

TEST(BootstrapImprovement, DeterministicAcrossThreads) {
  const auto sim = accurate_scenario(2);
  const auto rs = classify_records(sim.dataset, 3);
  BootstrapOptions opt;
  opt.seed = 11;
  const auto a = bootstrap_improvement(sim.dataset, rs, 0.7, opt);
  opt.threads = 4;
  const auto b = bootstrap_improvement(sim.dataset, rs, 0.7, opt);
  EXPECT_EQ(a.bootstrap_samples, b.bootstrap_samples);
  EXPECT_EQ(a.ci_low, b.ci_low);
  EXPECT_EQ(a.ci_high, b.ci_high);
  opt.seed = 12;
  const auto c = bootstrap_improvement(sim.dataset, rs, 0.7, opt);
  EXPECT_NE(a.bootstrap_samples, c.bootstrap_samples);
  EXPECT_EQ(a.mean_improvement, c.mean_improvement);
}

TEST(BootstrapImprovement, CiIsPercentileOfSamples) {
  const auto sim = accurate_scenario(3);
  const auto rs = classify_records(sim.dataset, 3);
  for (auto mode : {ResampleMode::Pooled, ResampleMode::Stratified}) {
    BootstrapOptions opt;
    opt.resample = mode;
    const auto p = bootstrap_improvement(sim.dataset, rs, -0.6, opt);
    auto sorted = p.bootstrap_samples;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(p.ci_low, stats::quantile_sorted(sorted, 0.025));
    EXPECT_EQ(p.ci_high, stats::quantile_sorted(sorted, 0.975));
    EXPECT_LE(p.ci_low, p.ci_high);
  }
}

TEST(BootstrapImprovement, BootstrapMeanNearPlugIn) {
  const auto sim = accurate_scenario(4);
  const auto rs = classify_records(sim.dataset, 3);
  BootstrapOptions opt;
  opt.replicates = 1000;
  const auto p = bootstrap_improvement(sim.dataset, rs, 0.8, opt);
  const double m = stats::mean(p.bootstrap_samples);
  double ss = 0.0;
  for (double x : p.bootstrap_samples) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / (p.bootstrap_samples.size() - 1));
  const double se_of_mean = se / std::sqrt(static_cast<double>(p.bootstrap_samples.size()));
  EXPECT_LT(std::fabs(m - p.mean_improvement), 3.0 * se);
  EXPECT_GT(se_of_mean, 0.0);
}

TEST(SweepAlpha, OrderingEmptyAndComposition) {
  const auto sim = accurate_scenario(5);
  const auto rs = classify_records(sim.dataset, 3);
  BootstrapOptions opt;
  opt.seed = 2;
  EXPECT_TRUE(sweep_alpha(sim.dataset, rs, {}, opt).empty());

  const std::vector<double> grid{1.0, -1.0, 0.0};
  const auto pts = sweep_alpha(sim.dataset, rs, grid, opt);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].alpha, -1.0);
  EXPECT_EQ(pts[1].alpha, 0.0);
  EXPECT_EQ(pts[2].alpha, 1.0);
  EXPECT_LT(pts[0].mean_improvement, 0.0);
  EXPECT_GT(pts[2].mean_improvement, 0.0);
  // nobody sits at exactly zero in this scenario
  EXPECT_EQ(pts[1].flag, PointFlag::Empty);
  EXPECT_TRUE(std::isnan(pts[1].mean_improvement));

  const std::vector<double> half{0.5};
  const auto one = sweep_alpha(sim.dataset, rs, half, opt);
  const auto direct = bootstrap_improvement(sim.dataset, rs, 0.5, opt);
  EXPECT_EQ(one[0].bootstrap_samples, direct.bootstrap_samples);
  EXPECT_EQ(one[0].mean_improvement, direct.mean_improvement);
}

TEST(SweepAlpha, ZeroPointIsDegenerate) {
  Dataset d;
  d.rounds.push_back(Round{"A", 100.0, {rec("a", "A", 1, 80, 80)}});
  auto rs = with_sws({0.0});
  rs[0].record_id = "a";
  const std::vector<double> grid{0.0};
  const auto pts = sweep_alpha(d, rs, grid, BootstrapOptions{});
  EXPECT_EQ(pts[0].flag, PointFlag::Degenerate);
  EXPECT_EQ(pts[0].mean_improvement, 0.0);
}

TEST(SweepAlpha, PositiveOnlyAccurateCrowdNeverHurts) {
  ScenarioSpec spec;
  spec.pre_bias = 0.3;
  spec.pre_sigma = 0.0;
  spec.sw_distribution = SwDistribution::uniform(0.0, 1.0);
  spec.seed = 8;
  const auto sim = generate_dataset(spec);
  const auto rs = classify_records(sim.dataset, 3);
  const auto grid = default_alpha_grid();
  for (const auto& p : sweep_alpha(sim.dataset, rs, grid, BootstrapOptions{})) {
    if (p.alpha > 0.0 && p.flag == PointFlag::Ok) EXPECT_GE(p.mean_improvement, 0.0) << p.alpha;
  }
}

TEST(DefaultGrid, FortyOnePoints) {
  const auto g = default_alpha_grid();
  ASSERT_EQ(g.size(), 41u);
  EXPECT_EQ(g.front(), -1.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(g[20], 0.0);
  EXPECT_DOUBLE_EQ(g[25], 0.25);
}

TEST(SweepCsv, EmptyPointHasBlankFields) {
  AlphaSweepPoint ok;
  ok.alpha = 0.5;
  ok.mean_improvement = 1.0;
  ok.ci_low = 0.5;
  ok.ci_high = 2.0;
  ok.n_records = 3;
  AlphaSweepPoint empty;
  empty.alpha = -0.5;
  empty.flag = PointFlag::Empty;
  std::ostringstream out;
  const std::vector<AlphaSweepPoint> pts{empty, ok};
  write_sweep_csv(out, pts);
  EXPECT_EQ(out.str(),
            "alpha,mean_improvement,ci_low,ci_high,n_records,flag\n"
            "-0.5,,,,0,empty\n"
            "0.5,1,0.5,2,3,ok\n");
}
