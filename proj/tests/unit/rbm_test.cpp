#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pnf/rbm.hpp"
#include "support/fixtures.hpp"

using namespace pnf;

namespace {

ActivityWorkSpec single(double q, double p, double c, double lambda = 1.0) {
  ActivityWorkSpec s;
  s.resources.push_back({q, p, c});
  s.parallelism = lambda;
  return s;
}

EfficiencyDistribution law(EfficiencyFamily f, std::vector<double> m, std::vector<double> v) {
  EfficiencyDistribution d;
  d.family = f;
  d.mean = std::move(m);
  d.variance = std::move(v);
  return d;
}

// Exhaustive search over T_i = T^N (0.2 + 0.05 k), k = 0..16.
double grid_search_cost(const ProjectGraph& g, const std::vector<std::optional<CrashParams>>& cp, double tmax) {
  const std::size_t n = cp.size();
  std::vector<int> k(n, 0);
  std::vector<double> d(n);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t a = 0; a < n; ++a) d[a] = cp[a]->normal_duration * (0.2 + 0.05 * k[a]);
    if (compute_schedule(g, d).makespan <= tmax) {
      double c = 0;
      for (std::size_t a = 0; a < n; ++a) c += crash_cost(d[a], *cp[a]);
      best = std::min(best, c);
    }
    std::size_t i = 0;
    while (i < n && ++k[i] > 16) k[i++] = 0;
    if (i == n) break;
  }
  return best;
}

double cost_of(const std::vector<double>& d, const std::vector<std::optional<CrashParams>>& cp) {
  double c = 0;
  for (std::size_t a = 0; a < d.size(); ++a) c += crash_cost(d[a], *cp[a]);
  return c;
}

}  // namespace

TEST(ResourceTimeCost, PlugIn) {
  auto rc = resource_time_cost(single(10, 2, 3), std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(rc[0].time, 5.0);
  EXPECT_DOUBLE_EQ(rc[0].cost, 15.0);
  auto half = resource_time_cost(single(10, 2, 3), std::vector<double>{2.0});
  EXPECT_DOUBLE_EQ(half[0].time, 2.5);
  EXPECT_DOUBLE_EQ(half[0].cost, 7.5);
  EXPECT_THROW(resource_time_cost(single(10, 2, 3), std::vector<double>{0.0}), NonPositiveEfficiency);
}

TEST(ResourceTimeCost, HalvingEfficiencyDoublesTimeAndCost) {
  RandomStream rng(1);
  for (int i = 0; i < 100; ++i) {
    ActivityWorkSpec s;
    std::vector<double> e, h;
    for (int j = 0; j < 3; ++j) {
      s.resources.push_back({rng.uniform(0.1, 10), rng.uniform(0.1, 5), rng.uniform(0.1, 5)});
      e.push_back(rng.uniform(0.2, 2));
      h.push_back(e.back() / 2);
    }
    auto a = resource_time_cost(s, e), b = resource_time_cost(s, h);
    for (int j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(b[j].time, 2 * a[j].time);
      EXPECT_DOUBLE_EQ(b[j].cost, 2 * a[j].cost);
    }
  }
}

TEST(AggregateDuration, SerialParallelMixed) {
  std::vector<double> t{2, 3};
  EXPECT_EQ(aggregate_duration(t, 1.0), 5.0);
  EXPECT_EQ(aggregate_duration(t, 0.0), 3.0);
  EXPECT_EQ(aggregate_duration(t, 0.5), 4.0);
  EXPECT_THROW(aggregate_duration(std::vector<double>{}, 0.5), EmptyResourceSet);
}

TEST(AggregateDuration, BoundedByMaxAndSum) {
  RandomStream rng(2);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> t(1 + rng.below(6));
    for (auto& x : t) x = rng.uniform(0.0, 10.0);
    const double lam = rng.uniform();
    const double v = aggregate_duration(t, lam);
    EXPECT_GE(v, *std::max_element(t.begin(), t.end()) - 1e-12);
    EXPECT_LE(v, std::accumulate(t.begin(), t.end(), 0.0) + 1e-12);
  }
}

TEST(ActivityCost, AdditiveAndLinear) {
  ActivityWorkSpec s;
  s.resources = {{5, 1, 3}, {5, 1, 2}};
  s.parallelism = 0.3;
  std::vector<double> e{1.0, 1.0};
  EXPECT_DOUBLE_EQ(activity_cost(s, e), 25.0);
  EXPECT_DOUBLE_EQ(activity_cost(single(10, 2, 3), std::vector<double>{1.0}), 15.0);
  for (auto& r : s.resources) r.cost_rate *= 2;
  EXPECT_DOUBLE_EQ(activity_cost(s, e), 50.0);
}

TEST(ExpectedDuration, TaylorDeterministicLimitAndPlugIn) {
  auto s = single(3, 2, 1);
  EXPECT_DOUBLE_EQ(expected_duration_taylor(s, std::vector<double>{1.5}, std::vector<double>{0.0}), 1.0);
  EXPECT_NEAR(expected_duration_taylor(single(1, 1, 1), std::vector<double>{1.0}, std::vector<double>{0.04}),
              1.04, 1e-15);
  EXPECT_THROW(expected_duration_taylor(s, std::vector<double>{0.0}, std::vector<double>{0.1}), NonPositiveMean);
  EXPECT_NEAR(lognormal_inverse_mean(0.0, 0.5), 1.2840254166877414, 1e-15);
}

TEST(ExpectedDuration, TaylorAgreesWithMonteCarloGaussian) {
  auto g = pnf::testing::chain(1);
  std::vector<ActivityWorkSpec> specs{single(1, 1, 1)};
  std::vector<EfficiencyDistribution> d{law(EfficiencyFamily::gaussian, {1.0}, {0.04})};
  MonteCarloOptions opt;
  opt.samples = 1'000'000;
  opt.seed = 9;
  auto mc = monte_carlo_project(g, specs, d, opt);
  EXPECT_NEAR(mc.makespan_mean / 1.04, 1.0, 0.01);
}

TEST(ExpectedDuration, LognormalBranchIsExact) {
  auto s = single(4, 2, 1, 1.0);
  auto d = law(EfficiencyFamily::lognormal, {0.1}, {0.25});
  EXPECT_NEAR(expected_duration(s, d), 2.0 * std::exp(-0.1 + 0.125), 1e-14);
}

TEST(CrashCost, ValuesMonotoneConvex) {
  CrashParams p{10.0, 5.0, 1.0, std::log(2.0)};
  EXPECT_DOUBLE_EQ(crash_cost(10.0, p), 5.0);
  EXPECT_NEAR(crash_cost(9.0, p), 6.0, 1e-12);
  EXPECT_THROW(crash_cost(10.5, p), DurationAboveNormal);
  for (double t1 = 0.5; t1 < 10; t1 += 0.37)
    for (double t2 = t1 + 0.1; t2 <= 10; t2 += 0.41) {
      EXPECT_GT(crash_cost(t1, p), crash_cost(t2, p));
      EXPECT_LE(crash_cost(0.5 * (t1 + t2), p), 0.5 * (crash_cost(t1, p) + crash_cost(t2, p)) + 1e-12);
    }
}

TEST(Frontier, SlackConstraintReturnsNormalDurations) {
  auto g = pnf::testing::diamond();
  std::vector<std::optional<CrashParams>> cp(4, CrashParams{4.0, 2.0, 1.0, 0.5});
  auto d = solve_cost_frontier(g, cp, 100.0);
  for (double x : d) EXPECT_EQ(x, 4.0);
  EXPECT_DOUBLE_EQ(cost_of(d, cp), 8.0);
}

TEST(Frontier, SingleActivityBindsExactly) {
  auto g = pnf::testing::chain(1);
  std::vector<std::optional<CrashParams>> cp{CrashParams{10.0, 1.0, 1.0, 0.3}};
  auto d = solve_cost_frontier(g, cp, 7.0);
  EXPECT_NEAR(d[0], 7.0, 1e-9);
  EXPECT_LE(d[0], 7.0);
}

TEST(Frontier, ErrorsOnMissingParamsAndInfeasible) {
  auto g = pnf::testing::chain(2);
  std::vector<std::optional<CrashParams>> cp{CrashParams{10.0, 1.0, 1.0, 0.3}, std::nullopt};
  EXPECT_THROW(solve_cost_frontier(g, cp, 5.0), MissingCrashParams);
  cp[1] = CrashParams{10.0, 1.0, 1.0, 0.3};
  EXPECT_THROW(solve_cost_frontier(g, cp, 3.9), Infeasible);
}

TEST(Frontier, DiamondBeatsUniformScalingAndMatchesGrid) {
  // A -> {B, C, D} -> E
  auto g = pnf::testing::activity_graph({"A", "B", "C", "D", "E"},
                                        {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}});
  RandomStream rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::optional<CrashParams>> cp;
    for (int a = 0; a < 5; ++a)
      cp.push_back(CrashParams{rng.uniform(2, 10), rng.uniform(1, 5), rng.uniform(0.2, 2), rng.uniform(0.1, 1)});
    std::vector<double> normal;
    for (auto& c : cp) normal.push_back(c->normal_duration);
    const double tmax = 0.8 * compute_schedule(g, normal).makespan;
    auto d = solve_cost_frontier(g, cp, tmax);
    EXPECT_LE(compute_schedule(g, d).makespan, tmax * (1 + 1e-6));
    const double cost = cost_of(d, cp);
    double floor_cost = 0;
    for (auto& c : cp) floor_cost += c->min_cost;
    EXPECT_GE(cost, floor_cost);
    EXPECT_LE(cost, cost_of(uniform_scaling_durations(g, cp, tmax), cp) + 1e-9);
    EXPECT_LE(cost, grid_search_cost(g, cp, tmax) * 1.02);
    for (std::size_t a = 0; a < 5; ++a) {
      EXPECT_GE(d[a], 0.2 * cp[a]->normal_duration - 1e-12);
      EXPECT_LE(d[a], cp[a]->normal_duration);
    }
  }
}

TEST(MonteCarlo, ZeroVarianceIsDeterministic) {
  auto g = pnf::testing::diamond();
  std::vector<ActivityWorkSpec> specs(4, single(2, 1, 1));
  std::vector<EfficiencyDistribution> d(4, law(EfficiencyFamily::lognormal, {0.0}, {1e-300}));
  MonteCarloOptions opt;
  opt.samples = 500;
  auto mc = monte_carlo_project(g, specs, d, opt);
  EXPECT_NEAR(mc.makespan_mean, 6.0, 1e-12);
  EXPECT_NEAR(mc.makespan_variance, 0.0, 1e-20);
}

TEST(MonteCarlo, OverheadOnlyProject) {
  ProjectGraph g;
  MonteCarloOptions opt;
  opt.samples = 10;
  opt.overhead = 7.0;
  auto mc = monte_carlo_project(g, std::span<const ActivityWorkSpec>{}, std::span<const EfficiencyDistribution>{}, opt);
  EXPECT_EQ(mc.cost_mean, 7.0);
  EXPECT_EQ(mc.makespan_mean, 0.0);
}

TEST(MonteCarlo, LognormalMeanDurationClosedForm) {
  auto g = pnf::testing::chain(1);
  std::vector<ActivityWorkSpec> specs{single(6, 2, 1)};
  std::vector<EfficiencyDistribution> d{law(EfficiencyFamily::lognormal, {0.2}, {0.25})};
  MonteCarloOptions opt;
  opt.samples = 100'000;
  opt.seed = 21;
  auto mc = monte_carlo_project(g, specs, d, opt);
  EXPECT_NEAR(mc.duration_mean[0] / (3.0 * std::exp(-0.2 + 0.125)), 1.0, 0.02);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  RandomStream rng(8);
  auto g = pnf::testing::random_dag(8, 0.3, rng);
  std::vector<ActivityWorkSpec> specs(8);
  std::vector<EfficiencyDistribution> d(8);
  for (std::size_t a = 0; a < 8; ++a) {
    specs[a].resources = {{2, 1, 1}, {3, 1, 2}};
    specs[a].parallelism = 0.5;
    d[a] = law(EfficiencyFamily::gaussian, {1.0, 1.1}, {0.04, 0.09});
    d[a].correlation = 0.3;
  }
  MonteCarloOptions opt;
  opt.samples = 5000;
  opt.seed = 77;
  auto one = monte_carlo_project(g, specs, d, opt);
  opt.threads = 3;
  auto three = monte_carlo_project(g, specs, d, opt);
  EXPECT_EQ(one.makespan_mean, three.makespan_mean);
  EXPECT_EQ(one.cost_variance, three.cost_variance);
  EXPECT_EQ(one.duration_mean, three.duration_mean);
  EXPECT_EQ(one.makespan_quantiles, three.makespan_quantiles);
}

TEST(MonteCarlo, JensenMeanMakespanAboveDeterministic) {
  // One-sided paired t-test over 20 random projects at alpha = 0.01.
  RandomStream rng(99);
  std::vector<double> diff;
  for (int p = 0; p < 20; ++p) {
    auto g = pnf::testing::random_dag(10, 0.25, rng);
    std::vector<ActivityWorkSpec> specs(10);
    std::vector<EfficiencyDistribution> d(10);
    std::vector<double> det(10);
    for (std::size_t a = 0; a < 10; ++a) {
      specs[a] = single(rng.uniform(1, 5), 1, 1);
      d[a] = law(EfficiencyFamily::lognormal, {0.0}, {0.09});
      det[a] = activity_duration(specs[a], std::vector<double>{d[a].expected(0)});
    }
    MonteCarloOptions opt;
    opt.samples = 4000;
    opt.seed = static_cast<std::uint64_t>(p);
    diff.push_back(monte_carlo_project(g, specs, d, opt).makespan_mean - compute_schedule(g, det).makespan);
  }
  double m = 0, v = 0;
  for (double x : diff) m += x / diff.size();
  for (double x : diff) v += (x - m) * (x - m) / (diff.size() - 1);
  EXPECT_GT(m / std::sqrt(v / diff.size()), 2.539);  // t_{0.99, 19}
}

TEST(EfficiencyDistribution, BetaRescaledAndValidated) {
  auto d = law(EfficiencyFamily::beta, {1.0}, {0.02});
  d.validate();
  RandomStream rng(5);
  long tr = 0;
  double s = 0;
  std::vector<double> x(1);
  for (int i = 0; i < 50000; ++i) {
    d.sample(rng, x, tr);
    ASSERT_GT(x[0], 0.5);
    ASSERT_LT(x[0], 1.5);
    s += x[0];
  }
  EXPECT_NEAR(s / 50000, 1.0, 0.005);
  auto bad = law(EfficiencyFamily::beta, {1.0}, {0.5});
  EXPECT_THROW(bad.validate(), InvalidDistribution);
  auto neg = law(EfficiencyFamily::gaussian, {1.0}, {-1.0});
  EXPECT_THROW(neg.validate(), InvalidDistribution);
}
