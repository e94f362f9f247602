#include <gtest/gtest.h>

#include <cmath>

#include "pnf/active.hpp"
#include "pnf/synthgen.hpp"
#include "support/fixtures.hpp"

using namespace pnf;

namespace {

Matrix preds(std::size_t n, double var_t, double var_c) {
  Matrix p(static_cast<Eigen::Index>(n), 4);
  p.col(0).setConstant(1.0);
  p.col(1).setConstant(var_t);
  p.col(2).setConstant(1.0);
  p.col(3).setConstant(var_c);
  return p;
}

std::vector<ProjectInstance> small_projects(std::size_t count, std::size_t n) {
  std::vector<ProjectInstance> out;
  for (std::size_t s = 0; s < count; ++s) {
    GenConfig c;
    c.n = n;
    c.rho = 0.2;
    c.seed = 500 + s;
    out.push_back(generate_project(c));
  }
  return out;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.layers = 1;
  m.hidden = 8;
  m.head_hidden = {8};
  m.dropout = 0.0;
  return m;
}

TrainConfig quick_train() {
  TrainConfig t;
  t.max_epochs = 3;
  t.warmup_epochs = 1;
  t.lr = 1e-2;
  return t;
}

ActiveConfig quick_active() {
  ActiveConfig a;
  a.initial_epochs = 3;
  a.round_epochs = 2;
  return a;
}

}  // namespace

TEST(Active, PlugInScore) {
  // Two-activity chain: each endpoint has degree 1 and zero betweenness.
  auto g = pnf::testing::chain(2);
  ActiveConfig cfg;
  cfg.gamma = {0.0, 0.0, 0.5};
  const auto s = priority_scores(preds(2, 2.0, 3.0), g, cfg);
  EXPECT_DOUBLE_EQ(s[0], 2.5);
  EXPECT_DOUBLE_EQ(s[1], 2.5);
}

TEST(Active, ZeroGammaRanksById) {
  auto g = pnf::testing::diamond();
  ActiveConfig cfg;
  cfg.gamma = {0.0, 0.0, 0.0};
  const auto s = priority_scores(preds(4, 5.0, 1.0), g, cfg);
  for (double v : s) EXPECT_EQ(v, 0.0);
  const std::vector<std::size_t> cand{3, 1, 2, 0};
  const auto r = rank_candidates(cand, s, g);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) EXPECT_LT(g.activity_id(r[i]), g.activity_id(r[i + 1]));
}

TEST(Active, VarianceScalingKeepsRanking) {
  RandomStream rng(9);
  auto g = pnf::testing::random_dag(30, 0.15, rng);
  Matrix p(30, 4);
  for (Eigen::Index i = 0; i < 30; ++i) p.row(i) << rng.uniform(1, 10), rng.uniform(0.1, 3), rng.uniform(1, 10), rng.uniform(0.1, 3);
  ActiveConfig cfg;
  const auto s1 = priority_scores(p, g, cfg);
  Matrix q = p;
  q.col(1) *= 7.5;
  q.col(3) *= 7.5;
  const auto s2 = priority_scores(q, g, cfg);
  for (std::size_t a = 0; a < s1.size(); ++a) EXPECT_NEAR(s2[a], 7.5 * s1[a], 1e-12 * std::max(1.0, s2[a]));
  std::vector<std::size_t> all(30);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(rank_candidates(all, s1, g), rank_candidates(all, s2, g));
}

TEST(Active, CriticalityUsesPredictedDurations) {
  // Diamond A -> {B, C} -> D: the longer branch is critical and scores higher.
  auto g = pnf::testing::diamond();
  ActiveConfig cfg;
  cfg.gamma = {0.0, 1.0, 0.0};
  Matrix p = preds(4, 1.0, 0.0);
  p(1, 0) = 5.0;
  p(2, 0) = 1.0;
  const auto s = priority_scores(p, g, cfg);
  EXPECT_EQ(s[1], 1.0);
  EXPECT_EQ(s[2], 0.0);
  p(1, 0) = 1.0;
  p(2, 0) = 5.0;
  const auto t = priority_scores(p, g, cfg);
  EXPECT_EQ(t[1], 0.0);
  EXPECT_EQ(t[2], 1.0);
}

TEST(Active, ScoresFollowRelabeling) {
  RandomStream rng(5);
  auto g = pnf::testing::random_dag(25, 0.2, rng);
  Matrix p(25, 4);
  for (Eigen::Index i = 0; i < 25; ++i) p.row(i) << rng.uniform(1, 10), rng.uniform(0.1, 3), rng.uniform(1, 10), rng.uniform(0.1, 3);
  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);  // new index of old activity a is perm[a]
  std::vector<std::string> ids(25);
  for (std::size_t a = 0; a < 25; ++a) ids[perm[a]] = g.activity_id(a);
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) edges.push_back({perm[e.src], perm[e.dst], e.relation, e.features});
  ProjectGraph h(ids, {}, edges);
  Matrix q(25, 4);
  for (std::size_t a = 0; a < 25; ++a) q.row(static_cast<Eigen::Index>(perm[a])) = p.row(static_cast<Eigen::Index>(a));
  ActiveConfig cfg;
  const auto s = priority_scores(p, g, cfg), t = priority_scores(q, h, cfg);
  for (std::size_t a = 0; a < 25; ++a) EXPECT_NEAR(s[a], t[perm[a]], 1e-12);
}

TEST(Active, TopologyStrategyIsBetweenness) {
  auto g = pnf::testing::chain(5);
  const auto cen = centrality(g);
  const auto s = strategy_scores(Strategy::topology, preds(5, 1, 1), g, cen, {});
  // Middle of a 5-chain lies on 4 ordered pairs, normalised by 4 * 3.
  EXPECT_DOUBLE_EQ(s[2], 4.0 / 12.0);
  EXPECT_EQ(s[0], 0.0);
}

TEST(Active, LoopRevealsMonotonicallyAndEndsWhenExhausted) {
  const auto data = small_projects(3, 10);
  const Strategy strategies[] = {Strategy::random, Strategy::hybrid, Strategy::uncertainty, Strategy::topology};
  const auto curve = run_active_loop(data, tiny_model(), quick_train(), quick_active(), strategies, 3);
  std::map<Strategy, std::vector<double>> budgets;
  for (const auto& pt : curve) budgets[pt.strategy].push_back(pt.budget_pct);
  ASSERT_EQ(budgets.size(), 4u);
  for (auto& [s, b] : budgets) {
    // 2 of 10 labelled, then one more per round until 9 of 10; 100% has nothing left to score.
    ASSERT_EQ(b.size(), 8u) << to_string(s);
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(b[i], 20.0 + 10.0 * static_cast<double>(i), 1e-9);
  }
  for (const auto& pt : curve) EXPECT_TRUE(std::isfinite(pt.rmse));
}

TEST(Active, RandomStrategyIsReproducible) {
  const auto data = small_projects(2, 10);
  ActiveConfig a = quick_active();
  a.until = 0.6;
  const Strategy s[] = {Strategy::random};
  const auto c1 = run_active_loop(data, tiny_model(), quick_train(), a, s, 11);
  const auto c2 = run_active_loop(data, tiny_model(), quick_train(), a, s, 11);
  ASSERT_EQ(c1.size(), c2.size());
  for (std::size_t i = 0; i < c1.size(); ++i) {
    EXPECT_EQ(c1[i].rmse, c2[i].rmse);
    EXPECT_EQ(c1[i].budget_pct, c2[i].budget_pct);
  }
  EXPECT_NEAR(c1.back().budget_pct, 60.0, 1e-9);
}

TEST(Active, RevealTruncatesAndThrowsWhenEmpty) {
  std::vector<std::uint8_t> lab(5, 0);
  const std::size_t ranked[] = {4, 2};
  EXPECT_EQ(detail::reveal(lab, ranked, 3), 2u);
  EXPECT_EQ(lab, (std::vector<std::uint8_t>{0, 0, 1, 0, 1}));
  EXPECT_THROW(detail::reveal(lab, std::span<const std::size_t>{}, 1), BudgetExhausted);
}

TEST(Active, ConfigValidation) {
  ActiveConfig a;
  a.increment = 0.0;
  EXPECT_THROW(a.validate(), InvalidConfig);
  a = {};
  a.gamma[1] = -1.0;
  EXPECT_THROW(a.validate(), InvalidConfig);
  EXPECT_EQ(ActiveConfig::from_json(ActiveConfig{}.to_json()).to_json(), ActiveConfig{}.to_json());
}
