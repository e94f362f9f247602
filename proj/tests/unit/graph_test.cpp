#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "pnf/graph.hpp"
#include "support/fixtures.hpp"

using namespace pnf;
using pnf::testing::activity_graph;

namespace {

std::vector<std::string> ids_of(const ProjectGraph& g, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(g.activity_id(i));
  return out;
}

double path_sum(const std::vector<std::size_t>& path, const std::vector<double>& d) {
  double s = 0.0;
  for (auto a : path) s += d[a];
  return s;
}

// sigma_st(v) / sigma_st by explicit enumeration of all s->t paths.
std::vector<double> brute_force_betweenness(const ProjectGraph& g) {
  const std::size_t n = g.num_activities();
  std::vector<double> bc(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::vector<std::size_t>> all;
    std::vector<std::size_t> stack{s};
    std::function<void(std::size_t)> dfs = [&](std::size_t v) {
      all.push_back(stack);
      for (auto w : g.successors(v)) {
        stack.push_back(w);
        dfs(w);
        stack.pop_back();
      }
    };
    dfs(s);
    for (std::size_t t = 0; t < n; ++t) {
      if (t == s) continue;
      std::size_t best = SIZE_MAX;
      for (auto& p : all)
        if (p.back() == t) best = std::min(best, p.size());
      if (best == SIZE_MAX) continue;
      double sigma = 0.0;
      std::vector<double> through(n, 0.0);
      for (auto& p : all) {
        if (p.back() != t || p.size() != best) continue;
        sigma += 1.0;
        for (std::size_t k = 1; k + 1 < p.size(); ++k) through[p[k]] += 1.0;
      }
      for (std::size_t v = 0; v < n; ++v) bc[v] += through[v] / sigma;
    }
  }
  return bc;
}

}  // namespace

TEST(TopologicalSort, ChainIsForced) {
  auto g = activity_graph({"A", "B", "C"}, {{0, 1}, {1, 2}});
  EXPECT_EQ(ids_of(g, topological_sort(g)), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(TopologicalSort, TiesBreakByAscendingId) {
  auto g = activity_graph({"B", "A"}, {});
  EXPECT_EQ(ids_of(g, topological_sort(g)), (std::vector<std::string>{"A", "B"}));
}

TEST(TopologicalSort, TwoCycleReportsAnEdge) {
  auto g = activity_graph({"A", "B"}, {{1, 0}, {0, 1}});
  try {
    topological_sort(g);
    FAIL() << "expected CycleDetected";
  } catch (const CycleDetected& e) {
    EXPECT_EQ(e.kind(), "CycleDetected");
    const std::string msg = e.what();
    EXPECT_TRUE(msg.find("A -> B") != std::string::npos || msg.find("B -> A") != std::string::npos) << msg;
  }
}

TEST(TopologicalSort, CycleBehindAcyclicPrefix) {
  // X -> A -> B -> C -> A
  auto g = activity_graph({"X", "A", "B", "C"}, {{0, 1}, {1, 2}, {2, 3}, {3, 1}});
  EXPECT_THROW(topological_sort(g), CycleDetected);
}

TEST(TopologicalSort, RespectsEveryEdgeOnRandomGraphs) {
  RandomStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = pnf::testing::random_dag(15, 0.3, rng);
    auto order = topological_sort(g);
    std::vector<std::size_t> pos(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (const auto& e : g.edges()) EXPECT_LT(pos[e.src], pos[e.dst]);
  }
}

TEST(ProjectGraph, RejectsDuplicateAndMistypedEdges) {
  EXPECT_THROW(activity_graph({"A", "B"}, {{0, 1}, {0, 1}}), InvalidGraph);
  EXPECT_THROW(ProjectGraph({"A"}, {"r"}, {Edge{1, 0, Relation::assignment, {}}}), InvalidGraph);
  EXPECT_THROW(ProjectGraph({"A"}, {"r", "s"}, {Edge{0, 1, Relation::collaboration, {}}}), InvalidGraph);
  EXPECT_THROW(ProjectGraph({"A"}, {"r", "s"},
                            {Edge{1, 2, Relation::collaboration, {}}, Edge{2, 1, Relation::collaboration, {}}}),
               InvalidGraph);
  EXPECT_THROW(activity_graph({"A", "A"}, {}), InvalidGraph);
}

TEST(ProjectGraph, AdjacencyPerRelation) {
  ProjectGraph g({"A", "B"}, {"r1", "r2"},
                 {Edge{0, 1, Relation::precedence, {}}, Edge{0, 2, Relation::assignment, {0.5}},
                  Edge{1, 3, Relation::assignment, {}}, Edge{2, 3, Relation::collaboration, {}}});
  EXPECT_EQ(g.num_nodes(), 4u);
  EXPECT_EQ(g.successors(0).size(), 1u);
  EXPECT_EQ(g.assigned(0)[0], 2u);
  EXPECT_EQ(g.assigned(3)[0], 1u);
  EXPECT_EQ(g.collaborators(2)[0], 3u);
  EXPECT_EQ(g.resource_id(3), "r2");
  EXPECT_TRUE(g.edges()[2].features.empty());
  EXPECT_EQ(*g.find_node("r1"), 2u);
}

TEST(Schedule, ChainMakespanAndCriticalSet) {
  auto g = activity_graph({"A", "B", "C"}, {{0, 1}, {1, 2}});
  auto s = compute_schedule(g, std::vector<double>{1, 2, 3});
  EXPECT_EQ(s.makespan, 6.0);
  EXPECT_EQ(s.critical_activities, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(s.earliest_start[2], 3.0);
}

TEST(Schedule, DiamondCriticalPathMatchesBruteForce) {
  auto g = pnf::testing::diamond();
  std::vector<double> d{1, 2, 5, 1};
  auto s = compute_schedule(g, d);
  double best = 0.0;
  for (auto& p : enumerate_paths(g, 100)) best = std::max(best, path_sum(p, d));
  EXPECT_EQ(s.makespan, 7.0);
  EXPECT_EQ(s.makespan, best);
  EXPECT_EQ(s.critical_activities, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(Schedule, AllZeroDurations) {
  auto g = pnf::testing::diamond();
  auto s = compute_schedule(g, std::vector<double>(4, 0.0));
  EXPECT_EQ(s.makespan, 0.0);
  EXPECT_FALSE(s.critical_activities.empty());
}

TEST(Schedule, MissingDurationById) {
  auto g = pnf::testing::diamond();
  std::map<std::string, double> d{{"A", 1}, {"B", 1}, {"D", 1}};
  try {
    compute_schedule(g, d);
    FAIL();
  } catch (const MissingDuration& e) {
    EXPECT_NE(std::string(e.what()).find("C"), std::string::npos);
  }
}

TEST(Schedule, MakespanEqualsLongestEnumeratedPath) {
  RandomStream rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    auto g = pnf::testing::random_dag(n, rng.uniform(0.1, 0.6), rng);
    std::vector<double> d(n);
    for (auto& x : d) x = rng.uniform(0.0, 10.0);
    auto s = compute_schedule(g, d);
    double best = 0.0;
    for (auto& p : enumerate_paths(g, 1'000'000)) best = std::max(best, path_sum(p, d));
    EXPECT_NEAR(s.makespan, best, 1e-12);
    EXPECT_FALSE(s.critical_activities.empty());
    for (std::size_t a = 0; a < n; ++a) {
      double es = 0.0;
      for (auto p : g.predecessors(a)) es = std::max(es, s.earliest_finish[p]);
      EXPECT_EQ(s.earliest_start[a], es);
    }
  }
}

TEST(Schedule, MakespanMonotoneInEachDuration) {
  RandomStream rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = pnf::testing::random_dag(10, 0.3, rng);
    std::vector<double> d(10);
    for (auto& x : d) x = rng.uniform(0.0, 5.0);
    const double base = compute_schedule(g, d).makespan;
    const auto a = rng.below(10);
    d[a] += rng.uniform(0.01, 2.0);
    EXPECT_GE(compute_schedule(g, d).makespan, base);
  }
}

TEST(EnumeratePaths, ChainAndDiamond) {
  auto c = activity_graph({"A", "B", "C"}, {{0, 1}, {1, 2}});
  auto pc = enumerate_paths(c, 10);
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_EQ(ids_of(c, pc[0]), (std::vector<std::string>{"A", "B", "C"}));

  auto d = pnf::testing::diamond();
  auto pd = enumerate_paths(d, 10);
  ASSERT_EQ(pd.size(), 2u);
  EXPECT_EQ(ids_of(d, pd[0]), (std::vector<std::string>{"A", "B", "D"}));
  EXPECT_EQ(ids_of(d, pd[1]), (std::vector<std::string>{"A", "C", "D"}));
}

TEST(EnumeratePaths, DenseGraphExceedsBudget) {
  RandomStream rng(31);
  auto g = pnf::testing::random_dag(30, 0.6, rng);
  ASSERT_GT(count_paths(g), 10'000u);  // oracle precondition
  EXPECT_THROW(enumerate_paths(g, 10'000), PathBudgetExceeded);
}

TEST(Betweenness, ChainDiamondAndDisconnected) {
  auto c = activity_graph({"A", "B", "C"}, {{0, 1}, {1, 2}});
  EXPECT_EQ(betweenness_centrality(c), (std::vector<double>{0.0, 1.0, 0.0}));
  auto two = activity_graph({"A", "B"}, {});
  EXPECT_EQ(betweenness_centrality(two), (std::vector<double>{0.0, 0.0}));
  auto bc = betweenness_centrality(pnf::testing::diamond());
  EXPECT_DOUBLE_EQ(bc[1], 0.5);
  EXPECT_DOUBLE_EQ(bc[2], 0.5);
  EXPECT_EQ(bc[0], 0.0);
  EXPECT_EQ(bc[3], 0.0);
}

TEST(Betweenness, MatchesBruteForceOnSmallGraphs) {
  RandomStream rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    auto g = pnf::testing::random_dag(2 + rng.below(11), rng.uniform(0.1, 0.5), rng);
    auto fast = betweenness_centrality(g);
    auto slow = brute_force_betweenness(g);
    for (std::size_t v = 0; v < fast.size(); ++v) {
      EXPECT_NEAR(fast[v], slow[v], 1e-12);
      EXPECT_GE(fast[v], 0.0);
    }
  }
}

TEST(Betweenness, InvariantUnderRelabeling) {
  RandomStream rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = pnf::testing::random_dag(10, 0.3, rng);
    std::vector<std::size_t> perm(10);
    for (std::size_t i = 0; i < 10; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<std::string> ids(10);
    for (std::size_t i = 0; i < 10; ++i) ids[perm[i]] = g.activity_id(i);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (auto& e : g.edges()) edges.emplace_back(perm[e.src], perm[e.dst]);
    auto h = activity_graph(ids, edges);
    auto a = betweenness_centrality(g), b = betweenness_centrality(h);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(a[i], b[perm[i]], 1e-12);
  }
}

namespace {

ActivityAttributes attrs_for(const ProjectGraph& g, std::size_t p) {
  ActivityAttributes at;
  for (std::size_t k = 0; k < p; ++k) at.continuous_names.push_back("R" + std::to_string(k + 1));
  at.continuous = Matrix::Ones(static_cast<Eigen::Index>(g.num_activities()), static_cast<Eigen::Index>(p));
  at.t_est.assign(g.num_activities(), 2.0);
  at.c_est.assign(g.num_activities(), 3.0);
  at.categorical.push_back({"type", {"design", "procurement", "construction", "testing"},
                            std::vector<int>(g.num_activities(), 1)});
  return at;
}

}  // namespace

TEST(ActivityFeatures, LayoutAndLength) {
  auto g = activity_graph({"A", "B", "C"}, {{0, 1}, {1, 2}});
  auto t = activity_features(g, attrs_for(g, 5));
  ASSERT_EQ(t.cols(), 5u + 2 + 2 + 1 + 1 + 4);
  EXPECT_EQ(t.names[5], "T_est");
  EXPECT_EQ(t.values(1, t.column("deg_in")), 1.0);
  EXPECT_EQ(t.values(1, t.column("deg_out")), 1.0);
  EXPECT_EQ(t.values(1, t.column("betweenness")), 1.0);
  EXPECT_EQ(t.values(1, t.column("type=procurement")), 1.0);
  EXPECT_EQ(t.values(1, t.column("type=design")), 0.0);
}

TEST(ActivityFeatures, IsolatedActivity) {
  auto g = activity_graph({"A"}, {});
  auto t = activity_features(g, attrs_for(g, 5));
  EXPECT_EQ(t.values(0, 5), 2.0);
  EXPECT_EQ(t.values(0, 6), 3.0);
  EXPECT_EQ(t.values(0, 7), 0.0);
  EXPECT_EQ(t.values(0, 8), 0.0);
  EXPECT_EQ(t.values(0, 9), 0.0);
}

TEST(ActivityFeatures, MissingEstimate) {
  auto g = activity_graph({"A", "B"}, {});
  auto at = attrs_for(g, 2);
  at.t_est[1].reset();
  EXPECT_THROW(activity_features(g, at), MissingFeature);
  auto t = activity_features(g, at, MissingPolicy::flag);
  EXPECT_TRUE(t.is_missing(1, t.column("T_est")));
  EXPECT_FALSE(t.is_missing(0, t.column("T_est")));
}
