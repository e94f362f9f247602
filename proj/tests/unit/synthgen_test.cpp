#include <gtest/gtest.h>

#include <cmath>

#include "pnf/ingest/canonical.hpp"
#include "pnf/synthgen.hpp"

using namespace pnf;

namespace {

GenConfig config(std::size_t n, double rho, std::uint64_t seed) {
  GenConfig c;
  c.n = n;
  c.rho = rho;
  c.seed = seed;
  return c;
}

double row_total(const ProjectInstance& inst, std::size_t a) {
  double s = 0;
  for (std::size_t k = 0; k < 5; ++k) s += inst.activities.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k));
  return s;
}

// Edges between non-consecutive generation-order positions can only come
// from the random pair sampling; consecutive pairs may also be backbone.
std::size_t non_consecutive_edges(const ProjectInstance& inst) {
  const auto& g = inst.graph;
  std::size_t consecutive = 0;
  for (std::size_t i = 0; i + 1 < inst.generation_order.size(); ++i)
    if (g.has_edge(*g.find_activity(inst.generation_order[i]), *g.find_activity(inst.generation_order[i + 1]),
                   Relation::precedence))
      ++consecutive;
  return g.num_precedence_edges() - consecutive;
}

}  // namespace

TEST(Generate, TwoNodesTinyDensityGivesOneBackboneEdge) {
  auto inst = generate_project(config(2, 1e-9, 3));
  EXPECT_EQ(inst.graph.num_precedence_edges(), 1u);
  const auto u = *inst.graph.find_activity(inst.generation_order[0]);
  const auto v = *inst.graph.find_activity(inst.generation_order[1]);
  EXPECT_TRUE(inst.graph.has_edge(u, v, Relation::precedence));
}

TEST(Generate, NoiseFreeTargetsFollowTheFormula) {
  auto c = config(60, 0.1, 5);
  c.sigma_t = c.sigma_c = 0.0;
  c.estimate_lo = c.estimate_hi = 1.0;
  auto inst = generate_project(c);
  const auto& g = inst.graph;
  for (std::size_t a = 0; a < g.num_activities(); ++a) {
    double pred = 0;
    for (auto p : g.predecessors(a)) pred += row_total(inst, p);
    const double t = std::max(0.7 * row_total(inst, a) + 0.2 * pred + 0.1 * g.predecessors(a).size(), 0.5);
    EXPECT_NEAR(*inst.t_true[a], t, 1e-12);
    EXPECT_EQ(*inst.t_est[a], *inst.t_true[a]);
    const double skill = inst.activities.values(static_cast<Eigen::Index>(a), 5);
    EXPECT_NEAR(*inst.c_true[a], std::max(0.6 * t + 0.3 * row_total(inst, a) + 0.1 * skill, 0.1), 1e-12);
  }
}

TEST(Generate, InvariantsAndRanges) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = generate_project(config(40, 0.15, seed));
    EXPECT_NO_THROW(inst.validate());
    for (Eigen::Index r = 0; r < 40; ++r) {
      for (Eigen::Index k = 0; k < 5; ++k) {
        EXPECT_GE(inst.activities.values(r, k), 0.1);
        EXPECT_LE(inst.activities.values(r, k), 10.0);
      }
      EXPECT_GE(*inst.t_true[r], 0.5);
      EXPECT_GE(*inst.c_true[r], 0.1);
      EXPECT_GE(*inst.t_est[r], 0.8 * *inst.t_true[r] - 1e-12);
      EXPECT_LE(*inst.t_est[r], 1.2 * *inst.t_true[r] + 1e-12);
    }
    // Backbone: every consecutive generation-order pair is connected.
    const auto order = topological_sort(inst.graph);
    EXPECT_EQ(order.size(), 40u);
  }
}

TEST(Generate, DeterministicPerSeed) {
  auto a = write_canonical(generate_project(config(30, 0.2, 11)));
  auto b = write_canonical(generate_project(config(30, 0.2, 11)));
  auto c = write_canonical(generate_project(config(30, 0.2, 12)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Generate, RandomPairEdgeCountWithinBinomialBand) {
  // Binomial over the n(n-1)/2 - (n-1) non-consecutive pairs.
  const double expected = 0.1 * (100 * 99 / 2 - 99);
  const double sd = std::sqrt(expected * 0.9);
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto e = static_cast<double>(non_consecutive_edges(generate_project(config(100, 0.1, seed))));
    EXPECT_LT(std::abs(e - expected), 3 * sd);
    sum += e;
  }
  EXPECT_LT(std::abs(sum / 50 - expected), 3 * sd / std::sqrt(50.0));
}

TEST(Generate, RejectsBadConfig) {
  EXPECT_THROW(generate_project(config(1, 0.1, 0)), InvalidConfig);
  EXPECT_THROW(generate_project(config(10, 0.0, 0)), InvalidConfig);
  EXPECT_THROW(generate_project(config(10, 1.0, 0)), InvalidConfig);
}

TEST(Perturb, ZeroRatesLeaveInstanceUnchanged) {
  auto inst = generate_project(config(30, 0.2, 1));
  for (const Perturbation& p : {Perturbation{perturbation::FeatureNoise{0.0}}, Perturbation{perturbation::Missingness{0.0}},
                                Perturbation{perturbation::EdgeDrop{0.0}}, Perturbation{perturbation::EdgeAdd{0.0}}}) {
    auto out = perturb(inst, p, 9);
    out.meta = inst.meta;
    EXPECT_EQ(write_canonical(out), write_canonical(inst));
  }
}

TEST(Perturb, FullMissingnessMasksEverything) {
  auto inst = generate_project(config(20, 0.2, 2));
  auto out = perturb(inst, perturbation::Missingness{1.0}, 3);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t c = 0; c < 5; ++c) EXPECT_TRUE(out.activities.is_missing(r, c));
    EXPECT_FALSE(out.activities.is_missing(r, 6));  // categorical columns are not masked
    EXPECT_FALSE(out.t_est[r].has_value());
    EXPECT_FALSE(out.c_est[r].has_value());
  }
}

TEST(Perturb, FeatureNoiseScalesWithColumnSd) {
  auto inst = generate_project(config(200, 0.05, 4));
  auto out = perturb(inst, perturbation::FeatureNoise{0.2}, 5);
  const auto col = inst.activities.values.col(0);
  const double sd = std::sqrt((col.array() - col.mean()).square().mean());
  const Eigen::VectorXd diff = out.activities.values.col(0) - col;
  EXPECT_NEAR(std::sqrt(diff.squaredNorm() / 200), 0.2 * sd, 0.25 * 0.2 * sd);
  EXPECT_EQ(out.activities.values.col(6), inst.activities.values.col(6));
}

TEST(Perturb, EdgeDropKeepsBackboneAndMatchesBinomial) {
  // Dense enough for roughly 200 precedence edges.
  auto inst = generate_project(config(60, 0.11, 8));
  std::size_t backbone = 0;
  const auto& g = inst.graph;
  for (std::size_t i = 0; i + 1 < 60; ++i)
    if (g.has_edge(*g.find_activity(inst.generation_order[i]), *g.find_activity(inst.generation_order[i + 1]),
                   Relation::precedence))
      ++backbone;
  const double eligible = static_cast<double>(g.num_precedence_edges() - backbone);
  double total_removed = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto out = perturb(inst, perturbation::EdgeDrop{0.1}, s);
    const double removed = static_cast<double>(g.num_precedence_edges() - out.graph.num_precedence_edges());
    EXPECT_LT(std::abs(removed - 0.1 * eligible), 3 * std::sqrt(eligible * 0.09));
    total_removed += removed;
    for (std::size_t i = 0; i + 1 < 60; ++i) {
      const auto u = *g.find_activity(inst.generation_order[i]);
      const auto v = *g.find_activity(inst.generation_order[i + 1]);
      if (g.has_edge(u, v, Relation::precedence)) EXPECT_TRUE(out.graph.has_edge(u, v, Relation::precedence));
    }
    EXPECT_EQ(out.graph.edges().size() - out.graph.num_precedence_edges(),
              g.edges().size() - g.num_precedence_edges());
  }
  EXPECT_LT(std::abs(total_removed / 30 - 0.1 * eligible), 3 * std::sqrt(eligible * 0.09 / 30));
}

TEST(Perturb, EdgeAddKeepsDagAndCount) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto inst = generate_project(config(25, 0.2, s));
    auto out = perturb(inst, perturbation::EdgeAdd{0.3}, s + 100);
    EXPECT_NO_THROW(topological_sort(out.graph));
    const auto added = out.graph.num_precedence_edges() - inst.graph.num_precedence_edges();
    EXPECT_EQ(added, static_cast<std::size_t>(std::llround(0.3 * inst.graph.num_precedence_edges())));
  }
}

TEST(Perturb, RatesOutOfRange) {
  auto inst = generate_project(config(10, 0.2, 1));
  EXPECT_THROW(perturb(inst, perturbation::EdgeDrop{1.5}, 0), RateOutOfRange);
  EXPECT_THROW(perturb(inst, perturbation::Missingness{-0.1}, 0), RateOutOfRange);
}

TEST(Perturb, DeterministicPerSeed) {
  auto inst = generate_project(config(30, 0.2, 1));
  EXPECT_EQ(write_canonical(perturb(inst, perturbation::EdgeDrop{0.3}, 4)),
            write_canonical(perturb(inst, perturbation::EdgeDrop{0.3}, 4)));
}
