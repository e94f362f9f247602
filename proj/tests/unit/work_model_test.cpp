#include <gtest/gtest.h>

#include <cmath>

#include "pnf/synthgen.hpp"
#include "pnf/work_model.hpp"

using namespace pnf;

namespace {

ProjectInstance small(std::uint64_t seed) {
  GenConfig c;
  c.n = 12;
  c.seed = seed;
  return generate_project(c);
}

}  // namespace

TEST(WorkModel, UnitEfficiencyReproducesPlannedDuration) {
  const auto inst = small(3);
  const auto specs = work_specs(inst);
  for (std::size_t a = 0; a < inst.num_activities(); ++a) {
    const std::vector<double> ones(specs[a].resources.size(), 1.0);
    EXPECT_NEAR(activity_duration(specs[a], ones), *inst.t_est[a], 1e-12);
    // unit cost rates: cost equals time
    EXPECT_NEAR(activity_cost(specs[a], ones), *inst.t_est[a], 1e-12);
  }
}

TEST(WorkModel, WorkFollowsDemandShares) {
  const auto inst = small(4);
  const auto specs = work_specs(inst);
  const auto r1 = inst.activities.column("R1"), r2 = inst.activities.column("R2");
  const double ratio = inst.activities.values(0, static_cast<Eigen::Index>(r1)) /
                       inst.activities.values(0, static_cast<Eigen::Index>(r2));
  EXPECT_NEAR(specs[0].resources[0].work / specs[0].resources[1].work, ratio, 1e-12);
}

TEST(WorkModel, LawsMatchResourcePriors) {
  const auto inst = small(5);
  const auto laws = efficiency_laws(inst);
  ASSERT_EQ(laws.size(), inst.num_activities());
  for (const auto& l : laws) {
    ASSERT_EQ(l.size(), inst.graph.num_resources());
    for (std::size_t k = 0; k < l.size(); ++k) {
      EXPECT_NEAR(l.expected(k), inst.resources.values(static_cast<Eigen::Index>(k), 0), 1e-12);
      EXPECT_NEAR(l.natural_variance(k), inst.resources.values(static_cast<Eigen::Index>(k), 1), 1e-12);
    }
  }
}

TEST(WorkModel, CrashDefaultsAndOverride) {
  auto inst = small(6);
  auto cp = crash_params(inst);
  EXPECT_NEAR(cp[0]->normal_duration, *inst.t_est[0], 1e-12);
  EXPECT_DOUBLE_EQ(cp[0]->min_cost, *inst.c_est[0]);
  EXPECT_NEAR(crash_cost(cp[0]->normal_duration, *cp[0]), cp[0]->min_cost, 1e-12);

  inst.meta["crash"][inst.graph.activity_id(1)] = {{"normal_duration", 5.0}, {"min_cost", 2.0}, {"a", 0.5}, {"b", 0.25}};
  cp = crash_params(inst);
  EXPECT_DOUBLE_EQ(cp[1]->normal_duration, 5.0);
  EXPECT_DOUBLE_EQ(cp[1]->b, 0.25);
}

TEST(WorkModel, ActivityWithoutResourcesIsRejected) {
  auto inst = small(7);
  std::vector<Edge> edges;
  for (const auto& e : inst.graph.edges())
    if (!(e.relation == Relation::assignment && e.src == 0)) edges.push_back(e);
  inst.graph = ProjectGraph(inst.graph.activity_ids(), inst.graph.resource_ids(), edges);
  EXPECT_THROW(work_specs(inst), EmptyResourceSet);
}
