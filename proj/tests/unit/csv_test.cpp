#include <gtest/gtest.h>

#include <numeric>

#include "pnf/ingest/surrogate.hpp"

using namespace pnf;

TEST(Csv, QuotedFieldsAndEmbeddedNewlines) {
  auto t = parse_csv("a,b,c\r\n1,\"x, y\",\"he said \"\"hi\"\"\"\n2,\"two\nlines\",\n");
  ASSERT_EQ(t.header.size(), 3u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.rows[0][2], "he said \"hi\"");
  EXPECT_EQ(t.rows[1][1], "two\nlines");
  EXPECT_EQ(t.rows[1][2], "");
}

TEST(Csv, WriteThenParseRoundTrips) {
  CsvTable t{{"id", "note"}, {{"1", "plain"}, {"2", "a,\"b\"\nc"}}};
  auto back = parse_csv(write_csv(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Csv, RaggedRowAndOpenQuoteAreErrors) {
  EXPECT_THROW((void)parse_csv("a,b\n1\n"), ParseError);
  try {
    (void)parse_csv("a,b\n1,\"open\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

namespace {

CsvTable cocomo_like() {
  return parse_csv(
      "project,effort,kloc,rely,lang\n"
      "p1,120,10.5,H,cobol\n"
      "p2,48,3,VL,fortran\n"
      "p3,800,?,XH,cobol\n");
}

double total(const std::vector<std::optional<double>>& v) {
  double s = 0.0;
  for (const auto& x : v) s += *x;
  return s;
}

}  // namespace

TEST(Surrogate, Chain4SplitsEffortEqually) {
  SurrogateOptions o;
  o.id_column = "project";
  auto insts = build_surrogate_graph(cocomo_like(), SurrogateStrategy::chain4, o);
  ASSERT_EQ(insts.size(), 3u);
  const auto& a = insts[0];
  EXPECT_EQ(a.name(), "p1");
  EXPECT_EQ(a.num_activities(), 4u);
  EXPECT_EQ(a.graph.num_precedence_edges(), 3u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(*a.t_true[i], 30.0);
}

TEST(Surrogate, Phase6ConservesEffort) {
  auto insts = build_surrogate_graph(cocomo_like(), SurrogateStrategy::phase6);
  const double efforts[] = {120, 48, 800};
  for (std::size_t r = 0; r < insts.size(); ++r) {
    EXPECT_EQ(insts[r].num_activities(), 6u);
    EXPECT_NEAR(total(insts[r].t_true), efforts[r], 1e-9 * efforts[r]);
    EXPECT_NEAR(total(insts[r].c_true), efforts[r], 1e-9 * efforts[r]);
  }
  // Code/Unit Test carries .35 / 1.2 of the effort.
  EXPECT_NEAR(*insts[0].t_true[3], 120 * 0.35 / 1.2, 1e-9);
}

TEST(Surrogate, DriverEncoding) {
  auto insts = build_surrogate_graph(cocomo_like(), SurrogateStrategy::chain4);
  const auto& blk = insts[0].activities;
  const auto rely = blk.column("rely"), lang = blk.column("lang"), kloc = blk.column("kloc");
  EXPECT_EQ(blk.schema[rely].kind, FeatureKind::continuous);
  EXPECT_EQ(blk.values(0, static_cast<Eigen::Index>(rely)), 4.0);
  EXPECT_EQ(blk.schema[lang].kind, FeatureKind::categorical);
  EXPECT_EQ(blk.schema[lang].categories, (std::vector<std::string>{"cobol", "fortran"}));
  EXPECT_EQ(blk.values(0, static_cast<Eigen::Index>(kloc)), 10.5);
  EXPECT_TRUE(insts[2].activities.is_missing(0, kloc));
  EXPECT_EQ(insts[2].activities.values(0, static_cast<Eigen::Index>(rely)), 6.0);
}

TEST(Surrogate, MissingEffortColumn) {
  auto t = parse_csv("a,b\n1,2\n");
  EXPECT_THROW((void)build_surrogate_graph(t, SurrogateStrategy::phase6), MissingColumn);
}

TEST(Surrogate, ModuleStrategyBuildsDag) {
  auto t = parse_csv("effort,modules\n100,core:2:;ui:1:core;api:1:core;release:1:ui|api\n");
  auto insts = build_surrogate_graph(t, SurrogateStrategy::module);
  ASSERT_EQ(insts.size(), 1u);
  const auto& g = insts[0].graph;
  EXPECT_EQ(g.num_activities(), 4u);
  EXPECT_EQ(g.num_precedence_edges(), 4u);
  EXPECT_DOUBLE_EQ(*insts[0].t_true[0], 40.0);
  EXPECT_NEAR(total(insts[0].t_true), 100.0, 1e-9);
}

TEST(Surrogate, ModuleStrategyFallsBackWithoutColumn) {
  auto insts = build_surrogate_graph(cocomo_like(), SurrogateStrategy::module);
  EXPECT_EQ(insts[0].num_activities(), 6u);
  EXPECT_EQ(insts[0].meta["strategy"], "phase6");
}
