#include <gtest/gtest.h>

#include <algorithm>

#include "pnf/ingest/preprocess.hpp"
#include "pnf/synthgen.hpp"

using namespace pnf;

namespace {

FeatureTable column_table(const std::vector<double>& v) {
  FeatureTable t;
  t.names = {"x"};
  t.values = Matrix(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) t.values(static_cast<Eigen::Index>(i), 0) = v[i];
  return t;
}

FeatureTable category_table(const std::vector<std::string>& cats, const std::vector<int>& codes) {
  FeatureTable t;
  t.groups.push_back({"kind", cats, 0});
  for (const auto& c : cats) t.names.push_back("kind=" + c);
  t.values = Matrix::Zero(static_cast<Eigen::Index>(codes.size()), static_cast<Eigen::Index>(cats.size()));
  for (std::size_t r = 0; r < codes.size(); ++r) {
    if (codes[r] < 0) {
      for (std::size_t j = 0; j < cats.size(); ++j) t.set_missing(r, j, true);
    } else {
      t.values(static_cast<Eigen::Index>(r), codes[r]) = 1.0;
    }
  }
  return t;
}

}  // namespace

TEST(Preprocess, ConstantFeatureHasUnitStdAndZeroOutput) {
  std::vector<FeatureTable> train = {column_table({4, 4, 4, 4})};
  auto st = fit_table(train);
  EXPECT_EQ(st.continuous[0].std, 1.0);
  auto out = apply_table(st, train[0]);
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Preprocess, OutlierClippedAtNinetyNinthPercentile) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  v[57] = 58000.0;  // one 1000x outlier
  std::vector<FeatureTable> train = {column_table(v)};
  auto st = fit_table(train);
  // Oracle: rank h = 0.99 * (n - 1) on the sorted sample, interpolated.
  auto s = v;
  std::sort(s.begin(), s.end());
  const double h = 0.99 * 99.0;
  const double cut = s[98] + (h - 98.0) * (s[99] - s[98]);
  EXPECT_DOUBLE_EQ(st.continuous[0].hi, cut);
  auto out = apply_table(st, train[0]);
  const double max_raw = out.maxCoeff() * st.continuous[0].std + st.continuous[0].mean;
  EXPECT_NEAR(max_raw, cut, 1e-9 * cut);
}

TEST(Preprocess, ZScoreOfTrainColumn) {
  std::vector<FeatureTable> train = {column_table({1, 2, 3, 4, 5, 6, 7, 8, 9, 10})};
  auto out = apply_table(fit_table(train), train[0]);
  // Clipping moves the ends slightly; the result stays centred with unit spread.
  EXPECT_NEAR(out.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(out.array().square().mean()), 1.0, 1e-12);
}

TEST(Preprocess, MissingContinuousTakesMedian) {
  auto t = column_table({1, 2, 3, 100, 5});
  t.set_missing(3, 0, true);
  std::vector<FeatureTable> train = {t};
  auto st = fit_table(train);
  EXPECT_DOUBLE_EQ(st.continuous[0].median, 2.5);
  auto out = apply_table(st, t);
  EXPECT_NEAR(out(3, 0) * st.continuous[0].std + st.continuous[0].mean, 2.5, 1e-12);
}

TEST(Preprocess, UnseenCategoryGoesToUnk) {
  std::vector<FeatureTable> train = {category_table({"a", "b", "c"}, {0, 1, 1, 0, 1})};
  auto st = fit_table(train);
  ASSERT_EQ(st.groups[0].vocab, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(st.width(), 3u);
  auto test = category_table({"a", "b", "c", "d"}, {2, 3, 0, -1});
  auto out = apply_table(st, test);
  EXPECT_EQ(out(0, 2), 1.0);  // c unseen in train
  EXPECT_EQ(out(1, 2), 1.0);  // d unknown to train schema
  EXPECT_EQ(out(2, 0), 1.0);
  EXPECT_EQ(out(3, 1), 1.0);  // missing -> mode b
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_EQ(out.row(r).sum(), 1.0);
}

TEST(Preprocess, EmptyTrainingSet) {
  std::vector<ProjectInstance> none;
  EXPECT_THROW((void)fit_preprocess(none), EmptyTrainingSet);
}

TEST(Preprocess, NonTrainDataNeverReachesStats) {
  std::vector<ProjectInstance> all;
  for (std::uint64_t s = 0; s < 4; ++s) {
    GenConfig c;
    c.n = 30;
    c.seed = s;
    all.push_back(generate_project(c));
  }
  std::vector<ProjectInstance> train(all.begin(), all.begin() + 3);
  const auto before = to_json(fit_preprocess(train)).dump();
  const auto out_before = apply_preprocess(fit_preprocess(train), train[0]).activity;
  // Poison the held-out instance's targets and features.
  auto& held = all[3];
  for (auto& t : held.t_true) t = 1e9;
  for (auto& c : held.c_true) c = -1e9;
  held.activities.values.setConstant(1e12);
  std::vector<ProjectInstance> train_again(all.begin(), all.begin() + 3);
  const auto stats = fit_preprocess(train_again);
  EXPECT_EQ(to_json(stats).dump(), before);
  EXPECT_EQ(apply_preprocess(stats, train_again[0]).activity, out_before);
}

TEST(Preprocess, TargetScalerUsesLabeledTrainTargets) {
  GenConfig c;
  c.n = 40;
  auto inst = generate_project(c);
  std::vector<ProjectInstance> train = {inst};
  auto st = fit_preprocess(train);
  double m = 0;
  for (auto& t : inst.t_true) m += *t;
  EXPECT_NEAR(st.targets.mean_t, m / 40.0, 1e-9);
  EXPECT_GT(st.targets.std_c, 0.0);
}

TEST(Preprocess, StatsJsonRoundTrip) {
  GenConfig c;
  c.n = 25;
  std::vector<ProjectInstance> train = {generate_project(c)};
  auto st = fit_preprocess(train);
  auto back = preprocess_stats_from_json(to_json(st));
  EXPECT_EQ(to_json(back).dump(), to_json(st).dump());
  auto x = apply_preprocess(st, train[0]);
  EXPECT_EQ(x.activity.cols(), static_cast<Eigen::Index>(st.activity.width()));
  EXPECT_TRUE(x.activity.allFinite());
  EXPECT_EQ(x.resource.rows(), 5);
}
