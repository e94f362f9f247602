#include <gtest/gtest.h>

#include <cmath>

#include "pnf/baselines.hpp"
#include "pnf/synthgen.hpp"

using namespace pnf;

TEST(Ridge, InterpolatesExactLinearData) {
  RandomStream rng(1);
  Matrix x(4, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Vector w(3);
  w << 0.5, -2.0, 3.0;
  const Vector y = (x * w).array() + 1.5;
  auto fit = ridge_fit(x, y, 0.0);
  EXPECT_LT((fit.coef - w).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(fit.intercept, 1.5, 1e-9);
}

TEST(Ridge, HugePenaltyLeavesTheMean) {
  RandomStream rng(2);
  Matrix x(30, 2);
  Vector y(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    y(i) = 2 * x(i, 0) + rng.normal();
  }
  auto fit = ridge_fit(x, y, 1e12);
  EXPECT_LT(fit.coef.cwiseAbs().maxCoeff(), 1e-9);
  const Vector p = ridge_predict(fit, x);
  EXPECT_NEAR(p(0), y.mean() - fit.coef.dot(x.colwise().mean()), 1e-9);
}

TEST(Ridge, SingularWithoutPenalty) {
  Matrix x(5, 2);
  x.col(0) << 1, 2, 3, 4, 5;
  x.col(1) = 2 * x.col(0);
  Vector y = Vector::Ones(5);
  EXPECT_THROW(ridge_fit(x, y, 0.0), SingularSystem);
  EXPECT_NO_THROW(ridge_fit(x, y, 0.1));
}

TEST(Ridge, SolutionIsALocalMinimum) {
  RandomStream rng(3);
  Matrix x(40, 4);
  Vector y(40);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < 40; ++i) y(i) = rng.normal();
  auto fit = ridge_fit(x, y, 0.7);
  const double best = ridge_objective(fit, x, y);
  for (int trial = 0; trial < 100; ++trial) {
    auto moved = fit;
    for (Eigen::Index j = 0; j < 4; ++j) moved.coef(j) += rng.normal(0, 1e-3);
    moved.intercept += rng.normal(0, 1e-3);
    EXPECT_GT(ridge_objective(moved, x, y), best);
  }
}

TEST(Ridge, PredictionsAreAffine) {
  RidgeWeights w{Vector::Constant(2, 0.5), 3.0, 0.1};
  Matrix a(1, 2), b(1, 2);
  a << 1, 2;
  b << -3, 5;
  const Matrix ab = a + b;
  EXPECT_NEAR(ridge_predict(w, ab)(0), ridge_predict(w, a)(0) + ridge_predict(w, b)(0) - w.intercept, 1e-12);
}

TEST(Ridge, RecoversGeneratorCoefficients) {
  // Noise-free duration model: regress T on (sum R, predecessor sum, in-degree).
  GenConfig c;
  c.n = 60;
  c.rho = 0.05;
  c.sigma_t = c.sigma_c = 0.0;
  c.seed = 4;
  auto inst = generate_project(c);
  const std::size_t n = inst.num_activities(), p = c.resources;
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) total[i] += inst.activities.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  Matrix x(static_cast<Eigen::Index>(n), 3);
  Vector y(static_cast<Eigen::Index>(n));
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0.0;
    for (auto q : inst.graph.predecessors(i)) pred += total[q];
    const double deg = static_cast<double>(inst.graph.predecessors(i).size());
    if (*inst.t_true[i] <= 0.5) continue;  // floor binds
    x.row(rows) << total[i], pred, deg;
    y(rows++) = *inst.t_true[i];
  }
  auto fit = ridge_fit(x.topRows(rows), y.head(rows), 0.0);
  EXPECT_NEAR(fit.coef(0), 0.7, 1e-6);
  EXPECT_NEAR(fit.coef(1), 0.2, 1e-6);
  EXPECT_NEAR(fit.coef(2), 0.1, 1e-6);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-6);
}

TEST(Ridge, BaselinePicksLambdaAndRoundTrips) {
  std::vector<ProjectInstance> data;
  for (std::uint64_t s = 0; s < 4; ++s) {
    GenConfig c;
    c.n = 20;
    c.seed = s;
    data.push_back(generate_project(c));
  }
  auto b = fit_ridge_baseline(std::span(data).first(3), std::span(data).last(1));
  EXPECT_NE(std::find(ridge_lambda_grid().begin(), ridge_lambda_grid().end(), b.duration.lambda), ridge_lambda_grid().end());
  auto back = ridge_from_json(nlohmann::json::parse(to_json(b).dump()));
  auto p1 = predict_ridge(b, data), p2 = predict_ridge(back, data);
  EXPECT_EQ(p1[3], p2[3]);
  EXPECT_EQ(p1[0].cols(), 2);
}

TEST(Mlp, ConfigHasNoGraphLayers) {
  auto m = mlp_config();
  EXPECT_EQ(m.layers, 0u);
  EXPECT_EQ(m.head_hidden, (std::vector<std::size_t>{256, 128}));
}
