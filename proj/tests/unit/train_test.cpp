#include <gtest/gtest.h>

#include <cmath>

#include "pnf/synthgen.hpp"
#include "pnf/train.hpp"

using namespace pnf;

namespace {

std::vector<ProjectInstance> projects(std::size_t count, std::size_t n, std::uint64_t seed) {
  std::vector<ProjectInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    GenConfig c;
    c.n = n;
    c.rho = 0.2;
    c.resources = 2;
    c.seed = seed + i;
    out.push_back(generate_project(c));
  }
  return out;
}

ModelConfig tiny_model(std::size_t layers = 2) {
  ModelConfig m;
  m.layers = layers;
  m.hidden = 8;
  m.head_hidden = {8};
  m.dropout = 0.0;
  return m;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig t;
  t.lr = 1e-2;
  t.warmup_epochs = 1;
  t.max_epochs = epochs;
  t.patience = epochs;
  t.instance_batch = 2;
  t.fanout = {4, 4};
  return t;
}

}  // namespace

TEST(Train, LearningRateSchedule) {
  TrainConfig c;
  EXPECT_EQ(lr_at(0, c), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(2, c), 0.4e-3);
  EXPECT_DOUBLE_EQ(lr_at(5, c), 1e-3);
  EXPECT_LT(lr_at(199, c), 1e-4 * c.lr);
  EXPECT_NEAR(lr_at(5 + 195 / 2.0, c), 0.5e-3, 1e-5);
  for (std::size_t e = 6; e < 200; ++e) EXPECT_LE(lr_at(e, c), lr_at(e - 1, c));
}

TEST(Train, AdamZeroGradientKeepsParameters) {
  ad::Parameter p{"w", Matrix::Constant(2, 2, 0.7), Matrix::Zero(2, 2)};
  ad::Parameter* ps[] = {&p};
  TrainConfig c;
  c.weight_decay = 0.0;
  AdamState st;
  adam_step(ps, st, 1e-3, c);
  EXPECT_EQ(p.value, Matrix::Constant(2, 2, 0.7));
  EXPECT_EQ(st.step, 1u);
}

TEST(Train, AdamFirstStepMovesByLearningRate) {
  ad::Parameter p{"w", Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 0.1)};
  ad::Parameter* ps[] = {&p};
  TrainConfig c;
  c.weight_decay = 0.0;
  AdamState st;
  adam_step(ps, st, 1e-3, c);
  // m_hat = g, v_hat = g^2, so the step is lr g / (|g| + eps).
  EXPECT_NEAR(p.value(0, 0), 1.0 - 1e-3 * 0.1 / (0.1 + 1e-8), 1e-15);
}

TEST(Train, DecoupledWeightDecay) {
  ad::Parameter w{"w", Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1)};
  ad::Parameter b{"b", Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1), false};
  ad::Parameter* ps[] = {&w, &b};
  TrainConfig c;
  c.weight_decay = 0.1;
  AdamState st;
  adam_step(ps, st, 0.5, c);
  EXPECT_DOUBLE_EQ(w.value(0, 0), 2.0 * (1 - 0.05));
  EXPECT_EQ(b.value(0, 0), 2.0);
}

TEST(Train, ClippingRescalesToUnitNorm) {
  ad::Parameter a{"a", Matrix::Zero(1, 2), Matrix(1, 2)}, b{"b", Matrix::Zero(1, 1), Matrix(1, 1)};
  a.grad << 3.0, 0.0;
  b.grad << 4.0;
  ad::Parameter* ps[] = {&a, &b};
  EXPECT_DOUBLE_EQ(clip_gradients(ps, 1.0), 5.0);
  EXPECT_NEAR(global_grad_norm(ps), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(clip_gradients(ps, 2.0), global_grad_norm(ps));  // below the cap: unchanged
  RandomStream rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    a.grad << rng.normal(0, 100), rng.normal(0, 100);
    b.grad << rng.normal(0, 100);
    clip_gradients(ps, 1.0);
    EXPECT_LE(global_grad_norm(ps), 1.0 + 1e-9);
  }
  b.grad << std::nan("");
  EXPECT_THROW(clip_gradients(ps, 1.0), NonFiniteGradient);
}

TEST(Train, FrozenModelStopsAfterPatience) {
  auto data = projects(4, 10, 1);
  auto cfg = quick(50);
  cfg.lr = 0.0;
  cfg.patience = 1;
  auto [tm, res] = train_model(std::span(data).first(3), std::span(data).last(1), tiny_model(), cfg, 3);
  EXPECT_EQ(res.history.size(), 2u);
  EXPECT_EQ(res.history[0].val_loss, res.history[1].val_loss);
}

TEST(Train, SameSeedSameHistory) {
  auto data = projects(5, 12, 7);
  auto cfg = quick(4);
  auto m = tiny_model();
  m.dropout = 0.2;
  auto r1 = train_model(std::span(data).first(4), std::span(data).last(1), m, cfg, 13).second;
  auto r2 = train_model(std::span(data).first(4), std::span(data).last(1), m, cfg, 13).second;
  ASSERT_EQ(r1.history.size(), r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    EXPECT_EQ(r1.history[i].train_loss, r2.history[i].train_loss);
    EXPECT_EQ(r1.history[i].val_loss, r2.history[i].val_loss);
  }
  auto r3 = train_model(std::span(data).first(4), std::span(data).last(1), m, cfg, 14).second;
  EXPECT_NE(r1.history.back().train_loss, r3.history.back().train_loss);
}

TEST(Train, SmokeTrainingReducesLoss) {
  auto data = projects(8, 15, 20);
  auto cfg = quick(30);
  auto [tm, res] = train_model(std::span(data).first(6), std::span(data).last(2), tiny_model(), cfg, 5);
  EXPECT_LT(res.history.back().train_loss, res.history.front().train_loss);
  EXPECT_LT(res.best_val, res.history.front().val_loss);
}

TEST(Train, BestCheckpointContract) {
  auto data = projects(6, 12, 30);
  auto cfg = quick(25);
  cfg.lr = 5e-2;
  cfg.patience = 5;
  auto [tm, res] = train_model(std::span(data).first(5), std::span(data).last(1), tiny_model(), cfg, 29);
  for (std::size_t e = res.best_epoch; e < res.history.size(); ++e) EXPECT_LE(res.best_val, res.history[e].val_loss);
  EXPECT_EQ(res.history[res.best_epoch].val_loss, res.best_val);
  const std::vector<ProjectInstance> val(data.end() - 1, data.end());
  EXPECT_DOUBLE_EQ(validation_loss(tm.model, prepare(val, tm.stats), cfg.loss), res.best_val);
}

TEST(Train, SamplingWithLargeFanoutMatchesExactTraining) {
  auto data = projects(3, 14, 40);
  auto cfg = quick(3);
  cfg.mode = BatchMode::nodes;
  cfg.node_batch = 8;
  cfg.fanout = {1000, 1000};
  auto sampled = train_model(std::span(data).first(2), std::span(data).last(1), tiny_model(), cfg, 47);
  cfg.exact_neighbors = true;
  auto exact = train_model(std::span(data).first(2), std::span(data).last(1), tiny_model(), cfg, 47);
  ASSERT_EQ(sampled.second.history.size(), exact.second.history.size());
  for (std::size_t i = 0; i < exact.second.history.size(); ++i) {
    EXPECT_NEAR(sampled.second.history[i].train_loss, exact.second.history[i].train_loss, 1e-9);
    EXPECT_NEAR(sampled.second.history[i].val_loss, exact.second.history[i].val_loss, 1e-9);
  }
}

TEST(Train, NodeModeWithSmallFanoutTrains) {
  auto data = projects(3, 20, 50);
  auto cfg = quick(5);
  cfg.mode = BatchMode::nodes;
  cfg.node_batch = 16;
  cfg.fanout = {3, 2};
  auto [tm, res] = train_model(std::span(data).first(2), std::span(data).last(1), tiny_model(), cfg, 71);
  EXPECT_EQ(res.history.size(), 5u);
  EXPECT_TRUE(std::isfinite(res.best_val));
  cfg.fanout = {3};
  EXPECT_THROW(cfg.validate(2), InvalidConfig);
}

TEST(Train, FullBatchAndMlpModes) {
  auto data = projects(4, 10, 60);
  auto cfg = quick(3);
  cfg.mode = BatchMode::full;
  auto [tm, res] = train_model(std::span(data).first(3), std::span(data).last(1), tiny_model(0), cfg, 101);
  EXPECT_EQ(res.history.size(), 3u);
  EXPECT_EQ(tm.model.config.layers, 0u);
}

TEST(Train, EvaluatePerfectAndHandComputed) {
  auto data = projects(2, 6, 70);
  std::vector<const ProjectInstance*> inst = {&data[0], &data[1]};
  std::vector<Matrix> perfect;
  for (const auto& d : data) {
    Matrix p(static_cast<Eigen::Index>(d.num_activities()), 4);
    for (std::size_t a = 0; a < d.num_activities(); ++a)
      p.row(static_cast<Eigen::Index>(a)) << *d.t_true[a], 1.0, *d.c_true[a], 1.0;
    perfect.push_back(p);
  }
  auto b = evaluate_predictions(inst, perfect);
  EXPECT_EQ(b.duration.accuracy.mae, 0.0);
  EXPECT_EQ(*b.duration.accuracy.r2, 1.0);
  EXPECT_EQ(b.makespan->mae, 0.0);
  EXPECT_EQ(b.total_cost->mae, 0.0);
  EXPECT_EQ(b.projects, 2u);

  // Three labelled activities in a chain, means only.
  ProjectInstance p;
  p.graph = ProjectGraph({"a", "b", "c"}, {}, {{0, 1, Relation::precedence, {}}, {1, 2, Relation::precedence, {}}});
  p.t_true = {1.0, 2.0, 3.0};
  p.c_true = {2.0, 2.0, 2.0};
  Matrix pred(3, 2);
  pred << 2, 2, 2, 2, 2, 2;
  const ProjectInstance* one[] = {&p};
  const Matrix preds[] = {pred};
  auto h = evaluate_predictions(one, preds);
  EXPECT_DOUBLE_EQ(h.duration.accuracy.mae, 2.0 / 3.0);
  EXPECT_EQ(h.cost.accuracy.mae, 0.0);
  EXPECT_FALSE(h.duration.calibration.has_value());
  EXPECT_EQ(h.makespan->mae, 0.0);  // 6 predicted and true

  p.t_true = {std::nullopt, std::nullopt, std::nullopt};
  EXPECT_THROW(evaluate_predictions(one, preds), NoLabels);
}

TEST(Train, TrainedModelRoundTrip) {
  auto data = projects(3, 8, 80);
  auto [tm, res] = train_model(std::span(data).first(2), std::span(data).last(1), tiny_model(), quick(2), 1);
  auto back = trained_model_from_json(nlohmann::json::parse(to_json(tm).dump()));
  auto a = evaluate(tm, data), b = evaluate(back, data);
  EXPECT_EQ(a.duration.accuracy.mae, b.duration.accuracy.mae);
  EXPECT_EQ(TrainConfig::from_json(quick(3).to_json()).to_json(), quick(3).to_json());
  EXPECT_NE(history_csv(res.history).find("epoch,lr,train_loss,val_loss\n0,"), std::string::npos);
}
