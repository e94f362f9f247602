#pragma once

// Graph-agnostic reference models: closed-form ridge regression on the
// preprocessed activity features, and the graph-free MLP (the encoder with
// zero message-passing layers).

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/gnn.hpp"
#include "pnf/ingest/preprocess.hpp"
#include "pnf/train.hpp"

namespace pnf {

struct RidgeWeights {
  Vector coef;
  double intercept = 0.0;
  double lambda = 0.0;
};

/// Minimises |y - X w - b|^2 + lambda |w|^2 with the intercept b unpenalised.
inline RidgeWeights ridge_fit(const Matrix& x, const Vector& y, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidConfig("ridge lambda must be non-negative");
  if (x.rows() != y.size()) throw LengthMismatch("ridge_fit: " + std::to_string(x.rows()) + " rows, " + std::to_string(y.size()) + " targets");
  const Eigen::Index p = x.cols() + 1;
  Matrix a(x.rows(), p);
  a.leftCols(x.cols()) = x;
  a.col(x.cols()).setOnes();
  Matrix gram = a.transpose() * a;
  gram.diagonal().head(x.cols()).array() += lambda;
  const Vector rhs = a.transpose() * y;
  Eigen::FullPivLU<Matrix> lu(gram);
  if (lu.rank() < p) throw SingularSystem("ridge normal equations are singular (rank " + std::to_string(lu.rank()) + " of " + std::to_string(p) + ")");
  const Vector w = gram.ldlt().solve(rhs);
  return {w.head(x.cols()), w(x.cols()), lambda};
}

inline Vector ridge_predict(const RidgeWeights& w, const Matrix& x) {
  if (x.cols() != w.coef.size()) throw FeatureDimMismatch("ridge_predict: " + std::to_string(x.cols()) + " features, model has " + std::to_string(w.coef.size()));
  return (x * w.coef).array() + w.intercept;
}

inline double ridge_objective(const RidgeWeights& w, const Matrix& x, const Vector& y) {
  return (y - ridge_predict(w, x)).squaredNorm() + w.lambda * w.coef.squaredNorm();
}

inline const std::vector<double>& ridge_lambda_grid() {
  static const std::vector<double> grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  return grid;
}

/// Ridge pair for duration and cost over preprocessed activity features.
struct RidgeBaseline {
  PreprocessStats stats;
  RidgeWeights duration, cost;
};

namespace detail {

inline void stack_features(const PreparedSet& set, Matrix& x, Vector& yt, Vector& yc) {
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t a = 0; a < set.instances[i]->num_activities(); ++a)
      if (set.instances[i]->t_true[a] && set.instances[i]->c_true[a]) rows.emplace_back(i, a);
  if (rows.empty()) throw NoLabels("no labelled activity for ridge");
  x.resize(static_cast<Eigen::Index>(rows.size()), set.inputs.front().activity.cols());
  yt.resize(static_cast<Eigen::Index>(rows.size()));
  yc.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto [i, a] = rows[r];
    x.row(static_cast<Eigen::Index>(r)) = set.inputs[i].activity.row(static_cast<Eigen::Index>(a));
    yt(static_cast<Eigen::Index>(r)) = *set.instances[i]->t_true[a];
    yc(static_cast<Eigen::Index>(r)) = *set.instances[i]->c_true[a];
  }
}

}  // namespace detail

/// Fits on `train`, choosing each head's lambda from the grid by validation
/// RMSE (first minimum wins).
inline RidgeBaseline fit_ridge_baseline(std::span<const ProjectInstance> train, std::span<const ProjectInstance> val,
                                        std::span<const double> grid = ridge_lambda_grid(),
                                        const PreprocessOptions& opt = {}) {
  if (train.empty() || val.empty()) throw EmptyTrainingSet("ridge needs train and validation projects");
  RidgeBaseline b;
  b.stats = fit_preprocess(train, opt);
  Matrix xt, xv;
  Vector tt, tc, vt, vc;
  detail::stack_features(prepare(train, b.stats), xt, tt, tc);
  detail::stack_features(prepare(val, b.stats), xv, vt, vc);
  auto pick = [&](const Vector& y, const Vector& yv) {
    RidgeWeights best;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
      auto w = ridge_fit(xt, y, lambda);
      const double rmse = std::sqrt((yv - ridge_predict(w, xv)).squaredNorm() / static_cast<double>(yv.size()));
      if (rmse < best_rmse) {
        best_rmse = rmse;
        best = w;
      }
    }
    return best;
  };
  b.duration = pick(tt, vt);
  b.cost = pick(tc, vc);
  return b;
}

/// Per-project predictions with columns mu_T, mu_C.
inline std::vector<Matrix> predict_ridge(const RidgeBaseline& b, std::span<const ProjectInstance> instances) {
  std::vector<Matrix> out;
  for (const auto& inst : instances) {
    const auto in = apply_preprocess(b.stats, inst);
    Matrix p(in.activity.rows(), 2);
    p.col(0) = ridge_predict(b.duration, in.activity);
    p.col(1) = ridge_predict(b.cost, in.activity);
    out.push_back(std::move(p));
  }
  return out;
}

inline nlohmann::json to_json(const RidgeBaseline& b) {
  auto w = [](const RidgeWeights& r) {
    return nlohmann::json{{"coef", std::vector<double>(r.coef.data(), r.coef.data() + r.coef.size())},
                          {"intercept", r.intercept},
                          {"lambda", r.lambda}};
  };
  return {{"format", "pnf-ridge-1"}, {"preprocess", to_json(b.stats)}, {"duration", w(b.duration)}, {"cost", w(b.cost)}};
}

inline RidgeBaseline ridge_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "pnf-ridge-1") throw VersionMismatch("expected format pnf-ridge-1");
  auto w = [](const nlohmann::json& r) {
    const auto c = r.at("coef").get<std::vector<double>>();
    RidgeWeights out;
    out.coef = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
    out.intercept = r.at("intercept").get<double>();
    out.lambda = r.at("lambda").get<double>();
    return out;
  };
  return {preprocess_stats_from_json(j.at("preprocess")), w(j.at("duration")), w(j.at("cost"))};
}

/// Graph-free MLP: the same heads on raw features, widths (256, 128).
inline ModelConfig mlp_config(ModelConfig base = {}) {
  base.layers = 0;
  base.head_hidden = {256, 128};
  return base;
}

}  // namespace pnf
