#pragma once

// Online resource-efficiency beliefs: exponential moment updates with a
// constant, sample-average or adaptive gain, and the linear-Gaussian Kalman
// filter.

#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/core/log.hpp"
#include "pnf/core/matrix.hpp"

namespace pnf {

enum class UpdateRule { constant, sample_average, adaptive };

inline std::string_view to_string(UpdateRule r) {
  switch (r) {
    case UpdateRule::constant: return "constant";
    case UpdateRule::sample_average: return "sample_average";
    case UpdateRule::adaptive: return "adaptive";
  }
  return "?";
}

inline UpdateRule update_rule_from_string(std::string_view s) {
  if (s == "constant") return UpdateRule::constant;
  if (s == "sample_average") return UpdateRule::sample_average;
  if (s == "adaptive") return UpdateRule::adaptive;
  throw InvalidConfig("unknown update rule '" + std::string(s) + "'");
}

inline constexpr double kVarianceFloor = 1e-8;

struct ResourcePosterior {
  double mean = 1.0;
  double var = 0.25;
  double obs_var = 0.01;  // per-observation noise, used by the adaptive gain
  UpdateRule rule = UpdateRule::adaptive;
  double alpha = 0.3;          // constant rule only
  bool strict = false;         // throw instead of flooring a vanishing variance
  std::size_t updates = 0;     // batches absorbed so far

  void validate() const {
    if (!(var > 0.0)) throw InvalidConfig("posterior variance must be positive");
    if (!(obs_var >= 0.0)) throw InvalidConfig("observation variance must be non-negative");
    if (rule == UpdateRule::constant && !(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfig("alpha must lie in [0, 1]");
  }
};

/// Gain for the next update at step t (prior updates) with a batch of n.
inline double update_gain(const ResourcePosterior& p, std::size_t t, std::size_t n) {
  switch (p.rule) {
    case UpdateRule::constant: return p.alpha;
    case UpdateRule::sample_average: return 1.0 / static_cast<double>(t + 1);
    case UpdateRule::adaptive: return p.var / (p.var + p.obs_var / static_cast<double>(std::max<std::size_t>(n, 1)));
  }
  return 0.0;
}

/// mean <- (1-a) mean + a ybar; var <- (1-a) var + a s2.
inline ResourcePosterior exp_update(ResourcePosterior p, double batch_mean, double batch_var, std::size_t t,
                                    std::size_t n = 1) {
  if (!(batch_var >= 0.0) || !std::isfinite(batch_mean)) throw InvalidConfig("batch statistics must be finite, variance >= 0");
  const double a = update_gain(p, t, n);
  p.mean = (1.0 - a) * p.mean + a * batch_mean;
  double v = (1.0 - a) * p.var + a * batch_var;
  if (!(v > kVarianceFloor)) {
    if (p.strict) throw VarianceUnderflow("posterior variance " + std::to_string(v) + " at the floor");
    log::warn("posterior variance " + std::to_string(v) + " floored at 1e-8");
    v = kVarianceFloor;
  }
  p.var = v;
  ++p.updates;
  return p;
}

/// Convenience: absorb a batch of observations at the posterior's own step.
inline ResourcePosterior observe(const ResourcePosterior& p, std::span<const double> ys) {
  if (ys.empty()) return p;
  double m = 0.0;
  for (double y : ys) m += y;
  m /= static_cast<double>(ys.size());
  double s2 = 0.0;
  for (double y : ys) s2 += (y - m) * (y - m);
  s2 /= static_cast<double>(ys.size());
  return exp_update(p, m, s2, p.updates, ys.size());
}

/// Efficiency implied by a realised time: planned work q = t_plan * p_s, so
/// R = q / (t_actual * p_s).
inline double backsolve_efficiency(double work, double actual_time, double std_productivity) {
  if (!(actual_time > 0.0) || !(std_productivity > 0.0)) throw NonPositiveEfficiency("actual time and productivity must be positive");
  return work / (actual_time * std_productivity);
}

struct KalmanState {
  Vector mean;
  Matrix cov;
  Matrix h;  // observation model
  Matrix r;  // observation noise

  void validate() const {
    const auto n = mean.size();
    if (cov.rows() != n || cov.cols() != n || h.cols() != n || r.rows() != h.rows() || r.cols() != h.rows())
      throw ShapeMismatch("Kalman state dimensions are inconsistent");
  }
};

inline KalmanState kalman_identity(const Vector& mean, const Matrix& cov, double obs_var) {
  const auto n = mean.size();
  return {mean, cov, Matrix::Identity(n, n), Matrix::Identity(n, n) * obs_var};
}

/// K = P H' (H P H' + R)^-1, x += K (y - H x), P = (I - K H) P symmetrised.
inline KalmanState kalman_update(KalmanState s, const Vector& y) {
  s.validate();
  if (y.size() != s.h.rows()) throw ShapeMismatch("observation has " + std::to_string(y.size()) + " entries, model " + std::to_string(s.h.rows()));
  const Matrix pht = s.cov * s.h.transpose();
  const Matrix innov = s.h * pht + s.r;
  Eigen::LDLT<Matrix> ldlt(innov);
  const double scale = std::max(1.0, innov.cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * scale)
    throw SingularInnovation("innovation covariance is not invertible");
  const Matrix gain = ldlt.solve(pht.transpose()).transpose();
  s.mean += gain * (y - s.h * s.mean);
  const auto n = s.mean.size();
  s.cov = (Matrix::Identity(n, n) - gain * s.h) * s.cov;
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  return s;
}

/// Positive semidefinite up to a small relative tolerance.
inline bool is_psd(const Matrix& m, double tol = 1e-10) {
  Eigen::LDLT<Matrix> ldlt(m);
  if (ldlt.info() != Eigen::Success) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return ldlt.vectorD().minCoeff() >= -tol * scale;
}

inline nlohmann::json to_json(const ResourcePosterior& p) {
  return {{"mean", p.mean}, {"var", p.var}, {"obs_var", p.obs_var}, {"rule", to_string(p.rule)},
          {"alpha", p.alpha}, {"updates", p.updates}};
}

}  // namespace pnf
