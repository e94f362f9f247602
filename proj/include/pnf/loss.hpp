#pragma once

// Training objective: heteroscedastic Gaussian NLL per activity plus
// project-level cost and soft critical-path consistency terms.
//
//   L = l_act * L_act + l_proj * (a1 * (C_hat - C)^2 + a2 * (M_soft - M)^2)
//       + l_reg * |theta|^2
//
// L_act averages over labelled activities, w_T and w_C weighting the heads.
// M_soft is the temperature log-sum-exp of predicted finish times. Project
// residuals may be divided by a per-project scale so the terms stay on the
// same footing as the NLL; the default scale of 1 keeps raw units.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/gnn.hpp"
#include "pnf/graph.hpp"
#include "pnf/tensor.hpp"

namespace pnf {

struct LossConfig {
  double lambda_act = 1.0, lambda_proj = 1.0, lambda_reg = 0.0;
  double alpha_cost = 0.1, alpha_cp = 0.1;
  double tau = 10.0;
  double weight_t = 0.5, weight_c = 0.5;

  void validate() const {
    for (double w : {lambda_act, lambda_proj, lambda_reg, alpha_cost, alpha_cp, weight_t, weight_c})
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidConfig("loss weights must be finite and non-negative");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidConfig("loss temperature must be positive");
  }
  nlohmann::json to_json() const {
    return {{"lambda_act", lambda_act}, {"lambda_proj", lambda_proj}, {"lambda_reg", lambda_reg},
            {"alpha_cost", alpha_cost}, {"alpha_cp", alpha_cp},       {"tau", tau},
            {"weight_t", weight_t},     {"weight_c", weight_c}};
  }
  static LossConfig from_json(const nlohmann::json& j) {
    LossConfig c;
    c.lambda_act = j.value("lambda_act", c.lambda_act);
    c.lambda_proj = j.value("lambda_proj", c.lambda_proj);
    c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
    c.alpha_cost = j.value("alpha_cost", c.alpha_cost);
    c.alpha_cp = j.value("alpha_cp", c.alpha_cp);
    c.tau = j.value("tau", c.tau);
    c.weight_t = j.value("weight_t", c.weight_t);
    c.weight_c = j.value("weight_c", c.weight_c);
    c.validate();
    return c;
  }
};

/// Targets aligned with prediction rows; unlabelled rows have mask 0.
struct ActivityTargets {
  Vector t, c;
  std::vector<std::uint8_t> mask;

  std::size_t labeled() const {
    std::size_t n = 0;
    for (auto m : mask) n += m != 0;
    return n;
  }
};

/// Project-level term over prediction rows [begin, begin + count).
struct ProjectTerm {
  std::size_t begin = 0, count = 0;
  ad::DagIndex dag;
  std::optional<double> makespan, cost;
  double overhead = 0.0;
  double time_scale = 1.0, cost_scale = 1.0;
};

inline ad::DagIndex dag_index(const ProjectGraph& g) {
  ad::DagIndex d;
  d.topo = topological_sort(g);
  for (std::size_t a = 0; a < g.num_activities(); ++a) d.preds.push(g.predecessors(a));
  return d;
}

/// Targets for the activities of one instance; missing labels are masked.
inline ActivityTargets activity_targets(const ProjectInstance& inst) {
  const std::size_t n = inst.num_activities();
  ActivityTargets y{Vector::Zero(static_cast<Eigen::Index>(n)), Vector::Zero(static_cast<Eigen::Index>(n)),
                    std::vector<std::uint8_t>(n, 0)};
  for (std::size_t a = 0; a < n; ++a) {
    if (!inst.t_true[a] || !inst.c_true[a]) continue;
    y.t(static_cast<Eigen::Index>(a)) = *inst.t_true[a];
    y.c(static_cast<Eigen::Index>(a)) = *inst.c_true[a];
    y.mask[a] = 1;
  }
  return y;
}

/// Makespan and total cost when every activity is labelled.
inline ProjectTerm project_term(const ProjectInstance& inst, std::size_t begin) {
  ProjectTerm p;
  p.begin = begin;
  p.count = inst.num_activities();
  p.dag = dag_index(inst.graph);
  p.overhead = inst.overhead;
  if (inst.fully_labeled()) {
    const auto t = target_vector(inst.t_true);
    const auto c = target_vector(inst.c_true);
    p.makespan = compute_schedule(inst.graph, t).makespan;
    double total = inst.overhead;
    for (double v : c) total += v;
    p.cost = total;
  }
  return p;
}

inline ad::Var nll_activity(const PredictionSet& p, const ActivityTargets& y, double weight_t = 0.5,
                            double weight_c = 0.5) {
  const auto n = p.mu_t.rows();
  if (y.t.size() != n || y.c.size() != n || static_cast<Eigen::Index>(y.mask.size()) != n)
    throw ShapeMismatch("nll_activity: " + std::to_string(n) + " predictions, " + std::to_string(y.t.size()) + " targets");
  const std::size_t labeled = y.labeled();
  if (labeled == 0) throw MaskAllEmpty("no labelled activity in the batch");
  ad::Tape& t = *p.mu_t.tape();
  Matrix w(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) w(i, 0) = y.mask[static_cast<std::size_t>(i)] ? 1.0 / static_cast<double>(labeled) : 0.0;
  auto head = [&](const ad::Var& mu, const ad::Var& logvar, const Vector& target) {
    Matrix yv = target;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!y.mask[static_cast<std::size_t>(i)]) yv(i, 0) = mu.value()(i, 0);  // keeps masked rows finite
    ad::Var r2 = ad::square(ad::sub(mu, t.constant(std::move(yv))));
    ad::Var per = ad::affine(ad::add(ad::mul(r2, ad::exp(ad::affine(logvar, -1.0))), logvar), 0.5);
    return ad::sum(ad::mul(per, t.constant(w)));
  };
  return ad::add(ad::affine(head(p.mu_t, p.logvar_t, y.t), weight_t), ad::affine(head(p.mu_c, p.logvar_c, y.c), weight_c));
}

/// (1/tau) log sum_a exp(tau F_a) over predicted finish times.
inline ad::Var soft_makespan(const ad::Var& mu, const ad::DagIndex& dag, double tau) {
  return ad::logsumexp(ad::longest_finish(mu, dag), tau);
}

inline ad::Var soft_cp_loss(const ad::Var& mu, const ad::DagIndex& dag, double tau, double makespan_true,
                            double scale = 1.0) {
  return ad::square(ad::affine(soft_makespan(mu, dag, tau), 1.0 / scale, -makespan_true / scale));
}

/// Weighted components; they add up to `total`.
struct LossBreakdown {
  ad::Var total;
  double activity = 0.0, cost = 0.0, critical_path = 0.0, reg = 0.0;
};

/// Squared norm of the decayed trainable parameters (weights, not biases).
inline ad::Var weight_norm(ad::Tape& t, std::span<ad::Parameter* const> params) {
  Matrix zero = Matrix::Zero(1, 1);
  ad::Var acc = t.constant(zero);
  for (auto* p : params)
    if (p->trainable && p->decay) acc = ad::add(acc, ad::sum(ad::square(t.param(*p))));
  return acc;
}

/// Project terms are averaged over the projects that carry the target.
inline LossBreakdown total_loss(const PredictionSet& p, const ActivityTargets& y, std::span<const ProjectTerm> projects,
                                const LossConfig& cfg, std::span<ad::Parameter* const> params = {}) {
  cfg.validate();
  ad::Tape& t = *p.mu_t.tape();
  LossBreakdown out;
  ad::Var total = t.constant(Matrix::Zero(1, 1));
  auto add_term = [&](const ad::Var& term, double weight, double& slot) {
    if (weight == 0.0) return;
    ad::Var w = ad::affine(term, weight);
    slot = w.value()(0, 0);
    total = ad::add(total, w);
  };
  if (cfg.lambda_act > 0.0) add_term(nll_activity(p, y, cfg.weight_t, cfg.weight_c), cfg.lambda_act, out.activity);

  if (cfg.lambda_proj > 0.0) {
    std::vector<ad::Var> cost_terms, cp_terms;
    for (const auto& pr : projects) {
      if (pr.begin + pr.count > static_cast<std::size_t>(p.mu_t.rows()))
        throw ShapeMismatch("project term exceeds prediction rows");
      std::vector<std::size_t> rows(pr.count);
      for (std::size_t i = 0; i < pr.count; ++i) rows[i] = pr.begin + i;
      if (pr.cost && cfg.alpha_cost > 0.0) {
        ad::Var c_hat = ad::sum(ad::gather_rows(p.mu_c, rows));
        cost_terms.push_back(ad::square(ad::affine(c_hat, 1.0 / pr.cost_scale, (pr.overhead - *pr.cost) / pr.cost_scale)));
      }
      if (pr.makespan && cfg.alpha_cp > 0.0)
        cp_terms.push_back(soft_cp_loss(ad::gather_rows(p.mu_t, rows), pr.dag, cfg.tau, *pr.makespan, pr.time_scale));
    }
    auto mean_of = [&](const std::vector<ad::Var>& v) {
      ad::Var s = v.front();
      for (std::size_t i = 1; i < v.size(); ++i) s = ad::add(s, v[i]);
      return ad::affine(s, 1.0 / static_cast<double>(v.size()));
    };
    if (!cost_terms.empty()) add_term(mean_of(cost_terms), cfg.lambda_proj * cfg.alpha_cost, out.cost);
    if (!cp_terms.empty()) add_term(mean_of(cp_terms), cfg.lambda_proj * cfg.alpha_cp, out.critical_path);
  }
  if (cfg.lambda_reg > 0.0) add_term(weight_norm(t, params), cfg.lambda_reg, out.reg);
  out.total = total;
  return out;
}

}  // namespace pnf
