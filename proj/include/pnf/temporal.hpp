#pragma once

// Rolling execution: projects complete a fixed share of activities per step.
// After each batch the actual durations are revealed, per-resource
// efficiencies are back-solved from the booked hours and folded into the
// resource beliefs, features are refreshed, the model is retrained and the
// remaining activities are predicted.
//
// Each executing project draws hidden efficiencies e_k ~ LN(0, s_e^2) per
// resource and R_ik = e_k * LN(0, s_o^2) per activity. Work at standard
// productivity takes the planned duration, so
//   T_actual = T_plan * sum_k share_ik / R_ik,  C_actual likewise,
// with share_ik the demand share of resource k in activity i.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnf/baselines.hpp"
#include "pnf/bayes.hpp"
#include "pnf/core/error.hpp"
#include "pnf/core/rng.hpp"
#include "pnf/gnn.hpp"
#include "pnf/graph.hpp"
#include "pnf/train.hpp"

namespace pnf {

enum class TemporalVariant { static_mlp, static_gnn, adaptive };

inline std::string_view to_string(TemporalVariant v) {
  switch (v) {
    case TemporalVariant::static_mlp: return "static-mlp";
    case TemporalVariant::static_gnn: return "static-gnn";
    case TemporalVariant::adaptive: return "adaptive";
  }
  return "?";
}

inline TemporalVariant temporal_variant_from_string(std::string_view s) {
  if (s == "static-mlp") return TemporalVariant::static_mlp;
  if (s == "static-gnn") return TemporalVariant::static_gnn;
  if (s == "adaptive") return TemporalVariant::adaptive;
  throw InvalidConfig("unknown temporal variant '" + std::string(s) + "'");
}

struct TemporalConfig {
  double step = 0.2;             // share of each project completed per step
  double efficiency_sd = 0.3;    // log-sd of the hidden per-resource efficiency
  double observation_sd = 0.1;   // log-sd of per-activity deviations around it
  std::size_t executing = 6;     // the last projects execute; the rest are history
  double validation = 0.2;       // share of history held out for early stopping
  std::size_t initial_epochs = 60, step_epochs = 15;
  bool warm_start = true;
  UpdateRule rule = UpdateRule::adaptive;
  double alpha = 0.3;

  void validate() const {
    if (!(step > 0.0 && step <= 1.0)) throw InvalidConfig("completion step must lie in (0, 1]");
    if (!(efficiency_sd >= 0.0) || !(observation_sd >= 0.0)) throw InvalidConfig("efficiency spreads must be >= 0");
    if (executing == 0) throw InvalidConfig("at least one executing project required");
    if (!(validation > 0.0 && validation < 1.0)) throw InvalidConfig("validation share must lie in (0, 1)");
    if (initial_epochs == 0 || step_epochs == 0) throw InvalidConfig("epoch counts must be positive");
    if (rule == UpdateRule::constant && !(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfig("alpha must lie in [0, 1]");
  }

  nlohmann::json to_json() const {
    return {{"step", step},
            {"efficiency_sd", efficiency_sd},
            {"observation_sd", observation_sd},
            {"executing", executing},
            {"validation", validation},
            {"initial_epochs", initial_epochs},
            {"step_epochs", step_epochs},
            {"warm_start", warm_start},
            {"rule", to_string(rule)},
            {"alpha", alpha}};
  }

  static TemporalConfig from_json(const nlohmann::json& j) {
    TemporalConfig c;
    c.step = j.value("step", c.step);
    c.efficiency_sd = j.value("efficiency_sd", c.efficiency_sd);
    c.observation_sd = j.value("observation_sd", c.observation_sd);
    c.executing = j.value("executing", c.executing);
    c.validation = j.value("validation", c.validation);
    c.initial_epochs = j.value("initial_epochs", c.initial_epochs);
    c.step_epochs = j.value("step_epochs", c.step_epochs);
    c.warm_start = j.value("warm_start", c.warm_start);
    if (j.contains("rule")) c.rule = update_rule_from_string(j.at("rule").get<std::string>());
    c.alpha = j.value("alpha", c.alpha);
    c.validate();
    return c;
  }
};

/// Hidden truth of one executed project.
struct Execution {
  std::vector<double> efficiency;  // e_k
  Matrix demand;                   // n x p work quantities (0 when unassigned)
  Matrix realized;                 // n x p R_ik (1 when unassigned)
  std::vector<double> t_actual, c_actual;
  Schedule schedule;               // under actual durations
  std::vector<std::size_t> order;  // completion order: earliest finish, then id
};

/// n x p work matrix from assignment edge weights (1 when unweighted).
inline Matrix demand_matrix(const ProjectInstance& inst) {
  const auto& g = inst.graph;
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(g.num_activities()), static_cast<Eigen::Index>(g.num_resources()));
  for (const auto& e : g.edges())
    if (e.relation == Relation::assignment)
      d(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst - g.num_activities())) =
          e.features.empty() ? 1.0 : e.features.front();
  return d;
}

namespace detail {

inline double resource_column(const ProjectInstance& inst, std::string_view name, std::size_t k, double fallback) {
  const std::size_t c = inst.resources.column(name);
  if (c >= inst.resources.cols() || inst.resources.is_missing(k, c)) return fallback;
  return inst.resources.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
}

/// sum_k share_ik / r_k over assigned resources; 1 for unassigned activities.
inline double time_multiplier(const Matrix& demand, Eigen::Index i, const auto& efficiency_of) {
  const double total = demand.row(i).sum();
  if (!(total > 0.0)) return 1.0;
  double m = 0.0;
  for (Eigen::Index k = 0; k < demand.cols(); ++k)
    if (demand(i, k) > 0.0) m += demand(i, k) / total / efficiency_of(k);
  return m;
}

}  // namespace detail

inline Execution simulate_execution(const ProjectInstance& plan, const TemporalConfig& cfg, RandomStream rng) {
  if (!plan.fully_labeled()) throw NoLabels("execution needs planned durations and costs");
  const std::size_t n = plan.num_activities(), p = plan.graph.num_resources();
  Execution ex;
  ex.demand = demand_matrix(plan);
  for (std::size_t k = 0; k < p; ++k) ex.efficiency.push_back(rng.lognormal(0.0, cfg.efficiency_sd));
  ex.realized = Matrix::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k)
      if (ex.demand(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) > 0.0)
        ex.realized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            ex.efficiency[k] * rng.lognormal(0.0, cfg.observation_sd);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double m = detail::time_multiplier(ex.demand, r, [&](Eigen::Index k) { return ex.realized(r, k); });
    ex.t_actual.push_back(*plan.t_true[i] * m);
    ex.c_actual.push_back(*plan.c_true[i] * m);
  }
  ex.schedule = compute_schedule(plan.graph, ex.t_actual);
  ex.order.resize(n);
  std::iota(ex.order.begin(), ex.order.end(), 0);
  std::sort(ex.order.begin(), ex.order.end(), [&](std::size_t a, std::size_t b) {
    if (ex.schedule.earliest_finish[a] != ex.schedule.earliest_finish[b])
      return ex.schedule.earliest_finish[a] < ex.schedule.earliest_finish[b];
    return plan.graph.activity_id(a) < plan.graph.activity_id(b);
  });
  return ex;
}

/// Prior beliefs from the plan's mu_hat / var_hat resource columns.
inline std::vector<ResourcePosterior> prior_beliefs(const ProjectInstance& plan, const TemporalConfig& cfg) {
  std::vector<ResourcePosterior> out;
  for (std::size_t k = 0; k < plan.graph.num_resources(); ++k) {
    ResourcePosterior b;
    b.mean = detail::resource_column(plan, "mu_hat", k, 1.0);
    b.var = std::max(detail::resource_column(plan, "var_hat", k, 0.25), kVarianceFloor);
    b.obs_var = std::max(cfg.observation_sd * cfg.observation_sd, 1e-6);
    b.rule = cfg.rule;
    b.alpha = cfg.alpha;
    out.push_back(b);
  }
  return out;
}

/// Back-solves R_ik from the hours each resource booked on the completed
/// batch and absorbs them into that resource's belief.
inline void absorb_batch(std::vector<ResourcePosterior>& beliefs, const ProjectInstance& plan, const Execution& ex,
                         std::span<const std::size_t> batch) {
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    const double ps = detail::resource_column(plan, "std_productivity", k, 1.0);
    std::vector<double> ys;
    for (auto i : batch) {
      const auto r = static_cast<Eigen::Index>(i);
      const double work = ex.demand(r, static_cast<Eigen::Index>(k));
      if (!(work > 0.0)) continue;
      const double hours = work / (ex.realized(r, static_cast<Eigen::Index>(k)) * ps);
      ys.push_back(backsolve_efficiency(work, hours, ps));
    }
    beliefs[k] = observe(beliefs[k], ys);
  }
}

inline const std::vector<std::string>& status_categories() {
  static const std::vector<std::string> c{"not_started", "in_progress", "completed"};
  return c;
}

/// Model view of a project part-way through execution. Targets are the
/// actuals, hidden outside `completed` unless `label_all`. The adaptive view
/// carries the current beliefs, estimates rescaled by the believed
/// efficiencies, completion status, percent complete and elapsed time.
inline ProjectInstance execution_snapshot(const ProjectInstance& plan, const Execution& ex,
                                          std::span<const std::uint8_t> completed,
                                          std::span<const ResourcePosterior> beliefs, TemporalVariant v, bool label_all) {
  const std::size_t n = plan.num_activities();
  ProjectInstance s = plan;
  for (std::size_t i = 0; i < n; ++i) {
    if (label_all || completed[i]) {
      s.t_true[i] = ex.t_actual[i];
      s.c_true[i] = ex.c_actual[i];
    } else {
      s.t_true[i].reset();
      s.c_true[i].reset();
    }
  }
  if (v != TemporalVariant::adaptive) return s;

  const std::size_t mu_col = s.resources.column("mu_hat"), var_col = s.resources.column("var_hat");
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    if (mu_col < s.resources.cols()) {
      s.resources.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(mu_col)) = beliefs[k].mean;
      if (!s.resources.missing.empty()) s.resources.set_missing(k, mu_col, false);
    }
    if (var_col < s.resources.cols()) {
      s.resources.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(var_col)) = beliefs[k].var;
      if (!s.resources.missing.empty()) s.resources.set_missing(k, var_col, false);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double m = detail::time_multiplier(ex.demand, r, [&](Eigen::Index k) {
      return std::max(beliefs[static_cast<std::size_t>(k)].mean, 1e-3);
    });
    if (s.t_est[i]) *s.t_est[i] *= m;
    if (s.c_est[i]) *s.c_est[i] *= m;
  }

  double elapsed = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (completed[i]) elapsed = std::max(elapsed, ex.schedule.earliest_finish[i]);
  auto& blk = s.activities;
  const std::size_t base = blk.cols();
  blk.schema.push_back({"status", FeatureKind::categorical, status_categories()});
  blk.schema.push_back({"pct_complete", FeatureKind::continuous, {}});
  blk.schema.push_back({"elapsed", FeatureKind::continuous, {}});
  if (!blk.missing.empty()) {
    std::vector<std::uint8_t> wider(n * blk.cols(), 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < base; ++c) wider[i * blk.cols() + c] = blk.missing[i * base + c];
    blk.missing = std::move(wider);
  }
  blk.values.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(base + 3));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    double status = 0.0, pct = 0.0;
    if (completed[i]) {
      status = 2.0;
      pct = 100.0;
    } else if (ex.schedule.earliest_start[i] < elapsed) {
      status = 1.0;
      pct = std::min(99.0, 100.0 * (elapsed - ex.schedule.earliest_start[i]) / std::max(ex.t_actual[i], 1e-12));
    }
    blk.values(r, static_cast<Eigen::Index>(base)) = status;
    blk.values(r, static_cast<Eigen::Index>(base + 1)) = pct;
    blk.values(r, static_cast<Eigen::Index>(base + 2)) = elapsed;
  }
  return s;
}

/// Memory after replaying the completions of `completed` in finish order.
inline Matrix replay_memory(const ModelParams& m, const ProjectInstance& snap, const ModelInput& in, const Execution& ex,
                            std::span<const std::uint8_t> completed) {
  const GraphInput g = make_graph_input(snap, in);
  TemporalMemory mem = init_memory(m, g.num_nodes());
  std::vector<std::size_t> done;
  for (auto i : ex.order)
    if (completed[i]) done.push_back(i);
  for (auto i : done) temporal_step(m, mem, {i, ex.schedule.earliest_finish[i]}, g);
  return mem.state;
}

struct TemporalPoint {
  TemporalVariant variant = TemporalVariant::adaptive;
  std::uint64_t seed = 0;
  double completion_pct = 0.0;
  double rmse = 0.0;             // duration RMSE over the remaining activities
  double belief_error = 0.0;     // mean |belief - e_k| over executing resources
};

/// One variant on one seed. `instances` must be fully labelled; the last
/// `cfg.executing` execute, the rest form the history the model starts from.
/// History projects are shown at staggered completion levels so the model
/// sees the same kind of features it meets during execution.
inline std::vector<TemporalPoint> run_temporal(std::span<const ProjectInstance> instances, ModelConfig mcfg,
                                               const TrainConfig& tcfg, const TemporalConfig& cfg, TemporalVariant v,
                                               std::uint64_t seed) {
  cfg.validate();
  if (instances.size() < cfg.executing + 2) throw EmptyTrainingSet("temporal run needs at least two history projects");
  for (const auto& inst : instances)
    if (!inst.fully_labeled()) throw NoLabels("temporal simulation needs every planned label");
  const RandomStream root(seed);
  const std::size_t total = instances.size(), hist = total - cfg.executing;
  std::vector<Execution> ex;
  for (std::size_t i = 0; i < total; ++i) ex.push_back(simulate_execution(instances[i], cfg, root.split("execution", i)));

  auto batch_size = [&](std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.step * static_cast<double>(n) - 1e-9)));
  };
  const std::size_t levels = static_cast<std::size_t>(std::ceil(1.0 / cfg.step - 1e-9));

  // History at staggered completion levels, beliefs built batch by batch.
  struct View {
    ProjectInstance snap;
    std::vector<std::uint8_t> completed;
    std::size_t source;
  };
  std::vector<View> history;
  for (std::size_t j = 0; j < hist; ++j) {
    const auto& plan = instances[j];
    const std::size_t n = plan.num_activities(), bs = batch_size(n);
    auto beliefs = prior_beliefs(plan, cfg);
    std::vector<std::uint8_t> done(n, 0);
    const std::size_t steps = j % levels;
    for (std::size_t s = 0, at = 0; s < steps && at < n; ++s) {
      std::vector<std::size_t> batch(ex[j].order.begin() + static_cast<std::ptrdiff_t>(at),
                                     ex[j].order.begin() + static_cast<std::ptrdiff_t>(std::min(n, at + bs)));
      for (auto i : batch) done[i] = 1;
      if (v == TemporalVariant::adaptive) absorb_batch(beliefs, plan, ex[j], batch);
      at += batch.size();
    }
    history.push_back({execution_snapshot(plan, ex[j], done, beliefs, v, true), done, j});
  }
  const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(cfg.validation * static_cast<double>(hist))));
  if (n_val >= hist) throw EmptyTrainingSet("history too small for a validation split");

  std::vector<std::vector<ResourcePosterior>> beliefs;
  std::vector<std::vector<std::uint8_t>> done;
  std::vector<std::size_t> cursor(cfg.executing, 0);
  for (std::size_t e = 0; e < cfg.executing; ++e) {
    beliefs.push_back(prior_beliefs(instances[hist + e], cfg));
    done.emplace_back(instances[hist + e].num_activities(), 0);
  }
  auto exec_views = [&] {
    std::vector<View> out;
    for (std::size_t e = 0; e < cfg.executing; ++e)
      out.push_back({execution_snapshot(instances[hist + e], ex[hist + e], done[e], beliefs[e], v, false), done[e], hist + e});
    return out;
  };

  std::vector<ProjectInstance> fit_on;
  for (std::size_t j = 0; j + n_val < hist; ++j) fit_on.push_back(history[j].snap);
  const PreprocessStats stats = fit_preprocess(fit_on);
  if (v == TemporalVariant::static_mlp) mcfg = mlp_config(mcfg);
  mcfg.temporal = v == TemporalVariant::adaptive;
  {
    const auto probe = apply_preprocess(stats, fit_on.front());
    mcfg.activity_features = static_cast<std::size_t>(probe.activity.cols());
    mcfg.resource_features = static_cast<std::size_t>(probe.resource.cols());
  }
  ModelParams model = init_model(mcfg, seed);
  model.scaler = stats.targets;
  const ModelParams fresh = model;

  // Views -> prepared set, with memories replayed under the current model.
  std::vector<ProjectInstance> store;
  auto prepared = [&](const std::vector<const View*>& views) {
    store.clear();
    for (const auto* w : views) store.push_back(w->snap);
    PreparedSet set = prepare(store, stats);
    if (mcfg.temporal)
      for (std::size_t k = 0; k < views.size(); ++k)
        set.memory.push_back(replay_memory(model, store[k], set.inputs[k], ex[views[k]->source], views[k]->completed));
    return set;
  };
  auto train_step = [&](const std::vector<View>& live, std::size_t epochs, std::uint64_t step) {
    std::vector<const View*> tr, va;
    for (std::size_t j = 0; j < hist; ++j) (j + n_val < hist ? tr : va).push_back(&history[j]);
    for (const auto& w : live)
      for (std::size_t i = 0; i < w.completed.size(); ++i)
        if (w.completed[i]) {
          tr.push_back(&w);
          break;
        }
    PreparedSet train = prepared(tr);
    // Moving the vector keeps its elements in place, so train's pointers stay valid.
    std::vector<ProjectInstance> train_store = std::move(store);
    PreparedSet val = prepared(va);
    TrainConfig c = tcfg;
    c.max_epochs = epochs;
    c.warmup_epochs = std::min(c.warmup_epochs, epochs - 1);
    ModelParams start = cfg.warm_start || step == 0 ? model : fresh;
    model = fit_model(std::move(start), train, val, c, root.split("train", step).next_u64()).model;
  };

  std::vector<TemporalPoint> curve;
  auto record = [&](const std::vector<View>& live) {
    std::vector<const View*> ptrs;
    for (const auto& w : live) ptrs.push_back(&w);
    PreparedSet set = prepared(ptrs);
    auto preds = predict_set(model, set);
    double se = 0.0, err = 0.0;
    std::size_t count = 0, finished = 0, all = 0, resources = 0;
    for (std::size_t e = 0; e < live.size(); ++e) {
      const auto& x = ex[hist + e];
      for (std::size_t i = 0; i < done[e].size(); ++i) {
        ++all;
        if (done[e][i]) {
          ++finished;
          continue;
        }
        const double d = preds[e](static_cast<Eigen::Index>(i), 0) - x.t_actual[i];
        se += d * d;
        ++count;
      }
      for (std::size_t k = 0; k < beliefs[e].size(); ++k, ++resources) err += std::abs(beliefs[e][k].mean - x.efficiency[k]);
    }
    if (count == 0) return false;
    curve.push_back({v, seed, 100.0 * static_cast<double>(finished) / static_cast<double>(all),
                     std::sqrt(se / static_cast<double>(count)), resources ? err / static_cast<double>(resources) : 0.0});
    return true;
  };

  auto live = exec_views();
  train_step(live, cfg.initial_epochs, 0);
  record(live);
  for (std::uint64_t step = 1;; ++step) {
    bool any = false;
    for (std::size_t e = 0; e < cfg.executing; ++e) {
      const auto& plan = instances[hist + e];
      const std::size_t n = plan.num_activities();
      if (cursor[e] >= n) continue;
      std::vector<std::size_t> batch(ex[hist + e].order.begin() + static_cast<std::ptrdiff_t>(cursor[e]),
                                     ex[hist + e].order.begin() + static_cast<std::ptrdiff_t>(std::min(n, cursor[e] + batch_size(n))));
      for (auto i : batch) done[e][i] = 1;
      cursor[e] += batch.size();
      if (v == TemporalVariant::adaptive) absorb_batch(beliefs[e], plan, ex[hist + e], batch);
      any = true;
    }
    if (!any) break;
    live = exec_views();
    bool remaining = false;
    for (std::size_t e = 0; e < cfg.executing; ++e) remaining |= cursor[e] < instances[hist + e].num_activities();
    if (!remaining) break;
    train_step(live, cfg.warm_start ? cfg.step_epochs : cfg.initial_epochs, step);
    record(live);
  }
  return curve;
}

inline std::string temporal_curve_csv(std::span<const TemporalPoint> curve) {
  std::string out = "variant,seed,completion_pct,rmse,belief_error\n";
  char buf[200];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.6g,%.10g,%.10g\n", std::string(to_string(c.variant)).c_str(),
                  static_cast<unsigned long long>(c.seed), c.completion_pct, c.rmse, c.belief_error);
    out += buf;
  }
  return out;
}

}  // namespace pnf
