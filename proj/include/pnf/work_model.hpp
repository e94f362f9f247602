#pragma once

// Bridges a canonical project instance to the resource-based stochastic
// model: work specs from assignment demands, efficiency laws from resource
// priors, and crash parameters.

#include <cmath>
#include <optional>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/ingest/instance.hpp"
#include "pnf/rbm.hpp"

namespace pnf {

namespace detail {

/// Resource attribute by name; `fallback` when absent or missing.
inline double resource_value(const ProjectInstance& inst, std::size_t r, std::string_view name, double fallback) {
  const auto c = inst.resources.column(name);
  if (c == inst.resources.cols() || inst.resources.is_missing(r, c)) return fallback;
  const double v = inst.resources.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return std::isfinite(v) ? v : fallback;
}

/// Planned duration: estimate, else target, else total assigned demand.
inline double planned_duration(const ProjectInstance& inst, std::size_t a, double demand_total) {
  if (inst.t_est[a]) return *inst.t_est[a];
  if (inst.t_true[a]) return *inst.t_true[a];
  return demand_total;
}

}  // namespace detail

/// One spec per activity. Work is split across the assigned resources in
/// proportion to demand and scaled so that unit efficiencies reproduce the
/// planned duration under serial aggregation.
inline std::vector<ActivityWorkSpec> work_specs(const ProjectInstance& inst, double parallelism = 1.0) {
  const std::size_t n = inst.num_activities();
  const auto& g = inst.graph;
  std::vector<std::vector<std::pair<std::size_t, double>>> assigned(n);
  for (const auto& e : g.edges()) {
    if (e.relation != Relation::assignment) continue;
    const double d = e.features.empty() ? 1.0 : e.features[0];
    assigned[e.src].emplace_back(e.dst - n, std::isfinite(d) && d > 0.0 ? d : 1.0);
  }
  std::vector<ActivityWorkSpec> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    if (assigned[a].empty()) throw EmptyResourceSet("activity " + g.activity_id(a) + " has no assigned resource");
    double total = 0.0;
    for (auto [r, d] : assigned[a]) total += d;
    const double plan = detail::planned_duration(inst, a, total);
    if (!(plan > 0.0)) throw InvalidConfig("planned duration of " + g.activity_id(a) + " must be positive");
    auto& s = out[a];
    s.parallelism = parallelism;
    for (auto [r, d] : assigned[a]) {
      const double p = detail::resource_value(inst, r, "std_productivity", 1.0);
      s.resources.push_back({plan * d / total * p, p, detail::resource_value(inst, r, "cost_rate", 1.0)});
    }
  }
  return out;
}

/// Lognormal efficiency laws matching each assigned resource's prior mean
/// and variance (mu_hat, var_hat) in natural units.
inline std::vector<EfficiencyDistribution> efficiency_laws(const ProjectInstance& inst) {
  const std::size_t n = inst.num_activities();
  std::vector<EfficiencyDistribution> out(n);
  for (const auto& e : inst.graph.edges()) {
    if (e.relation != Relation::assignment) continue;
    const std::size_t r = e.dst - n;
    const double m = detail::resource_value(inst, r, "mu_hat", 1.0);
    const double v = std::max(detail::resource_value(inst, r, "var_hat", 0.01), 1e-8);
    if (!(m > 0.0)) throw NonPositiveEfficiency("resource " + inst.graph.resource_id(e.dst) + " has prior mean <= 0");
    const double s2 = std::log1p(v / (m * m));
    out[e.src].mean.push_back(std::log(m) - 0.5 * s2);
    out[e.src].variance.push_back(s2);
  }
  return out;
}

/// Crash parameters per activity. Entries of meta["crash"] (objects with
/// normal_duration, min_cost, a, b keyed by activity id) take precedence;
/// otherwise T^N is the planned duration, C^min the cost estimate (or target,
/// or T^N), a = 0.1 C^min and b = 2 / T^N.
inline std::vector<std::optional<CrashParams>> crash_params(const ProjectInstance& inst) {
  const std::size_t n = inst.num_activities();
  const auto specs = work_specs(inst);
  const nlohmann::json* given = inst.meta.contains("crash") ? &inst.meta.at("crash") : nullptr;
  std::vector<std::optional<CrashParams>> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& id = inst.graph.activity_id(a);
    if (given && given->contains(id)) {
      const auto& j = given->at(id);
      out[a] = CrashParams{j.at("normal_duration").get<double>(), j.at("min_cost").get<double>(),
                           j.at("a").get<double>(), j.at("b").get<double>()};
      continue;
    }
    double tn = 0.0;
    for (const auto& r : specs[a].resources) tn += r.work / r.productivity;
    const double cmin = inst.c_est[a] ? *inst.c_est[a] : inst.c_true[a] ? *inst.c_true[a] : tn;
    out[a] = CrashParams{tn, cmin, 0.1 * std::max(cmin, 1e-9), 2.0 / tn};
  }
  return out;
}

}  // namespace pnf
