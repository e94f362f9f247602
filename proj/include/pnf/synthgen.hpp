#pragma once

// Synthetic project generator and controlled perturbations.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/core/rng.hpp"
#include "pnf/ingest/instance.hpp"

namespace pnf {

struct GenConfig {
  std::size_t n = 100;
  double rho = 0.1;
  std::size_t resources = 5;
  std::array<double, 3> alpha{0.7, 0.2, 0.1};
  std::array<double, 3> beta{0.6, 0.3, 0.1};
  double sigma_t = 0.5;
  double sigma_c = 0.5;
  double estimate_lo = 0.8;
  double estimate_hi = 1.2;
  double demand_log_sd = 0.5;
  std::vector<std::string> activity_types{"design", "procurement", "construction", "testing"};
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 2) throw InvalidConfig("n must be at least 2");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidConfig("rho must lie in (0, 1)");
    if (resources == 0) throw InvalidConfig("at least one resource required");
    if (sigma_t < 0.0 || sigma_c < 0.0 || demand_log_sd < 0.0) throw InvalidConfig("noise must be >= 0");
    if (!(estimate_lo > 0.0 && estimate_lo <= estimate_hi)) throw InvalidConfig("bad estimate band");
    if (activity_types.empty()) throw InvalidConfig("need at least one activity type");
  }

  nlohmann::json to_json() const {
    return {{"n", n},
            {"rho", rho},
            {"resources", resources},
            {"alpha", alpha},
            {"beta", beta},
            {"sigma_t", sigma_t},
            {"sigma_c", sigma_c},
            {"estimate_band", {estimate_lo, estimate_hi}},
            {"demand_log_sd", demand_log_sd},
            {"activity_types", activity_types},
            {"seed", seed}};
  }
};

namespace detail {

/// Is `to` reachable from `from` using forward adjacency `succ`?
inline bool reachable(const std::vector<std::vector<std::size_t>>& succ, std::size_t from, std::size_t to,
                      std::vector<std::uint8_t>& seen) {
  std::fill(seen.begin(), seen.end(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (std::size_t w : succ[v])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return false;
}

}  // namespace detail

/// Generate one instance: random order pi, forward edges with probability
/// rho, backbone edges pi(i) -> pi(i+1) where no path exists, lognormal
/// demands, resource-based targets with floors, and noisy planner estimates.
inline ProjectInstance generate_project(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n, p = cfg.resources;
  const RandomStream root(cfg.seed);

  std::vector<std::size_t> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = i;
  auto perm_rng = root.split("permutation");
  perm_rng.shuffle(pi);

  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::pair<std::size_t, std::size_t>> prec;
  auto edge_rng = root.split("edges");
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge_rng.uniform() < cfg.rho) {
        prec.emplace_back(pi[i], pi[j]);
        succ[pi[i]].push_back(pi[j]);
      }
  std::vector<std::uint8_t> seen(n);
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!detail::reachable(succ, pi[i], pi[i + 1], seen)) {
      prec.emplace_back(pi[i], pi[i + 1]);
      succ[pi[i]].push_back(pi[i + 1]);
    }

  auto demand_rng = root.split("demand");
  auto skill_rng = root.split("skill");
  Matrix demand(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<double> skill(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      const double mu = demand_rng.uniform(0.5, 1.5);
      demand(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          std::clamp(demand_rng.lognormal(mu, cfg.demand_log_sd), 0.1, 10.0);
    }
    skill[i] = skill_rng.uniform(0.8, 1.2);
  }

  std::vector<double> total(n), pred_total(n, 0.0), indeg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) total[i] = demand.row(static_cast<Eigen::Index>(i)).sum();
  for (auto [s, d] : prec) {
    pred_total[d] += total[s];
    indeg[d] += 1.0;
  }

  auto noise_t = root.split("noise_T");
  auto noise_c = root.split("noise_C");
  auto est_rng = root.split("estimates");
  auto type_rng = root.split("activity_type");
  ProjectInstance inst;
  inst.t_true.resize(n);
  inst.c_true.resize(n);
  inst.t_est.resize(n);
  inst.c_est.resize(n);
  std::vector<double> type_code(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = cfg.alpha[0] * total[i] + cfg.alpha[1] * pred_total[i] + cfg.alpha[2] * indeg[i] +
               noise_t.normal(0.0, cfg.sigma_t);
    t = std::max(t, 0.5);
    double c = cfg.beta[0] * t + cfg.beta[1] * total[i] + cfg.beta[2] * skill[i] + noise_c.normal(0.0, cfg.sigma_c);
    c = std::max(c, 0.1);
    inst.t_true[i] = t;
    inst.c_true[i] = c;
    inst.t_est[i] = t * est_rng.uniform(cfg.estimate_lo, cfg.estimate_hi);
    inst.c_est[i] = c * est_rng.uniform(cfg.estimate_lo, cfg.estimate_hi);
    type_code[i] = static_cast<double>(type_rng.below(cfg.activity_types.size()));
  }

  std::vector<std::string> act_ids(n), res_ids(p);
  for (std::size_t i = 0; i < n; ++i) act_ids[i] = padded_identifier("a", i, n);
  for (std::size_t k = 0; k < p; ++k) res_ids[k] = padded_identifier("r", k, p);

  std::sort(prec.begin(), prec.end());
  std::vector<Edge> edges;
  for (auto [s, d] : prec) edges.push_back({s, d, Relation::precedence, {}});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k)
      edges.push_back({i, n + k, Relation::assignment, {demand(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))}});
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k + 1; l < p; ++l) edges.push_back({n + k, n + l, Relation::collaboration, {}});
  inst.graph = ProjectGraph(act_ids, res_ids, std::move(edges));

  auto& act = inst.activities;
  for (std::size_t k = 0; k < p; ++k) act.schema.push_back({"R" + std::to_string(k + 1), FeatureKind::continuous, {}});
  act.schema.push_back({"skill", FeatureKind::auxiliary, {}});
  act.schema.push_back({"type", FeatureKind::categorical, cfg.activity_types});
  act.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 2));
  act.values.leftCols(static_cast<Eigen::Index>(p)) = demand;
  for (std::size_t i = 0; i < n; ++i) {
    act.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = skill[i];
    act.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p + 1)) = type_code[i];
  }

  auto& res = inst.resources;
  res.schema = standard_resource_schema();
  res.values = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(res.schema.size()));
  const double grand = demand.sum();
  for (std::size_t k = 0; k < p; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    res.values(r, 0) = 1.0;                                  // mu_hat (prior)
    res.values(r, 1) = cfg.demand_log_sd * cfg.demand_log_sd;  // var_hat (prior)
    res.values(r, 2) = 1.0;                                  // cost_rate
    res.values(r, 3) = 1.0;                                  // std_productivity
    res.values(r, 4) = demand.col(r).sum() / grand;          // utilization share
    res.values(r, 5) = 1.0;                                  // skill_level
    res.values(r, 6) = static_cast<double>(k % 3);           // role
  }

  inst.generation_order.resize(n);
  for (std::size_t i = 0; i < n; ++i) inst.generation_order[i] = act_ids[pi[i]];
  inst.meta = {{"name", "synthetic-n" + std::to_string(n) + "-s" + std::to_string(cfg.seed)},
               {"seed", cfg.seed},
               {"source", "synthgen"},
               {"config", cfg.to_json()}};
  return inst;
}

namespace perturbation {
struct FeatureNoise { double k; };
struct Missingness { double rate; };
struct EdgeDrop { double rate; };
struct EdgeAdd { double rate; };
}  // namespace perturbation

using Perturbation = std::variant<perturbation::FeatureNoise, perturbation::Missingness,
                                  perturbation::EdgeDrop, perturbation::EdgeAdd>;

namespace detail {

inline void check_rate(double r, const char* what) {
  if (!(r >= 0.0 && r <= 1.0)) throw RateOutOfRange(std::string(what) + " " + std::to_string(r));
}

/// Consecutive pairs of the generation order (or topological order) that
/// are precedence edges; these are never dropped.
inline std::vector<std::pair<std::size_t, std::size_t>> backbone_pairs(const ProjectInstance& inst) {
  std::vector<std::size_t> order;
  if (!inst.generation_order.empty()) {
    for (const auto& id : inst.generation_order) order.push_back(*inst.graph.find_activity(id));
  } else {
    order = topological_sort(inst.graph);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) out.emplace_back(order[i], order[i + 1]);
  return out;
}

inline ProjectInstance with_edges(const ProjectInstance& inst, std::vector<Edge> edges) {
  ProjectInstance out = inst;
  out.graph = ProjectGraph(inst.graph.activity_ids(), inst.graph.resource_ids(), std::move(edges));
  return out;
}

}  // namespace detail

/// Apply one perturbation. Rates outside [0, 1] raise RateOutOfRange.
inline ProjectInstance perturb(const ProjectInstance& inst, const Perturbation& kind, std::uint64_t seed) {
  RandomStream rng = RandomStream(seed).split("perturb", kind.index());
  nlohmann::json record;
  ProjectInstance out;
  if (auto* fn = std::get_if<perturbation::FeatureNoise>(&kind)) {
    detail::check_rate(fn->k, "feature noise scale");
    out = inst;
    auto& blk = out.activities;
    for (std::size_t c = 0; c < blk.cols(); ++c) {
      if (blk.schema[c].kind != FeatureKind::continuous) continue;
      const auto col = blk.values.col(static_cast<Eigen::Index>(c));
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      for (Eigen::Index r = 0; r < col.size(); ++r) {
        const double z = rng.normal();
        if (fn->k > 0.0) blk.values(r, static_cast<Eigen::Index>(c)) += fn->k * sd * z;
      }
    }
    record = {{"kind", "feature_noise"}, {"k", fn->k}, {"seed", seed}};
  } else if (auto* ms = std::get_if<perturbation::Missingness>(&kind)) {
    detail::check_rate(ms->rate, "missingness rate");
    out = inst;
    auto& blk = out.activities;
    for (std::size_t r = 0; r < blk.rows(); ++r) {
      for (std::size_t c = 0; c < blk.cols(); ++c)
        if (blk.schema[c].kind == FeatureKind::continuous && rng.uniform() < ms->rate) blk.set_missing(r, c, true);
      if (rng.uniform() < ms->rate) out.t_est[r].reset();
      if (rng.uniform() < ms->rate) out.c_est[r].reset();
    }
    blk.compact_missing();
    record = {{"kind", "missingness"}, {"rate", ms->rate}, {"seed", seed}};
  } else if (auto* ed = std::get_if<perturbation::EdgeDrop>(&kind)) {
    detail::check_rate(ed->rate, "edge drop rate");
    const auto backbone = detail::backbone_pairs(inst);
    std::vector<Edge> kept;
    std::size_t removed = 0;
    for (const auto& e : inst.graph.edges()) {
      const bool protect = e.relation != Relation::precedence ||
                           std::find(backbone.begin(), backbone.end(), std::make_pair(e.src, e.dst)) != backbone.end();
      if (!protect && rng.uniform() < ed->rate) {
        ++removed;
        continue;
      }
      kept.push_back(e);
    }
    out = detail::with_edges(inst, std::move(kept));
    record = {{"kind", "edge_drop"}, {"rate", ed->rate}, {"seed", seed}, {"removed", removed}};
  } else if (auto* ea = std::get_if<perturbation::EdgeAdd>(&kind)) {
    detail::check_rate(ea->rate, "edge add rate");
    std::vector<std::size_t> order;
    for (const auto& bp : detail::backbone_pairs(inst)) {
      if (order.empty()) order.push_back(bp.first);
      order.push_back(bp.second);
    }
    if (order.empty() && inst.num_activities() == 1) order.push_back(0);
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < order.size(); ++i)
      for (std::size_t j = i + 1; j < order.size(); ++j)
        if (!inst.graph.has_edge(order[i], order[j], Relation::precedence)) candidates.emplace_back(order[i], order[j]);
    const auto target = static_cast<std::size_t>(std::llround(ea->rate * static_cast<double>(inst.graph.num_precedence_edges())));
    const std::size_t count = std::min(target, candidates.size());
    // Partial Fisher-Yates: the first `count` entries form a uniform sample.
    for (std::size_t i = 0; i < count; ++i) std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
    std::vector<Edge> edges = inst.graph.edges();
    for (std::size_t i = 0; i < count; ++i) edges.push_back({candidates[i].first, candidates[i].second, Relation::precedence, {}});
    out = detail::with_edges(inst, std::move(edges));
    record = {{"kind", "edge_add"}, {"rate", ea->rate}, {"seed", seed}, {"added", count}};
  }
  out.meta["perturbations"].push_back(record);
  return out;
}

}  // namespace pnf
