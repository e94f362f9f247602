#pragma once

// Measurement allocation: which unmonitored activities to observe next, and
// the simulated loop that reveals labels round by round, retrains and
// records the error on what is still unobserved.
//
//   score(a) = (w_T var_T(a) + w_C var_C(a)) * omega(a)
//   omega(a) = g1 * betweenness(a) + g2 * [a critical] + g3 * (deg_in + deg_out)
//
// Betweenness is normalised by (n-1)(n-2) so the three terms share a scale;
// criticality comes from a schedule of the current predicted durations.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/core/log.hpp"
#include "pnf/core/rng.hpp"
#include "pnf/gnn.hpp"
#include "pnf/graph.hpp"
#include "pnf/train.hpp"

namespace pnf {

enum class Strategy { random, uncertainty, topology, hybrid };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::uncertainty: return "uncertainty";
    case Strategy::topology: return "topology";
    case Strategy::hybrid: return "hybrid";
  }
  return "?";
}

inline Strategy strategy_from_string(std::string_view s) {
  if (s == "random") return Strategy::random;
  if (s == "uncertainty") return Strategy::uncertainty;
  if (s == "topology") return Strategy::topology;
  if (s == "hybrid") return Strategy::hybrid;
  throw InvalidConfig("unknown strategy '" + std::string(s) + "'");
}

struct ActiveConfig {
  double w_t = 1.0, w_c = 1.0;
  std::array<double, 3> gamma{1.0, 1.0, 0.1};
  Strategy strategy = Strategy::hybrid;
  double initial = 0.2, increment = 0.1, until = 1.0;  // fractions of each project's activities
  std::size_t initial_epochs = 60, round_epochs = 20;
  bool warm_start = true;

  void validate() const {
    for (double w : {w_t, w_c, gamma[0], gamma[1], gamma[2]})
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidConfig("active weights must be finite and non-negative");
    for (double b : {initial, increment, until})
      if (!(b > 0.0 && b <= 1.0)) throw InvalidConfig("active budgets must lie in (0, 1]");
    if (until < initial) throw InvalidConfig("final budget is below the initial budget");
    if (initial_epochs == 0 || round_epochs == 0) throw InvalidConfig("epoch counts must be positive");
  }

  nlohmann::json to_json() const {
    return {{"w_t", w_t},
            {"w_c", w_c},
            {"gamma", gamma},
            {"strategy", to_string(strategy)},
            {"initial", initial},
            {"increment", increment},
            {"until", until},
            {"initial_epochs", initial_epochs},
            {"round_epochs", round_epochs},
            {"warm_start", warm_start}};
  }

  static ActiveConfig from_json(const nlohmann::json& j) {
    ActiveConfig c;
    c.w_t = j.value("w_t", c.w_t);
    c.w_c = j.value("w_c", c.w_c);
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("strategy")) c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    c.initial = j.value("initial", c.initial);
    c.increment = j.value("increment", c.increment);
    c.until = j.value("until", c.until);
    c.initial_epochs = j.value("initial_epochs", c.initial_epochs);
    c.round_epochs = j.value("round_epochs", c.round_epochs);
    c.warm_start = j.value("warm_start", c.warm_start);
    c.validate();
    return c;
  }
};

/// Prediction-independent structure terms, computed once per project.
struct Centrality {
  std::vector<double> betweenness;  // normalised
  std::vector<double> degree;       // deg_in + deg_out over precedence
};

inline Centrality centrality(const ProjectGraph& g) {
  const std::size_t n = g.num_activities();
  Centrality c{betweenness_centrality(g), std::vector<double>(n)};
  const double norm = n > 2 ? static_cast<double>((n - 1) * (n - 2)) : 1.0;
  for (auto& b : c.betweenness) b /= norm;
  for (std::size_t a = 0; a < n; ++a)
    c.degree[a] = static_cast<double>(g.predecessors(a).size() + g.successors(a).size());
  return c;
}

/// Hybrid priority per activity. `pred` has columns mu_T, var_T, mu_C, var_C.
inline std::vector<double> priority_scores(const Matrix& pred, const ProjectGraph& g, const Schedule& s,
                                           const Centrality& cen, const ActiveConfig& cfg) {
  const std::size_t n = g.num_activities();
  if (static_cast<std::size_t>(pred.rows()) != n || pred.cols() != 4)
    throw ShapeMismatch("priority_scores needs n x 4 predictions");
  std::vector<double> score(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto r = static_cast<Eigen::Index>(a);
    const double omega = cfg.gamma[0] * cen.betweenness[a] + cfg.gamma[1] * (s.is_critical(a) ? 1.0 : 0.0) +
                         cfg.gamma[2] * cen.degree[a];
    score[a] = (cfg.w_t * pred(r, 1) + cfg.w_c * pred(r, 3)) * omega;
  }
  return score;
}

inline std::vector<double> priority_scores(const Matrix& pred, const ProjectGraph& g, const ActiveConfig& cfg) {
  std::vector<double> mu(g.num_activities());
  for (std::size_t a = 0; a < mu.size(); ++a) mu[a] = std::max(0.0, pred(static_cast<Eigen::Index>(a), 0));
  return priority_scores(pred, g, compute_schedule(g, mu), centrality(g), cfg);
}

/// Candidates sorted by descending score, ties by activity id.
inline std::vector<std::size_t> rank_candidates(std::span<const std::size_t> candidates, std::span<const double> score,
                                                const ProjectGraph& g) {
  std::vector<std::size_t> out(candidates.begin(), candidates.end());
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return g.activity_id(a) < g.activity_id(b);
  });
  return out;
}

/// Strategy score for every activity; random has no score.
inline std::vector<double> strategy_scores(Strategy s, const Matrix& pred, const ProjectGraph& g, const Centrality& cen,
                                           const ActiveConfig& cfg) {
  const std::size_t n = g.num_activities();
  std::vector<double> score(n, 0.0);
  switch (s) {
    case Strategy::random: break;
    case Strategy::uncertainty:
      for (std::size_t a = 0; a < n; ++a)
        score[a] = cfg.w_t * pred(static_cast<Eigen::Index>(a), 1) + cfg.w_c * pred(static_cast<Eigen::Index>(a), 3);
      break;
    case Strategy::topology: score = cen.betweenness; break;
    case Strategy::hybrid: {
      std::vector<double> mu(n);
      for (std::size_t a = 0; a < n; ++a) mu[a] = std::max(0.0, pred(static_cast<Eigen::Index>(a), 0));
      score = priority_scores(pred, g, compute_schedule(g, mu), cen, cfg);
      break;
    }
  }
  return score;
}

struct CurvePoint {
  Strategy strategy = Strategy::random;
  std::uint64_t seed = 0;
  double budget_pct = 0.0;
  double rmse = 0.0;                      // duration RMSE over every unlabelled activity
  std::vector<double> project_rmse;       // per project, NaN when nothing remains
};

/// Copy of `inst` whose targets are hidden outside `labeled`.
inline ProjectInstance mask_labels(const ProjectInstance& inst, std::span<const std::uint8_t> labeled) {
  ProjectInstance out = inst;
  for (std::size_t a = 0; a < out.num_activities(); ++a)
    if (!labeled[a]) {
      out.t_true[a].reset();
      out.c_true[a].reset();
    }
  return out;
}

namespace detail {

inline std::size_t budget_count(double fraction, std::size_t n) {
  return std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
}

/// Reveals the first `count` of `ranked`; the last round may hold fewer.
inline std::size_t reveal(std::vector<std::uint8_t>& labeled, std::span<const std::size_t> ranked, std::size_t count) {
  if (ranked.empty()) throw BudgetExhausted("no unlabelled activity left to reveal");
  const std::size_t k = std::min(count, ranked.size());
  if (k < count) log::info("final round truncated to " + std::to_string(k) + " activities");
  for (std::size_t i = 0; i < k; ++i) labeled[ranked[i]] = 1;
  return k;
}

}  // namespace detail

/// Runs every strategy from one shared initial labelling and initial model.
/// Each round re-predicts, scores the unlabelled activities of every project,
/// reveals the top increment per project, retrains and records the RMSE on
/// what remains. Curves end once nothing is unlabelled or `until` is reached.
inline std::vector<CurvePoint> run_active_loop(std::span<const ProjectInstance> instances, ModelConfig mcfg,
                                               const TrainConfig& tcfg, const ActiveConfig& acfg,
                                               std::span<const Strategy> strategies, std::uint64_t seed) {
  acfg.validate();
  if (instances.empty()) throw EmptyTrainingSet("active loop needs projects");
  for (const auto& inst : instances)
    if (!inst.fully_labeled()) throw NoLabels("active simulation needs every true label");
  const RandomStream root(seed);
  const std::size_t p = instances.size();
  std::size_t total = 0;
  for (const auto& inst : instances) total += inst.num_activities();

  std::vector<std::vector<std::uint8_t>> initial(p);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t n = instances[i].num_activities();
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    auto rng = root.split("initial", i);
    rng.shuffle(ids);
    initial[i].assign(n, 0);
    for (std::size_t k = 0; k < detail::budget_count(acfg.initial, n); ++k) initial[i][ids[k]] = 1;
  }

  std::vector<Centrality> cen;
  for (const auto& inst : instances) cen.push_back(centrality(inst.graph));

  auto masked_set = [&](const std::vector<std::vector<std::uint8_t>>& lab) {
    std::vector<ProjectInstance> out;
    for (std::size_t i = 0; i < p; ++i) out.push_back(mask_labels(instances[i], lab[i]));
    return out;
  };

  // Preprocessing sees every feature but only the initial labels.
  const auto first = masked_set(initial);
  const PreprocessStats stats = fit_preprocess(first);
  const auto probe = apply_preprocess(stats, first.front());
  mcfg.activity_features = static_cast<std::size_t>(probe.activity.cols());
  mcfg.resource_features = static_cast<std::size_t>(probe.resource.cols());
  ModelParams fresh = init_model(mcfg, seed);
  fresh.scaler = stats.targets;

  auto train_on = [&](const std::vector<ProjectInstance>& data, ModelParams start, std::size_t epochs,
                      std::uint64_t round) {
    TrainConfig c = tcfg;
    c.max_epochs = epochs;
    c.warmup_epochs = std::min(c.warmup_epochs, epochs - 1);
    const auto set = prepare(data, stats);
    return fit_model(std::move(start), set, set, c, root.split("train", round).next_u64()).model;
  };
  const ModelParams base = train_on(first, fresh, acfg.initial_epochs, 0);

  auto record = [&](Strategy s, ModelParams& m, const std::vector<std::vector<std::uint8_t>>& lab,
                    std::vector<Matrix>& preds) {
    preds = predict_set(m, prepare(instances, stats));
    CurvePoint pt{s, seed, 0.0, 0.0, std::vector<double>(p, std::nan(""))};
    double se = 0.0;
    std::size_t count = 0, labeled = 0;
    for (std::size_t i = 0; i < p; ++i) {
      double pse = 0.0;
      std::size_t pc = 0;
      for (std::size_t a = 0; a < lab[i].size(); ++a) {
        if (lab[i][a]) {
          ++labeled;
          continue;
        }
        const double e = preds[i](static_cast<Eigen::Index>(a), 0) - *instances[i].t_true[a];
        pse += e * e;
        ++pc;
      }
      if (pc) pt.project_rmse[i] = std::sqrt(pse / static_cast<double>(pc));
      se += pse;
      count += pc;
    }
    pt.budget_pct = 100.0 * static_cast<double>(labeled) / static_cast<double>(total);
    pt.rmse = count ? std::sqrt(se / static_cast<double>(count)) : std::nan("");
    return pt;
  };

  std::vector<CurvePoint> curve;
  for (Strategy s : strategies) {
    auto lab = initial;
    ModelParams model = base;
    std::vector<Matrix> preds;
    curve.push_back(record(s, model, lab, preds));
    for (std::uint64_t round = 1;; ++round) {
      bool any = false;
      for (std::size_t i = 0; i < p; ++i) {
        const std::size_t n = lab[i].size();
        std::size_t have = 0;
        for (auto v : lab[i]) have += v;
        const std::size_t cap = detail::budget_count(acfg.until, n);
        if (have >= cap) continue;
        const std::size_t want = std::min(detail::budget_count(acfg.increment, n), cap - have);
        std::vector<std::size_t> pool;
        for (std::size_t a = 0; a < n; ++a)
          if (!lab[i][a]) pool.push_back(a);
        std::vector<std::size_t> ranked;
        if (s == Strategy::random) {
          ranked = pool;
          auto rng = root.split("random", round * p + i);
          rng.shuffle(ranked);
        } else {
          const auto score = strategy_scores(s, preds[i], instances[i].graph, cen[i], acfg);
          ranked = rank_candidates(pool, score, instances[i].graph);
        }
        detail::reveal(lab[i], ranked, want);
        any = true;
      }
      if (!any) break;
      ModelParams start = acfg.warm_start ? model : fresh;
      model = train_on(masked_set(lab), std::move(start), acfg.warm_start ? acfg.round_epochs : acfg.initial_epochs, round);
      auto pt = record(s, model, lab, preds);
      if (std::isnan(pt.rmse)) break;  // everything observed
      curve.push_back(std::move(pt));
    }
  }
  return curve;
}

inline std::string active_curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "strategy,seed,budget_pct,rmse\n";
  char buf[160];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%.6g,%.10g\n", std::string(to_string(c.strategy)).c_str(),
                  static_cast<unsigned long long>(c.seed), c.budget_pct, c.rmse);
    out += buf;
  }
  return out;
}

}  // namespace pnf
