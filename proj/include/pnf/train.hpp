#pragma once

// Optimisation loop and evaluation driver.
//
// Three batch modes:
//   instances  shuffled whole-project mini-batches on full graphs
//   nodes      shuffled batches of labelled activity seeds with layered
//              neighbour sampling over the union graph of all training
//              projects; project terms use full graphs of the projects a
//              batch touches
//   full       one step per epoch over every training project
//
// Adam (decoupled weight decay) after global-norm clipping, linear warmup
// then cosine decay, early stopping on the validation activity NLL with the
// best checkpoint kept. All randomness derives from the run seed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/core/log.hpp"
#include "pnf/core/rng.hpp"
#include "pnf/gnn.hpp"
#include "pnf/graph.hpp"
#include "pnf/ingest/preprocess.hpp"
#include "pnf/loss.hpp"
#include "pnf/metrics.hpp"

namespace pnf {

enum class BatchMode { instances, nodes, full };

inline std::string_view to_string(BatchMode m) {
  switch (m) {
    case BatchMode::instances: return "instances";
    case BatchMode::nodes: return "nodes";
    case BatchMode::full: return "full";
  }
  return "?";
}

inline BatchMode batch_mode_from_string(std::string_view s) {
  if (s == "instances") return BatchMode::instances;
  if (s == "nodes") return BatchMode::nodes;
  if (s == "full") return BatchMode::full;
  throw InvalidConfig("unknown batch mode '" + std::string(s) + "'");
}

struct TrainConfig {
  double lr = 1e-3;
  std::size_t warmup_epochs = 5, max_epochs = 200;
  double weight_decay = 1e-4, clip_norm = 1.0;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  BatchMode mode = BatchMode::instances;
  std::size_t instance_batch = 8;
  std::size_t node_batch = 32;
  std::vector<std::size_t> fanout{15, 10, 5};
  bool exact_neighbors = false;  // nodes mode: whole receptive field instead of sampling
  std::size_t patience = 20;
  std::vector<std::uint64_t> seeds{13, 29, 47, 71, 101};
  bool scale_project_terms = true;  // divide project residuals by target std * sqrt(n)
  LossConfig loss;

  void validate(std::size_t layers) const {
    if (!(lr >= 0.0) || !(weight_decay >= 0.0) || !(clip_norm > 0.0)) throw InvalidConfig("bad optimiser settings");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
      throw InvalidConfig("Adam constants out of range");
    if (max_epochs == 0) throw InvalidConfig("max_epochs must be positive");
    if (patience == 0) throw InvalidConfig("patience must be at least 1");
    if (instance_batch == 0 || node_batch == 0) throw InvalidConfig("batch sizes must be positive");
    if (mode == BatchMode::nodes && !exact_neighbors && fanout.size() != layers)
      throw InvalidConfig("fanout has " + std::to_string(fanout.size()) + " entries for " + std::to_string(layers) +
                          " layers");
    loss.validate();
  }

  nlohmann::json to_json() const {
    return {{"lr", lr},
            {"warmup_epochs", warmup_epochs},
            {"max_epochs", max_epochs},
            {"weight_decay", weight_decay},
            {"clip_norm", clip_norm},
            {"beta1", beta1},
            {"beta2", beta2},
            {"adam_eps", adam_eps},
            {"mode", to_string(mode)},
            {"instance_batch", instance_batch},
            {"node_batch", node_batch},
            {"fanout", fanout},
            {"exact_neighbors", exact_neighbors},
            {"patience", patience},
            {"seeds", seeds},
            {"scale_project_terms", scale_project_terms},
            {"loss", loss.to_json()}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.lr = j.value("lr", c.lr);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    if (j.contains("mode")) c.mode = batch_mode_from_string(j.at("mode").get<std::string>());
    c.instance_batch = j.value("instance_batch", c.instance_batch);
    c.node_batch = j.value("node_batch", c.node_batch);
    c.fanout = j.value("fanout", c.fanout);
    c.exact_neighbors = j.value("exact_neighbors", c.exact_neighbors);
    c.patience = j.value("patience", c.patience);
    c.seeds = j.value("seeds", c.seeds);
    c.scale_project_terms = j.value("scale_project_terms", c.scale_project_terms);
    if (j.contains("loss")) c.loss = LossConfig::from_json(j.at("loss"));
    return c;
  }
};

/// Linear warmup from 0 to lr over warmup epochs, then cosine decay to 0 at
/// max_epochs.
inline double lr_at(std::size_t epoch, const TrainConfig& c) {
  if (epoch < c.warmup_epochs) return c.lr * static_cast<double>(epoch) / static_cast<double>(c.warmup_epochs);
  if (c.max_epochs <= c.warmup_epochs) return c.lr;
  const double progress =
      std::min(1.0, static_cast<double>(epoch - c.warmup_epochs) / static_cast<double>(c.max_epochs - c.warmup_epochs));
  return c.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

struct AdamState {
  std::vector<Matrix> m, v;
  std::uint64_t step = 0;
};

inline double global_grad_norm(std::span<ad::Parameter* const> params) {
  double s = 0.0;
  for (const auto* p : params)
    if (p->trainable && p->grad.size() > 0) s += p->grad.squaredNorm();
  return std::sqrt(s);
}

/// Rescales gradients to norm `max_norm` when larger; returns the norm
/// before clipping.
inline double clip_gradients(std::span<ad::Parameter* const> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) {
    std::string names;
    for (const auto* p : params)
      if (p->grad.size() > 0 && !p->grad.allFinite()) names += (names.empty() ? "" : ", ") + p->name;
    throw NonFiniteGradient("non-finite gradient in " + names);
  }
  if (norm > max_norm)
    for (auto* p : params)
      if (p->trainable && p->grad.size() > 0) p->grad *= max_norm / norm;
  return norm;
}

inline void adam_step(std::span<ad::Parameter* const> params, AdamState& st, double lr, const TrainConfig& c) {
  clip_gradients(params, c.clip_norm);
  if (st.m.size() != params.size()) {
    st.m.clear();
    st.v.clear();
    for (const auto* p : params) {
      st.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      st.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++st.step;
  const double b1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step));
  const double b2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (!p->trainable) continue;
    if (p->grad.size() == 0) p->zero_grad();
    st.m[i] = c.beta1 * st.m[i] + (1.0 - c.beta1) * p->grad;
    st.v[i] = c.beta2 * st.v[i] + (1.0 - c.beta2) * p->grad.cwiseProduct(p->grad);
    if (p->decay && c.weight_decay > 0.0) p->value *= 1.0 - lr * c.weight_decay;
    p->value.array() -= lr * (st.m[i].array() / b1) / ((st.v[i].array() / b2).sqrt() + c.adam_eps);
  }
}

/// Projects with their preprocessed inputs and optional memory states
/// (nodes x memory width, activities then resources of that project).
struct PreparedSet {
  std::vector<const ProjectInstance*> instances;
  std::vector<ModelInput> inputs;
  std::vector<Matrix> memory;

  std::size_t size() const { return instances.size(); }
};

inline PreparedSet prepare(std::span<const ProjectInstance> instances, const PreprocessStats& stats) {
  PreparedSet s;
  for (const auto& inst : instances) {
    s.instances.push_back(&inst);
    s.inputs.push_back(apply_preprocess(stats, inst));
  }
  return s;
}

/// Union graph of the selected projects with their memory rows attached.
inline GraphInput batch_graph(const PreparedSet& set, std::span<const std::size_t> which) {
  std::vector<const ProjectInstance*> inst;
  std::vector<const ModelInput*> in;
  for (auto i : which) {
    inst.push_back(set.instances[i]);
    in.push_back(&set.inputs[i]);
  }
  GraphInput g = make_graph_input(inst, in);
  if (!set.memory.empty()) {
    const auto width = set.memory[which.front()].cols();
    g.memory = Matrix::Zero(static_cast<Eigen::Index>(g.num_nodes()), width);
    for (std::size_t k = 0; k < which.size(); ++k) {
      const auto& mem = set.memory[which[k]];
      const auto& s = g.slices[k];
      g.memory.middleRows(static_cast<Eigen::Index>(s.act_begin), static_cast<Eigen::Index>(s.act_count)) =
          mem.topRows(static_cast<Eigen::Index>(s.act_count));
      if (s.res_count)
        g.memory.middleRows(static_cast<Eigen::Index>(s.res_begin), static_cast<Eigen::Index>(s.res_count)) =
            mem.bottomRows(static_cast<Eigen::Index>(s.res_count));
    }
  }
  return g;
}

inline GraphInput batch_graph(const PreparedSet& set) {
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return batch_graph(set, all);
}

inline ActivityTargets batch_targets(const PreparedSet& set, std::span<const std::size_t> which) {
  std::size_t n = 0;
  for (auto i : which) n += set.instances[i]->num_activities();
  ActivityTargets y{Vector::Zero(static_cast<Eigen::Index>(n)), Vector::Zero(static_cast<Eigen::Index>(n)), {}};
  Eigen::Index at = 0;
  for (auto i : which) {
    auto part = activity_targets(*set.instances[i]);
    y.t.segment(at, part.t.size()) = part.t;
    y.c.segment(at, part.c.size()) = part.c;
    y.mask.insert(y.mask.end(), part.mask.begin(), part.mask.end());
    at += part.t.size();
  }
  return y;
}

inline std::vector<ProjectTerm> batch_projects(const PreparedSet& set, std::span<const std::size_t> which,
                                               const GraphInput& g, const TargetScaler& sc, bool scale) {
  std::vector<ProjectTerm> out;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto& inst = *set.instances[which[k]];
    ProjectTerm p = project_term(inst, g.slices[k].act_begin);
    if (scale) {
      const double root = std::sqrt(static_cast<double>(inst.num_activities()));
      p.time_scale = sc.std_t * root;
      p.cost_scale = sc.std_c * root;
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0, train_loss = 0.0, val_loss = 0.0;
};

struct TrainResult {
  ModelParams model;  // best-validation checkpoint
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
};

inline std::vector<ad::Parameter*> parameter_list(ModelParams& m) {
  std::vector<ad::Parameter*> out;
  for (auto& p : m.params)
    if (p.trainable) out.push_back(&p);
  return out;
}

/// Eval-mode activity NLL over every labelled activity of `set`.
inline double validation_loss(ModelParams& m, const PreparedSet& set, const LossConfig& loss) {
  if (set.size() == 0) throw EmptyTrainingSet("validation set is empty");
  GraphInput g = batch_graph(set);
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  ad::Tape t;
  ForwardOptions opt;
  opt.param_grads = false;
  auto p = forward(m, t, g, full_computation(g, m.config.layers), opt);
  return nll_activity(p, batch_targets(set, all), loss.weight_t, loss.weight_c).scalar();
}

namespace detail {

/// Node-mode batch: activity term on sampled seeds plus project terms on the
/// full graphs of touched projects.
struct NodeBatcher {
  const PreparedSet& set;
  GraphInput graph;
  ActivityTargets targets;
  std::vector<std::size_t> owner;  // union activity -> project index
  std::vector<std::size_t> labeled;
  std::vector<GraphInput> per_project;

  explicit NodeBatcher(const PreparedSet& s) : set(s) {
    graph = batch_graph(set);
    std::vector<std::size_t> all(set.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    targets = batch_targets(set, all);
    for (std::size_t k = 0; k < set.size(); ++k)
      for (std::size_t a = 0; a < graph.slices[k].act_count; ++a) owner.push_back(k);
    for (std::size_t a = 0; a < targets.mask.size(); ++a)
      if (targets.mask[a]) labeled.push_back(a);
  }

  const GraphInput& project_graph(std::size_t k) {
    if (per_project.empty()) {
      for (std::size_t i = 0; i < set.size(); ++i) {
        const std::size_t one[] = {i};
        per_project.push_back(batch_graph(set, one));
      }
    }
    return per_project[k];
  }
};

}  // namespace detail

/// Trains `model` in place from its current parameters (warm start when it
/// was trained before) and returns the best-validation checkpoint.
inline TrainResult fit_model(ModelParams model, const PreparedSet& train, const PreparedSet& val, const TrainConfig& cfg,
                             std::uint64_t seed) {
  cfg.validate(model.config.layers);
  if (train.size() == 0) throw EmptyTrainingSet("no training projects");
  const RandomStream root(seed);
  auto params = parameter_list(model);
  AdamState adam;
  TrainResult result;
  result.model = model;
  std::size_t wait = 0;
  const auto& sc = model.scaler;
  std::optional<detail::NodeBatcher> nodes;
  if (cfg.mode == BatchMode::nodes) nodes.emplace(train);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    RandomStream order = root.split("order", epoch);
    RandomStream drop = root.split("dropout", epoch);
    RandomStream sample = root.split("sample", epoch);
    ForwardOptions opt;
    opt.mode = Mode::train;
    opt.dropout_rng = &drop;
    double loss_sum = 0.0;
    std::size_t batches = 0;

    auto step = [&](const ad::Var& loss, ad::Tape& t) {
      if (!std::isfinite(loss.scalar())) throw NonFiniteGradient("non-finite training loss at epoch " + std::to_string(epoch));
      for (auto* p : params) p->zero_grad();
      t.backward(loss);
      adam_step(params, adam, lr, cfg);
      loss_sum += loss.scalar();
      ++batches;
    };

    auto instance_step = [&](std::span<const std::size_t> which) {
      GraphInput g = batch_graph(train, which);
      const auto y = batch_targets(train, which);
      if (y.labeled() == 0) return;
      const auto projects = batch_projects(train, which, g, sc, cfg.scale_project_terms);
      ad::Tape t;
      auto p = forward(model, t, g, full_computation(g, model.config.layers), opt);
      step(total_loss(p, y, projects, cfg.loss, params).total, t);
    };

    if (cfg.mode == BatchMode::nodes) {
      auto& nb = *nodes;
      std::vector<std::size_t> ids = nb.labeled;
      order.shuffle(ids);
      for (std::size_t start = 0; start < ids.size(); start += cfg.node_batch) {
        std::vector<std::size_t> seeds(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                       ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), start + cfg.node_batch)));
        ad::Tape t;
        PredictionSet p;
        if (cfg.exact_neighbors) {
          auto full = forward(model, t, nb.graph, full_computation(nb.graph, model.config.layers), opt);
          p = {ad::gather_rows(full.mu_t, seeds), ad::gather_rows(full.logvar_t, seeds),
               ad::gather_rows(full.mu_c, seeds), ad::gather_rows(full.logvar_c, seeds)};
        } else {
          auto comp = neighbor_sample(nb.graph, seeds, cfg.fanout, model.config.relations, sample);
          p = forward(model, t, nb.graph, comp, opt);
        }
        ActivityTargets y{Vector(static_cast<Eigen::Index>(seeds.size())), Vector(static_cast<Eigen::Index>(seeds.size())),
                          std::vector<std::uint8_t>(seeds.size(), 1)};
        for (std::size_t i = 0; i < seeds.size(); ++i) {
          y.t(static_cast<Eigen::Index>(i)) = nb.targets.t(static_cast<Eigen::Index>(seeds[i]));
          y.c(static_cast<Eigen::Index>(i)) = nb.targets.c(static_cast<Eigen::Index>(seeds[i]));
        }
        LossConfig act_only = cfg.loss;
        act_only.lambda_proj = 0.0;
        ad::Var loss = total_loss(p, y, {}, act_only, params).total;
        if (cfg.loss.lambda_proj > 0.0) {
          std::set<std::size_t> touched;
          for (auto s : seeds) touched.insert(nb.owner[s]);
          LossConfig proj_only = cfg.loss;
          proj_only.lambda_act = proj_only.lambda_reg = 0.0;
          for (auto k : touched) {
            const auto& g = nb.project_graph(k);
            const std::size_t one[] = {k};
            const auto projects = batch_projects(train, one, g, sc, cfg.scale_project_terms);
            auto pk = forward(model, t, g, full_computation(g, model.config.layers), opt);
            // Average over touched projects.
            loss = ad::add(loss, ad::affine(total_loss(pk, {}, projects, proj_only).total,
                                            1.0 / static_cast<double>(touched.size())));
          }
        }
        step(loss, t);
      }
    } else {
      std::vector<std::size_t> ids(train.size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
      order.shuffle(ids);
      const std::size_t bs = cfg.mode == BatchMode::full ? ids.size() : cfg.instance_batch;
      for (std::size_t start = 0; start < ids.size(); start += bs) {
        std::vector<std::size_t> which(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                       ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), start + bs)));
        std::sort(which.begin(), which.end());
        instance_step(which);
      }
    }
    if (batches == 0) throw MaskAllEmpty("training set has no labelled activity");

    const double v = validation_loss(model, val, cfg.loss);
    if (!std::isfinite(v)) throw DivergedLoss("validation loss became non-finite at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, lr, loss_sum / static_cast<double>(batches), v});
    log::debug("epoch " + std::to_string(epoch) + " lr " + std::to_string(lr) + " train " +
               std::to_string(result.history.back().train_loss) + " val " + std::to_string(v));
    if (v < result.best_val) {
      result.best_val = v;
      result.best_epoch = epoch;
      result.model = model;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      break;
    }
  }
  return result;
}

/// Preprocessing fitted on the training split plus the trained model.
struct TrainedModel {
  PreprocessStats stats;
  ModelParams model;
};

inline nlohmann::json to_json(const TrainedModel& t) {
  return {{"format", "pnf-trained-1"}, {"preprocess", to_json(t.stats)}, {"model", checkpoint_json(t.model)}};
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "pnf-trained-1") throw VersionMismatch("expected format pnf-trained-1");
  return {preprocess_stats_from_json(j.at("preprocess")), model_from_checkpoint(j.at("model"))};
}

/// Fits preprocessing on `train`, initialises a model of `mcfg` with the
/// data widths and trains it.
inline std::pair<TrainedModel, TrainResult> train_model(std::span<const ProjectInstance> train,
                                                        std::span<const ProjectInstance> val, ModelConfig mcfg,
                                                        const TrainConfig& tcfg, std::uint64_t seed,
                                                        const PreprocessOptions& opt = {}) {
  if (train.empty() || val.empty()) throw EmptyTrainingSet("train and validation splits must be nonempty");
  TrainedModel tm;
  tm.stats = fit_preprocess(train, opt);
  const auto probe = apply_preprocess(tm.stats, train.front());
  mcfg.activity_features = static_cast<std::size_t>(probe.activity.cols());
  mcfg.resource_features = static_cast<std::size_t>(probe.resource.cols());
  ModelParams m = init_model(mcfg, seed);
  m.scaler = tm.stats.targets;
  auto res = fit_model(std::move(m), prepare(train, tm.stats), prepare(val, tm.stats), tcfg, seed);
  tm.model = res.model;
  return {std::move(tm), std::move(res)};
}

inline std::string history_csv(std::span<const EpochRecord> h) {
  std::string out = "epoch,lr,train_loss,val_loss\n";
  char buf[160];
  for (const auto& r : h) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", r.epoch, r.lr, r.train_loss, r.val_loss);
    out += buf;
  }
  return out;
}

/// Eval-mode predictions per project: columns mu_T, var_T, mu_C, var_C.
inline std::vector<Matrix> predict_set(ModelParams& m, const PreparedSet& set) {
  std::vector<Matrix> out;
  if (set.size() == 0) return out;
  GraphInput g = batch_graph(set);
  const Matrix all = predict(m, g);
  for (const auto& s : g.slices)
    out.push_back(all.middleRows(static_cast<Eigen::Index>(s.act_begin), static_cast<Eigen::Index>(s.act_count)));
  return out;
}

/// Metrics from per-project predictions (columns mu_T[, var_T], mu_C[,
/// var_C]; two-column matrices carry means only). Activity metrics use
/// labelled activities; project metrics use fully labelled projects.
inline MetricsBundle evaluate_predictions(std::span<const ProjectInstance* const> instances,
                                          std::span<const Matrix> preds) {
  detail::check_lengths(instances.size(), preds.size(), "evaluate_predictions");
  std::vector<double> yt, yc, mt, mc, vt, vc, ms_true, ms_pred, tc_true, tc_pred;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = *instances[i];
    const Matrix& p = preds[i];
    const bool var = p.cols() == 4;
    const Eigen::Index cc = var ? 2 : 1;
    if (static_cast<std::size_t>(p.rows()) != inst.num_activities() || (p.cols() != 4 && p.cols() != 2))
      throw ShapeMismatch("prediction matrix does not match project '" + inst.name() + "'");
    for (std::size_t a = 0; a < inst.num_activities(); ++a) {
      if (!inst.t_true[a] || !inst.c_true[a]) continue;
      const auto r = static_cast<Eigen::Index>(a);
      yt.push_back(*inst.t_true[a]);
      yc.push_back(*inst.c_true[a]);
      mt.push_back(p(r, 0));
      mc.push_back(p(r, cc));
      if (var) {
        vt.push_back(p(r, 1));
        vc.push_back(p(r, 3));
      }
    }
    if (inst.fully_labeled()) {
      std::vector<double> mu(inst.num_activities());
      double cost = inst.overhead, cost_true = inst.overhead;
      for (std::size_t a = 0; a < mu.size(); ++a) {
        mu[a] = std::max(0.0, p(static_cast<Eigen::Index>(a), 0));
        cost += p(static_cast<Eigen::Index>(a), cc);
        cost_true += *inst.c_true[a];
      }
      ms_pred.push_back(compute_schedule(inst.graph, mu).makespan);
      ms_true.push_back(compute_schedule(inst.graph, target_vector(inst.t_true)).makespan);
      tc_pred.push_back(cost);
      tc_true.push_back(cost_true);
    }
  }
  if (yt.empty()) throw NoLabels("no labelled activity to evaluate");
  MetricsBundle b;
  b.activities = yt.size();
  b.projects = ms_true.size();
  b.duration = head_metrics(yt, mt, vt);
  b.cost = head_metrics(yc, mc, vc);
  if (!ms_true.empty()) {
    b.makespan = accuracy_metrics(ms_true, ms_pred);
    b.total_cost = accuracy_metrics(tc_true, tc_pred);
  }
  return b;
}

inline MetricsBundle evaluate(TrainedModel& tm, std::span<const ProjectInstance> instances) {
  auto set = prepare(instances, tm.stats);
  auto preds = predict_set(tm.model, set);
  return evaluate_predictions(set.instances, preds);
}

}  // namespace pnf
