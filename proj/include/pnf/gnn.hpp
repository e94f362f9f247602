#pragma once

// Relation-typed GraphSAGE encoder with heteroscedastic duration and cost
// heads, an optional temporal memory, and gradient saliency.
//
// Nodes of a GraphInput are numbered activities first, then resources.
// Messages travel over four channels in a fixed order: precedence-in
// (from predecessors), precedence-out (from successors), assignment
// (activity <-> resource) and collaboration (resource <-> resource).
//
// Layer l, for each destination node v:
//   m_{v,r} = AGG_{u in N_r(v)} (W_r h_u + b_r)      (zero when N_r(v) empty)
//   h_v'    = act(W [h_v || m_{v,r1} || ... ] + b)   (+ h_v when residual)
// Heads: h -> [hidden...] -> (mu, log variance), on the normalised target
// scale, then mapped back through the target scaler.
//
// Parameter count (F_a, F_r input widths, d hidden, R relations, K layers,
// head widths h1..hm, M memory width when temporal):
//   (F_a + M) d + d + [F_r > 0] ((F_r + M) d + d)
//   + K (R (d^2 + d) + (R + 1) d^2 + d)
//   + 2 (d h1 + h1 + ... + h_{m-1} h_m + h_m + 2 h_m + 2)
//   + temporal GRU and frequency buffers (not trained).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/core/rng.hpp"
#include "pnf/ingest/instance.hpp"
#include "pnf/ingest/preprocess.hpp"
#include "pnf/tensor.hpp"

namespace pnf {

enum class Aggregator { mean, max, pool };
enum class Activation { relu, elu, gelu, tanh };
enum class Channel : std::size_t { prec_in = 0, prec_out = 1, assignment = 2, collaboration = 3 };
inline constexpr std::size_t kChannels = 4;

inline std::string_view to_string(Aggregator a) {
  switch (a) {
    case Aggregator::mean: return "mean";
    case Aggregator::max: return "max";
    case Aggregator::pool: return "pool";
  }
  return "?";
}
inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::gelu: return "gelu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}
inline std::string_view to_string(Channel c) {
  static constexpr std::array<std::string_view, kChannels> names = {"prec_in", "prec_out", "assignment",
                                                                    "collaboration"};
  return names[static_cast<std::size_t>(c)];
}
inline Aggregator aggregator_from_string(std::string_view s) {
  if (s == "mean") return Aggregator::mean;
  if (s == "max") return Aggregator::max;
  if (s == "pool") return Aggregator::pool;
  throw InvalidConfig("unknown aggregator '" + std::string(s) + "'");
}
inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "elu") return Activation::elu;
  if (s == "gelu") return Activation::gelu;
  if (s == "tanh") return Activation::tanh;
  throw InvalidConfig("unknown activation '" + std::string(s) + "'");
}
inline Channel channel_from_string(std::string_view s) {
  for (std::size_t c = 0; c < kChannels; ++c)
    if (to_string(static_cast<Channel>(c)) == s) return static_cast<Channel>(c);
  throw InvalidConfig("unknown relation channel '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t layers = 3;  // 0 gives the graph-free MLP
  std::size_t hidden = 128;
  Aggregator aggregator = Aggregator::mean;
  Activation activation = Activation::relu;
  double dropout = 0.0;
  bool residual = true;
  bool layer_norm = false;
  std::vector<std::size_t> head_hidden{128, 64};
  std::vector<Channel> relations{Channel::prec_in, Channel::prec_out, Channel::assignment, Channel::collaboration};
  bool temporal = false;
  std::size_t memory_dim = 32;
  std::size_t time_dim = 8;
  std::size_t activity_features = 0;
  std::size_t resource_features = 0;

  bool uses(Channel c) const { return std::find(relations.begin(), relations.end(), c) != relations.end(); }

  void validate() const {
    if (layers > 4) throw InvalidConfig("layers must be at most 4");
    if (hidden == 0 || activity_features == 0) throw InvalidConfig("hidden and activity feature widths must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidConfig("dropout must lie in [0, 1)");
    for (auto h : head_hidden)
      if (h == 0) throw InvalidConfig("head widths must be > 0");
    if (layers > 0 && relations.empty()) throw InvalidConfig("graph layers need at least one relation");
    if (temporal && (memory_dim == 0 || time_dim == 0 || time_dim % 2 != 0))
      throw InvalidConfig("temporal model needs memory_dim > 0 and an even time_dim");
  }

  nlohmann::json to_json() const {
    std::vector<std::string> rel;
    for (auto c : relations) rel.emplace_back(to_string(c));
    return {{"layers", layers},
            {"hidden", hidden},
            {"aggregator", to_string(aggregator)},
            {"activation", to_string(activation)},
            {"dropout", dropout},
            {"residual", residual},
            {"layer_norm", layer_norm},
            {"head_hidden", head_hidden},
            {"relations", rel},
            {"temporal", temporal},
            {"memory_dim", memory_dim},
            {"time_dim", time_dim},
            {"activity_features", activity_features},
            {"resource_features", resource_features}};
  }

  /// Fields absent from `j` keep their defaults.
  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.layers = j.value("layers", c.layers);
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("aggregator")) c.aggregator = aggregator_from_string(j.at("aggregator").get<std::string>());
    if (j.contains("activation")) c.activation = activation_from_string(j.at("activation").get<std::string>());
    c.dropout = j.value("dropout", c.dropout);
    c.residual = j.value("residual", c.residual);
    c.layer_norm = j.value("layer_norm", c.layer_norm);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    if (j.contains("relations")) {
      c.relations.clear();
      for (const auto& r : j.at("relations")) c.relations.push_back(channel_from_string(r.get<std::string>()));
    }
    c.temporal = j.value("temporal", c.temporal);
    c.memory_dim = j.value("memory_dim", c.memory_dim);
    c.time_dim = j.value("time_dim", c.time_dim);
    c.activity_features = j.value("activity_features", c.activity_features);
    c.resource_features = j.value("resource_features", c.resource_features);
    return c;
  }
};

inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

struct ModelParams {
  ModelConfig config;
  std::uint64_t seed = 0;
  TargetScaler scaler;
  std::vector<ad::Parameter> params;

  std::size_t in_act_w = kNoParam, in_act_b = kNoParam, in_res_w = kNoParam, in_res_b = kNoParam;
  struct Layer {
    std::array<std::size_t, kChannels> rel_w{kNoParam, kNoParam, kNoParam, kNoParam};
    std::array<std::size_t, kChannels> rel_b{kNoParam, kNoParam, kNoParam, kNoParam};
    std::size_t w = kNoParam, b = kNoParam;
  };
  std::vector<Layer> layers;
  struct Head {
    std::vector<std::size_t> w, b;
  };
  Head head_t, head_c;
  // Temporal memory (buffers, not trained).
  std::size_t gru_w = kNoParam, gru_u = kNoParam, gru_b = kNoParam, time_freq = kNoParam;

  ad::Parameter& at(std::size_t i) { return params[i]; }
  const ad::Parameter& at(std::size_t i) const { return params[i]; }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : params)
      if (p.trainable) n += static_cast<std::size_t>(p.value.size());
    return n;
  }
  std::size_t find(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params[i].name == name) return i;
    return kNoParam;
  }
};

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
inline ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams m;
  m.config = cfg;
  m.seed = seed;
  const RandomStream root = RandomStream(seed).split("init");
  const std::size_t d = cfg.hidden;
  auto weight = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out) {
    auto rng = root.split(name);
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
    m.params.push_back({name, std::move(w), {}, true, true});
    return m.params.size() - 1;
  };
  auto bias = [&](const std::string& name, std::size_t width) {
    m.params.push_back({name, Matrix::Zero(1, static_cast<Eigen::Index>(width)), {}, false, true});
    return m.params.size() - 1;
  };
  const std::size_t mem = cfg.temporal ? cfg.memory_dim : 0;
  m.in_act_w = weight("input.activity.w", cfg.activity_features + mem, d);
  m.in_act_b = bias("input.activity.b", d);
  if (cfg.resource_features > 0) {
    m.in_res_w = weight("input.resource.w", cfg.resource_features + mem, d);
    m.in_res_b = bias("input.resource.b", d);
  }
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    ModelParams::Layer layer;
    const std::string pre = "layer" + std::to_string(l) + ".";
    for (auto c : cfg.relations) {
      const auto ci = static_cast<std::size_t>(c);
      layer.rel_w[ci] = weight(pre + std::string(to_string(c)) + ".w", d, d);
      layer.rel_b[ci] = bias(pre + std::string(to_string(c)) + ".b", d);
    }
    layer.w = weight(pre + "combine.w", (cfg.relations.size() + 1) * d, d);
    layer.b = bias(pre + "combine.b", d);
    m.layers.push_back(layer);
  }
  auto head = [&](const std::string& name) {
    ModelParams::Head h;
    std::size_t in = d;
    for (std::size_t k = 0; k < cfg.head_hidden.size(); ++k) {
      h.w.push_back(weight(name + std::to_string(k) + ".w", in, cfg.head_hidden[k]));
      h.b.push_back(bias(name + std::to_string(k) + ".b", cfg.head_hidden[k]));
      in = cfg.head_hidden[k];
    }
    h.w.push_back(weight(name + "out.w", in, 2));
    h.b.push_back(bias(name + "out.b", 2));
    return h;
  };
  m.head_t = head("head_T.");
  m.head_c = head("head_C.");
  if (cfg.temporal) {
    const std::size_t msg = d + cfg.time_dim;
    // Gates z, r, candidate stacked column-wise.
    m.gru_w = weight("memory.gru.w", msg, 3 * mem);
    m.gru_u = weight("memory.gru.u", mem, 3 * mem);
    m.gru_b = bias("memory.gru.b", 3 * mem);
    Matrix freq(1, static_cast<Eigen::Index>(cfg.time_dim / 2));
    for (Eigen::Index i = 0; i < freq.cols(); ++i)
      freq(0, i) = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(cfg.time_dim));
    m.params.push_back({"memory.time_freq", std::move(freq), {}, false, false});
    m.time_freq = m.params.size() - 1;
    for (auto i : {m.gru_w, m.gru_u, m.gru_b}) m.params[i].trainable = false;
  }
  return m;
}

/// One or more project instances as a disjoint union, with model-ready
/// features and per-channel neighbour lists over all nodes.
struct GraphInput {
  struct Slice {
    std::size_t act_begin = 0, act_count = 0, res_begin = 0, res_count = 0;
  };
  std::size_t num_activities = 0, num_resources = 0;
  Matrix x_act, x_res;
  Matrix memory;  // nodes x memory_dim for temporal models; empty means zeros
  std::array<std::shared_ptr<const ad::Csr>, kChannels> adj;
  std::vector<Slice> slices;

  std::size_t num_nodes() const { return num_activities + num_resources; }
};

inline GraphInput make_graph_input(std::span<const ProjectInstance* const> instances,
                                   std::span<const ModelInput* const> inputs) {
  if (instances.size() != inputs.size()) throw ShapeMismatch("make_graph_input: instance/input count mismatch");
  GraphInput g;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    GraphInput::Slice s;
    s.act_begin = g.num_activities;
    s.act_count = instances[i]->num_activities();
    s.res_count = instances[i]->graph.num_resources();
    g.num_activities += s.act_count;
    g.slices.push_back(s);
  }
  for (auto& s : g.slices) {
    s.res_begin = g.num_activities + g.num_resources;
    g.num_resources += s.res_count;
  }
  const auto fa = inputs.empty() ? 0 : inputs[0]->activity.cols();
  const auto fr = inputs.empty() ? 0 : inputs[0]->resource.cols();
  g.x_act.resize(static_cast<Eigen::Index>(g.num_activities), fa);
  g.x_res.resize(static_cast<Eigen::Index>(g.num_resources), fr);
  std::array<std::vector<std::vector<std::size_t>>, kChannels> lists;
  for (auto& l : lists) l.assign(g.num_nodes(), {});
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = *instances[i];
    const auto& s = g.slices[i];
    if (inputs[i]->activity.cols() != fa || inputs[i]->resource.cols() != fr ||
        static_cast<std::size_t>(inputs[i]->activity.rows()) != s.act_count ||
        static_cast<std::size_t>(inputs[i]->resource.rows()) != s.res_count)
      throw FeatureDimMismatch("model input of '" + inst.name() + "' does not match the batch layout");
    g.x_act.middleRows(static_cast<Eigen::Index>(s.act_begin), static_cast<Eigen::Index>(s.act_count)) = inputs[i]->activity;
    if (s.res_count)
      g.x_res.middleRows(static_cast<Eigen::Index>(s.res_begin - g.num_activities), static_cast<Eigen::Index>(s.res_count)) =
          inputs[i]->resource;
    const auto& gr = inst.graph;
    auto node = [&](std::size_t local) {
      return local < s.act_count ? s.act_begin + local : s.res_begin + (local - s.act_count);
    };
    for (std::size_t a = 0; a < s.act_count; ++a) {
      for (auto p : gr.predecessors(a)) lists[0][node(a)].push_back(node(p));
      for (auto q : gr.successors(a)) lists[1][node(a)].push_back(node(q));
      for (auto r : gr.assigned(a)) lists[2][node(a)].push_back(node(r));
    }
    for (std::size_t r = 0; r < s.res_count; ++r) {
      const std::size_t local = s.act_count + r;
      for (auto a : gr.assigned(local)) lists[2][node(local)].push_back(node(a));
      for (auto c : gr.collaborators(local)) lists[3][node(local)].push_back(node(c));
    }
  }
  for (std::size_t c = 0; c < kChannels; ++c) {
    auto csr = std::make_shared<ad::Csr>();
    for (auto& l : lists[c]) {
      std::sort(l.begin(), l.end());
      csr->push(l);
    }
    g.adj[c] = std::move(csr);
  }
  return g;
}

inline GraphInput make_graph_input(const ProjectInstance& inst, const ModelInput& input) {
  const ProjectInstance* i[] = {&inst};
  const ModelInput* x[] = {&input};
  return make_graph_input(i, x);
}

/// One message-passing layer: destination nodes are the first num_dst
/// source nodes; adj[c] lists, per destination, local source indices.
struct Block {
  std::size_t num_src = 0, num_dst = 0;
  std::array<std::shared_ptr<const ad::Csr>, kChannels> adj;
};

/// Inputs, layered blocks and outputs of one forward pass. The outputs are
/// the first num_outputs rows of the last layer and must be activities.
struct Computation {
  std::vector<std::size_t> input_nodes;
  std::vector<Block> blocks;
  std::vector<std::size_t> output_nodes;
};

inline std::shared_ptr<const ad::Csr> truncate_csr(const ad::Csr& full, std::size_t targets) {
  auto out = std::make_shared<ad::Csr>();
  out->offset.assign(full.offset.begin(), full.offset.begin() + static_cast<std::ptrdiff_t>(targets + 1));
  out->index.assign(full.index.begin(), full.index.begin() + static_cast<std::ptrdiff_t>(out->offset.back()));
  return out;
}

/// Whole-graph computation; the last layer only updates activities.
inline Computation full_computation(const GraphInput& g, std::size_t layers) {
  Computation c;
  // Without graph layers only activities are ever read.
  c.input_nodes.resize(layers ? g.num_nodes() : g.num_activities);
  for (std::size_t i = 0; i < c.input_nodes.size(); ++i) c.input_nodes[i] = i;
  std::array<std::shared_ptr<const ad::Csr>, kChannels> last;
  for (std::size_t ch = 0; ch < kChannels; ++ch) last[ch] = truncate_csr(*g.adj[ch], g.num_activities);
  for (std::size_t l = 0; l < layers; ++l) {
    const bool final_layer = l + 1 == layers;
    c.blocks.push_back({g.num_nodes(), final_layer ? g.num_activities : g.num_nodes(), final_layer ? last : g.adj});
  }
  c.output_nodes.resize(g.num_activities);
  for (std::size_t a = 0; a < g.num_activities; ++a) c.output_nodes[a] = a;
  return c;
}

/// Layered neighbour sampling from `seeds` (activity nodes). Block l uses
/// fanout[l]; the block producing the outputs uses fanout.back(). Each
/// destination keeps at most fanout[l] neighbours per channel, drawn
/// uniformly without replacement and kept in ascending node order.
inline Computation neighbor_sample(const GraphInput& g, std::span<const std::size_t> seeds,
                                   std::span<const std::size_t> fanout, std::span<const Channel> channels,
                                   RandomStream& rng) {
  Computation c;
  c.output_nodes.assign(seeds.begin(), seeds.end());
  std::vector<std::size_t> dst(seeds.begin(), seeds.end());
  c.blocks.resize(fanout.size());
  std::vector<std::size_t> local(g.num_nodes(), kNoParam);
  std::vector<std::size_t> pick;
  for (std::size_t l = fanout.size(); l-- > 0;) {
    if (fanout[l] == 0) throw InvalidConfig("fanout entries must be positive");
    std::vector<std::size_t> src = dst;
    for (std::size_t i = 0; i < src.size(); ++i) local[src[i]] = i;
    Block b;
    b.num_dst = dst.size();
    std::array<std::shared_ptr<ad::Csr>, kChannels> built;
    for (auto& p : built) p = std::make_shared<ad::Csr>();
    for (std::size_t v : dst) {
      for (std::size_t ch = 0; ch < kChannels; ++ch) {
        const bool used = std::find(channels.begin(), channels.end(), static_cast<Channel>(ch)) != channels.end();
        const auto nb = g.adj[ch]->of(v);
        pick.clear();
        if (used) {
          if (nb.size() <= fanout[l]) {
            pick.assign(nb.begin(), nb.end());
          } else {
            // Partial Fisher-Yates over positions.
            std::vector<std::size_t> pos(nb.size());
            for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
            for (std::size_t i = 0; i < fanout[l]; ++i) std::swap(pos[i], pos[i + rng.below(pos.size() - i)]);
            pos.resize(fanout[l]);
            std::sort(pos.begin(), pos.end());
            for (auto p : pos) pick.push_back(nb[p]);
          }
        }
        for (auto& u : pick) {
          if (local[u] == kNoParam) {
            local[u] = src.size();
            src.push_back(u);
          }
          u = local[u];
        }
        built[ch]->push(pick);
      }
    }
    for (std::size_t ch = 0; ch < kChannels; ++ch) b.adj[ch] = std::move(built[ch]);
    b.num_src = src.size();
    c.blocks[l] = std::move(b);
    for (auto u : src) local[u] = kNoParam;
    dst = std::move(src);
  }
  c.input_nodes = std::move(dst);
  return c;
}

/// Per-activity predictions on the raw target scale, one row per output.
struct PredictionSet {
  ad::Var mu_t, logvar_t, mu_c, logvar_c;
};

enum class Mode { train, eval };

struct ForwardOptions {
  Mode mode = Mode::eval;
  RandomStream* dropout_rng = nullptr;  // required for train mode with dropout > 0
  bool param_grads = true;              // false records parameters as constants
  const ad::Var* x_act = nullptr;       // overrides g.x_act (saliency)
};

namespace detail {

inline ad::Var activate(Activation a, const ad::Var& x) {
  switch (a) {
    case Activation::relu: return ad::relu(x);
    case Activation::elu: return ad::elu(x);
    case Activation::gelu: return ad::gelu(x);
    case Activation::tanh: return ad::tanh(x);
  }
  return x;
}

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace detail

inline PredictionSet forward(ModelParams& m, ad::Tape& t, const GraphInput& g, const Computation& comp,
                             const ForwardOptions& opt = {}) {
  const auto& cfg = m.config;
  if (static_cast<std::size_t>(g.x_act.cols()) != cfg.activity_features ||
      (g.num_resources > 0 && m.in_res_w != kNoParam && static_cast<std::size_t>(g.x_res.cols()) != cfg.resource_features))
    throw FeatureDimMismatch("model expects " + std::to_string(cfg.activity_features) + "/" +
                             std::to_string(cfg.resource_features) + " activity/resource features, got " +
                             std::to_string(g.x_act.cols()) + "/" + std::to_string(g.x_res.cols()));
  const bool train = opt.mode == Mode::train && cfg.dropout > 0.0;
  if (train && !opt.dropout_rng) throw InvalidConfig("train-mode forward needs a dropout generator");
  auto P = [&](std::size_t i) { return opt.param_grads ? t.param(m.at(i)) : t.constant(m.at(i).value); };
  auto maybe_dropout = [&](const ad::Var& x) { return train ? ad::dropout(x, cfg.dropout, *opt.dropout_rng) : x; };

  // Input projection per node type, then reorder to the input node list.
  std::vector<std::size_t> act_rows, res_rows, order_act, order_res;
  for (std::size_t i = 0; i < comp.input_nodes.size(); ++i) {
    const std::size_t v = comp.input_nodes[i];
    if (v < g.num_activities) {
      act_rows.push_back(v);
      order_act.push_back(i);
    } else {
      res_rows.push_back(v - g.num_activities);
      order_res.push_back(i);
    }
  }
  const std::size_t mem = cfg.temporal ? cfg.memory_dim : 0;
  auto memory_rows = [&](const std::vector<std::size_t>& nodes, std::size_t offset) {
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(mem));
    if (g.memory.size() > 0)
      for (std::size_t i = 0; i < nodes.size(); ++i) s.row(static_cast<Eigen::Index>(i)) = g.memory.row(static_cast<Eigen::Index>(nodes[i] + offset));
    return s;
  };
  ad::Var xa_all = opt.x_act ? *opt.x_act : t.constant(g.x_act);
  ad::Var xa = ad::gather_rows(xa_all, act_rows);
  if (mem) xa = ad::concat_cols({t.constant(memory_rows(act_rows, 0)), xa});
  ad::Var h = ad::add_row(ad::matmul(xa, P(m.in_act_w)), P(m.in_act_b));
  if (!res_rows.empty()) {
    if (m.in_res_w == kNoParam) throw FeatureDimMismatch("model has no resource input projection");
    Matrix xr(static_cast<Eigen::Index>(res_rows.size()), g.x_res.cols());
    for (std::size_t i = 0; i < res_rows.size(); ++i) xr.row(static_cast<Eigen::Index>(i)) = g.x_res.row(static_cast<Eigen::Index>(res_rows[i]));
    ad::Var xrv = t.constant(std::move(xr));
    if (mem) xrv = ad::concat_cols({t.constant(memory_rows(res_rows, g.num_activities)), xrv});
    ad::Var hr = ad::add_row(ad::matmul(xrv, P(m.in_res_w)), P(m.in_res_b));
    std::vector<std::size_t> perm(comp.input_nodes.size());
    for (std::size_t i = 0; i < order_act.size(); ++i) perm[order_act[i]] = i;
    for (std::size_t i = 0; i < order_res.size(); ++i) perm[order_res[i]] = order_act.size() + i;
    h = ad::gather_rows(ad::concat_rows(h, hr), std::move(perm));
  }

  const ad::Reduce reduce = cfg.aggregator == Aggregator::mean ? ad::Reduce::mean : ad::Reduce::max;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const auto& blk = comp.blocks.at(l);
    const auto& lp = m.layers[l];
    ad::Var self = blk.num_dst == blk.num_src ? h : ad::gather_rows(h, detail::iota(blk.num_dst));
    std::vector<ad::Var> parts{self};
    for (auto c : cfg.relations) {
      const auto ci = static_cast<std::size_t>(c);
      ad::Var msg = ad::add_row(ad::matmul(h, P(lp.rel_w[ci])), P(lp.rel_b[ci]));
      if (cfg.aggregator == Aggregator::pool) msg = ad::relu(msg);
      parts.push_back(ad::aggregate(msg, blk.adj[ci], reduce));
    }
    ad::Var z = ad::add_row(ad::matmul(ad::concat_cols(parts), P(lp.w)), P(lp.b));
    ad::Var hn = detail::activate(cfg.activation, z);
    if (cfg.layer_norm) hn = ad::layer_norm_rows(hn);
    if (cfg.residual) hn = ad::add(hn, self);
    h = maybe_dropout(hn);
  }
  const std::size_t rows = static_cast<std::size_t>(h.rows());
  if (comp.output_nodes.size() != rows) h = ad::gather_rows(h, detail::iota(comp.output_nodes.size()));

  auto run_head = [&](const ModelParams::Head& hd) {
    ad::Var x = h;
    for (std::size_t k = 0; k + 1 < hd.w.size(); ++k)
      x = detail::activate(cfg.activation, ad::add_row(ad::matmul(x, P(hd.w[k])), P(hd.b[k])));
    return ad::add_row(ad::matmul(x, P(hd.w.back())), P(hd.b.back()));
  };
  const auto& sc = m.scaler;
  ad::Var ot = run_head(m.head_t), oc = run_head(m.head_c);
  return {ad::affine(ad::slice_cols(ot, 0, 1), sc.std_t, sc.mean_t),
          ad::affine(ad::slice_cols(ot, 1, 1), 1.0, 2.0 * std::log(sc.std_t)),
          ad::affine(ad::slice_cols(oc, 0, 1), sc.std_c, sc.mean_c),
          ad::affine(ad::slice_cols(oc, 1, 1), 1.0, 2.0 * std::log(sc.std_c))};
}

/// Eval-mode predictions as plain matrices: columns mu_T, var_T, mu_C, var_C.
inline Matrix predict(ModelParams& m, const GraphInput& g) {
  ad::Tape t;
  ForwardOptions opt;
  opt.param_grads = false;
  auto p = forward(m, t, g, full_computation(g, m.config.layers), opt);
  Matrix out(p.mu_t.rows(), 4);
  out.col(0) = p.mu_t.value().col(0);
  out.col(1) = p.logvar_t.value().col(0).array().exp().matrix();
  out.col(2) = p.mu_c.value().col(0);
  out.col(3) = p.logvar_c.value().col(0).array().exp().matrix();
  return out;
}

// ---- Temporal memory -------------------------------------------------------

struct TemporalMemory {
  Matrix state;                     // nodes x memory_dim
  std::vector<double> last_update;  // per node
  double last_time = -std::numeric_limits<double>::infinity();
};

struct CompletionEvent {
  std::size_t activity;  // node index in the GraphInput
  double time;
};

inline TemporalMemory init_memory(const ModelParams& m, std::size_t nodes) {
  if (!m.config.temporal) throw InvalidConfig("model has no temporal memory");
  return {Matrix::Zero(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(m.config.memory_dim)),
          std::vector<double>(nodes, 0.0), -std::numeric_limits<double>::infinity()};
}

/// Sinusoidal encoding [sin w0 dt, cos w0 dt, sin w1 dt, cos w1 dt, ...].
inline Matrix time_encoding(const ModelParams& m, double dt) {
  const Matrix& w = m.at(m.time_freq).value;
  Matrix e(1, 2 * w.cols());
  for (Eigen::Index i = 0; i < w.cols(); ++i) {
    e(0, 2 * i) = std::sin(w(0, i) * dt);
    e(0, 2 * i + 1) = std::cos(w(0, i) * dt);
  }
  return e;
}

/// Applies one completion event: the completed activity and its neighbours
/// receive m_v = mean_u [h_u || enc(t - last_update_v)] and a GRU update,
/// where h_u is the input projection of [s_u || x_u]. Returns touched nodes.
inline std::vector<std::size_t> temporal_step(const ModelParams& m, TemporalMemory& mem, const CompletionEvent& ev,
                                              const GraphInput& g) {
  const auto& cfg = m.config;
  if (!cfg.temporal) throw InvalidConfig("model has no temporal memory");
  if (ev.time < mem.last_time) throw TimestampRegression("event at " + std::to_string(ev.time) + " precedes " + std::to_string(mem.last_time));
  if (ev.activity >= g.num_activities) throw UnknownActivity("event node " + std::to_string(ev.activity));
  mem.last_time = ev.time;
  const auto md = static_cast<Eigen::Index>(cfg.memory_dim);
  // Projections read the pre-event state, so they are shared by all touched nodes.
  std::unordered_map<std::size_t, Vector> cache;
  auto project = [&](std::size_t u) -> Vector {
    Matrix in(1, md + (u < g.num_activities ? g.x_act.cols() : g.x_res.cols()));
    in.leftCols(md) = mem.state.row(static_cast<Eigen::Index>(u));
    if (u < g.num_activities) {
      in.rightCols(g.x_act.cols()) = g.x_act.row(static_cast<Eigen::Index>(u));
      return (in * m.at(m.in_act_w).value + m.at(m.in_act_b).value).transpose();
    }
    in.rightCols(g.x_res.cols()) = g.x_res.row(static_cast<Eigen::Index>(u - g.num_activities));
    return (in * m.at(m.in_res_w).value + m.at(m.in_res_b).value).transpose();
  };
  auto projected = [&](std::size_t u) -> const Vector& {
    auto it = cache.find(u);
    if (it == cache.end()) it = cache.emplace(u, project(u)).first;
    return it->second;
  };
  std::vector<std::size_t> touched{ev.activity};
  for (auto c : cfg.relations)
    for (auto u : g.adj[static_cast<std::size_t>(c)]->of(ev.activity)) touched.push_back(u);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  const Matrix& W = m.at(m.gru_w).value;
  const Matrix& U = m.at(m.gru_u).value;
  const Matrix& B = m.at(m.gru_b).value;
  const auto d = static_cast<Eigen::Index>(cfg.hidden);
  Matrix next = mem.state;
  for (auto v : touched) {
    Matrix msg = Matrix::Zero(1, d + static_cast<Eigen::Index>(cfg.time_dim));
    std::size_t count = 0;
    for (auto c : cfg.relations)
      for (auto u : g.adj[static_cast<std::size_t>(c)]->of(v)) {
        msg.leftCols(d) += projected(u).transpose();
        ++count;
      }
    if (count) msg.leftCols(d) /= static_cast<double>(count);
    msg.rightCols(static_cast<Eigen::Index>(cfg.time_dim)) = time_encoding(m, ev.time - mem.last_update[v]);
    const Matrix s = mem.state.row(static_cast<Eigen::Index>(v));
    const Matrix xw = msg * W;
    const Matrix su = s * U.leftCols(2 * md);
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    Matrix z(1, md), r(1, md), cand(1, md);
    for (Eigen::Index j = 0; j < md; ++j) {
      z(0, j) = sig(xw(0, j) + su(0, j) + B(0, j));
      r(0, j) = sig(xw(0, md + j) + su(0, md + j) + B(0, md + j));
    }
    const Matrix rs = r.cwiseProduct(s) * U.rightCols(md);
    for (Eigen::Index j = 0; j < md; ++j) cand(0, j) = std::tanh(xw(0, 2 * md + j) + rs(0, j) + B(0, 2 * md + j));
    next.row(static_cast<Eigen::Index>(v)) = (1.0 - z.array()) * s.array() + z.array() * cand.array();
    mem.last_update[v] = ev.time;
  }
  mem.state = std::move(next);
  return touched;
}

// ---- Saliency ----------------------------------------------------------------

enum class Target { duration, cost };

/// Mean |d mu / d x| over the activity rows in the K-hop receptive field of
/// `activity` (node index), one entry per activity input feature.
inline Vector saliency(ModelParams& m, const GraphInput& g, std::size_t activity, Target target) {
  if (activity >= g.num_activities) throw UnknownActivity("activity node " + std::to_string(activity));
  ad::Tape t;
  ad::Var x = t.variable(g.x_act);
  ForwardOptions opt;
  opt.param_grads = false;
  opt.x_act = &x;
  auto p = forward(m, t, g, full_computation(g, m.config.layers), opt);
  const ad::Var& mu = target == Target::duration ? p.mu_t : p.mu_c;
  t.backward(ad::gather_rows(mu, {activity}));
  const Matrix gx = t.grad(x);
  std::vector<std::uint8_t> in_field(g.num_nodes(), 0);
  std::vector<std::size_t> frontier{activity};
  in_field[activity] = 1;
  for (std::size_t hop = 0; hop < m.config.layers; ++hop) {
    std::vector<std::size_t> next;
    for (auto v : frontier)
      for (auto c : m.config.relations)
        for (auto u : g.adj[static_cast<std::size_t>(c)]->of(v))
          if (!in_field[u]) {
            in_field[u] = 1;
            next.push_back(u);
          }
    frontier = std::move(next);
  }
  Vector out = Vector::Zero(gx.cols());
  double rows = 0.0;
  for (std::size_t a = 0; a < g.num_activities; ++a)
    if (in_field[a]) {
      out += gx.row(static_cast<Eigen::Index>(a)).cwiseAbs().transpose();
      rows += 1.0;
    }
  return out / rows;
}

// ---- Checkpoints -------------------------------------------------------------

inline nlohmann::json checkpoint_json(const ModelParams& m) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : m.params) {
    std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
    params.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"data", data}});
  }
  return {{"format", "pnf-model-1"},
          {"config", m.config.to_json()},
          {"seed", m.seed},
          {"scaler", {{"mean_t", m.scaler.mean_t}, {"std_t", m.scaler.std_t}, {"mean_c", m.scaler.mean_c}, {"std_c", m.scaler.std_c}}},
          {"params", params}};
}

inline ModelParams model_from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "pnf-model-1") throw VersionMismatch("not a pnf-model-1 checkpoint");
  ModelParams m = init_model(ModelConfig::from_json(j.at("config")), j.at("seed").get<std::uint64_t>());
  const auto& s = j.at("scaler");
  m.scaler = {s.at("mean_t"), s.at("std_t"), s.at("mean_c"), s.at("std_c")};
  for (const auto& p : j.at("params")) {
    const auto idx = m.find(p.at("name").get<std::string>());
    if (idx == kNoParam) throw SchemaViolation("params: unknown parameter '" + p.at("name").get<std::string>() + "'");
    auto& v = m.at(idx).value;
    const auto shape = p.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = p.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != v.rows() || shape[1] != v.cols() || static_cast<Eigen::Index>(data.size()) != v.size())
      throw SchemaViolation("params: shape mismatch for '" + m.at(idx).name + "'");
    std::copy(data.begin(), data.end(), v.data());
  }
  return m;
}

}  // namespace pnf
