#pragma once

// Project DAG: typed activity/resource graph, CPM schedule, path enumeration,
// betweenness centrality and the per-activity structural feature layout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/core/matrix.hpp"

namespace pnf {

enum class Relation : std::uint8_t { precedence = 0, assignment = 1, collaboration = 2 };

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::precedence: return "precedence";
    case Relation::assignment: return "assignment";
    case Relation::collaboration: return "collaboration";
  }
  return "?";
}

inline Relation relation_from_string(std::string_view s) {
  if (s == "precedence") return Relation::precedence;
  if (s == "assignment") return Relation::assignment;
  if (s == "collaboration") return Relation::collaboration;
  throw InvalidGraph("unknown relation '" + std::string(s) + "'");
}

/// Edge between unified node indices: activities occupy [0, A), resources
/// occupy [A, A + R). Assignment edges always run activity -> resource.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  Relation relation = Relation::precedence;
  std::vector<double> features;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class ProjectGraph {
 public:
  ProjectGraph() = default;

  ProjectGraph(std::vector<std::string> activity_ids, std::vector<std::string> resource_ids,
               std::vector<Edge> edges)
      : activity_ids_(std::move(activity_ids)),
        resource_ids_(std::move(resource_ids)),
        edges_(std::move(edges)) {
    build();
  }

  std::size_t num_activities() const { return activity_ids_.size(); }
  std::size_t num_resources() const { return resource_ids_.size(); }
  std::size_t num_nodes() const { return activity_ids_.size() + resource_ids_.size(); }

  const std::vector<std::string>& activity_ids() const { return activity_ids_; }
  const std::vector<std::string>& resource_ids() const { return resource_ids_; }
  const std::string& activity_id(std::size_t a) const { return activity_ids_.at(a); }
  /// `node` is a unified index in [A, A + R).
  const std::string& resource_id(std::size_t node) const {
    return resource_ids_.at(node - num_activities());
  }
  const std::string& node_id(std::size_t node) const {
    return node < num_activities() ? activity_id(node) : resource_id(node);
  }
  bool is_activity(std::size_t node) const { return node < num_activities(); }

  std::optional<std::size_t> find_activity(std::string_view id) const {
    auto it = activity_lookup_.find(std::string(id));
    if (it == activity_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_node(std::string_view id) const {
    if (auto a = find_activity(id)) return a;
    auto it = resource_lookup_.find(std::string(id));
    if (it == resource_lookup_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_precedence_edges() const { return num_precedence_; }

  std::span<const std::size_t> predecessors(std::size_t a) const { return preds_.at(a); }
  std::span<const std::size_t> successors(std::size_t a) const { return succs_.at(a); }
  /// Resource nodes assigned to activity `a`, or activity nodes assigned to resource `node`.
  std::span<const std::size_t> assigned(std::size_t node) const { return assign_.at(node); }
  std::span<const std::size_t> collaborators(std::size_t node) const { return collab_.at(node); }

  /// Activity indices ordered by ascending id; used for every tie-break.
  const std::vector<std::size_t>& id_order() const { return id_order_; }
  /// Position of activity `a` in id_order().
  std::size_t id_rank(std::size_t a) const { return id_rank_[a]; }

  bool has_edge(std::size_t src, std::size_t dst, Relation rel) const {
    return edge_keys_.count(key(src, dst, rel)) != 0;
  }

 private:
  static std::tuple<std::size_t, std::size_t, int> key(std::size_t s, std::size_t d, Relation r) {
    if (r == Relation::collaboration && d < s) std::swap(s, d);
    return {s, d, static_cast<int>(r)};
  }

  void build() {
    const std::size_t na = num_activities();
    const std::size_t nn = num_nodes();
    for (std::size_t i = 0; i < na; ++i) {
      if (!activity_lookup_.emplace(activity_ids_[i], i).second)
        throw InvalidGraph("duplicate activity id '" + activity_ids_[i] + "'");
    }
    for (std::size_t j = 0; j < resource_ids_.size(); ++j) {
      if (activity_lookup_.count(resource_ids_[j]) ||
          !resource_lookup_.emplace(resource_ids_[j], na + j).second)
        throw InvalidGraph("duplicate node id '" + resource_ids_[j] + "'");
    }
    preds_.assign(na, {});
    succs_.assign(na, {});
    assign_.assign(nn, {});
    collab_.assign(nn, {});
    for (const Edge& e : edges_) {
      if (e.src >= nn || e.dst >= nn) throw InvalidGraph("edge endpoint out of range");
      if (!edge_keys_.insert(key(e.src, e.dst, e.relation)).second)
        throw InvalidGraph("duplicate edge " + node_id(e.src) + " -> " + node_id(e.dst) + " (" +
                           std::string(to_string(e.relation)) + ")");
      switch (e.relation) {
        case Relation::precedence:
          if (!is_activity(e.src) || !is_activity(e.dst))
            throw InvalidGraph("precedence edge must join two activities");
          if (e.src == e.dst) throw CycleDetected("self loop on " + activity_id(e.src));
          succs_[e.src].push_back(e.dst);
          preds_[e.dst].push_back(e.src);
          ++num_precedence_;
          break;
        case Relation::assignment:
          if (!is_activity(e.src) || is_activity(e.dst))
            throw InvalidGraph("assignment edge must run activity -> resource");
          assign_[e.src].push_back(e.dst);
          assign_[e.dst].push_back(e.src);
          break;
        case Relation::collaboration:
          if (is_activity(e.src) || is_activity(e.dst) || e.src == e.dst)
            throw InvalidGraph("collaboration edge must join two distinct resources");
          collab_[e.src].push_back(e.dst);
          collab_[e.dst].push_back(e.src);
          break;
      }
    }
    for (auto* lists : {&preds_, &succs_, &assign_, &collab_})
      for (auto& l : *lists) std::sort(l.begin(), l.end());
    id_order_.resize(na);
    for (std::size_t i = 0; i < na; ++i) id_order_[i] = i;
    std::sort(id_order_.begin(), id_order_.end(),
              [&](std::size_t a, std::size_t b) { return activity_ids_[a] < activity_ids_[b]; });
    id_rank_.assign(na, 0);
    for (std::size_t r = 0; r < na; ++r) id_rank_[id_order_[r]] = r;
  }

  std::vector<std::string> activity_ids_;
  std::vector<std::string> resource_ids_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> activity_lookup_;
  std::unordered_map<std::string, std::size_t> resource_lookup_;
  std::vector<std::vector<std::size_t>> preds_, succs_, assign_, collab_;
  std::set<std::tuple<std::size_t, std::size_t, int>> edge_keys_;
  std::vector<std::size_t> id_order_, id_rank_;
  std::size_t num_precedence_ = 0;
};

/// Kahn's algorithm over precedence edges; ready activities are released in
/// ascending id order. Throws CycleDetected naming one edge on a cycle.
inline std::vector<std::size_t> topological_sort(const ProjectGraph& g) {
  const std::size_t n = g.num_activities();
  std::vector<std::size_t> indeg(n);
  for (std::size_t a = 0; a < n; ++a) indeg[a] = g.predecessors(a).size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;  // id ranks
  for (std::size_t a = 0; a < n; ++a)
    if (indeg[a] == 0) ready.push(g.id_rank(a));
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t a = g.id_order()[ready.top()];
    ready.pop();
    order.push_back(a);
    for (std::size_t s : g.successors(a))
      if (--indeg[s] == 0) ready.push(g.id_rank(s));
  }
  if (order.size() != n) {
    // Walk back through unresolved predecessors until a node repeats.
    std::size_t v = 0;
    while (indeg[v] == 0) ++v;
    std::vector<int> seen(n, -1);
    int step = 0;
    while (seen[v] < 0) {
      seen[v] = step++;
      for (std::size_t p : g.predecessors(v)) {
        if (indeg[p] > 0) {
          v = p;
          break;
        }
      }
    }
    std::size_t next = 0;
    for (std::size_t s : g.successors(v))
      if (indeg[s] > 0) {
        next = s;
        break;
      }
    throw CycleDetected("precedence cycle through edge " + g.activity_id(v) + " -> " +
                        g.activity_id(next));
  }
  return order;
}

struct Schedule {
  std::vector<double> earliest_start;
  std::vector<double> earliest_finish;
  std::vector<double> latest_finish;
  double makespan = 0.0;
  std::vector<std::size_t> critical_activities;  // ascending activity index

  bool is_critical(std::size_t a) const {
    return std::binary_search(critical_activities.begin(), critical_activities.end(), a);
  }
};

/// Forward/backward CPM pass. Sources start at 0; no virtual source or sink.
inline Schedule compute_schedule(const ProjectGraph& g, std::span<const double> durations) {
  const std::size_t n = g.num_activities();
  if (durations.size() != n)
    throw MissingDuration("expected " + std::to_string(n) + " durations, got " +
                          std::to_string(durations.size()));
  for (std::size_t a = 0; a < n; ++a) {
    if (!std::isfinite(durations[a])) throw MissingDuration(g.activity_id(a));
    if (durations[a] < 0.0) throw InvalidGraph("negative duration for " + g.activity_id(a));
  }
  const auto order = topological_sort(g);
  Schedule s;
  s.earliest_start.assign(n, 0.0);
  s.earliest_finish.assign(n, 0.0);
  for (std::size_t a : order) {
    double es = 0.0;
    for (std::size_t p : g.predecessors(a)) es = std::max(es, s.earliest_finish[p]);
    s.earliest_start[a] = es;
    s.earliest_finish[a] = es + durations[a];
    s.makespan = std::max(s.makespan, s.earliest_finish[a]);
  }
  s.latest_finish.assign(n, s.makespan);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t a = *it;
    double lf = s.makespan;
    for (std::size_t q : g.successors(a)) lf = std::min(lf, s.latest_finish[q] - durations[q]);
    s.latest_finish[a] = lf;
  }
  const double tol = 1e-9 * std::max(1.0, s.makespan);
  for (std::size_t a = 0; a < n; ++a)
    if (s.latest_finish[a] - s.earliest_finish[a] <= tol) s.critical_activities.push_back(a);
  return s;
}

/// Convenience overload keyed by activity id; throws MissingDuration(id).
inline Schedule compute_schedule(const ProjectGraph& g, const std::map<std::string, double>& durations) {
  std::vector<double> d(g.num_activities());
  for (std::size_t a = 0; a < d.size(); ++a) {
    auto it = durations.find(g.activity_id(a));
    if (it == durations.end()) throw MissingDuration(g.activity_id(a));
    d[a] = it->second;
  }
  return compute_schedule(g, d);
}

/// Number of source-to-sink paths, saturating at uint64 max.
inline std::uint64_t count_paths(const ProjectGraph& g) {
  const auto order = topological_sort(g);
  constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> from(g.num_activities(), 0);  // paths from node to any sink
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t a = *it;
    if (g.successors(a).empty()) {
      from[a] = 1;
      continue;
    }
    std::uint64_t total = 0;
    for (std::size_t s : g.successors(a)) total = (cap - total < from[s]) ? cap : total + from[s];
    from[a] = total;
  }
  std::uint64_t total = 0;
  for (std::size_t a = 0; a < g.num_activities(); ++a)
    if (g.predecessors(a).empty()) total = (cap - total < from[a]) ? cap : total + from[a];
  return total;
}

/// Every source-to-sink path (activity indices), in lexicographic id order.
/// Throws PathBudgetExceeded when there are more than `max_paths`.
inline std::vector<std::vector<std::size_t>> enumerate_paths(const ProjectGraph& g,
                                                             std::uint64_t max_paths) {
  const std::uint64_t total = count_paths(g);
  if (total > max_paths)
    throw PathBudgetExceeded(std::to_string(total) + " paths exceed budget " +
                             std::to_string(max_paths));
  auto by_id = [&](std::span<const std::size_t> nodes) {
    std::vector<std::size_t> v(nodes.begin(), nodes.end());
    std::sort(v.begin(), v.end(), [&](auto x, auto y) { return g.id_rank(x) < g.id_rank(y); });
    return v;
  };
  std::vector<std::vector<std::size_t>> paths;
  paths.reserve(total);
  std::vector<std::size_t> stack;
  std::function<void(std::size_t)> walk = [&](std::size_t a) {
    stack.push_back(a);
    if (g.successors(a).empty()) {
      paths.push_back(stack);
    } else {
      for (std::size_t s : by_id(g.successors(a))) walk(s);
    }
    stack.pop_back();
  };
  for (std::size_t a : g.id_order())
    if (g.predecessors(a).empty()) walk(a);
  return paths;
}

/// Unnormalized directed betweenness over the precedence graph (Brandes):
/// sum over ordered pairs s != t of sigma_st(v) / sigma_st, endpoints excluded.
inline std::vector<double> betweenness_centrality(const ProjectGraph& g) {
  const std::size_t n = g.num_activities();
  (void)topological_sort(g);  // surfaces CycleDetected
  std::vector<double> bc(n, 0.0);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::size_t> visit;
  visit.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    visit.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    visit.push_back(s);
    for (std::size_t head = 0; head < visit.size(); ++head) {
      const std::size_t v = visit[head];
      for (std::size_t w : g.successors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          visit.push_back(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = visit.rbegin(); it != visit.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : g.predecessors(w))
        if (dist[v] >= 0 && dist[v] + 1 == dist[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) bc[w] += delta[w];
    }
  }
  return bc;
}

struct CategoricalColumn {
  std::string name;
  std::vector<std::string> categories;
  std::vector<int> codes;  // index into categories; -1 means missing
};

/// Per-activity attributes that feed activity_features().
struct ActivityAttributes {
  std::vector<std::string> continuous_names;
  Matrix continuous;                          // activities x continuous_names
  std::vector<std::uint8_t> continuous_missing;  // row-major flags, empty = none missing
  std::vector<std::optional<double>> t_est;
  std::vector<std::optional<double>> c_est;
  std::vector<CategoricalColumn> categorical;
};

enum class MissingPolicy { error, flag };

/// Structural feature names appended after the continuous attribute columns.
inline const std::vector<std::string>& structural_feature_names() {
  static const std::vector<std::string> names = {"T_est",   "C_est",       "deg_in",
                                                 "deg_out", "betweenness", "n_resources"};
  return names;
}

/// Activity feature layout:
///   [continuous attributes..., T_est, C_est, deg_in, deg_out, betweenness,
///    n_resources, one-hot(categorical_1)..., one-hot(categorical_k)...]
/// With five demand columns and one four-way type column that is 15 columns.
inline FeatureTable activity_features(const ProjectGraph& g, const ActivityAttributes& attrs,
                                      MissingPolicy policy = MissingPolicy::error) {
  const std::size_t n = g.num_activities();
  const std::size_t nc = attrs.continuous_names.size();
  if (static_cast<std::size_t>(attrs.continuous.rows()) != n ||
      static_cast<std::size_t>(attrs.continuous.cols()) != nc || attrs.t_est.size() != n ||
      attrs.c_est.size() != n)
    throw FeatureDimMismatch("activity attributes do not match graph size");

  FeatureTable t;
  t.names = attrs.continuous_names;
  for (const auto& s : structural_feature_names()) t.names.push_back(s);
  std::size_t width = t.names.size();
  for (const auto& cat : attrs.categorical) {
    if (cat.codes.size() != n) throw FeatureDimMismatch("categorical column " + cat.name);
    t.groups.push_back({cat.name, cat.categories, width});
    for (const auto& c : cat.categories) t.names.push_back(cat.name + "=" + c);
    width += cat.categories.size();
  }
  t.values = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  t.missing.assign(n * width, 0);

  auto missing = [&](std::size_t a, const std::string& name, std::size_t col) {
    if (policy == MissingPolicy::error) throw MissingFeature(g.activity_id(a) + ": " + name);
    t.set_missing(a, col, true);
  };

  const auto bc = betweenness_centrality(g);
  for (std::size_t a = 0; a < n; ++a) {
    const auto r = static_cast<Eigen::Index>(a);
    for (std::size_t c = 0; c < nc; ++c) {
      if (!attrs.continuous_missing.empty() && attrs.continuous_missing[a * nc + c])
        missing(a, attrs.continuous_names[c], c);
      else
        t.values(r, static_cast<Eigen::Index>(c)) = attrs.continuous(r, static_cast<Eigen::Index>(c));
    }
    const auto col = [&](std::size_t k) { return static_cast<Eigen::Index>(nc + k); };
    if (attrs.t_est[a]) t.values(r, col(0)) = *attrs.t_est[a]; else missing(a, "T_est", nc);
    if (attrs.c_est[a]) t.values(r, col(1)) = *attrs.c_est[a]; else missing(a, "C_est", nc + 1);
    t.values(r, col(2)) = static_cast<double>(g.predecessors(a).size());
    t.values(r, col(3)) = static_cast<double>(g.successors(a).size());
    t.values(r, col(4)) = bc[a];
    t.values(r, col(5)) = static_cast<double>(g.assigned(a).size());
    for (std::size_t k = 0; k < attrs.categorical.size(); ++k) {
      const auto& cat = attrs.categorical[k];
      const auto& grp = t.groups[k];
      const int code = cat.codes[a];
      if (code < 0 || static_cast<std::size_t>(code) >= cat.categories.size()) {
        if (policy == MissingPolicy::error) throw MissingFeature(g.activity_id(a) + ": " + cat.name);
        for (std::size_t j = 0; j < cat.categories.size(); ++j)
          t.set_missing(a, grp.first_column + j, true);
      } else {
        t.values(r, static_cast<Eigen::Index>(grp.first_column + static_cast<std::size_t>(code))) = 1.0;
      }
    }
  }
  if (!t.any_missing()) t.missing.clear();
  return t;
}

}  // namespace pnf
