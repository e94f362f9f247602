#pragma once

// Small graph builders shared by the unit and acceptance tests.

#include <cstdio>
#include <string>
#include <vector>

#include "pnf/core/rng.hpp"
#include "pnf/graph.hpp"

namespace pnf::testing {

inline std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

/// Activities only, edges given as index pairs.
inline ProjectGraph activity_graph(std::vector<std::string> ids,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<Edge> e;
  for (auto [s, d] : edges) e.push_back({s, d, Relation::precedence, {}});
  return ProjectGraph(std::move(ids), {}, std::move(e));
}

inline ProjectGraph chain(std::size_t n) {
  std::vector<std::string> ids;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(padded_id("a", i));
    if (i > 0) edges.emplace_back(i - 1, i);
  }
  return activity_graph(ids, edges);
}

/// A -> B -> D, A -> C -> D.
inline ProjectGraph diamond() { return activity_graph({"A", "B", "C", "D"}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}); }

/// Random DAG on n activities: each forward pair (under a random order) is
/// an edge with probability p.
inline ProjectGraph random_dag(std::size_t n, double p, RandomStream& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(padded_id("n", i));
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(perm[i], perm[j]);
  return activity_graph(ids, edges);
}

}  // namespace pnf::testing
