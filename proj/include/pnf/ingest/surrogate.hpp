#pragma once

// Surrogate phase graphs for tabular effort datasets.
//
// chain4: Analysis -> Design -> Coding -> Testing, equal effort split.
// phase6: Requirements -> Preliminary Design -> Detailed Design ->
//         Code/Unit Test -> Integration -> System Test with weights
//         (.15, .20, .20, .35, .20, .10) renormalised to sum to one.
// module: per-row module list in a "modules" column, formatted as
//         "name:weight:dep1|dep2;name2:weight2:" (weights renormalised).
//
// Project-level drivers are broadcast to every phase node. COCOMO-style
// ratings VL/L/N/H/VH/XH are encoded 1..6. Phase targets are the row effort
// times the phase weight for both duration and cost; planner estimates are
// absent (left to imputation).

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/core/log.hpp"
#include "pnf/ingest/csv.hpp"
#include "pnf/ingest/instance.hpp"

namespace pnf {

enum class SurrogateStrategy { chain4, phase6, module };

inline SurrogateStrategy surrogate_strategy_from_string(std::string_view s) {
  if (s == "chain4") return SurrogateStrategy::chain4;
  if (s == "phase6") return SurrogateStrategy::phase6;
  if (s == "module") return SurrogateStrategy::module;
  throw InvalidConfig("unknown surrogate strategy '" + std::string(s) + "'");
}

struct SurrogateOptions {
  std::string effort_column = "effort";
  std::string id_column;  // optional project identifier column
  std::string modules_column = "modules";
};

struct Phase {
  std::string name;
  double weight;
  std::vector<std::string> depends_on;
};

inline std::vector<Phase> chain4_phases() {
  return {{"Analysis", 0.25, {}}, {"Design", 0.25, {"Analysis"}}, {"Coding", 0.25, {"Design"}},
          {"Testing", 0.25, {"Coding"}}};
}

inline std::vector<Phase> phase6_phases() {
  const std::vector<std::pair<std::string, double>> raw = {
      {"Requirements", 0.15}, {"Preliminary Design", 0.20}, {"Detailed Design", 0.20},
      {"Code/Unit Test", 0.35}, {"Integration", 0.20}, {"System Test", 0.10}};
  double total = 0.0;
  for (const auto& [_, w] : raw) total += w;
  std::vector<Phase> out;
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.push_back({raw[i].first, raw[i].second / total, i ? std::vector<std::string>{raw[i - 1].first}
                                                          : std::vector<std::string>{}});
  return out;
}

/// COCOMO rating to ordinal, or -1 when `s` is not a rating.
inline int ordinal_rating(std::string_view s) {
  static const std::map<std::string, int, std::less<>> table = {{"VL", 1}, {"L", 2},  {"N", 3},
                                                                {"H", 4},  {"VH", 5}, {"XH", 6}};
  auto it = table.find(s);
  return it == table.end() ? -1 : it->second;
}

namespace detail {

inline bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline bool is_blank(std::string_view s) {
  return s.empty() || s == "?" || s == "NA" || s.find_first_not_of(' ') == std::string_view::npos;
}

inline std::vector<Phase> parse_modules(std::string_view spec) {
  std::vector<Phase> out;
  std::size_t start = 0;
  while (start < spec.size()) {
    auto end = spec.find(';', start);
    if (end == std::string_view::npos) end = spec.size();
    const auto item = spec.substr(start, end - start);
    start = end + 1;
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : item.find(':', c1 + 1);
    if (c1 == std::string_view::npos) throw SchemaViolation("module entry '" + std::string(item) + "' lacks a weight");
    Phase ph;
    ph.name = std::string(item.substr(0, c1));
    if (!parse_number(item.substr(c1 + 1, c2 == std::string_view::npos ? std::string_view::npos : c2 - c1 - 1),
                      ph.weight) ||
        ph.weight <= 0)
      throw SchemaViolation("module '" + ph.name + "' has a non-positive weight");
    if (c2 != std::string_view::npos) {
      auto deps = item.substr(c2 + 1);
      std::size_t ds = 0;
      while (ds < deps.size()) {
        auto de = deps.find('|', ds);
        if (de == std::string_view::npos) de = deps.size();
        if (de > ds) ph.depends_on.emplace_back(deps.substr(ds, de - ds));
        ds = de + 1;
      }
    }
    out.push_back(std::move(ph));
  }
  double total = 0.0;
  for (const auto& p : out) total += p.weight;
  for (auto& p : out) p.weight /= total;
  return out;
}

}  // namespace detail

inline std::vector<ProjectInstance> build_surrogate_graph(const CsvTable& table, SurrogateStrategy strategy,
                                                          const SurrogateOptions& opt = {}) {
  const std::size_t effort_col = table.column(opt.effort_column);
  if (effort_col == table.header.size()) throw MissingColumn(opt.effort_column);
  const std::size_t id_col = opt.id_column.empty() ? table.header.size() : table.column(opt.id_column);
  if (!opt.id_column.empty() && id_col == table.header.size()) throw MissingColumn(opt.id_column);
  std::size_t modules_col = table.column(opt.modules_column);
  if (strategy == SurrogateStrategy::module && modules_col == table.header.size()) {
    log::warn("module strategy needs a '" + opt.modules_column + "' column; falling back to phase6");
    strategy = SurrogateStrategy::phase6;
  }

  // Classify driver columns: numeric, ordinal rating, or categorical.
  enum class Kind { numeric, ordinal, categorical };
  std::vector<std::size_t> drivers;
  std::vector<Kind> kinds;
  std::vector<std::vector<std::string>> categories;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == effort_col || c == id_col || c == modules_col) continue;
    bool numeric = true, ordinal = true;
    std::set<std::string> values;
    for (const auto& row : table.rows) {
      if (detail::is_blank(row[c])) continue;
      double v;
      numeric = numeric && detail::parse_number(row[c], v);
      ordinal = ordinal && ordinal_rating(row[c]) > 0;
      values.insert(row[c]);
    }
    drivers.push_back(c);
    kinds.push_back(numeric ? Kind::numeric : ordinal ? Kind::ordinal : Kind::categorical);
    categories.emplace_back(values.begin(), values.end());
  }

  std::vector<ProjectInstance> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    double effort = 0.0;
    if (!detail::parse_number(row[effort_col], effort))
      throw ParseError(r + 2, "numeric " + opt.effort_column);
    std::vector<Phase> phases;
    SurrogateStrategy used = strategy;
    if (strategy == SurrogateStrategy::module) {
      if (detail::is_blank(row[modules_col])) {
        log::warn("row " + std::to_string(r + 2) + " has no modules; using phase6");
        used = SurrogateStrategy::phase6;
      } else {
        phases = detail::parse_modules(row[modules_col]);
      }
    }
    if (used == SurrogateStrategy::chain4) phases = chain4_phases();
    if (used == SurrogateStrategy::phase6) phases = phase6_phases();

    const std::size_t n = phases.size();
    std::vector<std::string> ids(n), phase_names(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids[i] = padded_identifier("a", i + 1, n);
      phase_names[i] = phases[i].name;
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& dep : phases[i].depends_on) {
        auto it = std::find(phase_names.begin(), phase_names.end(), dep);
        if (it == phase_names.end()) throw SchemaViolation("module '" + phases[i].name + "' depends on unknown '" + dep + "'");
        edges.push_back({static_cast<std::size_t>(it - phase_names.begin()), i, Relation::precedence, {}});
      }

    ProjectInstance inst;
    inst.graph = ProjectGraph(ids, {}, std::move(edges));
    auto& act = inst.activities;
    for (std::size_t d = 0; d < drivers.size(); ++d) {
      const auto& name = table.header[drivers[d]];
      if (kinds[d] == Kind::categorical) act.schema.push_back({name, FeatureKind::categorical, categories[d]});
      else act.schema.push_back({name, FeatureKind::continuous, {}});
    }
    act.schema.push_back({"phase_weight", FeatureKind::continuous, {}});
    act.schema.push_back({"phase", FeatureKind::categorical, phase_names});
    act.values = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(act.schema.size()));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ri = static_cast<Eigen::Index>(i);
      for (std::size_t d = 0; d < drivers.size(); ++d) {
        const auto& cell = row[drivers[d]];
        if (detail::is_blank(cell)) {
          act.set_missing(i, d, true);
          continue;
        }
        double v = 0.0;
        switch (kinds[d]) {
          case Kind::numeric: detail::parse_number(cell, v); break;
          case Kind::ordinal: v = ordinal_rating(cell); break;
          case Kind::categorical:
            v = static_cast<double>(std::find(categories[d].begin(), categories[d].end(), cell) - categories[d].begin());
            break;
        }
        act.values(ri, static_cast<Eigen::Index>(d)) = v;
      }
      act.values(ri, static_cast<Eigen::Index>(drivers.size())) = phases[i].weight;
      act.values(ri, static_cast<Eigen::Index>(drivers.size() + 1)) = static_cast<double>(i);
    }
    inst.resources.schema = standard_resource_schema();
    inst.resources.values = Matrix::Zero(0, static_cast<Eigen::Index>(inst.resources.schema.size()));
    inst.t_est.assign(n, std::nullopt);
    inst.c_est.assign(n, std::nullopt);
    inst.t_true.resize(n);
    inst.c_true.resize(n);
    for (std::size_t i = 0; i < n; ++i) inst.t_true[i] = inst.c_true[i] = effort * phases[i].weight;
    const std::string name = id_col < table.header.size() ? row[id_col] : "row" + std::to_string(r + 1);
    inst.meta = {{"name", name},
                 {"source", "csv"},
                 {"seed", 0},
                 {"strategy", used == SurrogateStrategy::chain4 ? "chain4" : used == SurrogateStrategy::phase6 ? "phase6" : "module"},
                 {"effort", effort}};
    inst.validate();
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace pnf
