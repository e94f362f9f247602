#pragma once

// ProjectInstance: a project graph plus raw attributes, planner estimates,
// ground-truth targets and provenance. This is the dataset unit shared by
// the generator, the parsers, the models and the experiments.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/core/matrix.hpp"
#include "pnf/graph.hpp"

namespace pnf {

enum class FeatureKind { continuous, categorical, auxiliary };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::continuous: return "continuous";
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::auxiliary: return "auxiliary";
  }
  return "?";
}

inline FeatureKind feature_kind_from_string(std::string_view s) {
  if (s == "continuous") return FeatureKind::continuous;
  if (s == "categorical") return FeatureKind::categorical;
  if (s == "auxiliary") return FeatureKind::auxiliary;
  throw SchemaViolation("unknown feature kind '" + std::string(s) + "'");
}

/// One raw attribute column. Auxiliary columns are carried through I/O but
/// never fed to a model (e.g. the generator's skill multiplier).
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  std::vector<std::string> categories;  // categorical only

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Raw attributes of one node type. Categorical entries hold the category
/// index as a double; missing entries are flagged, their value is unspecified.
struct AttributeBlock {
  std::vector<FeatureSpec> schema;
  Matrix values;
  std::vector<std::uint8_t> missing;  // row-major; empty means nothing missing

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return schema.size(); }
  bool is_missing(std::size_t r, std::size_t c) const {
    return !missing.empty() && missing[r * cols() + c] != 0;
  }
  void set_missing(std::size_t r, std::size_t c, bool flag) {
    if (missing.empty()) missing.assign(rows() * cols(), 0);
    missing[r * cols() + c] = flag ? 1 : 0;
  }
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < schema.size(); ++i)
      if (schema[i].name == name) return i;
    return schema.size();
  }
  void compact_missing() {
    for (auto m : missing)
      if (m) return;
    missing.clear();
  }
};

struct ProjectInstance {
  ProjectGraph graph;
  AttributeBlock activities;  // rows follow graph activity order
  AttributeBlock resources;   // rows follow graph resource order
  std::vector<std::optional<double>> t_est, c_est;
  std::vector<std::optional<double>> t_true, c_true;
  double overhead = 0.0;
  /// Topological order the instance was generated in; perturbations keep
  /// consecutive pairs of this order connected. Empty for parsed data.
  std::vector<std::string> generation_order;
  nlohmann::json meta = nlohmann::json::object();  // name, seed, source, config, ...

  std::size_t num_activities() const { return graph.num_activities(); }
  std::string name() const { return meta.value("name", std::string{}); }

  bool fully_labeled() const {
    for (std::size_t a = 0; a < num_activities(); ++a)
      if (!t_true[a] || !c_true[a]) return false;
    return true;
  }

  /// Checks array sizes and graph invariants, including acyclicity.
  void validate() const {
    const std::size_t n = num_activities();
    if (activities.rows() != n || resources.rows() != graph.num_resources())
      throw SchemaViolation("attribute rows do not match graph nodes");
    if (t_est.size() != n || c_est.size() != n || t_true.size() != n || c_true.size() != n)
      throw SchemaViolation("estimate/target arrays do not match activity count");
    for (const auto* block : {&activities, &resources}) {
      if (static_cast<std::size_t>(block->values.cols()) != block->cols())
        throw SchemaViolation("attribute columns do not match schema");
      if (!block->missing.empty() && block->missing.size() != block->rows() * block->cols())
        throw SchemaViolation("missing mask has wrong size");
    }
    (void)topological_sort(graph);
  }
};

/// Model-facing activity attributes: continuous and categorical columns of
/// the raw block (auxiliary columns dropped) plus estimates.
inline ActivityAttributes activity_attributes(const ProjectInstance& inst) {
  ActivityAttributes at;
  const auto& blk = inst.activities;
  const auto n = static_cast<Eigen::Index>(blk.rows());
  std::vector<std::size_t> cont;
  for (std::size_t c = 0; c < blk.cols(); ++c) {
    const auto& spec = blk.schema[c];
    if (spec.kind == FeatureKind::continuous) {
      cont.push_back(c);
      at.continuous_names.push_back(spec.name);
    } else if (spec.kind == FeatureKind::categorical) {
      CategoricalColumn col{spec.name, spec.categories, std::vector<int>(blk.rows(), -1)};
      for (std::size_t r = 0; r < blk.rows(); ++r)
        if (!blk.is_missing(r, c))
          col.codes[r] = static_cast<int>(blk.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      at.categorical.push_back(std::move(col));
    }
  }
  at.continuous.resize(n, static_cast<Eigen::Index>(cont.size()));
  bool any_missing = false;
  std::vector<std::uint8_t> miss(blk.rows() * cont.size(), 0);
  for (std::size_t j = 0; j < cont.size(); ++j)
    for (std::size_t r = 0; r < blk.rows(); ++r) {
      at.continuous(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          blk.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cont[j]));
      if (blk.is_missing(r, cont[j])) {
        miss[r * cont.size() + j] = 1;
        any_missing = true;
      }
    }
  if (any_missing) at.continuous_missing = std::move(miss);
  at.t_est = inst.t_est;
  at.c_est = inst.c_est;
  return at;
}

/// Raw activity feature table in the documented layout (see activity_features).
inline FeatureTable activity_feature_table(const ProjectInstance& inst,
                                           MissingPolicy policy = MissingPolicy::flag) {
  return activity_features(inst.graph, activity_attributes(inst), policy);
}

/// Resource feature table: continuous columns in schema order, then one-hot
/// blocks for categorical columns.
inline FeatureTable resource_feature_table(const ProjectInstance& inst) {
  const auto& blk = inst.resources;
  FeatureTable t;
  std::vector<std::size_t> cont, cat;
  for (std::size_t c = 0; c < blk.cols(); ++c) {
    if (blk.schema[c].kind == FeatureKind::continuous) {
      cont.push_back(c);
      t.names.push_back(blk.schema[c].name);
    } else if (blk.schema[c].kind == FeatureKind::categorical) {
      cat.push_back(c);
    }
  }
  std::size_t width = t.names.size();
  for (std::size_t c : cat) {
    t.groups.push_back({blk.schema[c].name, blk.schema[c].categories, width});
    for (const auto& v : blk.schema[c].categories) t.names.push_back(blk.schema[c].name + "=" + v);
    width += blk.schema[c].categories.size();
  }
  t.values = Matrix::Zero(static_cast<Eigen::Index>(blk.rows()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < blk.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t j = 0; j < cont.size(); ++j) {
      if (blk.is_missing(r, cont[j])) t.set_missing(r, j, true);
      else t.values(row, static_cast<Eigen::Index>(j)) = blk.values(row, static_cast<Eigen::Index>(cont[j]));
    }
    for (std::size_t k = 0; k < cat.size(); ++k) {
      const auto& grp = t.groups[k];
      if (blk.is_missing(r, cat[k])) {
        for (std::size_t j = 0; j < grp.categories.size(); ++j) t.set_missing(r, grp.first_column + j, true);
        continue;
      }
      const auto code = static_cast<std::size_t>(blk.values(row, static_cast<Eigen::Index>(cat[k])));
      if (code < grp.categories.size()) t.values(row, static_cast<Eigen::Index>(grp.first_column + code)) = 1.0;
    }
  }
  if (!t.any_missing()) t.missing.clear();
  return t;
}

/// Standard resource attribute schema used by the generator and parsers.
inline std::vector<FeatureSpec> standard_resource_schema() {
  return {{"mu_hat", FeatureKind::continuous, {}},
          {"var_hat", FeatureKind::continuous, {}},
          {"cost_rate", FeatureKind::continuous, {}},
          {"std_productivity", FeatureKind::continuous, {}},
          {"utilization", FeatureKind::continuous, {}},
          {"skill_level", FeatureKind::continuous, {}},
          {"role", FeatureKind::categorical, {"engineer", "laborer", "equipment"}}};
}

/// Activity targets as plain vectors (NaN where unlabeled).
inline std::vector<double> target_vector(const std::vector<std::optional<double>>& v) {
  std::vector<double> out(v.size(), std::nan(""));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) out[i] = *v[i];
  return out;
}

/// Sorted-by-id zero-padded identifier, e.g. ("a", 7, 120) -> "a0007".
inline std::string padded_identifier(std::string_view prefix, std::size_t index, std::size_t count) {
  std::size_t width = 4;
  for (std::size_t c = count; c >= 10000; c /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

}  // namespace pnf
