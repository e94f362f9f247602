#pragma once

// Canonical JSON project format, schema version "pnf-1".
//
// {
//   "schema_version": "pnf-1",
//   "meta": {"name": ..., "seed": ..., "source": ..., ...},
//   "feature_schema": {"activity": [{"name", "kind", "categories"?}],
//                      "resource": [...]},
//   "activities": [{"id", "features": {name: number|string|null},
//                   "T_est", "C_est", "T"?, "C"?}],
//   "resources":  [{"id", "features": {...}}],
//   "edges":      [{"src", "dst", "relation", "features": [...]}],
//   "overhead": number,
//   "generation_order": [ids]   (optional)
// }

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/ingest/instance.hpp"

namespace pnf {

inline constexpr const char* canonical_schema_version = "pnf-1";

namespace detail {

inline nlohmann::json schema_to_json(const std::vector<FeatureSpec>& schema) {
  auto arr = nlohmann::json::array();
  for (const auto& f : schema) {
    nlohmann::json j = {{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
    if (f.kind == FeatureKind::categorical) j["categories"] = f.categories;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::json features_to_json(const AttributeBlock& blk, std::size_t row) {
  auto obj = nlohmann::json::object();
  for (std::size_t c = 0; c < blk.cols(); ++c) {
    const auto& f = blk.schema[c];
    if (blk.is_missing(row, c)) {
      obj[f.name] = nullptr;
      continue;
    }
    const double v = blk.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c));
    if (f.kind == FeatureKind::categorical) obj[f.name] = f.categories.at(static_cast<std::size_t>(v));
    else obj[f.name] = v;
  }
  return obj;
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// Navigation helper producing SchemaViolation("<path>: <reason>").
class Reader {
 public:
  [[noreturn]] static void fail(const std::string& path, const std::string& reason) {
    throw SchemaViolation(path + ": " + reason);
  }
  static const nlohmann::json& field(const nlohmann::json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
  }
  static double number(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected number");
    return v.get<double>();
  }
  static std::string string(const nlohmann::json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected string");
    return v.get<std::string>();
  }
  static std::optional<double> optional_number(const nlohmann::json& obj, const std::string& key,
                                               const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return number(*it, path + "." + key);
  }
};

inline std::vector<FeatureSpec> schema_from_json(const nlohmann::json& arr, const std::string& path) {
  if (!arr.is_array()) Reader::fail(path, "expected array");
  std::vector<FeatureSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    FeatureSpec f;
    f.name = Reader::string(Reader::field(arr[i], "name", p), p + ".name");
    try {
      f.kind = feature_kind_from_string(Reader::string(Reader::field(arr[i], "kind", p), p + ".kind"));
    } catch (const SchemaViolation&) {
      Reader::fail(p + ".kind", "unknown kind");
    }
    if (f.kind == FeatureKind::categorical) {
      const auto& cats = Reader::field(arr[i], "categories", p);
      if (!cats.is_array()) Reader::fail(p + ".categories", "expected array");
      for (const auto& c : cats) f.categories.push_back(Reader::string(c, p + ".categories"));
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline void features_from_json(const nlohmann::json& obj, const std::string& path, AttributeBlock& blk,
                               std::size_t row) {
  if (!obj.is_object()) Reader::fail(path, "expected object");
  for (const auto& [key, _] : obj.items())
    if (blk.column(key) == blk.cols()) Reader::fail(path + "." + key, "feature not declared in feature_schema");
  for (std::size_t c = 0; c < blk.cols(); ++c) {
    const auto& f = blk.schema[c];
    const std::string p = path + "." + f.name;
    auto it = obj.find(f.name);
    auto& cell = blk.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c));
    if (it == obj.end() || it->is_null()) {
      blk.set_missing(row, c, true);
      cell = 0.0;
      continue;
    }
    if (f.kind == FeatureKind::categorical) {
      const auto s = Reader::string(*it, p);
      auto pos = std::find(f.categories.begin(), f.categories.end(), s);
      if (pos == f.categories.end()) Reader::fail(p, "category '" + s + "' not in schema");
      cell = static_cast<double>(pos - f.categories.begin());
    } else {
      cell = Reader::number(*it, p);
    }
  }
}

}  // namespace detail

inline nlohmann::json canonical_json(const ProjectInstance& inst) {
  using nlohmann::json;
  const auto& g = inst.graph;
  json doc;
  doc["schema_version"] = canonical_schema_version;
  doc["meta"] = inst.meta;
  doc["feature_schema"] = {{"activity", detail::schema_to_json(inst.activities.schema)},
                           {"resource", detail::schema_to_json(inst.resources.schema)}};
  auto acts = json::array();
  for (std::size_t a = 0; a < g.num_activities(); ++a) {
    json j = {{"id", g.activity_id(a)},
              {"features", detail::features_to_json(inst.activities, a)},
              {"T_est", detail::optional_number(inst.t_est[a])},
              {"C_est", detail::optional_number(inst.c_est[a])}};
    if (inst.t_true[a]) j["T"] = *inst.t_true[a];
    if (inst.c_true[a]) j["C"] = *inst.c_true[a];
    acts.push_back(std::move(j));
  }
  doc["activities"] = std::move(acts);
  auto res = json::array();
  for (std::size_t r = 0; r < g.num_resources(); ++r)
    res.push_back({{"id", g.resource_ids()[r]}, {"features", detail::features_to_json(inst.resources, r)}});
  doc["resources"] = std::move(res);
  auto edges = json::array();
  for (const auto& e : g.edges())
    edges.push_back({{"src", g.node_id(e.src)},
                     {"dst", g.node_id(e.dst)},
                     {"relation", std::string(to_string(e.relation))},
                     {"features", e.features}});
  doc["edges"] = std::move(edges);
  doc["overhead"] = inst.overhead;
  if (!inst.generation_order.empty()) doc["generation_order"] = inst.generation_order;
  return doc;
}

inline std::string write_canonical(const ProjectInstance& inst) { return canonical_json(inst).dump(1) + "\n"; }

inline ProjectInstance instance_from_json(const nlohmann::json& doc) {
  using detail::Reader;
  if (!doc.is_object()) Reader::fail("$", "expected object");
  const auto version = Reader::string(Reader::field(doc, "schema_version", "$"), "$.schema_version");
  if (version != canonical_schema_version)
    throw VersionMismatch("document version '" + version + "', expected '" + canonical_schema_version + "'");

  ProjectInstance inst;
  if (auto it = doc.find("meta"); it != doc.end()) {
    if (!it->is_object()) Reader::fail("$.meta", "expected object");
    inst.meta = *it;
  }
  const auto& fs = Reader::field(doc, "feature_schema", "$");
  inst.activities.schema = detail::schema_from_json(Reader::field(fs, "activity", "$.feature_schema"),
                                                    "$.feature_schema.activity");
  inst.resources.schema = detail::schema_from_json(Reader::field(fs, "resource", "$.feature_schema"),
                                                   "$.feature_schema.resource");

  const auto& acts = Reader::field(doc, "activities", "$");
  const auto& res = Reader::field(doc, "resources", "$");
  if (!acts.is_array()) Reader::fail("$.activities", "expected array");
  if (!res.is_array()) Reader::fail("$.resources", "expected array");
  const std::size_t n = acts.size(), m = res.size();

  std::vector<std::string> act_ids(n), res_ids(m);
  inst.activities.values = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(inst.activities.cols()));
  inst.resources.values = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(inst.resources.cols()));
  inst.t_est.resize(n);
  inst.c_est.resize(n);
  inst.t_true.resize(n);
  inst.c_true.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::string p = "$.activities[" + std::to_string(a) + "]";
    act_ids[a] = Reader::string(Reader::field(acts[a], "id", p), p + ".id");
    detail::features_from_json(Reader::field(acts[a], "features", p), p + ".features", inst.activities, a);
    inst.t_est[a] = Reader::optional_number(acts[a], "T_est", p);
    inst.c_est[a] = Reader::optional_number(acts[a], "C_est", p);
    inst.t_true[a] = Reader::optional_number(acts[a], "T", p);
    inst.c_true[a] = Reader::optional_number(acts[a], "C", p);
  }
  for (std::size_t r = 0; r < m; ++r) {
    const std::string p = "$.resources[" + std::to_string(r) + "]";
    res_ids[r] = Reader::string(Reader::field(res[r], "id", p), p + ".id");
    detail::features_from_json(Reader::field(res[r], "features", p), p + ".features", inst.resources, r);
  }
  inst.activities.compact_missing();
  inst.resources.compact_missing();

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t a = 0; a < n; ++a) index.emplace(act_ids[a], a);
  for (std::size_t r = 0; r < m; ++r) index.emplace(res_ids[r], n + r);
  const auto& edges_json = Reader::field(doc, "edges", "$");
  if (!edges_json.is_array()) Reader::fail("$.edges", "expected array");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < edges_json.size(); ++i) {
    const std::string p = "$.edges[" + std::to_string(i) + "]";
    const auto& e = edges_json[i];
    auto endpoint = [&](const char* key) {
      const auto id = Reader::string(Reader::field(e, key, p), p + "." + key);
      auto it = index.find(id);
      if (it == index.end()) Reader::fail(p + "." + key, "unknown node id '" + id + "'");
      return it->second;
    };
    Edge edge;
    edge.src = endpoint("src");
    edge.dst = endpoint("dst");
    try {
      edge.relation = relation_from_string(Reader::string(Reader::field(e, "relation", p), p + ".relation"));
    } catch (const InvalidGraph&) {
      Reader::fail(p + ".relation", "unknown relation");
    }
    if (auto it = e.find("features"); it != e.end()) {
      if (!it->is_array()) Reader::fail(p + ".features", "expected array");
      for (const auto& v : *it) edge.features.push_back(Reader::number(v, p + ".features"));
    }
    edges.push_back(std::move(edge));
  }
  try {
    inst.graph = ProjectGraph(std::move(act_ids), std::move(res_ids), std::move(edges));
  } catch (const InvalidGraph& e) {
    Reader::fail("$.edges", e.what());
  }
  if (auto it = doc.find("overhead"); it != doc.end()) inst.overhead = Reader::number(*it, "$.overhead");
  if (auto it = doc.find("generation_order"); it != doc.end()) {
    if (!it->is_array()) Reader::fail("$.generation_order", "expected array");
    for (const auto& id : *it) {
      const auto s = Reader::string(id, "$.generation_order");
      if (!inst.graph.find_activity(s)) Reader::fail("$.generation_order", "unknown activity '" + s + "'");
      inst.generation_order.push_back(s);
    }
  }
  inst.validate();
  return inst;
}

inline ProjectInstance read_canonical(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaViolation(std::string("$: malformed JSON: ") + e.what());
  }
  return instance_from_json(doc);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IOError", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IOError", "cannot write '" + path + "'");
  out << text;
}

}  // namespace pnf
