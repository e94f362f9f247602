#pragma once

// Train-only preprocessing of the derived feature tables.
//
// Continuous columns: impute missing with the train median, clip to the
// train 1st/99th percentiles, then z-score with the mean/std of the clipped
// train values (std below 1e-12 is replaced by 1). One-hot groups: the
// vocabulary is the set of categories seen in train plus a trailing UNK
// slot; missing rows take the train mode.
//
// Imputation and clipping are idempotent; the z-score step is not, so
// apply_preprocess must be given raw instances. Clipping can be switched off
// (cut points become the extreme doubles) for data known to be outlier-free.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"
#include "pnf/ingest/instance.hpp"

namespace pnf {

struct ColumnStats {
  std::string name;
  double median = 0.0, lo = 0.0, hi = 0.0, mean = 0.0, std = 1.0;
};

struct GroupStats {
  std::string name;
  std::vector<std::string> vocab;  // observed train categories, UNK excluded
  std::size_t mode = 0;
};

struct TableStats {
  std::vector<ColumnStats> continuous;
  std::vector<GroupStats> groups;

  std::size_t width() const {
    std::size_t w = continuous.size();
    for (const auto& g : groups) w += g.vocab.size() + 1;
    return w;
  }
  std::vector<std::string> output_names() const {
    std::vector<std::string> out;
    for (const auto& c : continuous) out.push_back(c.name);
    for (const auto& g : groups) {
      for (const auto& v : g.vocab) out.push_back(g.name + "=" + v);
      out.push_back(g.name + "=UNK");
    }
    return out;
  }
};

/// Affine map between raw targets and the normalised scale the heads predict.
struct TargetScaler {
  double mean_t = 0.0, std_t = 1.0, mean_c = 0.0, std_c = 1.0;
};

struct PreprocessStats {
  TableStats activity, resource;
  TargetScaler targets;
};

/// Model-ready node features of one instance.
struct ModelInput {
  Matrix activity;
  Matrix resource;
};

/// Linear-interpolation quantile of sorted data (numpy's default rule).
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (pos - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

namespace detail {

inline std::vector<bool> grouped_columns(const FeatureTable& t) {
  std::vector<bool> in_group(t.cols(), false);
  for (const auto& g : t.groups)
    for (std::size_t j = 0; j < g.categories.size(); ++j) in_group[g.first_column + j] = true;
  return in_group;
}

/// Category name of row `r` in group `g`, or empty when missing.
inline std::string group_value(const FeatureTable& t, const OneHotGroup& g, std::size_t r) {
  for (std::size_t j = 0; j < g.categories.size(); ++j) {
    const std::size_t c = g.first_column + j;
    if (t.is_missing(r, c)) return {};
    if (t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) > 0.5) return g.categories[j];
  }
  return {};
}

}  // namespace detail

inline TableStats fit_table(std::span<const FeatureTable> tables, bool winsorize = true) {
  if (tables.empty()) throw EmptyTrainingSet("no training tables");
  TableStats st;
  const auto& first = tables.front();
  const auto in_group = detail::grouped_columns(first);
  for (std::size_t c = 0; c < first.cols(); ++c) {
    if (in_group[c]) continue;
    ColumnStats cs;
    cs.name = first.names[c];
    std::vector<double> vals;
    for (const auto& t : tables) {
      const std::size_t col = t.column(cs.name);
      if (col == t.cols()) throw FeatureDimMismatch("training table lacks column '" + cs.name + "'");
      for (std::size_t r = 0; r < t.rows(); ++r)
        if (!t.is_missing(r, col)) vals.push_back(t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)));
    }
    std::sort(vals.begin(), vals.end());
    cs.median = sorted_quantile(vals, 0.5);
    cs.lo = winsorize ? sorted_quantile(vals, 0.01) : std::numeric_limits<double>::lowest();
    cs.hi = winsorize ? sorted_quantile(vals, 0.99) : std::numeric_limits<double>::max();
    // Moments of the imputed, clipped column; missing entries contribute the median.
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const auto& t : tables) {
      const std::size_t col = t.column(cs.name);
      for (std::size_t r = 0; r < t.rows(); ++r) {
        double v = t.is_missing(r, col) ? cs.median : t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
        v = std::clamp(v, cs.lo, cs.hi);
        sum += v;
        count += 1.0;
      }
    }
    cs.mean = count > 0 ? sum / count : 0.0;
    for (const auto& t : tables) {
      const std::size_t col = t.column(cs.name);
      for (std::size_t r = 0; r < t.rows(); ++r) {
        double v = t.is_missing(r, col) ? cs.median : t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
        v = std::clamp(v, cs.lo, cs.hi) - cs.mean;
        sq += v * v;
      }
    }
    cs.std = count > 0 ? std::sqrt(sq / count) : 0.0;
    if (!(cs.std > 1e-12)) cs.std = 1.0;
    st.continuous.push_back(std::move(cs));
  }
  for (const auto& g : first.groups) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tables) {
      const auto it = std::find_if(t.groups.begin(), t.groups.end(), [&](const OneHotGroup& x) { return x.name == g.name; });
      if (it == t.groups.end()) throw FeatureDimMismatch("training table lacks group '" + g.name + "'");
      for (std::size_t r = 0; r < t.rows(); ++r) {
        auto v = detail::group_value(t, *it, r);
        if (!v.empty()) ++counts[v];
      }
    }
    GroupStats gs;
    gs.name = g.name;
    // Keep the declared category order for categories seen in train.
    for (const auto& c : g.categories)
      if (counts.count(c)) gs.vocab.push_back(c);
    for (const auto& [c, _] : counts)
      if (std::find(gs.vocab.begin(), gs.vocab.end(), c) == gs.vocab.end()) gs.vocab.push_back(c);
    std::size_t best = 0;
    for (std::size_t i = 0; i < gs.vocab.size(); ++i)
      if (counts[gs.vocab[i]] > best) {
        best = counts[gs.vocab[i]];
        gs.mode = i;
      }
    if (gs.vocab.empty()) gs.mode = 0;  // every row will map to UNK
    st.groups.push_back(std::move(gs));
  }
  return st;
}

inline Matrix apply_table(const TableStats& st, const FeatureTable& t) {
  const auto n = static_cast<Eigen::Index>(t.rows());
  Matrix out = Matrix::Zero(n, static_cast<Eigen::Index>(st.width()));
  Eigen::Index oc = 0;
  for (const auto& cs : st.continuous) {
    const std::size_t col = t.column(cs.name);
    if (col == t.cols()) throw FeatureDimMismatch("feature table lacks column '" + cs.name + "'");
    for (Eigen::Index r = 0; r < n; ++r) {
      double v = t.is_missing(static_cast<std::size_t>(r), col) ? cs.median : t.values(r, static_cast<Eigen::Index>(col));
      out(r, oc) = (std::clamp(v, cs.lo, cs.hi) - cs.mean) / cs.std;
    }
    ++oc;
  }
  for (const auto& gs : st.groups) {
    const auto it = std::find_if(t.groups.begin(), t.groups.end(), [&](const OneHotGroup& x) { return x.name == gs.name; });
    for (Eigen::Index r = 0; r < n; ++r) {
      std::size_t slot = gs.vocab.size();  // UNK
      std::string v = it == t.groups.end() ? std::string{} : detail::group_value(t, *it, static_cast<std::size_t>(r));
      if (v.empty()) {
        if (!gs.vocab.empty()) slot = gs.mode;
      } else {
        const auto pos = std::find(gs.vocab.begin(), gs.vocab.end(), v);
        if (pos != gs.vocab.end()) slot = static_cast<std::size_t>(pos - gs.vocab.begin());
      }
      out(r, oc + static_cast<Eigen::Index>(slot)) = 1.0;
    }
    oc += static_cast<Eigen::Index>(gs.vocab.size() + 1);
  }
  return out;
}

/// Mean/std of the labeled train targets; estimates stand in when no
/// training activity is labeled.
inline TargetScaler fit_target_scaler(std::span<const ProjectInstance> train) {
  auto moments = [&](auto pick_true, auto pick_est, double& mean, double& sd) {
    std::vector<double> v;
    for (const auto& inst : train)
      for (std::size_t a = 0; a < inst.num_activities(); ++a)
        if (auto x = pick_true(inst, a)) v.push_back(*x);
    if (v.empty())
      for (const auto& inst : train)
        for (std::size_t a = 0; a < inst.num_activities(); ++a)
          if (auto x = pick_est(inst, a)) v.push_back(*x);
    mean = 0.0;
    sd = 1.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    sd = std::sqrt(sq / static_cast<double>(v.size()));
    if (!(sd > 1e-12)) sd = 1.0;
  };
  TargetScaler s;
  moments([](const ProjectInstance& i, std::size_t a) { return i.t_true[a]; },
          [](const ProjectInstance& i, std::size_t a) { return i.t_est[a]; }, s.mean_t, s.std_t);
  moments([](const ProjectInstance& i, std::size_t a) { return i.c_true[a]; },
          [](const ProjectInstance& i, std::size_t a) { return i.c_est[a]; }, s.mean_c, s.std_c);
  return s;
}

struct PreprocessOptions {
  bool winsorize = true;
};

inline PreprocessStats fit_preprocess(std::span<const ProjectInstance> train, const PreprocessOptions& opt = {}) {
  if (train.empty()) throw EmptyTrainingSet("fit_preprocess needs at least one training instance");
  std::vector<FeatureTable> act, res;
  for (const auto& inst : train) {
    act.push_back(activity_feature_table(inst));
    res.push_back(resource_feature_table(inst));
  }
  return {fit_table(act, opt.winsorize), fit_table(res, opt.winsorize), fit_target_scaler(train)};
}

inline ModelInput apply_preprocess(const PreprocessStats& st, const ProjectInstance& inst) {
  return {apply_table(st.activity, activity_feature_table(inst)), apply_table(st.resource, resource_feature_table(inst))};
}

// JSON form, stored alongside model checkpoints.

inline nlohmann::json to_json(const TableStats& t) {
  nlohmann::json j;
  j["continuous"] = nlohmann::json::array();
  for (const auto& c : t.continuous)
    j["continuous"].push_back({{"name", c.name}, {"median", c.median}, {"lo", c.lo}, {"hi", c.hi}, {"mean", c.mean}, {"std", c.std}});
  j["groups"] = nlohmann::json::array();
  for (const auto& g : t.groups) j["groups"].push_back({{"name", g.name}, {"vocab", g.vocab}, {"mode", g.mode}});
  return j;
}

inline TableStats table_stats_from_json(const nlohmann::json& j) {
  TableStats t;
  for (const auto& c : j.at("continuous"))
    t.continuous.push_back({c.at("name"), c.at("median"), c.at("lo"), c.at("hi"), c.at("mean"), c.at("std")});
  for (const auto& g : j.at("groups")) t.groups.push_back({g.at("name"), g.at("vocab"), g.at("mode")});
  return t;
}

inline nlohmann::json to_json(const PreprocessStats& s) {
  return {{"activity", to_json(s.activity)},
          {"resource", to_json(s.resource)},
          {"targets", {{"mean_t", s.targets.mean_t}, {"std_t", s.targets.std_t}, {"mean_c", s.targets.mean_c}, {"std_c", s.targets.std_c}}}};
}

inline PreprocessStats preprocess_stats_from_json(const nlohmann::json& j) {
  PreprocessStats s;
  s.activity = table_stats_from_json(j.at("activity"));
  s.resource = table_stats_from_json(j.at("resource"));
  const auto& t = j.at("targets");
  s.targets = {t.at("mean_t"), t.at("std_t"), t.at("mean_c"), t.at("std_c")};
  return s;
}

}  // namespace pnf
