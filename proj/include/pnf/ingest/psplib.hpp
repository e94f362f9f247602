#pragma once

// Single-mode PSPLIB ".sm" parser (J30/J60/J120 layout).
//
// Each job becomes an activity "j0001"...; each resource (renewable R,
// nonrenewable N, doubly constrained D) becomes a resource node. Activity
// features are per-resource requests divided by availability. Durations
// serve as both estimate and duration target; the cost target is
// sum_k request_k * duration at unit rate 1.0.

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/ingest/instance.hpp"

namespace pnf {

namespace detail {

class SmReader {
 public:
  explicit SmReader(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines_.emplace_back(line);
      if (end == text.size()) break;
      start = end + 1;
    }
  }

  /// 1-based number of the line most recently returned.
  std::size_t line_number() const { return pos_; }
  std::size_t end_line() const { return lines_.size() + 1; }

  /// Next line that is not blank and not a "***" or "---" rule.
  std::optional<std::string_view> next_content() {
    while (pos_ < lines_.size()) {
      std::string_view l = lines_[pos_++];
      const auto first = l.find_first_not_of(" \t");
      if (first == std::string_view::npos) continue;
      if (l.substr(first, 3) == "***" || l.substr(first, 3) == "---") continue;
      return l.substr(first);
    }
    return std::nullopt;
  }

  /// Advance to the line starting with `heading`; ParseError naming it otherwise.
  void seek(std::string_view heading, const std::string& what) {
    while (auto l = next_content())
      if (l->starts_with(heading)) return;
    throw ParseError(end_line(), what);
  }

  /// The next content line, or ParseError(expected) at end of input.
  std::string_view require(const std::string& expected) {
    auto l = next_content();
    if (!l) throw ParseError(end_line(), expected);
    return *l;
  }

  static std::vector<std::string_view> words(std::string_view l) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < l.size()) {
      while (i < l.size() && (l[i] == ' ' || l[i] == '\t' || l[i] == ':')) ++i;
      std::size_t j = i;
      while (j < l.size() && l[j] != ' ' && l[j] != '\t' && l[j] != ':') ++j;
      if (j > i) out.push_back(l.substr(i, j - i));
      i = j;
    }
    return out;
  }

  long integer(std::string_view w, const std::string& expected) const {
    long v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || p != w.data() + w.size()) throw ParseError(pos_, expected);
    return v;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ProjectInstance parse_psplib(std::string_view text, std::string name = "psplib") {
  detail::SmReader in(text);
  using R = detail::SmReader;

  // Header: job count and resource counts.
  long jobs = -1;
  std::vector<std::string> res_ids;
  std::vector<std::string> res_roles;
  for (;;) {
    auto l = in.next_content();
    if (!l) throw ParseError(in.end_line(), "PRECEDENCE RELATIONS section");
    if (l->starts_with("PRECEDENCE RELATIONS")) break;
    auto w = R::words(*l);
    if (w.empty()) continue;
    if (w[0] == "jobs") {
      jobs = in.integer(w.back(), "job count");
    } else if (w[0] == "-" && w.size() >= 3) {
      const char prefix = w[1] == "renewable" ? 'R' : w[1] == "nonrenewable" ? 'N' : 'D';
      const long count = in.integer(w[w.size() >= 4 && (w[1] == "doubly") ? 3 : 2], "resource count");
      for (long k = 0; k < count; ++k) {
        res_ids.push_back(std::string(1, prefix) + std::to_string(k + 1));
        res_roles.push_back(prefix == 'R' ? "laborer" : "equipment");
      }
    }
  }
  if (jobs < 2) throw ParseError(in.line_number(), "job count header before PRECEDENCE RELATIONS");
  const auto n = static_cast<std::size_t>(jobs);
  const std::size_t k_res = res_ids.size();

  // Precedence: jobnr #modes #successors successors...
  (void)in.require("precedence column header");
  std::vector<std::vector<std::size_t>> succ(n);
  std::size_t declared_successors = 0;
  for (std::size_t j = 0; j < n; ++j) {
    auto w = R::words(in.require("precedence row for job " + std::to_string(j + 1)));
    if (w.size() < 3) throw ParseError(in.line_number(), "jobnr, #modes, #successors");
    if (in.integer(w[0], "job number") != static_cast<long>(j + 1))
      throw ParseError(in.line_number(), "job number " + std::to_string(j + 1));
    const long modes = in.integer(w[1], "mode count");
    if (modes != 1)
      throw UnsupportedFormat("job " + std::to_string(j + 1) + " has " + std::to_string(modes) +
                              " modes; split multi-mode files into one single-mode file per mode first");
    const long ns = in.integer(w[2], "successor count");
    if (ns < 0 || w.size() != 3 + static_cast<std::size_t>(ns))
      throw ParseError(in.line_number(), std::to_string(ns) + " successor ids");
    for (long s = 0; s < ns; ++s) {
      const long id = in.integer(w[3 + static_cast<std::size_t>(s)], "successor id");
      if (id < 1 || id > jobs) throw ParseError(in.line_number(), "successor id in 1.." + std::to_string(jobs));
      succ[j].push_back(static_cast<std::size_t>(id - 1));
    }
    declared_successors += static_cast<std::size_t>(ns);
  }

  // Requests/durations: jobnr mode duration r1..rK.
  in.seek("REQUESTS/DURATIONS", "REQUESTS/DURATIONS section");
  (void)in.require("requests column header");
  std::vector<double> duration(n);
  Matrix request = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_res));
  for (std::size_t j = 0; j < n; ++j) {
    auto w = R::words(in.require("request row for job " + std::to_string(j + 1)));
    if (w.size() != 3 + k_res)
      throw ParseError(in.line_number(), "jobnr, mode, duration and " + std::to_string(k_res) + " requests");
    if (in.integer(w[0], "job number") != static_cast<long>(j + 1))
      throw ParseError(in.line_number(), "job number " + std::to_string(j + 1));
    const long dur = in.integer(w[2], "duration");
    if (dur < 0) throw ParseError(in.line_number(), "non-negative duration");
    duration[j] = static_cast<double>(dur);
    for (std::size_t k = 0; k < k_res; ++k)
      request(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          static_cast<double>(in.integer(w[3 + k], "resource request"));
  }

  in.seek("RESOURCEAVAILABILITIES", "RESOURCEAVAILABILITIES section");
  (void)in.require("availability column header");
  auto aw = R::words(in.require("resource availability values"));
  if (aw.size() != k_res) throw ParseError(in.line_number(), std::to_string(k_res) + " availability values");
  std::vector<double> avail(k_res);
  for (std::size_t k = 0; k < k_res; ++k) avail[k] = static_cast<double>(in.integer(aw[k], "availability"));

  // Assemble the instance.
  std::vector<std::string> act_ids(n);
  for (std::size_t j = 0; j < n; ++j) act_ids[j] = padded_identifier("j", j + 1, n);
  std::vector<Edge> edges;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t s : succ[j]) edges.push_back({j, s, Relation::precedence, {}});
  Matrix normalized = Matrix::Zero(request.rows(), request.cols());
  for (std::size_t k = 0; k < k_res; ++k)
    if (avail[k] > 0) normalized.col(static_cast<Eigen::Index>(k)) = request.col(static_cast<Eigen::Index>(k)) / avail[k];
  std::vector<std::vector<bool>> shares(k_res, std::vector<bool>(k_res, false));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> used;
    for (std::size_t k = 0; k < k_res; ++k) {
      const double r = normalized(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      if (request(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) > 0) {
        edges.push_back({j, n + k, Relation::assignment, {r}});
        used.push_back(k);
      }
    }
    for (std::size_t a = 0; a < used.size(); ++a)
      for (std::size_t b = a + 1; b < used.size(); ++b) shares[used[a]][used[b]] = true;
  }
  for (std::size_t a = 0; a < k_res; ++a)
    for (std::size_t b = a + 1; b < k_res; ++b)
      if (shares[a][b]) edges.push_back({n + a, n + b, Relation::collaboration, {}});

  ProjectInstance inst;
  try {
    inst.graph = ProjectGraph(act_ids, res_ids, std::move(edges));
  } catch (const InvalidGraph& e) {
    throw ParseError(in.line_number(), std::string("consistent precedence relations (") + e.what() + ")");
  }
  const auto sched = compute_schedule(inst.graph, duration);  // surfaces CycleDetected

  auto& act = inst.activities;
  for (const auto& id : res_ids) act.schema.push_back({id, FeatureKind::continuous, {}});
  act.values = normalized;
  inst.t_est.resize(n);
  inst.c_est.resize(n);
  inst.t_true.resize(n);
  inst.c_true.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double cost = request.row(static_cast<Eigen::Index>(j)).sum() * duration[j];
    inst.t_est[j] = inst.t_true[j] = duration[j];
    inst.c_est[j] = inst.c_true[j] = cost;
  }

  auto& res = inst.resources;
  res.schema = standard_resource_schema();
  res.values = Matrix::Zero(static_cast<Eigen::Index>(k_res), static_cast<Eigen::Index>(res.schema.size()));
  for (std::size_t k = 0; k < k_res; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    double used = 0.0;
    for (std::size_t j = 0; j < n; ++j) used += request(static_cast<Eigen::Index>(j), r) * duration[j];
    const double capacity = avail[k] * sched.makespan;
    res.values(r, 0) = 1.0;
    res.values(r, 1) = 0.25;
    res.values(r, 2) = 1.0;
    res.values(r, 3) = 1.0;
    res.values(r, 4) = capacity > 0 ? used / capacity : 0.0;
    res.values(r, 5) = 1.0;
    res.values(r, 6) = res_roles[k] == "laborer" ? 1.0 : 2.0;
  }
  inst.meta = {{"name", std::move(name)},
               {"source", "psplib"},
               {"seed", 0},
               {"jobs", n},
               {"successor_count", declared_successors},
               {"availability", avail},
               {"cpm_makespan", sched.makespan}};
  return inst;
}

}  // namespace pnf
