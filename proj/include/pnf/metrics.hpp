#pragma once

// Accuracy, ranking and calibration metrics plus the paired t-test used to
// compare experiment arms.
//
// MAPE divides by |y| + 1e-8. Spearman is Pearson on average ranks. ECE
// sorts by predicted sigma into equal-frequency bins and averages
// |mean sigma - RMSE| weighted by bin size; the percent form divides by
// mean |y|. PI90 uses the symmetric +-1.645 sigma interval.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "pnf/core/error.hpp"

namespace pnf {

inline constexpr double kZ90 = 1.645;

struct AccuracyMetrics {
  double mae = 0.0, rmse = 0.0, mape = 0.0;
  std::optional<double> r2, spearman;  // empty when the variance is degenerate
};

struct CalibrationMetrics {
  double ece = 0.0;      // target units
  double ece_pct = 0.0;  // 100 * ece / mean |y|
  double coverage = 0.0;  // percent inside the 90% interval
  double width = 0.0;     // mean interval width
};

namespace detail {

inline void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw LengthMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

inline std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  detail::check_lengths(a.size(), b.size(), "spearman");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a), rb = average_ranks(b);
  return detail::pearson(ra, rb);
}

inline AccuracyMetrics accuracy_metrics(std::span<const double> y, std::span<const double> yhat) {
  detail::check_lengths(y.size(), yhat.size(), "accuracy_metrics");
  if (y.empty()) throw TooFewSamples("accuracy_metrics needs at least one sample");
  const double n = static_cast<double>(y.size());
  AccuracyMetrics m;
  double se = 0.0, ss = 0.0;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - yhat[i];
    m.mae += std::abs(e);
    se += e * e;
    m.mape += std::abs(e) / (std::abs(y[i]) + 1e-8);
    ss += (y[i] - mean) * (y[i] - mean);
  }
  m.mae /= n;
  m.rmse = std::sqrt(se / n);
  m.mape *= 100.0 / n;
  if (y.size() >= 2 && ss > 0.0) m.r2 = 1.0 - se / ss;
  m.spearman = spearman(y, yhat);
  return m;
}

/// Equal-frequency bins over sigma sorted ascending: bins of floor(n/M)
/// with the remainder in the last bin, and samples tied with a bin's last
/// sigma pulled into that bin. Returns bin sizes in sorted order.
inline std::vector<std::size_t> equal_frequency_bins(std::span<const double> sorted_sigma, std::size_t bins) {
  const std::size_t n = sorted_sigma.size();
  const std::size_t base = n / bins;
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  for (std::size_t b = 0; b < bins && start < n; ++b) {
    std::size_t end = b + 1 == bins ? n : std::max(start, (b + 1) * base);
    if (end == start && b + 1 < bins) continue;
    while (end < n && end > start && sorted_sigma[end] == sorted_sigma[end - 1]) ++end;
    if (end > start) sizes.push_back(end - start);
    start = end;
  }
  return sizes;
}

inline CalibrationMetrics calibration_metrics(std::span<const double> yhat, std::span<const double> sigma,
                                              std::span<const double> y, std::size_t bins = 10) {
  detail::check_lengths(yhat.size(), sigma.size(), "calibration_metrics");
  detail::check_lengths(yhat.size(), y.size(), "calibration_metrics");
  if (bins == 0 || y.size() < bins)
    throw TooFewSamples("calibration needs at least " + std::to_string(bins) + " samples, got " + std::to_string(y.size()));
  for (double s : sigma)
    if (!(s > 0.0)) throw InvalidConfig("predicted sigma must be positive");
  const std::size_t n = y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] < sigma[b]; });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = sigma[order[i]];

  CalibrationMetrics c;
  std::size_t start = 0;
  for (std::size_t size : equal_frequency_bins(sorted, bins)) {
    double ms = 0.0, se = 0.0;
    for (std::size_t k = start; k < start + size; ++k) {
      const std::size_t i = order[k];
      ms += sigma[i];
      se += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    }
    const double m = static_cast<double>(size);
    c.ece += (m / static_cast<double>(n)) * std::abs(ms / m - std::sqrt(se / m));
    start += size;
  }
  double inside = 0.0, mean_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    inside += std::abs(y[i] - yhat[i]) <= kZ90 * sigma[i];
    c.width += 2.0 * kZ90 * sigma[i];
    mean_abs += std::abs(y[i]);
  }
  c.coverage = 100.0 * inside / static_cast<double>(n);
  c.width /= static_cast<double>(n);
  mean_abs /= static_cast<double>(n);
  c.ece_pct = mean_abs > 0.0 ? 100.0 * c.ece / mean_abs : 0.0;
  return c;
}

struct HeadMetrics {
  AccuracyMetrics accuracy;
  std::optional<CalibrationMetrics> calibration;  // absent without sigma or with too few samples
};

/// Activity-level metrics per head and project-level accuracy of makespan
/// and total cost.
struct MetricsBundle {
  HeadMetrics duration, cost;
  std::optional<AccuracyMetrics> makespan, total_cost;
  std::size_t activities = 0, projects = 0;
};

inline HeadMetrics head_metrics(std::span<const double> y, std::span<const double> mu, std::span<const double> var,
                                std::size_t bins = 10) {
  HeadMetrics h;
  h.accuracy = accuracy_metrics(y, mu);
  if (!var.empty() && y.size() >= bins) {
    std::vector<double> sigma(var.size());
    for (std::size_t i = 0; i < var.size(); ++i) sigma[i] = std::sqrt(var[i]);
    h.calibration = calibration_metrics(mu, sigma, y, bins);
  }
  return h;
}

inline std::vector<std::string> metrics_csv_header() {
  return {"model", "dataset", "seed", "head", "n", "mae", "rmse", "mape", "r2", "spearman", "ece", "ece_pct",
          "pi90_coverage", "pi90_width"};
}

/// One CSV row per head (duration, cost, makespan, total_cost).
inline std::vector<std::vector<std::string>> metrics_csv_rows(const MetricsBundle& b, const std::string& model,
                                                              const std::string& dataset, std::uint64_t seed) {
  auto num = [](std::optional<double> v) {
    if (!v) return std::string("NA");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", *v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> rows;
  auto emit = [&](const char* head, std::size_t n, const AccuracyMetrics& a, const std::optional<CalibrationMetrics>& c) {
    rows.push_back({model, dataset, std::to_string(seed), head, std::to_string(n), num(a.mae), num(a.rmse), num(a.mape),
                    num(a.r2), num(a.spearman), num(c ? std::optional(c->ece) : std::nullopt),
                    num(c ? std::optional(c->ece_pct) : std::nullopt), num(c ? std::optional(c->coverage) : std::nullopt),
                    num(c ? std::optional(c->width) : std::nullopt)});
  };
  emit("duration", b.activities, b.duration.accuracy, b.duration.calibration);
  emit("cost", b.activities, b.cost.accuracy, b.cost.calibration);
  if (b.makespan) emit("makespan", b.projects, *b.makespan, std::nullopt);
  if (b.total_cost) emit("total_cost", b.projects, *b.total_cost, std::nullopt);
  return rows;
}

struct PairedTest {
  double mean_diff = 0.0, t = 0.0, p_value = 1.0;
  std::size_t n = 0;
};

/// One-sided paired t-test of H1: mean(a - b) < 0.
inline PairedTest paired_t_test_less(std::span<const double> a, std::span<const double> b) {
  detail::check_lengths(a.size(), b.size(), "paired_t_test");
  if (a.size() < 2) throw TooFewSamples("paired t-test needs at least two pairs");
  PairedTest r;
  r.n = a.size();
  const double n = static_cast<double>(r.n);
  std::vector<double> d(r.n);
  for (std::size_t i = 0; i < r.n; ++i) d[i] = a[i] - b[i];
  r.mean_diff = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - r.mean_diff) * (v - r.mean_diff);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  if (se == 0.0) {
    r.t = r.mean_diff < 0 ? -INFINITY : r.mean_diff > 0 ? INFINITY : 0.0;
    r.p_value = r.mean_diff < 0 ? 0.0 : r.mean_diff > 0 ? 1.0 : 0.5;
    return r;
  }
  r.t = r.mean_diff / se;
  r.p_value = boost::math::cdf(boost::math::students_t(n - 1.0), r.t);
  return r;
}

}  // namespace pnf
