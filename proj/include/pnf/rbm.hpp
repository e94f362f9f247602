#pragma once

// Resource-based duration/cost model: efficiency distributions, per-resource
// time and cost, activity aggregation, moment approximations, crash-cost
// frontier and Monte Carlo rollout of a whole project.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pnf/core/error.hpp"
#include "pnf/core/log.hpp"
#include "pnf/core/rng.hpp"
#include "pnf/graph.hpp"

namespace pnf {

enum class EfficiencyFamily { gaussian, lognormal, beta };

inline std::string_view to_string(EfficiencyFamily f) {
  switch (f) {
    case EfficiencyFamily::gaussian: return "gaussian";
    case EfficiencyFamily::lognormal: return "lognormal";
    case EfficiencyFamily::beta: return "beta";
  }
  return "?";
}

inline EfficiencyFamily efficiency_family_from_string(std::string_view s) {
  if (s == "gaussian") return EfficiencyFamily::gaussian;
  if (s == "lognormal") return EfficiencyFamily::lognormal;
  if (s == "beta") return EfficiencyFamily::beta;
  throw InvalidDistribution("unknown efficiency family '" + std::string(s) + "'");
}

/// Joint efficiency law of the resources assigned to one activity.
///
/// gaussian:  mean/variance are the natural moments.
/// lognormal: mean/variance are the log-space parameters (mu, sigma^2).
/// beta:      mean/variance are natural moments of the variable rescaled to [lower, upper].
///
/// `correlation` is a uniform pairwise correlation of the underlying normals
/// (gaussian and lognormal only), realised through one shared factor.
struct EfficiencyDistribution {
  EfficiencyFamily family = EfficiencyFamily::lognormal;
  std::vector<double> mean;
  std::vector<double> variance;
  double correlation = 0.0;
  double lower = 0.5;
  double upper = 1.5;

  static constexpr double gaussian_floor = 1e-3;

  std::size_t size() const { return mean.size(); }

  void validate() const {
    if (mean.size() != variance.size())
      throw InvalidDistribution("mean and variance lengths differ");
    for (double v : variance)
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidDistribution("variance must be positive");
    if (correlation < 0.0 || correlation >= 1.0)
      throw InvalidDistribution("correlation must lie in [0, 1)");
    if (family == EfficiencyFamily::beta) {
      if (!(lower < upper)) throw InvalidDistribution("beta bounds need lower < upper");
      if (correlation != 0.0) throw InvalidDistribution("beta family does not support correlation");
      for (std::size_t k = 0; k < size(); ++k) (void)beta_shape(k);
    }
  }

  /// Expected efficiency E[R_k].
  double expected(std::size_t k) const {
    return family == EfficiencyFamily::lognormal ? std::exp(mean[k] + 0.5 * variance[k]) : mean[k];
  }

  /// Variance of R_k in natural units.
  double natural_variance(std::size_t k) const {
    if (family != EfficiencyFamily::lognormal) return variance[k];
    return (std::exp(variance[k]) - 1.0) * std::exp(2.0 * mean[k] + variance[k]);
  }

  /// Beta shape parameters (alpha, beta) matching mean/variance on [lower, upper].
  std::pair<double, double> beta_shape(std::size_t k) const {
    const double w = upper - lower;
    const double m = (mean[k] - lower) / w;
    const double v = variance[k] / (w * w);
    if (!(m > 0.0 && m < 1.0) || !(v < m * (1.0 - m)))
      throw InvalidDistribution("beta moments infeasible on [" + std::to_string(lower) + ", " +
                                std::to_string(upper) + "]");
    const double kappa = m * (1.0 - m) / v - 1.0;
    return {m * kappa, (1.0 - m) * kappa};
  }

  /// One joint draw. Gaussian draws below the floor are clamped and counted.
  void sample(RandomStream& rng, std::span<double> out, long& truncated) const {
    const double shared = correlation > 0.0 ? rng.normal() : 0.0;
    const double a = std::sqrt(correlation);
    const double b = std::sqrt(1.0 - correlation);
    for (std::size_t k = 0; k < size(); ++k) {
      switch (family) {
        case EfficiencyFamily::gaussian: {
          const double z = a * shared + b * rng.normal();
          double x = mean[k] + std::sqrt(variance[k]) * z;
          if (x < gaussian_floor) {
            x = gaussian_floor;
            ++truncated;
          }
          out[k] = x;
          break;
        }
        case EfficiencyFamily::lognormal: {
          const double z = a * shared + b * rng.normal();
          out[k] = std::exp(mean[k] + std::sqrt(variance[k]) * z);
          break;
        }
        case EfficiencyFamily::beta: {
          const auto [al, be] = beta_shape(k);
          out[k] = lower + (upper - lower) * rng.beta(al, be);
          break;
        }
      }
    }
  }
};

struct ResourceWork {
  double work = 1.0;          // q_ij, work units
  double productivity = 1.0;  // p_j^s, work units per time
  double cost_rate = 1.0;     // c_j, currency per time
};

struct CrashParams {
  double normal_duration = 1.0;  // T^N
  double min_cost = 0.0;         // C^min
  double a = 1.0;
  double b = 1.0;
};

struct ActivityWorkSpec {
  std::vector<ResourceWork> resources;
  double parallelism = 1.0;  // lambda: 1 serial, 0 fully parallel
  std::optional<CrashParams> crash;

  void validate() const {
    if (resources.empty()) throw EmptyResourceSet("activity has no assigned resources");
    for (const auto& r : resources)
      if (!(r.work > 0.0 && r.productivity > 0.0 && r.cost_rate > 0.0))
        throw InvalidConfig("work, productivity and cost rate must be positive");
    if (parallelism < 0.0 || parallelism > 1.0) throw InvalidConfig("parallelism outside [0, 1]");
    if (crash && !(crash->a > 0.0 && crash->b > 0.0 && crash->normal_duration > 0.0))
      throw InvalidConfig("crash parameters a, b and T^N must be positive");
  }
};

struct ResourceTimeCost {
  double time = 0.0;
  double cost = 0.0;
};

inline std::vector<ResourceTimeCost> resource_time_cost(const ActivityWorkSpec& spec,
                                                        std::span<const double> efficiency) {
  if (efficiency.size() != spec.resources.size())
    throw LengthMismatch("one efficiency per assigned resource expected");
  std::vector<ResourceTimeCost> out(spec.resources.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!(efficiency[j] > 0.0))
      throw NonPositiveEfficiency("efficiency " + std::to_string(efficiency[j]) + " for resource " +
                                  std::to_string(j));
    const auto& r = spec.resources[j];
    out[j].time = r.work / (efficiency[j] * r.productivity);
    out[j].cost = r.cost_rate * out[j].time;
  }
  return out;
}

/// lambda * sum(t) + (1 - lambda) * max(t).
inline double aggregate_duration(std::span<const double> times, double lambda) {
  if (times.empty()) throw EmptyResourceSet("no per-resource times to aggregate");
  double sum = 0.0, mx = times[0];
  for (double t : times) {
    sum += t;
    mx = std::max(mx, t);
  }
  return lambda * sum + (1.0 - lambda) * mx;
}

inline double activity_duration(const ActivityWorkSpec& spec, std::span<const double> efficiency) {
  if (spec.resources.empty()) throw EmptyResourceSet("activity has no assigned resources");
  const auto rc = resource_time_cost(spec, efficiency);
  std::vector<double> t(rc.size());
  for (std::size_t j = 0; j < rc.size(); ++j) t[j] = rc[j].time;
  return aggregate_duration(t, spec.parallelism);
}

inline double activity_cost(const ActivityWorkSpec& spec, std::span<const double> efficiency) {
  if (spec.resources.empty()) throw EmptyResourceSet("activity has no assigned resources");
  double c = 0.0;
  for (const auto& r : resource_time_cost(spec, efficiency)) c += r.cost;
  return c;
}

/// Second-order Taylor approximation of E[T]: sum_j q/(p mu)(1 + sigma^2/mu^2).
/// `means`/`variances` are natural-unit efficiency moments.
inline double expected_duration_taylor(const ActivityWorkSpec& spec, std::span<const double> means,
                                       std::span<const double> variances) {
  if (means.size() != spec.resources.size() || variances.size() != spec.resources.size())
    throw LengthMismatch("one efficiency moment per assigned resource expected");
  double total = 0.0;
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (!(means[j] > 0.0)) throw NonPositiveMean("efficiency mean " + std::to_string(means[j]));
    const auto& r = spec.resources[j];
    total += r.work / (r.productivity * means[j]) * (1.0 + variances[j] / (means[j] * means[j]));
  }
  return total;
}

/// Exact E[1/R] for R ~ LN(mu, sigma^2).
inline double lognormal_inverse_mean(double mu, double sigma2) { return std::exp(-mu + 0.5 * sigma2); }

/// lambda * sum_j (q/p) E[1/R_j] + (1 - lambda) * max_j q/(p E[R_j]).
/// E[1/R] is exact for the lognormal family and the Taylor value otherwise;
/// the max term only sees mean efficiencies.
inline double expected_duration(const ActivityWorkSpec& spec, const EfficiencyDistribution& dist) {
  if (dist.size() != spec.resources.size())
    throw LengthMismatch("one efficiency law per assigned resource expected");
  if (spec.resources.empty()) throw EmptyResourceSet("activity has no assigned resources");
  double sum = 0.0, mx = 0.0;
  for (std::size_t j = 0; j < spec.resources.size(); ++j) {
    const auto& r = spec.resources[j];
    const double mu = dist.expected(j);
    if (!(mu > 0.0)) throw NonPositiveMean("efficiency mean " + std::to_string(mu));
    const double inv = dist.family == EfficiencyFamily::lognormal
                           ? lognormal_inverse_mean(dist.mean[j], dist.variance[j])
                           : (1.0 + dist.natural_variance(j) / (mu * mu)) / mu;
    sum += r.work / r.productivity * inv;
    mx = std::max(mx, r.work / (r.productivity * mu));
  }
  return spec.parallelism * sum + (1.0 - spec.parallelism) * mx;
}

/// C^min + a (exp(b (T^N - T)) - 1) on 0 < T <= T^N.
inline double crash_cost(double duration, const CrashParams& p) {
  if (duration > p.normal_duration * (1.0 + 1e-12))
    throw DurationAboveNormal(std::to_string(duration) + " > " + std::to_string(p.normal_duration));
  if (!(duration > 0.0)) throw InvalidConfig("crash duration must be positive");
  return p.min_cost + p.a * std::expm1(p.b * (p.normal_duration - duration));
}

inline double crash_cost_derivative(double duration, const CrashParams& p) {
  return -p.a * p.b * std::exp(p.b * (p.normal_duration - duration));
}

struct FrontierOptions {
  double floor_fraction = 0.2;  // T_i^min = floor_fraction * T_i^N
  double temperature = 50.0;    // smooth makespan sharpness
  int max_iterations = 400;     // projected-gradient iterations per multiplier
  int multiplier_steps = 60;    // bisection steps on the makespan multiplier
};

namespace detail {

inline std::vector<CrashParams> require_crash(const ProjectGraph& g,
                                              std::span<const std::optional<CrashParams>> crash) {
  if (crash.size() != g.num_activities())
    throw MissingCrashParams("expected crash parameters for every activity");
  std::vector<CrashParams> out;
  out.reserve(crash.size());
  for (std::size_t a = 0; a < crash.size(); ++a) {
    if (!crash[a]) throw MissingCrashParams(g.activity_id(a));
    out.push_back(*crash[a]);
  }
  return out;
}

/// Makespan via a precomputed topological order; no allocation beyond `finish`.
inline double fast_makespan(const ProjectGraph& g, const std::vector<std::size_t>& order,
                            std::span<const double> d, std::vector<double>& finish) {
  finish.resize(order.size());
  double m = 0.0;
  for (std::size_t a : order) {
    double s = 0.0;
    for (std::size_t p : g.predecessors(a)) s = std::max(s, finish[p]);
    finish[a] = s + d[a];
    m = std::max(m, finish[a]);
  }
  return m;
}

/// Smooth makespan: F_a = d_a + LSE_tau(F_pred), value LSE_tau over sinks.
/// Writes dS/dd into `grad`.
inline double smooth_makespan(const ProjectGraph& g, const std::vector<std::size_t>& order,
                              std::span<const double> d, double tau, std::vector<double>& grad) {
  const std::size_t n = order.size();
  std::vector<double> f(n), adj(n, 0.0);
  auto lse = [tau](auto begin, auto end, auto value) {
    double mx = -std::numeric_limits<double>::infinity();
    for (auto it = begin; it != end; ++it) mx = std::max(mx, value(*it));
    double s = 0.0;
    for (auto it = begin; it != end; ++it) s += std::exp(tau * (value(*it) - mx));
    return mx + std::log(s) / tau;
  };
  for (std::size_t a : order) {
    auto preds = g.predecessors(a);
    const double start =
        preds.empty() ? 0.0 : lse(preds.begin(), preds.end(), [&](std::size_t p) { return f[p]; });
    f[a] = d[a] + start;
  }
  std::vector<std::size_t> sinks;
  for (std::size_t a = 0; a < n; ++a)
    if (g.successors(a).empty()) sinks.push_back(a);
  const double value = lse(sinks.begin(), sinks.end(), [&](std::size_t a) { return f[a]; });
  for (std::size_t a : sinks) adj[a] = std::exp(tau * (f[a] - value));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t a = *it;
    auto preds = g.predecessors(a);
    if (preds.empty() || adj[a] == 0.0) continue;
    const double start = f[a] - d[a];
    for (std::size_t p : preds) adj[p] += adj[a] * std::exp(tau * (f[p] - start));
  }
  grad = adj;
  return value;
}

}  // namespace detail

inline double total_crash_cost(std::span<const double> durations, std::span<const CrashParams> crash) {
  double c = 0.0;
  for (std::size_t a = 0; a < durations.size(); ++a) c += crash_cost(durations[a], crash[a]);
  return c;
}

/// Baseline: shrink every activity that is critical at normal durations by a
/// common factor until the makespan meets T_max; if that cannot succeed above
/// the floor, scale all activities instead.
inline std::vector<double> uniform_scaling_durations(const ProjectGraph& g,
                                                     std::span<const std::optional<CrashParams>> crash,
                                                     double t_max, double floor_fraction = 0.2) {
  const auto cp = detail::require_crash(g, crash);
  const auto order = topological_sort(g);
  const std::size_t n = cp.size();
  std::vector<double> normal(n), finish;
  for (std::size_t a = 0; a < n; ++a) normal[a] = cp[a].normal_duration;
  if (detail::fast_makespan(g, order, normal, finish) <= t_max) return normal;
  const auto sched = compute_schedule(g, normal);
  auto scaled = [&](double s, bool all) {
    std::vector<double> d = normal;
    for (std::size_t a = 0; a < n; ++a)
      if (all || sched.is_critical(a)) d[a] = s * normal[a];
    return d;
  };
  for (bool all : {false, true}) {
    if (detail::fast_makespan(g, order, scaled(floor_fraction, all), finish) > t_max) continue;
    double lo = floor_fraction, hi = 1.0;  // lo feasible
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (detail::fast_makespan(g, order, scaled(mid, all), finish) <= t_max) lo = mid; else hi = mid;
    }
    return scaled(lo, all);
  }
  throw Infeasible("T_max " + std::to_string(t_max) + " below floor makespan");
}

/// Minimise sum_i C_i(T_i) subject to makespan <= T_max and
/// floor_fraction * T^N <= T_i <= T^N.
///
/// For a multiplier lambda the smooth problem sum C_i + lambda * S_tau(T) is
/// convex and is solved by diagonally scaled projected gradient with
/// backtracking. Lambda is bisected on the hard makespan, then each activity
/// is relaxed towards T^N by bisection while the hard constraint still holds.
inline std::vector<double> solve_cost_frontier(const ProjectGraph& g,
                                               std::span<const std::optional<CrashParams>> crash,
                                               double t_max, const FrontierOptions& opt = {}) {
  const auto cp = detail::require_crash(g, crash);
  const auto order = topological_sort(g);
  const std::size_t n = cp.size();
  std::vector<double> lo(n), hi(n), finish;
  for (std::size_t a = 0; a < n; ++a) {
    hi[a] = cp[a].normal_duration;
    lo[a] = opt.floor_fraction * hi[a];
  }
  if (detail::fast_makespan(g, order, hi, finish) <= t_max) return hi;
  if (detail::fast_makespan(g, order, lo, finish) > t_max * (1.0 + 1e-12))
    throw Infeasible("T_max " + std::to_string(t_max) + " below makespan at crash floors");

  std::vector<double> warm = hi;
  auto solve_smooth = [&](double lambda) {
    std::vector<double> d = warm, grad, trial(n), step(n);
    auto objective = [&](std::span<const double> x, std::vector<double>* gout) {
      std::vector<double> gs;
      const double s = detail::smooth_makespan(g, order, x, opt.temperature, gs);
      double f = lambda * s;
      for (std::size_t a = 0; a < n; ++a) f += crash_cost(x[a], cp[a]);
      if (gout) {
        gout->resize(n);
        for (std::size_t a = 0; a < n; ++a) (*gout)[a] = crash_cost_derivative(x[a], cp[a]) + lambda * gs[a];
      }
      return f;
    };
    double f = objective(d, &grad);
    for (int it = 0; it < opt.max_iterations; ++it) {
      for (std::size_t a = 0; a < n; ++a) {
        const double curv = cp[a].b * cp[a].b * cp[a].a * std::exp(cp[a].b * (hi[a] - d[a])) +
                            lambda * opt.temperature * 0.25;
        step[a] = grad[a] / curv;
      }
      double t = 1.0, fn = f;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        double decrease = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          trial[a] = std::clamp(d[a] - t * step[a], lo[a], hi[a]);
          decrease += grad[a] * (d[a] - trial[a]);
        }
        fn = objective(trial, nullptr);
        if (fn <= f - 1e-4 * decrease) {
          moved = decrease > 0.0;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      const double change = f - fn;
      d = trial;
      f = objective(d, &grad);
      if (change <= 1e-13 * std::max(1.0, std::abs(f))) break;
    }
    return d;
  };

  double lam_lo = 0.0, lam_hi = 1.0;
  std::vector<double> best;
  for (int it = 0; it < 80; ++it) {
    auto d = solve_smooth(lam_hi);
    if (detail::fast_makespan(g, order, d, finish) <= t_max) {
      best = std::move(d);
      break;
    }
    lam_lo = lam_hi;
    lam_hi *= 4.0;
  }
  if (best.empty()) best = lo;
  for (int it = 0; it < opt.multiplier_steps && lam_hi - lam_lo > 1e-10 * lam_hi; ++it) {
    const double mid = 0.5 * (lam_lo + lam_hi);
    auto d = solve_smooth(mid);
    if (detail::fast_makespan(g, order, d, finish) <= t_max) {
      lam_hi = mid;
      best = std::move(d);
      warm = best;
    } else {
      lam_lo = mid;
    }
  }

  // Relax activities whose slack the smooth relaxation left unused.
  for (int pass = 0; pass < 3; ++pass) {
    bool changed = false;
    for (std::size_t a : g.id_order()) {
      const double keep = best[a];
      best[a] = hi[a];
      if (detail::fast_makespan(g, order, best, finish) <= t_max) {
        changed = changed || hi[a] > keep;
        continue;
      }
      double l = keep, h = hi[a];
      for (int k = 0; k < 60; ++k) {
        best[a] = 0.5 * (l + h);
        if (detail::fast_makespan(g, order, best, finish) <= t_max) l = best[a]; else h = best[a];
      }
      best[a] = l;
      changed = changed || l > keep;
    }
    if (!changed) break;
  }
  return best;
}

struct MonteCarloSummary {
  std::size_t samples = 0;
  double makespan_mean = 0.0;
  double makespan_variance = 0.0;
  double cost_mean = 0.0;
  double cost_variance = 0.0;
  std::vector<std::pair<double, double>> makespan_quantiles;  // (level, value)
  std::vector<std::pair<double, double>> cost_quantiles;
  std::vector<double> duration_mean, duration_variance;  // per activity
  std::vector<double> activity_cost_mean, activity_cost_variance;
  long truncated_draws = 0;
};

struct MonteCarloOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  double overhead = 0.0;
  unsigned threads = 1;
  std::vector<double> quantile_levels = {0.05, 0.5, 0.9, 0.95};
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& s, double level) {
  if (s.size() == 1) return s[0];
  const double pos = level * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  return i + 1 < s.size() ? s[i] + frac * (s[i + 1] - s[i]) : s[i];
}

/// Chan et al. pairwise merge of (count, mean, M2).
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
};

}  // namespace detail

/// Sample efficiencies, durations, costs and makespan. Samples are split into
/// chunks of 1024 with one RNG sub-stream per chunk, so the result does not
/// depend on `threads`.
inline MonteCarloSummary monte_carlo_project(const ProjectGraph& g,
                                             std::span<const ActivityWorkSpec> specs,
                                             std::span<const EfficiencyDistribution> dists,
                                             const MonteCarloOptions& opt) {
  const std::size_t n = g.num_activities();
  if (specs.size() != n || dists.size() != n)
    throw LengthMismatch("one work spec and one efficiency law per activity expected");
  if (opt.samples == 0) throw InvalidConfig("Monte Carlo needs at least one sample");
  for (std::size_t a = 0; a < n; ++a) {
    specs[a].validate();
    dists[a].validate();
    if (dists[a].size() != specs[a].resources.size())
      throw LengthMismatch("efficiency law size differs from resource count for " + g.activity_id(a));
  }
  const auto order = topological_sort(g);
  constexpr std::size_t chunk = 1024;
  const std::size_t chunks = (opt.samples + chunk - 1) / chunk;
  std::vector<double> makespan(opt.samples), cost(opt.samples);
  std::vector<std::vector<detail::Moments>> dur_m(chunks), cost_m(chunks);
  std::vector<long> truncated(chunks, 0);
  const RandomStream root(opt.seed);

  auto run_chunk = [&](std::size_t c) {
    RandomStream rng = root.split("monte_carlo", c);
    std::vector<double> d(n), e, finish;
    dur_m[c].assign(n, {});
    cost_m[c].assign(n, {});
    const std::size_t end = std::min(opt.samples, (c + 1) * chunk);
    for (std::size_t s = c * chunk; s < end; ++s) {
      double total = opt.overhead;
      for (std::size_t a = 0; a < n; ++a) {
        e.resize(dists[a].size());
        dists[a].sample(rng, e, truncated[c]);
        const auto rc = resource_time_cost(specs[a], e);
        double sum = 0.0, mx = 0.0, ca = 0.0;
        for (const auto& r : rc) {
          sum += r.time;
          mx = std::max(mx, r.time);
          ca += r.cost;
        }
        d[a] = specs[a].parallelism * sum + (1.0 - specs[a].parallelism) * mx;
        dur_m[c][a].add(d[a]);
        cost_m[c][a].add(ca);
        total += ca;
      }
      makespan[s] = detail::fast_makespan(g, order, d, finish);
      cost[s] = total;
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(chunks)));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < chunks;) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }

  MonteCarloSummary out;
  out.samples = opt.samples;
  detail::Moments mk, ct;
  for (std::size_t s = 0; s < opt.samples; ++s) {
    mk.add(makespan[s]);
    ct.add(cost[s]);
  }
  out.makespan_mean = mk.mean;
  out.makespan_variance = mk.variance();
  out.cost_mean = ct.mean;
  out.cost_variance = ct.variance();
  std::sort(makespan.begin(), makespan.end());
  std::sort(cost.begin(), cost.end());
  for (double q : opt.quantile_levels) {
    out.makespan_quantiles.emplace_back(q, detail::quantile_sorted(makespan, q));
    out.cost_quantiles.emplace_back(q, detail::quantile_sorted(cost, q));
  }
  out.duration_mean.resize(n);
  out.duration_variance.resize(n);
  out.activity_cost_mean.resize(n);
  out.activity_cost_variance.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    detail::Moments dm, cm;
    for (std::size_t c = 0; c < chunks; ++c) {
      dm.merge(dur_m[c][a]);
      cm.merge(cost_m[c][a]);
    }
    out.duration_mean[a] = dm.mean;
    out.duration_variance[a] = dm.variance();
    out.activity_cost_mean[a] = cm.mean;
    out.activity_cost_variance[a] = cm.variance();
  }
  for (long t : truncated) out.truncated_draws += t;
  if (out.truncated_draws > 0)
    log::warn("gaussian efficiency draws clamped at 1e-3: " + std::to_string(out.truncated_draws));
  return out;
}

}  // namespace pnf
