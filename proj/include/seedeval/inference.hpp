#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seedeval/design.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/estimators.hpp"
#include "seedeval/random.hpp"

namespace seedeval {

enum class TestStatistic { studentized_hajek, hajek, studentized_ht, ht };

inline std::string_view to_string(TestStatistic s) {
  switch (s) {
    case TestStatistic::studentized_hajek: return "studentized_hajek";
    case TestStatistic::hajek: return "hajek";
    case TestStatistic::studentized_ht: return "studentized_ht";
    case TestStatistic::ht: return "ht";
  }
  return "?";
}

inline TestStatistic parse_statistic(std::string_view name) {
  if (name == "studentized_hajek" || name == "t_hajek") return TestStatistic::studentized_hajek;
  if (name == "hajek") return TestStatistic::hajek;
  if (name == "studentized_ht" || name == "t_ht") return TestStatistic::studentized_ht;
  if (name == "ht") return TestStatistic::ht;
  throw InputError("unknown test statistic '" + std::string(name) + "'");
}

/// Throws NumericalError when Hajek normalization fails.
inline double test_statistic(const WeightTable& t, TestStatistic s) {
  switch (s) {
    case TestStatistic::studentized_hajek: {
      const auto r = hajek(t);
      return studentized(r.tau_hat, r.se);
    }
    case TestStatistic::hajek: return hajek(t).tau_hat;
    case TestStatistic::studentized_ht: {
      const auto r = horvitz_thompson(t);
      return studentized(r.tau_hat, r.se);
    }
    case TestStatistic::ht: return horvitz_thompson(t).tau_hat;
  }
  return 0.0;
}

struct FisherOptions {
  std::size_t replicates = 10'000;
  std::uint64_t seed = 0;
  TestStatistic statistic = TestStatistic::studentized_hajek;
  unsigned threads = 0;
};

struct RandomizationResult {
  std::string statistic;
  double observed_stat = 0.0;
  std::vector<double> null_stats;
  double p_value = 1.0;
  std::size_t failed_replicates = 0;  // normalization failures, counted as +inf
};

/// Two-sided Fisher randomization test of the sharp null that outcomes do not
/// depend on the seed set: every replicate redraws all seed sets from the
/// design, keeps the outcomes, and recomputes the statistic.
///   p = (1 + #{|T_r| >= |T_obs|}) / (1 + R)
/// Replicate r draws from substream (seed, r) regardless of thread count.
inline RandomizationResult fisher_test(std::span<const VillageObservation> obs, std::span<const VillageDesign> designs,
                                       const FisherOptions& options) {
  if (obs.size() != designs.size()) throw InputError("one design per observed village is required");
  if (options.replicates < 99) throw InputError("randomization test needs at least 99 replicates");
  RandomizationResult res;
  res.statistic = std::string(to_string(options.statistic));
  res.observed_stat = test_statistic(compute_weights(obs), options.statistic);

  const std::size_t n = obs.size();
  res.null_stats.assign(options.replicates, 0.0);
  std::vector<char> failed(options.replicates, 0);
  parallel_for(options.replicates, resolve_threads(options.threads), [&](std::size_t r) {
    Rng rng = make_stream(options.seed, {0xf15e, r});
    WeightTable t;
    t.w_a.resize(n);
    t.w_b.resize(n);
    t.y.resize(n);
    t.z.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
      const DesignDraw draw = designs[i].sample(rng);
      const ProbTriple p = designs[i].log_probs(draw.seeds);
      t.w_a[i] = std::exp(p.log_a - p.log_d);
      t.w_b[i] = std::exp(p.log_b - p.log_d);
      t.y[i] = obs[i].y;
      t.z[i] = draw.z;
    }
    try {
      res.null_stats[r] = test_statistic(t, options.statistic);
    } catch (const NumericalError&) {
      res.null_stats[r] = kInf;
      failed[r] = 1;
    }
  });

  const double threshold = std::abs(res.observed_stat);
  const double slack = 1e-12 * std::max(1.0, threshold);
  std::size_t extreme = 0;
  for (double s : res.null_stats)
    if (std::abs(s) >= threshold - slack) ++extreme;
  for (char f : failed) res.failed_replicates += f;
  res.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + options.replicates);
  return res;
}

enum class BootstrapEstimator { hajek, ht };

struct BootstrapResult {
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  std::size_t replicates = 0;
  std::size_t dropped = 0;
  std::vector<double> estimates;
};

/// Type-7 (linear interpolation) sample quantile of sorted data.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Village-level nonparametric bootstrap over (w_A, w_B, y) triples.
/// Replicates whose resample cannot be normalised are dropped; more than 20%
/// dropped is an error.
inline BootstrapResult bootstrap(const WeightTable& t, std::size_t B, std::uint64_t seed,
                                 BootstrapEstimator estimator = BootstrapEstimator::hajek, double level = 0.95,
                                 unsigned threads = 0) {
  if (B < 200) throw InputError("bootstrap needs at least 200 replicates");
  const std::size_t n = t.size();
  if (n == 0) throw NumericalError("bootstrap of an empty sample");
  std::vector<double> est(B, 0.0);
  std::vector<char> ok(B, 1);
  parallel_for(B, resolve_threads(threads), [&](std::size_t b) {
    Rng rng = make_stream(seed, {0xb007, b});
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    WeightTable r;
    r.w_a.resize(n);
    r.w_b.resize(n);
    r.y.resize(n);
    r.z.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = pick(rng);
      r.w_a[i] = t.w_a[j];
      r.w_b[i] = t.w_b[j];
      r.y[i] = t.y[j];
    }
    if (estimator == BootstrapEstimator::hajek) {
      if (!r.normalizable()) {
        ok[b] = 0;
        return;
      }
      est[b] = hajek(r).tau_hat;
    } else {
      est[b] = horvitz_thompson(r).tau_hat;
    }
  });

  BootstrapResult res;
  res.level = level;
  for (std::size_t b = 0; b < B; ++b) {
    if (ok[b]) res.estimates.push_back(est[b]);
    else ++res.dropped;
  }
  res.replicates = res.estimates.size();
  if (res.dropped * 5 > B)
    throw NumericalError("bootstrap dropped " + std::to_string(res.dropped) + " of " + std::to_string(B) +
                         " replicates (normalization failures)");
  double m = 0.0;
  for (double e : res.estimates) m += e;
  m /= static_cast<double>(res.replicates);
  double ss = 0.0;
  for (double e : res.estimates) ss += (e - m) * (e - m);
  res.se = res.replicates > 1 ? std::sqrt(ss / static_cast<double>(res.replicates - 1)) : 0.0;
  std::vector<double> sorted = res.estimates;
  std::sort(sorted.begin(), sorted.end());
  res.ci_low = sorted_quantile(sorted, 0.5 - 0.5 * level);
  res.ci_high = sorted_quantile(sorted, 0.5 + 0.5 * level);
  return res;
}

}  // namespace seedeval
