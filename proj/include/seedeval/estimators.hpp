#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seedeval/design.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/log_math.hpp"
#include "seedeval/seed_set.hpp"
#include "seedeval/stats.hpp"

namespace seedeval {

/// One village's data: observed seed set, outcome, optional arm label and the
/// log-probabilities of the seed set under A, B and the design.
struct VillageObservation {
  std::string village_id;
  SeedSet seed_set;
  double y = 0.0;
  std::optional<Arm> z;
  double log_a = kNegInf;
  double log_b = kNegInf;
  double log_d = kNegInf;
};

inline VillageObservation make_observation(std::string village_id, const VillageDesign& design, SeedSet seeds,
                                           double y, std::optional<Arm> z = std::nullopt) {
  const ProbTriple t = design.log_probs(seeds);
  return {std::move(village_id), std::move(seeds), y, z, t.log_a, t.log_b, t.log_d};
}

/// Importance weights w_A = a / d, w_B = b / d plus outcomes, per village.
struct WeightTable {
  std::vector<double> w_a, w_b, y;
  std::vector<std::optional<Arm>> z;

  std::size_t size() const { return y.size(); }
  double mean_w_a() const { return mean(w_a); }
  double mean_w_b() const { return mean(w_b); }
  bool normalizable() const { return sum(w_a) > 0.0 && sum(w_b) > 0.0; }

  /// w_A / mean(w_A); throws if the weights sum to zero.
  std::vector<double> normalized_a() const { return normalized(w_a, "A"); }
  std::vector<double> normalized_b() const { return normalized(w_b, "B"); }

  static double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  static double mean(const std::vector<double>& v) { return v.empty() ? 0.0 : sum(v) / static_cast<double>(v.size()); }

 private:
  static std::vector<double> normalized(const std::vector<double>& w, const char* arm) {
    const double m = mean(w);
    if (!(m > 0.0))
      throw NumericalError(std::string("Hajek normalization impossible: all weights for strategy ") + arm + " are zero");
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / m;
    return out;
  }
};

/// Converts log-probabilities to weights. Throws PositivityError when a set
/// with p_A != p_B has zero design probability, and NumericalError when
/// `require_normalizable` and either weight column sums to zero.
inline WeightTable compute_weights(std::span<const VillageObservation> obs, bool require_normalizable = true) {
  WeightTable t;
  t.w_a.reserve(obs.size());
  t.w_b.reserve(obs.size());
  t.y.reserve(obs.size());
  for (const auto& o : obs) {
    if (!std::isfinite(o.y)) throw InputError("village " + o.village_id + ": outcome is not finite");
    if (o.log_d == kNegInf) {
      if (o.log_a != o.log_b)
        throw PositivityError("village " + o.village_id + ": positivity violated (design probability 0 where p_A != p_B)");
      throw PositivityError("village " + o.village_id + ": observed seed set lies outside the design support");
    }
    t.w_a.push_back(std::exp(o.log_a - o.log_d));
    t.w_b.push_back(std::exp(o.log_b - o.log_d));
    t.y.push_back(o.y);
    t.z.push_back(o.z);
  }
  if (require_normalizable && !t.normalizable())
    throw NumericalError("Hajek normalization impossible: a weight column sums to zero");
  return t;
}

struct EstimateReport {
  std::string estimator;
  double tau_hat = 0.0;
  double variance = 0.0;  // per-unit V for HT/Hajek (se = sqrt(V/N)); squared SE for DM
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  double p_value = 1.0;
  std::size_t n = 0;
  std::optional<double> n_eff;
  std::vector<std::string> notes;
};

/// Normal-theory interval tau_hat ± z * se and two-sided p-value for tau = 0.
inline EstimateReport normal_ci(EstimateReport r, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  r.level = level;
  if (std::isnan(r.se)) throw NumericalError("standard error is not a number");
  const double half = r.se == 0.0 ? 0.0 : two_sided_z(level) * r.se;
  r.ci_low = r.tau_hat - half;
  r.ci_high = r.tau_hat + half;
  if (r.se == 0.0) {
    r.p_value = r.tau_hat == 0.0 ? 1.0 : 0.0;
  } else if (std::isinf(r.se)) {
    r.p_value = 1.0;
  } else {
    r.p_value = 2.0 * normal_cdf(-std::abs(r.tau_hat) / r.se);
  }
  return r;
}

/// Difference in arm means with the Neyman variance S_A^2/N_A + S_B^2/N_B.
inline EstimateReport diff_in_means(const WeightTable& t, double level = 0.95) {
  std::vector<double> ya, yb;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!t.z[i]) throw NumericalError("difference-in-means estimator is not defined: a village has no arm label");
    (*t.z[i] == Arm::A ? ya : yb).push_back(t.y[i]);
  }
  if (ya.empty() || yb.empty())
    throw NumericalError("difference-in-means estimator is not defined: an arm has no villages");
  if (ya.size() < 2 || yb.size() < 2)
    throw NumericalError("difference-in-means variance needs at least two villages per arm");
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, ss / static_cast<double>(v.size() - 1)};
  };
  const auto [ma, va] = mean_var(ya);
  const auto [mb, vb] = mean_var(yb);
  EstimateReport r;
  r.estimator = "dm";
  r.n = t.size();
  r.tau_hat = ma - mb;
  r.variance = va / static_cast<double>(ya.size()) + vb / static_cast<double>(yb.size());
  r.se = std::sqrt(r.variance);
  return normal_ci(r, level);
}

inline EstimateReport diff_in_means(std::span<const VillageObservation> obs, double level = 0.95) {
  return diff_in_means(compute_weights(obs, false), level);
}

/// tau_hat = mean((w_A - w_B) y), with V = sum((x_i - tau_hat)^2) / (N - 1),
/// the unbiased estimate of N Var(tau_hat) for i.i.d. villages.
inline EstimateReport horvitz_thompson(const WeightTable& t, double level = 0.95) {
  const std::size_t n = t.size();
  if (n == 0) throw NumericalError("Horvitz-Thompson estimator needs at least one village");
  std::vector<double> x(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (t.w_a[i] - t.w_b[i]) * t.y[i];
    sum += x[i];
  }
  EstimateReport r;
  r.estimator = "ht";
  r.n = n;
  r.tau_hat = sum / static_cast<double>(n);
  if (n < 2) {
    r.variance = kInf;
    r.notes.push_back("variance undefined for a single village");
  } else {
    double ss = 0.0;
    for (double xi : x) ss += (xi - r.tau_hat) * (xi - r.tau_hat);
    r.variance = ss / static_cast<double>(n - 1);
  }
  r.se = std::sqrt(r.variance / static_cast<double>(n));
  return normal_ci(r, level);
}

inline EstimateReport horvitz_thompson(std::span<const VillageObservation> obs, double level = 0.95) {
  return horvitz_thompson(compute_weights(obs, false), level);
}

/// Self-normalised contrast tau = mu_A - mu_B with mu = sum(w y) / sum(w) and
///   V = mean((mu_A w_A - mu_B w_B - y (w_A - w_B))^2).
/// Outcomes are centred first; both quantities are invariant to the shift.
inline EstimateReport hajek(const WeightTable& t, double level = 0.95) {
  const std::size_t n = t.size();
  if (n == 0) throw NumericalError("Hajek estimator needs at least one village");
  const double sa = WeightTable::sum(t.w_a);
  const double sb = WeightTable::sum(t.w_b);
  if (!(sa > 0.0) || !(sb > 0.0))
    throw NumericalError("Hajek normalization impossible: a weight column sums to zero");
  const bool constant = std::all_of(t.y.begin(), t.y.end(), [&](double v) { return v == t.y[0]; });
  const double ybar = constant ? t.y[0] : WeightTable::mean(t.y);
  double num_a = 0.0, num_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double yc = t.y[i] - ybar;
    num_a += t.w_a[i] * yc;
    num_b += t.w_b[i] * yc;
  }
  const double mu_a = num_a / sa;
  const double mu_b = num_b / sb;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double yc = t.y[i] - ybar;
    const double term = mu_a * t.w_a[i] - mu_b * t.w_b[i] - yc * (t.w_a[i] - t.w_b[i]);
    ss += term * term;
  }
  EstimateReport r;
  r.estimator = "hajek";
  r.n = n;
  r.tau_hat = mu_a - mu_b;
  r.variance = ss / static_cast<double>(n);
  r.se = std::sqrt(r.variance / static_cast<double>(n));
  return normal_ci(r, level);
}

inline EstimateReport hajek(std::span<const VillageObservation> obs, double level = 0.95) {
  return hajek(compute_weights(obs), level);
}

/// tau / se with the conventions 0/0 = 0 and x/0 = ±inf.
inline double studentized(double tau, double se) {
  if (se == 0.0 || !std::isfinite(se)) {
    if (tau == 0.0 || std::isinf(se)) return 0.0;
    return tau > 0.0 ? kInf : -kInf;
  }
  return tau / se;
}

}  // namespace seedeval
