#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seedeval/design.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/log_math.hpp"
#include "seedeval/random.hpp"

namespace seedeval {

enum class EssKind { offpolicy_mean, ate_sample, ate_population, offpolicy_ate_sample, offpolicy_ate_population };

inline std::string_view to_string(EssKind k) {
  switch (k) {
    case EssKind::offpolicy_mean: return "offpolicy_mean";
    case EssKind::ate_sample: return "ate_sample";
    case EssKind::ate_population: return "ate_population";
    case EssKind::offpolicy_ate_sample: return "offpolicy_ate_sample";
    case EssKind::offpolicy_ate_population: return "offpolicy_ate_population";
  }
  return "?";
}

/// n_eff may be +inf: the contrast has zero variance because A and B
/// coincide on every sampled set.
struct EssReport {
  EssKind kind = EssKind::ate_sample;
  double n_eff = 0.0;
  double rho = 0.5;
  std::size_t n = 0;
  double relative_efficiency() const { return n_eff / static_cast<double>(n); }
};

namespace detail {
inline void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InputError("rho must lie in (0, 1)");
}
inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}
}  // namespace detail

/// Kish effective sample size of a weighted mean: (sum w)^2 / sum w^2.
inline double ess_offpolicy_mean(std::span<const double> w_a) {
  double s = 0.0, s2 = 0.0;
  for (double w : w_a) {
    s += w;
    s2 += w * w;
  }
  if (!(s > 0.0)) throw NumericalError("effective sample size undefined: all weights are zero");
  return s * s / s2;
}

/// Hajek contrast effective sample size relative to difference-in-means in
/// a Bernoulli(rho) experiment:
///   1/(rho(1-rho)) * N wbar_A^2 wbar_B^2 / mean((wbar_B w_A - wbar_A w_B)^2).
inline double ess_ate_sample(std::span<const double> w_a, std::span<const double> w_b, double rho) {
  detail::check_rho(rho);
  if (w_a.size() != w_b.size() || w_a.empty()) throw InputError("weight columns must be nonempty and equally long");
  const double n = static_cast<double>(w_a.size());
  const double ma = detail::mean(w_a);
  const double mb = detail::mean(w_b);
  double ss = 0.0;
  for (std::size_t i = 0; i < w_a.size(); ++i) {
    const double d = mb * w_a[i] - ma * w_b[i];
    ss += d * d;
  }
  ss /= n;
  if (ss == 0.0) return kInf;
  return n * ma * ma * mb * mb / (rho * (1.0 - rho) * ss);
}

/// Off-policy special case (w_B = 1):
///   1/(rho(1-rho)) * N wbar_A^2 / mean((w_A - wbar_A)^2).
inline double ess_offpolicy_ate(std::span<const double> w_a, double rho) {
  detail::check_rho(rho);
  if (w_a.empty()) throw InputError("weight column must be nonempty");
  const double n = static_cast<double>(w_a.size());
  const double ma = detail::mean(w_a);
  double ss = 0.0;
  for (double w : w_a) ss += (w - ma) * (w - ma);
  ss /= n;
  if (ss == 0.0) return kInf;
  return n * ma * ma / (rho * (1.0 - rho) * ss);
}

/// Monte Carlo population moment E[((P_A - P_B) / P_design)^2]: the mean
/// over villages of per-village averages over `draws` design samples.
/// Village i draws from substream (seed, i).
inline double expected_squared_weight_gap(std::span<const VillageDesign> designs, std::size_t draws,
                                          std::uint64_t seed, unsigned threads = 0) {
  if (designs.empty()) throw InputError("population effective sample size needs at least one village");
  if (draws < 100) throw InputError("population effective sample size needs at least 100 draws per village");
  std::vector<double> per_village(designs.size(), 0.0);
  parallel_for(designs.size(), resolve_threads(threads), [&](std::size_t i) {
    Rng rng = make_stream(seed, {0xe55, i});
    double acc = 0.0;
    for (std::size_t r = 0; r < draws; ++r) {
      const DesignDraw draw = designs[i].sample(rng);
      const ProbTriple p = designs[i].log_probs(draw.seeds);
      const double gap = std::exp(p.log_a - p.log_d) - std::exp(p.log_b - p.log_d);
      acc += gap * gap;
    }
    per_village[i] = acc / static_cast<double>(draws);
  });
  return detail::mean(per_village);
}

/// Population effective sample size of the Hajek contrast under the given
/// designs: 1/(rho(1-rho)) * N / E[((P_A - P_B)/P_design)^2].
inline EssReport ess_population(std::span<const VillageDesign> designs, double rho, std::size_t draws,
                                std::uint64_t seed, unsigned threads = 0) {
  detail::check_rho(rho);
  EssReport rep;
  rep.kind = EssKind::ate_population;
  rep.rho = rho;
  rep.n = designs.size();
  const double m = expected_squared_weight_gap(designs, draws, seed, threads);
  rep.n_eff = m == 0.0 ? kInf : static_cast<double>(rep.n) / (rho * (1.0 - rho) * m);
  return rep;
}

/// Off-policy population version for data drawn from B alone:
///   1/(rho(1-rho)) * N / Var_B(W_A),  Var_B(W_A) = E_B[W_A^2] - 1,
/// with E_B[W_A^2] estimated by sampling from B. For single(A) designs the
/// roles of A and B swap.
inline EssReport ess_offpolicy_ate_population(std::span<const VillageDesign> designs, double rho, std::size_t draws,
                                              std::uint64_t seed, unsigned threads = 0) {
  detail::check_rho(rho);
  if (designs.empty()) throw InputError("population effective sample size needs at least one village");
  if (draws < 100) throw InputError("population effective sample size needs at least 100 draws per village");
  std::vector<double> per_village(designs.size(), 0.0);
  parallel_for(designs.size(), resolve_threads(threads), [&](std::size_t i) {
    const bool from_a = designs[i].spec().single == Arm::A;
    const StrategyModel& a = from_a ? designs[i].strategy_b() : designs[i].strategy_a();
    const StrategyModel& b = from_a ? designs[i].strategy_a() : designs[i].strategy_b();
    Rng rng = make_stream(seed, {0xe55, i});
    double acc = 0.0;
    for (std::size_t r = 0; r < draws; ++r) {
      const SeedSet s = b.sample(rng);
      const double w = std::exp(a.log_prob(s) - b.log_prob(s));
      acc += w * w;
    }
    per_village[i] = acc / static_cast<double>(draws) - 1.0;
  });
  EssReport rep;
  rep.kind = EssKind::offpolicy_ate_population;
  rep.rho = rho;
  rep.n = designs.size();
  const double var = detail::mean(per_village);
  rep.n_eff = var <= 0.0 ? kInf : static_cast<double>(rep.n) / (rho * (1.0 - rho) * var);
  return rep;
}

}  // namespace seedeval
