#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seedeval/design.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/estimators.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/random.hpp"
#include "seedeval/seed_set.hpp"
#include "seedeval/stats.hpp"
#include "seedeval/strategies.hpp"

namespace seedeval {

/// Which way influence flows over an edge u -> v. With `along_edges`
/// (the default) u's adoption affects v: probit peers of v are its
/// in-neighbours and cascades spread over out-edges. `against_edges` reverses
/// both, so nominees influence the people who named them.
enum class Influence { along_edges, against_edges };

inline std::string_view to_string(Influence d) { return d == Influence::along_edges ? "along" : "against"; }

inline Influence parse_influence(std::string_view s) {
  if (s == "along" || s == "along_edges") return Influence::along_edges;
  if (s == "against" || s == "against_edges") return Influence::against_edges;
  throw InputError("unknown influence direction '" + std::string(s) + "'");
}

struct ProbitParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  int T = 3;
  Influence direction = Influence::along_edges;

  void validate() const {
    if (T < 1) throw InputError("probit model needs T >= 1");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
      throw InputError("probit coefficients must be finite");
  }
};

struct CascadeParams {
  double p = 0.0;
  Influence direction = Influence::along_edges;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("cascade probability p must lie in [0, 1]");
  }
};

/// Probit linear-in-means contagion. Node j adopts at step t when
///   alpha + beta * Z_j + gamma * X + eps > 0,
/// Z_j = share of j's peers that had adopted at t-1 (0 without peers),
/// X = summed in-degree of the seeds. Adopters never revert.
/// eps is realised as U(j, t) < Phi(eta), so a fixed `noise` couples runs
/// with different seed sets.
inline double simulate_probit(const DirectedGraph& g, const SeedSet& seeds, const ProbitParams& params,
                              const CounterUniform& noise) {
  params.validate();
  const std::size_t n = g.node_count();
  if (n == 0) return 0.0;
  std::vector<char> prev(n, 0), cur(n, 0);
  double x = 0.0;
  for (NodeId s : seeds.nodes()) {
    if (s >= n) throw InputError("seed node out of range");
    prev[s] = 1;
    x += static_cast<double>(g.in_degree(s));
  }
  const double base = params.alpha + params.gamma * x;
  for (int t = 1; t <= params.T; ++t) {
    for (NodeId j = 0; j < n; ++j) {
      if (prev[j]) {
        cur[j] = 1;
        continue;
      }
      const auto in = params.direction == Influence::along_edges ? g.in_neighbors(j) : g.out_neighbors(j);
      double z = 0.0;
      if (!in.empty()) {
        std::size_t on = 0;
        for (NodeId u : in) on += prev[u];
        z = static_cast<double>(on) / static_cast<double>(in.size());
      }
      cur[j] = noise.at(j, static_cast<std::uint64_t>(t)) < normal_cdf(base + params.beta * z);
    }
    std::swap(prev, cur);
  }
  std::size_t adopters = 0;
  for (char a : prev) adopters += a;
  return static_cast<double>(adopters) / static_cast<double>(n);
}

inline double simulate_probit(const DirectedGraph& g, const SeedSet& seeds, const ProbitParams& params, Rng& rng) {
  return simulate_probit(g, seeds, params, CounterUniform(rng()));
}

/// Discrete-time independent cascade: each newly activated node gets one
/// chance to activate each neighbour it influences, succeeding when the
/// coin U(from, to) < p. Runs until a step adds nobody.
inline double simulate_cascade(const DirectedGraph& g, const SeedSet& seeds, const CascadeParams& params,
                               const CounterUniform& noise) {
  params.validate();
  const std::size_t n = g.node_count();
  if (n == 0) return 0.0;
  std::vector<char> active(n, 0);
  std::vector<NodeId> frontier;
  for (NodeId s : seeds.nodes()) {
    if (s >= n) throw InputError("seed node out of range");
    active[s] = 1;
    frontier.push_back(s);
  }
  std::size_t count = frontier.size();
  std::vector<NodeId> next;
  while (!frontier.empty()) {
    next.clear();
    for (NodeId u : frontier)
      for (NodeId v : params.direction == Influence::along_edges ? g.out_neighbors(u) : g.in_neighbors(u))
        if (!active[v] && noise.at(u, v) < params.p) {
          active[v] = 1;
          next.push_back(v);
        }
    count += next.size();
    std::swap(frontier, next);
  }
  return static_cast<double>(count) / static_cast<double>(n);
}

inline double simulate_cascade(const DirectedGraph& g, const SeedSet& seeds, const CascadeParams& params, Rng& rng) {
  return simulate_cascade(g, seeds, params, CounterUniform(rng()));
}

enum class ModelKind { probit, cascade };

inline std::string_view to_string(ModelKind m) { return m == ModelKind::probit ? "probit" : "cascade"; }

inline ModelKind parse_model(std::string_view s) {
  if (s == "probit") return ModelKind::probit;
  if (s == "cascade" || s == "ic") return ModelKind::cascade;
  throw InputError("unknown outcome model '" + std::string(s) + "'");
}

/// Outcome model for simulated experiments. With `ignore_seeds` the model
/// runs from an empty seed set (and X = 0), so outcomes satisfy the sharp
/// null while keeping the model's noise structure.
struct OutcomeModel {
  ModelKind kind = ModelKind::probit;
  ProbitParams probit;
  CascadeParams cascade;
  bool ignore_seeds = false;

  void validate() const { kind == ModelKind::probit ? probit.validate() : cascade.validate(); }
};

inline double simulate(const DirectedGraph& g, const SeedSet& seeds, const OutcomeModel& model,
                       const CounterUniform& noise) {
  static const SeedSet empty;
  const SeedSet& s = model.ignore_seeds ? empty : seeds;
  return model.kind == ModelKind::probit ? simulate_probit(g, s, model.probit, noise)
                                         : simulate_cascade(g, s, model.cascade, noise);
}

struct TrueEffect {
  double tau = 0.0;
  double se = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t reps = 0;
};

/// Monte Carlo estimand: average over villages of E[y | A] - E[y | B].
/// Replicate r draws fresh seed sets from both strategies in every village
/// and reuses one noise realisation for the pair (common random numbers).
inline TrueEffect true_effect_oracle(const VillageCollection& villages, StrategyKind a, StrategyKind b, std::size_t k,
                                     const OutcomeModel& model, std::size_t reps, std::uint64_t seed,
                                     unsigned threads = 0) {
  if (reps < 100) throw InputError("true effect oracle needs at least 100 replicates");
  if (villages.villages.empty()) throw InputError("true effect oracle needs at least one village");
  model.validate();
  std::vector<StrategyModel> ma, mb;
  for (const auto& v : villages.villages) {
    ma.emplace_back(v.graph, a, k);
    mb.emplace_back(v.graph, b, k);
  }
  const std::size_t m = villages.villages.size();
  std::vector<double> ya(reps), yb(reps);
  parallel_for(reps, resolve_threads(threads), [&](std::size_t r) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      Rng rng = make_stream(seed, {0x0ac1e, r, i});
      const SeedSet s_a = ma[i].sample(rng);
      const SeedSet s_b = mb[i].sample(rng);
      const CounterUniform noise(stream_key(seed, {0x0ac1e, r, i, 1}));
      sa += simulate(villages.villages[i].graph, s_a, model, noise);
      sb += simulate(villages.villages[i].graph, s_b, model, noise);
    }
    ya[r] = sa / static_cast<double>(m);
    yb[r] = sb / static_cast<double>(m);
  });
  TrueEffect te;
  te.reps = reps;
  double sd = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    te.mean_a += ya[r];
    te.mean_b += yb[r];
  }
  te.mean_a /= static_cast<double>(reps);
  te.mean_b /= static_cast<double>(reps);
  te.tau = te.mean_a - te.mean_b;
  for (std::size_t r = 0; r < reps; ++r) {
    const double d = ya[r] - yb[r] - te.tau;
    sd += d * d;
  }
  te.se = std::sqrt(sd / static_cast<double>(reps - 1) / static_cast<double>(reps));
  return te;
}

enum class EstimatorKind { dm, ht, hajek };

inline std::string_view to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::dm: return "dm";
    case EstimatorKind::ht: return "ht";
    case EstimatorKind::hajek: return "hajek";
  }
  return "?";
}

inline EstimatorKind parse_estimator(std::string_view s) {
  if (s == "dm") return EstimatorKind::dm;
  if (s == "ht") return EstimatorKind::ht;
  if (s == "hajek") return EstimatorKind::hajek;
  throw InputError("unknown estimator '" + std::string(s) + "'");
}

inline EstimateReport run_estimator(EstimatorKind e, const WeightTable& t, double level) {
  switch (e) {
    case EstimatorKind::dm: return diff_in_means(t, level);
    case EstimatorKind::ht: return horvitz_thompson(t, level);
    case EstimatorKind::hajek: return hajek(t, level);
  }
  throw InputError("unknown estimator");
}

struct StudyConfig {
  std::size_t n_villages = 50;
  std::size_t replicates = 1000;
  std::size_t k = 2;
  DesignSpec design;
  OutcomeModel model;
  std::vector<EstimatorKind> estimators{EstimatorKind::dm, EstimatorKind::ht, EstimatorKind::hajek};
  double level = 0.9;
  bool with_replacement = false;
  std::size_t oracle_reps = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct EstimatorSummary {
  EstimatorKind estimator = EstimatorKind::hajek;
  std::vector<std::optional<EstimateReport>> replicates;  // nullopt: failed
  std::size_t failures = 0;
  double bias = 0.0;
  double rmse = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  double power = 0.0;
};

struct StudyResult {
  TrueEffect truth;
  double level = 0.9;
  std::vector<EstimatorSummary> estimators;

  const EstimatorSummary& get(EstimatorKind e) const {
    for (const auto& s : estimators)
      if (s.estimator == e) return s;
    throw InputError("estimator '" + std::string(to_string(e)) + "' was not part of the study");
  }
};

/// Repeated simulated experiments on a collection. Each replicate samples
/// N villages, draws (z, S) from the design, simulates outcomes and runs
/// every estimator; an estimator failure is recorded for that estimator
/// only. Metrics use the successful replicates and the oracle tau.
inline StudyResult run_study(const VillageCollection& villages, const StudyConfig& cfg) {
  cfg.model.validate();
  const std::size_t m = villages.villages.size();
  if (cfg.n_villages < 1) throw InputError("study needs at least one village per replicate");
  if (!cfg.with_replacement && cfg.n_villages > m)
    throw InputError("cannot sample " + std::to_string(cfg.n_villages) + " of " + std::to_string(m) +
                     " villages without replacement");
  if (cfg.replicates < 1) throw InputError("study needs at least one replicate");
  if (cfg.estimators.empty()) throw InputError("study needs at least one estimator");

  std::vector<VillageDesign> designs;
  designs.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    designs.emplace_back(villages.villages[i].graph, cfg.k, cfg.design, stream_key(cfg.seed, {0xde5, i}));

  StudyResult res;
  res.level = cfg.level;
  res.truth = true_effect_oracle(villages, cfg.design.a, cfg.design.b, cfg.k, cfg.model, cfg.oracle_reps,
                                 stream_key(cfg.seed, {0x7a0}), cfg.threads);
  for (EstimatorKind e : cfg.estimators) {
    EstimatorSummary s;
    s.estimator = e;
    s.replicates.resize(cfg.replicates);
    res.estimators.push_back(std::move(s));
  }

  parallel_for(cfg.replicates, resolve_threads(cfg.threads), [&](std::size_t r) {
    Rng pick = make_stream(cfg.seed, {0x5a3, r});
    std::vector<NodeId> chosen;
    if (cfg.with_replacement) {
      std::uniform_int_distribution<std::size_t> u(0, m - 1);
      for (std::size_t j = 0; j < cfg.n_villages; ++j) chosen.push_back(static_cast<NodeId>(u(pick)));
    } else {
      chosen = uniform_k_subset(m, cfg.n_villages, pick);
    }
    WeightTable t;
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const std::size_t i = chosen[j];
      Rng rng = make_stream(cfg.seed, {0x5a3, r, j, i});
      const DesignDraw draw = designs[i].sample(rng);
      const ProbTriple p = designs[i].log_probs(draw.seeds);
      const CounterUniform noise(stream_key(cfg.seed, {0x5a3, r, j, i, 1}));
      t.w_a.push_back(std::exp(p.log_a - p.log_d));
      t.w_b.push_back(std::exp(p.log_b - p.log_d));
      t.y.push_back(simulate(villages.villages[i].graph, draw.seeds, cfg.model, noise));
      t.z.push_back(draw.z);
    }
    for (auto& s : res.estimators) {
      try {
        s.replicates[r] = run_estimator(s.estimator, t, cfg.level);
      } catch (const NumericalError&) {
        s.replicates[r] = std::nullopt;
      }
    }
  });

  const double tau = res.truth.tau;
  for (auto& s : res.estimators) {
    std::size_t ok = 0, covered = 0, rejected = 0;
    double err = 0.0, sq = 0.0, se = 0.0;
    for (const auto& rep : s.replicates) {
      if (!rep) {
        ++s.failures;
        continue;
      }
      ++ok;
      err += rep->tau_hat - tau;
      sq += (rep->tau_hat - tau) * (rep->tau_hat - tau);
      se += rep->se;
      if (rep->ci_low <= tau && tau <= rep->ci_high) ++covered;
      if (rep->ci_low > 0.0 || rep->ci_high < 0.0) ++rejected;
    }
    if (ok == 0) continue;
    const double d = static_cast<double>(ok);
    s.bias = err / d;
    s.rmse = std::sqrt(sq / d);
    s.mean_se = se / d;
    s.coverage = static_cast<double>(covered) / d;
    s.power = static_cast<double>(rejected) / d;
  }
  return res;
}

}  // namespace seedeval
