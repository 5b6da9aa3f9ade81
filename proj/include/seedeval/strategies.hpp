#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seedeval/combinations.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/log_math.hpp"
#include "seedeval/random.hpp"
#include "seedeval/seed_set.hpp"

namespace seedeval {

// ---------------------------------------------------------------------------
// Node-level one-hop weights
// ---------------------------------------------------------------------------

/// f[v] = sum over in-neighbours u of 1 / out_degree(u): n times the chance
/// that a uniformly drawn nominator names v.
struct NodeWeightTable {
  std::vector<double> f;
  std::vector<double> log_f;
  std::size_t positive = 0;  // nodes with f > 0
};

inline NodeWeightTable node_weights(const DirectedGraph& g) {
  NodeWeightTable t;
  const std::size_t n = g.node_count();
  t.f.assign(n, 0.0);
  for (const Edge& e : g.edges()) t.f[e.dst] += 1.0 / static_cast<double>(g.out_degree(e.src));
  t.log_f.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    t.log_f[v] = t.f[v] > 0.0 ? std::log(t.f[v]) : kNegInf;
    if (t.f[v] > 0.0) ++t.positive;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Closed-form probabilities
// ---------------------------------------------------------------------------

inline LogProb random_log_prob(std::size_t n, std::size_t k) {
  if (k > n) throw InputError("seed set larger than the graph");
  return {-log_binomial(n, k)};
}

inline LogProb random_log_prob(const DirectedGraph& g, const SeedSet& s) {
  return random_log_prob(g.node_count(), s.size());
}

/// log(k! * prod_{v in s} f_v / n): probability that k independent one-hop
/// draws produce exactly the nodes of s in some order.
inline LogProb onehop_logprob_with_replacement(const NodeWeightTable& w, std::size_t n, const SeedSet& s) {
  const std::size_t k = s.size();
  double acc = log_factorial(k) - static_cast<double>(k) * std::log(static_cast<double>(n));
  for (NodeId v : s.nodes()) {
    if (w.log_f[v] == kNegInf) return LogProb::zero();
    acc += w.log_f[v];
  }
  return {acc};
}

inline LogProb onehop_logprob_with_replacement(const DirectedGraph& g, const SeedSet& s) {
  return onehop_logprob_with_replacement(node_weights(g), g.node_count(), s);
}

/// log e_0 .. log e_k of the values exp(log_x): the elementary symmetric
/// polynomials, by the subset-sum recursion
///   S(j, l) = S(j-1, l-1) * x_j + S(j-1, l)
/// carried out in log space, O(n k).
inline std::vector<double> log_elementary_symmetric(std::span<const double> log_x, std::size_t k) {
  std::vector<double> s(k + 1, kNegInf);
  s[0] = 0.0;
  std::size_t seen = 0;
  for (double lx : log_x) {
    ++seen;
    if (lx == kNegInf) continue;
    for (std::size_t l = std::min(k, seen); l >= 1; --l) s[l] = log_add(s[l], s[l - 1] + lx);
  }
  return s;
}

/// Total with-replacement probability mass on distinct k-sets:
///   pi = k! / n^k * e_k(f).
inline LogProb pi_exact_dp(const NodeWeightTable& w, std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw InputError("pi requires 1 <= k <= n");
  const double log_ek = log_elementary_symmetric(w.log_f, k)[k];
  if (log_ek == kNegInf) return LogProb::zero();
  return {log_factorial(k) - static_cast<double>(k) * std::log(static_cast<double>(n)) + log_ek};
}

inline LogProb pi_exact_dp(const DirectedGraph& g, std::size_t k) {
  return pi_exact_dp(node_weights(g), g.node_count(), k);
}

/// pi by summing over every k-subset; throws if C(n, k) exceeds `cap`.
inline LogProb pi_enumerate(const DirectedGraph& g, std::size_t k, std::uint64_t cap) {
  const std::size_t n = g.node_count();
  if (k < 1 || k > n) throw InputError("pi requires 1 <= k <= n");
  if (binomial_capped(n, k, cap) > cap) throw InputError("enumeration cap exceeded");
  const NodeWeightTable w = node_weights(g);
  std::vector<double> terms;
  for_each_combination(n, k, [&](std::span<const NodeId> c) {
    double acc = 0.0;
    for (NodeId v : c) acc += w.log_f[v];
    terms.push_back(acc);
  });
  const double total = log_sum_exp(terms);
  if (total == kNegInf) return LogProb::zero();
  return {log_factorial(k) - static_cast<double>(k) * std::log(static_cast<double>(n)) + total};
}

/// Renormalises a with-replacement probability by pi. A set with positive
/// mass under pi = 0 is an internal inconsistency.
inline LogProb onehop_log_prob(LogProb with_replacement, LogProb pi) {
  if (with_replacement.is_zero()) return LogProb::zero();
  if (pi.is_zero()) throw NumericalError("one-hop normaliser is zero for a set with positive probability");
  return {with_replacement.value - pi.value};
}

inline LogProb onehop_log_prob(const DirectedGraph& g, const SeedSet& s, LogProb pi) {
  return onehop_log_prob(onehop_logprob_with_replacement(g, s), pi);
}

/// One-hop probability conditional on drawing counts[b] seeds inside each
/// block b. f is taken from the full graph; each block is normalised by its
/// own elementary symmetric polynomial.
inline LogProb blocked_onehop_log_prob(const DirectedGraph& g, std::span<const std::size_t> block_of,
                                       std::span<const std::size_t> counts, const SeedSet& s) {
  const std::size_t n = g.node_count();
  if (block_of.size() != n) throw InputError("block assignment must cover every node");
  std::vector<std::size_t> observed(counts.size(), 0);
  for (NodeId v : s.nodes()) {
    if (block_of[v] >= counts.size()) return LogProb::zero();
    ++observed[block_of[v]];
  }
  for (std::size_t b = 0; b < counts.size(); ++b)
    if (observed[b] != counts[b]) return LogProb::zero();

  const NodeWeightTable w = node_weights(g);
  double acc = 0.0;
  for (NodeId v : s.nodes()) {
    if (w.log_f[v] == kNegInf) return LogProb::zero();
    acc += w.log_f[v];
  }
  std::vector<std::vector<double>> block_log_f(counts.size());
  for (std::size_t v = 0; v < n; ++v)
    if (block_of[v] < counts.size()) block_log_f[block_of[v]].push_back(w.log_f[v]);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    const double log_e = log_elementary_symmetric(block_log_f[b], counts[b])[counts[b]];
    if (log_e == kNegInf) throw NumericalError("block " + std::to_string(b) + " cannot host its seed count");
    acc -= log_e;
  }
  return {acc};
}

/// Uniform random targeting restricted to the same per-block counts.
inline LogProb blocked_random_log_prob(std::span<const std::size_t> block_of, std::span<const std::size_t> counts,
                                       const SeedSet& s) {
  std::vector<std::size_t> size(counts.size(), 0), observed(counts.size(), 0);
  for (std::size_t b : block_of)
    if (b < counts.size()) ++size[b];
  for (NodeId v : s.nodes()) {
    if (v >= block_of.size() || block_of[v] >= counts.size()) return LogProb::zero();
    ++observed[block_of[v]];
  }
  double acc = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (observed[b] != counts[b]) return LogProb::zero();
    acc -= log_binomial(size[b], counts[b]);
  }
  return {acc};
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of pi
// ---------------------------------------------------------------------------

struct PiEstimate {
  LogProb log_pi;
  double variance_estimate = 0.0;  // (N^2 / R) S_p^2
  double variance_bound = 0.0;     // (N^2 / 4R) (p_max - p_min)^2
  std::size_t samples = 0;
  bool exact = false;
  bool stratified = false;  // variance_estimate then uses the i.i.d. formula and is approximate
  double pi() const { return log_pi.prob(); }
};

/// Draws k distinct nodes uniformly (partial Fisher-Yates), sorted.
inline std::vector<NodeId> uniform_k_subset(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) throw InputError("seed set larger than the graph");
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

/// Unbiased estimate of pi from R uniformly drawn distinct k-sets:
///   pi_hat = (N / R) sum_i X_i,  N = C(n, k),
/// where X_i is the with-replacement probability of the i-th set. In
/// stratified mode each uniform shuffle of the nodes is cut into ceil(n / k)
/// consecutive sets; a short final chunk is completed with uniformly chosen
/// nodes from the rest of the shuffle, which keeps every set marginally uniform.
inline PiEstimate pi_monte_carlo(const DirectedGraph& g, std::size_t k, std::size_t R, Rng& rng,
                                 bool stratified = false) {
  const std::size_t n = g.node_count();
  if (R < 2) throw InputError("pi_monte_carlo needs R >= 2");
  if (k < 1 || k > n) throw InputError("pi requires 1 <= k <= n");
  const NodeWeightTable w = node_weights(g);
  const double log_norm = log_factorial(k) - static_cast<double>(k) * std::log(static_cast<double>(n));
  const double log_count = log_binomial(n, k);

  std::vector<double> sorted_lf = w.log_f;
  std::sort(sorted_lf.begin(), sorted_lf.end());
  double log_pmax = log_norm, log_pmin = log_norm;
  for (std::size_t i = 0; i < k; ++i) {
    log_pmax += sorted_lf[n - 1 - i];
    log_pmin += sorted_lf[i];
  }

  auto set_log_prob = [&](std::span<const NodeId> nodes) {
    double acc = log_norm;
    for (NodeId v : nodes) acc += w.log_f[v];
    return acc;
  };

  // X_i / p_max lies in [0, 1]; accumulate in that scale.
  std::vector<double> scaled;
  scaled.reserve(R);
  if (!stratified) {
    for (std::size_t r = 0; r < R; ++r) {
      const auto s = uniform_k_subset(n, k, rng);
      scaled.push_back(log_pmax == kNegInf ? 0.0 : std::exp(set_log_prob(s) - log_pmax));
    }
  } else {
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::vector<NodeId> chunk;
    while (scaled.size() < R) {
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t start = 0; start < n && scaled.size() < R; start += k) {
        const std::size_t len = std::min(k, n - start);
        chunk.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                     perm.begin() + static_cast<std::ptrdiff_t>(start + len));
        if (len < k) {
          // complete from the other n - len nodes, uniformly without replacement
          std::vector<NodeId> rest(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(start));
          for (std::size_t i = 0; i < k - len; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, rest.size() - 1);
            std::swap(rest[i], rest[pick(rng)]);
            chunk.push_back(rest[i]);
          }
        }
        scaled.push_back(log_pmax == kNegInf ? 0.0 : std::exp(set_log_prob(chunk) - log_pmax));
      }
    }
  }

  double sum = 0.0;
  for (double x : scaled) sum += x;
  const double mean = sum / static_cast<double>(R);
  double ss = 0.0;
  for (double x : scaled) ss += (x - mean) * (x - mean);
  const double s2 = ss / static_cast<double>(R - 1);

  PiEstimate est;
  est.samples = R;
  est.stratified = stratified;
  const double log_r = std::log(static_cast<double>(R));
  est.log_pi = (sum > 0.0 && log_pmax != kNegInf) ? LogProb{log_count - log_r + log_pmax + std::log(sum)}
                                                  : LogProb::zero();
  if (log_pmax != kNegInf) {
    const double scale = std::exp(2.0 * log_count - log_r + 2.0 * log_pmax);
    est.variance_estimate = scale * s2;
    const double spread = 1.0 - std::exp(log_pmin - log_pmax);
    est.variance_bound = scale * 0.25 * spread * spread;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Strategies bound to one graph and seed count
// ---------------------------------------------------------------------------

enum class StrategyKind { random, onehop };

inline std::string_view to_string(StrategyKind k) { return k == StrategyKind::random ? "random" : "onehop"; }

inline StrategyKind parse_strategy(std::string_view name) {
  if (name == "random" || name == "rand") return StrategyKind::random;
  if (name == "onehop" || name == "one-hop" || name == "one_hop") return StrategyKind::onehop;
  throw InputError("unknown strategy '" + std::string(name) + "' (expected random or onehop)");
}

/// A stochastic seeding strategy on a fixed graph with seed count k. Caches
/// node weights and the one-hop normaliser. The graph must outlive it.
class StrategyModel {
 public:
  /// Attempts per sample before giving up on one-hop rejection sampling.
  static constexpr std::size_t kRetryBudget = 1'000'000;
  /// Acceptance probabilities below this are rejected up front.
  static constexpr double kMinAcceptance = 1e-7;

  // Keeps a pointer to the graph, so temporaries are rejected.
  StrategyModel(DirectedGraph&&, StrategyKind, std::size_t) = delete;
  StrategyModel(const DirectedGraph& g, StrategyKind kind, std::size_t k) : graph_(&g), kind_(kind), k_(k) {
    const std::size_t n = g.node_count();
    if (k < 1 || k > n) throw InputError("seed count k must satisfy 1 <= k <= n");
    if (kind_ == StrategyKind::random) {
      log_uniform_ = -log_binomial(n, k);
      return;
    }
    weights_ = node_weights(g);
    log_ek_ = log_elementary_symmetric(weights_.log_f, k)[k];
    for (NodeId u = 0; u < n; ++u)
      if (g.out_degree(u) > 0) nominators_.push_back(u);
    if (log_ek_ != kNegInf) {
      // P(k nominator draws give distinct seeds) = k! e_k(f) / (sum f)^k,
      // with sum f = number of nodes that can nominate.
      log_acceptance_ = log_factorial(k) + log_ek_ -
                        static_cast<double>(k) * std::log(static_cast<double>(nominators_.size()));
    }
  }

  const DirectedGraph& graph() const { return *graph_; }
  StrategyKind kind() const { return kind_; }
  std::size_t k() const { return k_; }
  bool feasible() const { return kind_ == StrategyKind::random || log_ek_ != kNegInf; }

  /// log pi for one-hop (0 for random targeting).
  LogProb log_pi() const {
    if (kind_ == StrategyKind::random) return LogProb::one();
    if (log_ek_ == kNegInf) return LogProb::zero();
    const double n = static_cast<double>(graph_->node_count());
    return {log_factorial(k_) - static_cast<double>(k_) * std::log(n) + log_ek_};
  }

  const NodeWeightTable& weights() const { return weights_; }

  double log_prob(const SeedSet& s) const { return log_prob(s.nodes()); }

  double log_prob(std::span<const NodeId> sorted_nodes) const {
    if (sorted_nodes.size() != k_) return kNegInf;
    if (kind_ == StrategyKind::random) return log_uniform_;
    if (log_ek_ == kNegInf) return kNegInf;
    double acc = -log_ek_;
    for (NodeId v : sorted_nodes) {
      if (weights_.log_f[v] == kNegInf) return kNegInf;
      acc += weights_.log_f[v];
    }
    return acc;
  }

  /// log of the number of sets with positive probability.
  double log_support_size() const {
    const std::size_t n = graph_->node_count();
    if (kind_ == StrategyKind::random) return log_binomial(n, k_);
    return log_binomial(weights_.positive, k_);
  }

  SeedSet sample(Rng& rng) const {
    if (kind_ == StrategyKind::random) return SeedSet::from_sorted(uniform_k_subset(graph_->node_count(), k_, rng));
    if (log_ek_ == kNegInf)
      throw NumericalError("one-hop targeting cannot produce " + std::to_string(k_) + " distinct seeds (pi = 0)");
    if (log_acceptance_ < std::log(kMinAcceptance))
      throw NumericalError("one-hop acceptance probability " + std::to_string(std::exp(log_acceptance_)) +
                           " is below the sampling floor");
    std::uniform_int_distribution<std::size_t> pick_nominator(0, nominators_.size() - 1);
    std::vector<NodeId> seeds;
    seeds.reserve(k_);
    for (std::size_t attempt = 0; attempt < kRetryBudget; ++attempt) {
      seeds.clear();
      bool distinct = true;
      for (std::size_t i = 0; i < k_ && distinct; ++i) {
        // nominators without out-edges are redrawn, hence drawn from the list
        const NodeId u = nominators_[pick_nominator(rng)];
        const auto out = graph_->out_neighbors(u);
        std::uniform_int_distribution<std::size_t> pick_friend(0, out.size() - 1);
        const NodeId v = out[pick_friend(rng)];
        if (std::find(seeds.begin(), seeds.end(), v) != seeds.end()) distinct = false;
        seeds.push_back(v);
      }
      if (distinct) {
        std::sort(seeds.begin(), seeds.end());
        return SeedSet::from_sorted(seeds);
      }
    }
    throw NumericalError("one-hop sampling exhausted " + std::to_string(kRetryBudget) +
                         " attempts (expected acceptance " + std::to_string(std::exp(log_acceptance_)) + ")");
  }

 private:
  const DirectedGraph* graph_;
  StrategyKind kind_;
  std::size_t k_;
  double log_uniform_ = 0.0;
  NodeWeightTable weights_;
  double log_ek_ = kNegInf;
  double log_acceptance_ = kNegInf;
  std::vector<NodeId> nominators_;
};

inline SeedSet sample_random(const DirectedGraph& g, std::size_t k, Rng& rng) {
  return StrategyModel(g, StrategyKind::random, k).sample(rng);
}

inline SeedSet sample_onehop(const DirectedGraph& g, std::size_t k, Rng& rng) {
  return StrategyModel(g, StrategyKind::onehop, k).sample(rng);
}

}  // namespace seedeval
