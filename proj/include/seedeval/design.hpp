#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "seedeval/alias_table.hpp"
#include "seedeval/combinations.hpp"
#include "seedeval/errors.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/log_math.hpp"
#include "seedeval/random.hpp"
#include "seedeval/seed_set.hpp"
#include "seedeval/strategies.hpp"

namespace seedeval {

enum class Arm { A, B };

inline std::string_view to_string(Arm z) { return z == Arm::A ? "A" : "B"; }

enum class DesignVariant { mixture, single, optimized };

inline std::string_view to_string(DesignVariant v) {
  switch (v) {
    case DesignVariant::mixture: return "mixture";
    case DesignVariant::single: return "single";
    case DesignVariant::optimized: return "optimized";
  }
  return "?";
}

/// How seed sets were (or will be) drawn. Strategies `a` and `b` are always
/// the contrasted pair; a single-strategy design draws from arm `single`.
struct DesignSpec {
  DesignVariant variant = DesignVariant::mixture;
  double rho = 0.5;
  StrategyKind a = StrategyKind::onehop;
  StrategyKind b = StrategyKind::random;
  Arm single = Arm::B;
  std::uint64_t enumeration_cap = 1'000'000;
  std::size_t pool_size = 20'000;

  /// Assignment probability of arm A actually used by the design.
  double rho_effective() const {
    if (variant == DesignVariant::mixture) return rho;
    return variant == DesignVariant::single && single == Arm::A ? 1.0 : 0.0;
  }
};

/// Log-probabilities of one seed set under A, B and the design.
struct ProbTriple {
  double log_a = kNegInf;
  double log_b = kNegInf;
  double log_d = kNegInf;
};

struct DesignDraw {
  std::optional<Arm> z;
  SeedSet seeds;
};

/// The design distribution for one village and seed count. Optimized designs
/// are p ∝ |p_A - p_B|, enumerated exactly when C(n, k) <= enumeration_cap and
/// otherwise restricted to a pool of candidate sets drawn half from A and half
/// from B (probabilities are then exact for the pool distribution, which is
/// flagged approximate).
class VillageDesign {
 public:
  VillageDesign(DirectedGraph&&, std::size_t, const DesignSpec&, std::uint64_t = 0) = delete;
  VillageDesign(const DirectedGraph& g, std::size_t k, const DesignSpec& spec, std::uint64_t pool_seed = 0)
      : graph_(&g), k_(k), spec_(spec), a_(g, spec.a, k), b_(g, spec.b, k) {
    if (spec.variant == DesignVariant::mixture && !(spec.rho >= 0.0 && spec.rho <= 1.0))
      throw InputError("mixture rho must lie in [0, 1]");
    for (const StrategyModel* m : {&a_, &b_})
      if (!m->feasible())
        throw NumericalError(std::string(to_string(m->kind())) + " targeting cannot produce " + std::to_string(k) +
                             " distinct seeds (pi = 0)");
    const std::uint64_t count = binomial_capped(g.node_count(), k, spec.enumeration_cap);
    enumerable_ = count <= spec.enumeration_cap;
    if (spec.variant == DesignVariant::optimized) build_optimized(pool_seed);
  }

  const DirectedGraph& graph() const { return *graph_; }
  std::size_t k() const { return k_; }
  const DesignSpec& spec() const { return spec_; }
  const StrategyModel& strategy_a() const { return a_; }
  const StrategyModel& strategy_b() const { return b_; }
  bool enumerable() const { return enumerable_; }
  bool approximate() const { return spec_.variant == DesignVariant::optimized && !enumerable_; }

  ProbTriple log_probs(std::span<const NodeId> sorted_nodes) const {
    ProbTriple t{a_.log_prob(sorted_nodes), b_.log_prob(sorted_nodes), kNegInf};
    t.log_d = design_log_prob(sorted_nodes, t.log_a, t.log_b);
    return t;
  }
  ProbTriple log_probs(const SeedSet& s) const { return log_probs(s.nodes()); }

  double design_log_prob(const SeedSet& s) const {
    const auto t = log_probs(s);
    return t.log_d;
  }

  DesignDraw sample(Rng& rng) const {
    switch (spec_.variant) {
      case DesignVariant::mixture: {
        std::bernoulli_distribution coin(spec_.rho);
        const Arm z = coin(rng) ? Arm::A : Arm::B;
        return {z, z == Arm::A ? a_.sample(rng) : b_.sample(rng)};
      }
      case DesignVariant::single:
        return {std::nullopt, spec_.single == Arm::A ? a_.sample(rng) : b_.sample(rng)};
      case DesignVariant::optimized: {
        const std::size_t i = alias_.sample(rng);
        if (enumerable_) return {std::nullopt, SeedSet::from_sorted(colex_unrank(i, graph_->node_count(), k_, *binom_))};
        return {std::nullopt, SeedSet::from_sorted(pool_sets_[i])};
      }
    }
    throw NumericalError("unknown design variant");
  }

  /// Calls fn(nodes, log_d) for every set with positive design probability.
  /// Requires enumerable() (or an optimized pool).
  template <typename Fn>
  void for_each_support(Fn&& fn) const {
    if (spec_.variant == DesignVariant::optimized && !enumerable_) {
      for (std::size_t i = 0; i < pool_sets_.size(); ++i)
        if (log_d_[i] != kNegInf) fn(std::span<const NodeId>(pool_sets_[i]), log_d_[i]);
      return;
    }
    if (!enumerable_) throw InputError("design support is too large to enumerate");
    for_each_combination(graph_->node_count(), k_, [&](std::span<const NodeId> c) {
      const double ld = log_probs(c).log_d;
      if (ld != kNegInf) fn(c, ld);
    });
  }

  /// log10 of the number of sets with positive design probability.
  double log10_support_size() const {
    constexpr double kLn10 = 2.302585092994046;
    if (spec_.variant == DesignVariant::optimized) {
      std::size_t count = 0;
      for (double ld : log_d_)
        if (ld != kNegInf) ++count;
      return std::log10(static_cast<double>(count));
    }
    if (enumerable_) {
      std::size_t count = 0;
      for_each_support([&](std::span<const NodeId>, double) { ++count; });
      return std::log10(static_cast<double>(count));
    }
    // a mixture with an interior rho covers the union of both supports
    double ls = kNegInf;
    if (spec_.variant == DesignVariant::single)
      ls = (spec_.single == Arm::A ? a_ : b_).log_support_size();
    else if (spec_.rho == 0.0) ls = b_.log_support_size();
    else if (spec_.rho == 1.0) ls = a_.log_support_size();
    else ls = std::max(a_.log_support_size(), b_.log_support_size());
    return ls / kLn10;
  }

  /// Shannon entropy (nats): exact over the support when enumerable, else a
  /// Monte Carlo estimate of -E[log p_design(S)] from `draws` samples.
  double entropy(Rng& rng, std::size_t draws, bool* exact = nullptr) const {
    if (enumerable_ || spec_.variant == DesignVariant::optimized) {
      double h = 0.0;
      for_each_support([&](std::span<const NodeId>, double ld) { h -= std::exp(ld) * ld; });
      if (exact) *exact = enumerable_;
      return h;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < draws; ++i) acc -= design_log_prob(sample(rng).seeds);
    if (exact) *exact = false;
    return acc / static_cast<double>(std::max<std::size_t>(draws, 1));
  }

 private:
  double design_log_prob(std::span<const NodeId> nodes, double la, double lb) const {
    switch (spec_.variant) {
      case DesignVariant::mixture: {
        const double wa = spec_.rho > 0.0 ? std::log(spec_.rho) + la : kNegInf;
        const double wb = spec_.rho < 1.0 ? std::log1p(-spec_.rho) + lb : kNegInf;
        return log_add(wa, wb);
      }
      case DesignVariant::single:
        return spec_.single == Arm::A ? la : lb;
      case DesignVariant::optimized: {
        if (nodes.size() != k_) return kNegInf;
        if (enumerable_) return log_d_[colex_rank(nodes, *binom_)];
        auto it = pool_index_.find(std::vector<NodeId>(nodes.begin(), nodes.end()));
        return it == pool_index_.end() ? kNegInf : log_d_[it->second];
      }
    }
    return kNegInf;
  }

  void build_optimized(std::uint64_t pool_seed) {
    const std::size_t n = graph_->node_count();
    std::vector<double> log_w;
    if (enumerable_) {
      binom_.emplace(n, k_);
      for_each_combination(n, k_, [&](std::span<const NodeId> c) {
        log_w.push_back(log_abs_diff(a_.log_prob(c), b_.log_prob(c)));
      });
    } else {
      Rng rng = make_stream(pool_seed, {0x9001});
      const std::size_t half = std::max<std::size_t>(spec_.pool_size / 2, 1);
      for (const StrategyModel* m : {&a_, &b_}) {
        if (!m->feasible()) continue;
        for (std::size_t i = 0; i < half; ++i) {
          SeedSet s = m->sample(rng);
          std::vector<NodeId> key(s.nodes().begin(), s.nodes().end());
          if (pool_index_.emplace(key, pool_sets_.size()).second) {
            log_w.push_back(log_abs_diff(a_.log_prob(s), b_.log_prob(s)));
            pool_sets_.push_back(std::move(key));
          }
        }
      }
    }
    const double total = log_sum_exp(log_w);
    if (total == kNegInf)
      throw NumericalError("optimized design undefined: the two strategies agree on every candidate seed set");
    log_d_.resize(log_w.size());
    std::vector<double> w(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) {
      log_d_[i] = log_w[i] == kNegInf ? kNegInf : log_w[i] - total;
      w[i] = std::exp(log_d_[i]);
    }
    alias_ = AliasTable(w);
  }

  const DirectedGraph* graph_;
  std::size_t k_;
  DesignSpec spec_;
  StrategyModel a_;
  StrategyModel b_;
  bool enumerable_ = false;
  std::optional<BinomialTable> binom_;
  std::vector<double> log_d_;
  AliasTable alias_;
  std::vector<std::vector<NodeId>> pool_sets_;
  std::map<std::vector<NodeId>, std::size_t> pool_index_;
};

/// Builds a p ∝ |p_A - p_B| design for one village.
inline VillageDesign build_optimized_design(const DirectedGraph& g, std::size_t k, StrategyKind a, StrategyKind b,
                                            std::uint64_t enumeration_cap, std::size_t pool_size,
                                            std::uint64_t pool_seed) {
  DesignSpec spec;
  spec.variant = DesignVariant::optimized;
  spec.a = a;
  spec.b = b;
  spec.enumeration_cap = enumeration_cap;
  spec.pool_size = pool_size;
  return VillageDesign(g, k, spec, pool_seed);
}

/// Positivity verdict for one observed seed set: where p_A != p_B the design
/// must give positive probability. `a_identified` / `b_identified` report
/// the stronger per-strategy condition (positive design mass wherever that
/// strategy has mass), which optimized designs need not meet.
struct PositivityStatus {
  std::string village_id;
  bool ok = true;
  bool a_identified = true;
  bool b_identified = true;
};

inline PositivityStatus check_positivity(std::string village_id, const ProbTriple& t) {
  PositivityStatus st;
  st.village_id = std::move(village_id);
  const bool design_positive = t.log_d != kNegInf;
  st.ok = t.log_a == t.log_b || design_positive;
  st.a_identified = t.log_a == kNegInf || design_positive;
  st.b_identified = t.log_b == kNegInf || design_positive;
  return st;
}

/// Draws (z, seed set) for every village from its design. Village i uses
/// the substream (master_seed, i).
inline std::vector<DesignDraw> assign_and_sample(std::span<const VillageDesign> designs, std::uint64_t master_seed) {
  std::vector<DesignDraw> out;
  out.reserve(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    Rng rng = make_stream(master_seed, {0xa551, i});
    try {
      out.push_back(designs[i].sample(rng));
    } catch (const NumericalError& e) {
      throw NumericalError("village #" + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace seedeval
