#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "seedeval/design.hpp"

using namespace seedeval;

namespace {

DirectedGraph test_graph(std::uint64_t seed, std::size_t n = 6, double p = 0.45) {
  std::mt19937_64 rng(seed);
  return oracle::random_graph(n, p, rng);
}

double prob_of(const std::map<oracle::Set, double>& d, const oracle::Set& s) {
  const auto it = d.find(s);
  return it == d.end() ? 0.0 : it->second;
}

}  // namespace

TEST(Design, MixtureProbabilities) {
  const auto g = test_graph(1);
  const std::size_t k = 2;
  const auto a = oracle::onehop_distribution(g, k);
  const double pb = 1.0 / oracle::binomial(6, k);
  for (double rho : {0.0, 0.3, 0.5, 1.0}) {
    DesignSpec spec;
    spec.rho = rho;
    const VillageDesign d(g, k, spec);
    double total = 0.0;
    for (const auto& s : oracle::all_subsets(6, k)) {
      const auto t = d.log_probs(SeedSet::make(s, 6));
      const double want = rho * prob_of(a, s) + (1 - rho) * pb;
      EXPECT_NEAR(std::exp(t.log_d), want, 1e-13);
      total += std::exp(t.log_d);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  DesignSpec bad;
  bad.rho = 1.5;
  EXPECT_THROW(VillageDesign(g, k, bad), InputError);
}

TEST(Design, SingleStrategyUsesB) {
  const auto g = test_graph(2);
  DesignSpec spec;
  spec.variant = DesignVariant::single;
  const VillageDesign d(g, 3, spec);
  const auto t = d.log_probs(SeedSet::make({0, 1, 2}, 6));
  EXPECT_NEAR(std::exp(t.log_d), 1.0 / 20.0, 1e-15);
  EXPECT_EQ(t.log_b, t.log_d);
  Rng rng(3);
  EXPECT_FALSE(d.sample(rng).z.has_value());
  bool exact = false;
  EXPECT_NEAR(d.entropy(rng, 10, &exact), std::log(20.0), 1e-12);
  EXPECT_TRUE(exact);
  EXPECT_NEAR(d.log10_support_size(), std::log10(20.0), 1e-12);
}

TEST(Design, OptimizedIsProportionalToAbsoluteDifference) {
  const auto g = test_graph(4);
  const std::size_t k = 2;
  const auto a = oracle::onehop_distribution(g, k);
  const double pb = 1.0 / oracle::binomial(6, k);
  std::map<oracle::Set, double> want;
  double z = 0.0;
  for (const auto& s : oracle::all_subsets(6, k)) {
    want[s] = std::abs(prob_of(a, s) - pb);
    z += want[s];
  }
  DesignSpec spec;
  spec.variant = DesignVariant::optimized;
  const VillageDesign d(g, k, spec);
  EXPECT_TRUE(d.enumerable());
  EXPECT_FALSE(d.approximate());
  double total = 0.0;
  for (const auto& s : oracle::all_subsets(6, k)) {
    const double got = std::exp(d.log_probs(SeedSet::make(s, 6)).log_d);
    EXPECT_NEAR(got, want[s] / z, 1e-13);
    total += got;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);

  // draws follow the same distribution
  Rng rng(5);
  std::map<oracle::Set, int> counts;
  const int draws = 100'000;
  for (int i = 0; i < draws; ++i) {
    const auto s = d.sample(rng).seeds;
    counts[oracle::Set(s.nodes().begin(), s.nodes().end())]++;
  }
  for (const auto& [s, w] : want) {
    const double p = w / z;
    EXPECT_NEAR(static_cast<double>(counts[s]) / draws, p, 5 * std::sqrt(p * (1 - p) / draws) + 1e-12);
  }
}

TEST(Design, OptimizedRequiresDistinctStrategies) {
  const auto g = test_graph(6);
  DesignSpec spec;
  spec.variant = DesignVariant::optimized;
  spec.a = StrategyKind::random;
  spec.b = StrategyKind::random;
  EXPECT_THROW(VillageDesign(g, 2, spec), NumericalError);
}

TEST(Design, OptimizedPoolApproximation) {
  const auto g = test_graph(7, 30, 0.15);
  const std::size_t k = 6;  // C(30, 6) = 593775 > cap below
  DesignSpec spec;
  spec.variant = DesignVariant::optimized;
  spec.enumeration_cap = 1000;
  spec.pool_size = 2000;
  const VillageDesign d(g, k, spec, 42);
  EXPECT_TRUE(d.approximate());
  double total = 0.0;
  std::size_t support = 0;
  d.for_each_support([&](std::span<const NodeId>, double ld) {
    total += std::exp(ld);
    ++support;
  });
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_GT(support, 100u);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto s = d.sample(rng).seeds;
    EXPECT_GT(d.design_log_prob(s), kNegInf);
  }
  // the pool is a deterministic function of the pool seed
  const VillageDesign again(g, k, spec, 42);
  std::size_t support2 = 0;
  again.for_each_support([&](std::span<const NodeId>, double) { ++support2; });
  EXPECT_EQ(support, support2);
}

TEST(Design, MixtureSamplingMarginal) {
  const auto g = test_graph(10);
  DesignSpec spec;
  spec.rho = 0.3;
  const VillageDesign d(g, 2, spec);
  Rng rng(11);
  std::map<oracle::Set, int> counts;
  int arm_a = 0;
  const int draws = 100'000;
  for (int i = 0; i < draws; ++i) {
    const auto dr = d.sample(rng);
    if (*dr.z == Arm::A) ++arm_a;
    counts[oracle::Set(dr.seeds.nodes().begin(), dr.seeds.nodes().end())]++;
  }
  EXPECT_NEAR(arm_a / double(draws), 0.3, 5 * std::sqrt(0.21 / draws));
  for (const auto& s : oracle::all_subsets(6, 2)) {
    const double p = std::exp(d.log_probs(SeedSet::make(s, 6)).log_d);
    EXPECT_NEAR(counts[s] / double(draws), p, 5 * std::sqrt(p * (1 - p) / draws) + 1e-12);
  }
}

TEST(Design, Positivity) {
  const auto ok = check_positivity("v", {std::log(0.2), std::log(0.1), std::log(0.15)});
  EXPECT_TRUE(ok.ok);
  const auto equal = check_positivity("v", {std::log(0.1), std::log(0.1), kNegInf});
  EXPECT_TRUE(equal.ok);
  EXPECT_FALSE(equal.a_identified);
  const auto bad = check_positivity("v", {std::log(0.2), std::log(0.1), kNegInf});
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.village_id, "v");
}

TEST(Design, AssignAndSampleIsDeterministic) {
  const auto g1 = test_graph(12), g2 = test_graph(13);
  DesignSpec spec;
  std::vector<VillageDesign> designs{VillageDesign(g1, 2, spec), VillageDesign(g2, 2, spec)};
  const auto a = assign_and_sample(designs, 77);
  const auto b = assign_and_sample(designs, 77);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].z, b[i].z);
    EXPECT_EQ(a[i].seeds, b[i].seeds);
  }
  spec.rho = 1.0;
  std::vector<VillageDesign> all_a{VillageDesign(g1, 2, spec), VillageDesign(g2, 2, spec)};
  for (const auto& d : assign_and_sample(all_a, 5)) EXPECT_EQ(*d.z, Arm::A);
}

TEST(Design, EntropyMonteCarloAgreesWithExact) {
  const auto g = test_graph(14, 8, 0.4);
  DesignSpec spec;
  const VillageDesign d(g, 3, spec);
  Rng rng(15);
  bool exact = false;
  const double h = d.entropy(rng, 0, &exact);
  ASSERT_TRUE(exact);
  double acc = 0.0;
  const int draws = 50'000;
  for (int i = 0; i < draws; ++i) acc -= d.design_log_prob(d.sample(rng).seeds);
  EXPECT_NEAR(acc / draws, h, 0.02);
}
