#include <gtest/gtest.h>

#include "oracles.hpp"
#include "seedeval/diagnostics.hpp"

using namespace seedeval;

TEST(Ess, KishForEqualWeights) {
  EXPECT_DOUBLE_EQ(ess_offpolicy_mean(std::vector<double>(17, 2.5)), 17.0);
  EXPECT_DOUBLE_EQ(ess_offpolicy_mean(std::vector<double>{1, 0, 0, 0}), 1.0);
  EXPECT_THROW(ess_offpolicy_mean(std::vector<double>{0, 0}), NumericalError);
}

TEST(Ess, DifferenceInMeansPatternGivesN) {
  for (double rho : {0.2, 0.3, 0.5, 0.8}) {
    for (std::size_t n : {10u, 37u, 100u}) {
      // exactly round(rho n) villages in arm A
      const auto na = static_cast<std::size_t>(std::lround(rho * n));
      std::vector<double> wa, wb;
      for (std::size_t i = 0; i < n; ++i) {
        wa.push_back(i < na ? 1 / rho : 0.0);
        wb.push_back(i < na ? 0.0 : 1 / (1 - rho));
      }
      const double realized = static_cast<double>(na) / n;
      if (std::abs(realized - rho) < 1e-12) EXPECT_NEAR(ess_ate_sample(wa, wb, rho), double(n), 1e-9 * n);
      // in general the value is N * realized (1 - realized) / (rho (1 - rho))
      EXPECT_NEAR(ess_ate_sample(wa, wb, rho), n * realized * (1 - realized) / (rho * (1 - rho)), 1e-9 * n);
    }
  }
}

TEST(Ess, ScaleInvariantAndInfiniteWhenWeightsAgree) {
  const std::vector<double> wa{1.2, 0.3, 2.0, 0.5}, wb{0.8, 1.1, 0.4, 1.7};
  std::vector<double> wa2, wb2;
  for (double w : wa) wa2.push_back(3 * w);
  for (double w : wb) wb2.push_back(0.5 * w);
  EXPECT_NEAR(ess_ate_sample(wa, wb, 0.5), ess_ate_sample(wa2, wb2, 0.5), 1e-12);
  EXPECT_EQ(ess_ate_sample(wa, wa, 0.5), kInf);
  EXPECT_THROW(ess_ate_sample(wa, wb, 0.0), InputError);
  EXPECT_THROW(ess_ate_sample(wa, std::vector<double>{1.0}, 0.5), InputError);
}

TEST(Ess, OffPolicyHandComputed) {
  const std::vector<double> wa{2, 0, 1, 1};
  // mean 1, mean squared deviation 0.5
  EXPECT_NEAR(ess_offpolicy_ate(wa, 0.5), 4.0 * 1.0 / (0.25 * 0.5), 1e-12);
  EXPECT_EQ(ess_offpolicy_ate(std::vector<double>(3, 1.0), 0.5), kInf);
}

namespace {

struct Population {
  std::vector<DirectedGraph> graphs;
  std::vector<VillageDesign> designs;
};

Population population(DesignSpec spec, std::uint64_t seed) {
  Population p;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 6; ++i) p.graphs.push_back(oracle::random_graph(6, 0.45, rng));
  for (const auto& g : p.graphs) p.designs.emplace_back(g, 2, spec);
  return p;
}

}  // namespace

TEST(Ess, PopulationMatchesEnumeration) {
  const double rho = 0.5;
  const auto pop = population(DesignSpec{}, 3);
  double moment = 0.0;
  for (const auto& g : pop.graphs) {
    const auto a = oracle::onehop_distribution(g, 2);
    const double pb = 1.0 / oracle::binomial(6, 2);
    for (const auto& s : oracle::all_subsets(6, 2)) {
      const double pa = a.count(s) ? a.at(s) : 0.0;
      const double pd = rho * pa + (1 - rho) * pb;
      moment += (pa - pb) * (pa - pb) / pd;
    }
  }
  moment /= static_cast<double>(pop.graphs.size());
  const double exact = pop.graphs.size() / (rho * (1 - rho) * moment);
  const auto r = ess_population(pop.designs, rho, 20'000, 9);
  EXPECT_EQ(r.n, pop.graphs.size());
  EXPECT_NEAR(r.n_eff, exact, 0.03 * exact);
  EXPECT_NEAR(r.relative_efficiency(), exact / pop.graphs.size(), 0.03 * exact);
  EXPECT_THROW(ess_population(pop.designs, rho, 10, 9), InputError);
}

TEST(Ess, OffPolicyPopulationMatchesEnumeration) {
  DesignSpec spec;
  spec.variant = DesignVariant::single;
  const auto pop = population(spec, 5);
  double var = 0.0;
  for (const auto& g : pop.graphs) {
    const auto a = oracle::onehop_distribution(g, 2);
    const double pb = 1.0 / oracle::binomial(6, 2);
    double second = 0.0;
    for (const auto& [s, pa] : a) second += pa * pa / pb;
    var += second - 1.0;
  }
  var /= static_cast<double>(pop.graphs.size());
  const double exact = pop.graphs.size() / (0.25 * var);
  const auto r = ess_offpolicy_ate_population(pop.designs, 0.5, 20'000, 2);
  EXPECT_NEAR(r.n_eff, exact, 0.05 * exact);
}

TEST(Ess, PopulationDeterministicAcrossThreads) {
  const auto pop = population(DesignSpec{}, 8);
  EXPECT_EQ(ess_population(pop.designs, 0.5, 500, 1, 1).n_eff, ess_population(pop.designs, 0.5, 500, 1, 4).n_eff);
}
