// Exact seed-set probabilities under random and one-hop targeting on a small
// village, and the Bernoulli-mixture weights an analyst would use for it.
#include <cmath>
#include <iomanip>
#include <iostream>

#include "seedeval/seedeval.hpp"

using namespace seedeval;

int main() {
  // 0 is named by everyone; 4 names nobody.
  const DirectedGraph g(6, {{1, 0}, {2, 0}, {3, 0}, {5, 0}, {0, 1}, {1, 2}, {2, 3}, {3, 4}, {5, 4}});
  const std::size_t k = 2;

  const StrategyModel onehop(g, StrategyKind::onehop, k);
  const StrategyModel random(g, StrategyKind::random, k);
  std::cout << "node weights f_v:";
  for (double f : onehop.weights().f) std::cout << ' ' << f;
  std::cout << "\nP(one-hop draws k distinct) = " << std::exp(onehop.log_pi().value) << "\n\n";

  DesignSpec spec;
  spec.rho = 0.5;
  const VillageDesign design(g, k, spec);

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "seeds   p_onehop  p_random  p_design   w_A     w_B\n";
  for_each_combination(g.node_count(), k, [&](std::span<const NodeId> s) {
    const ProbTriple t = design.log_probs(SeedSet::from_sorted({s.begin(), s.end()}));
    std::cout << '{' << s[0] << ',' << s[1] << "}   " << std::exp(t.log_a) << "    " << std::exp(t.log_b)
              << "    " << std::exp(t.log_d) << "    " << std::exp(t.log_a - t.log_d) << "  "
              << std::exp(t.log_b - t.log_d) << '\n';
  });

  Rng rng = make_stream(2024, {0});
  std::cout << "\nfive one-hop draws:";
  for (int i = 0; i < 5; ++i) {
    const SeedSet s = onehop.sample(rng);
    std::cout << " {" << s.nodes()[0] << ',' << s.nodes()[1] << '}';
  }
  std::cout << '\n';
}
