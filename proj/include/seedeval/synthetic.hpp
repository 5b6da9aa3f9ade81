#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "seedeval/graph.hpp"
#include "seedeval/random.hpp"

namespace seedeval {

/// Generator for village-style nomination networks: each respondent names up
/// to `max_out` friends, chosen preferentially by a lognormal popularity
/// score, with a chance of naming back someone who named them.
struct VillageGeneratorParams {
  double nodes_mean = 27.6;
  double nodes_sd = 9.4;
  std::size_t nodes_min = 8;
  std::size_t nodes_max = 49;
  double out_mean = 3.4;
  std::size_t max_out = 5;
  double popularity_sigma = 0.8;
  double reciprocity = 0.35;
  double silent_share = 0.05;  // respondents who name nobody
  std::size_t min_edges = 25;
};

inline DirectedGraph generate_village(const VillageGeneratorParams& p, Rng& rng) {
  std::normal_distribution<double> size_dist(p.nodes_mean, p.nodes_sd);
  std::size_t n = 0;
  do {
    n = static_cast<std::size_t>(std::lround(size_dist(rng)));
  } while (n < p.nodes_min || n > p.nodes_max);

  std::lognormal_distribution<double> pop_dist(0.0, p.popularity_sigma);
  std::vector<double> popularity(n);
  for (double& w : popularity) w = pop_dist(rng);

  // out-degree ~ Binomial(max_out, out_mean / max_out), zero for silent nodes
  std::binomial_distribution<int> out_dist(static_cast<int>(p.max_out),
                                           std::min(1.0, p.out_mean / static_cast<double>(p.max_out)));
  std::bernoulli_distribution silent(p.silent_share);
  std::bernoulli_distribution reciprocate(p.reciprocity);

  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  std::vector<Edge> edges;
  std::vector<NodeId> order(n);
  for (NodeId i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (NodeId u : order) {
    if (silent(rng)) continue;
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(out_dist(rng)), n - 1);
    std::size_t have = 0;
    std::vector<NodeId> nominated_by;
    for (NodeId v = 0; v < n; ++v)
      if (adj[v][u]) nominated_by.push_back(v);
    std::shuffle(nominated_by.begin(), nominated_by.end(), rng);
    for (NodeId v : nominated_by) {
      if (have == want) break;
      if (reciprocate(rng)) {
        adj[u][v] = 1;
        edges.push_back({u, v});
        ++have;
      }
    }
    while (have < want) {
      std::vector<double> w(n, 0.0);
      for (NodeId v = 0; v < n; ++v)
        if (v != u && !adj[u][v]) w[v] = popularity[v];
      std::discrete_distribution<NodeId> pick(w.begin(), w.end());
      const NodeId v = pick(rng);
      adj[u][v] = 1;
      edges.push_back({u, v});
      ++have;
    }
  }
  return DirectedGraph(n, std::move(edges));
}

/// `count` villages with at least `min_edges` edges each, ids "v001"...;
/// village i is drawn from substream (seed, i) until it has enough edges.
inline VillageCollection generate_collection(std::size_t count, std::uint64_t seed,
                                             const VillageGeneratorParams& p = {}) {
  VillageCollection c;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_stream(seed, {0x51a7, i});
    DirectedGraph g = generate_village(p, rng);
    while (g.edge_count() < p.min_edges) g = generate_village(p, rng);
    std::string id = std::to_string(i + 1);
    id.insert(0, id.size() < 3 ? 3 - id.size() : 0, '0');
    c.villages.push_back({"v" + id, std::move(g)});
  }
  return c;
}

}  // namespace seedeval
