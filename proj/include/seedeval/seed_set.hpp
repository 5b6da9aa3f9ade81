#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "seedeval/errors.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/log_math.hpp"

namespace seedeval {

/// Sorted set of k >= 1 distinct node ids.
class SeedSet {
 public:
  SeedSet() = default;

  /// Sorts `nodes`; throws InputError on duplicates, ids >= n, or empty input.
  static SeedSet make(std::vector<NodeId> nodes, std::size_t n) {
    if (nodes.empty()) throw InputError("seed set must contain at least one node");
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
      throw InputError("seed set contains a repeated node");
    if (nodes.back() >= n) throw InputError("seed node id out of range");
    SeedSet s;
    s.nodes_ = std::move(nodes);
    return s;
  }

  /// Trusted constructor for already sorted, distinct ids.
  static SeedSet from_sorted(std::vector<NodeId> nodes) {
    SeedSet s;
    s.nodes_ = std::move(nodes);
    return s;
  }

  std::size_t size() const { return nodes_.size(); }
  std::span<const NodeId> nodes() const { return nodes_; }
  bool contains(NodeId v) const { return std::binary_search(nodes_.begin(), nodes_.end(), v); }

  friend bool operator==(const SeedSet&, const SeedSet&) = default;
  friend auto operator<=>(const SeedSet&, const SeedSet&) = default;

 private:
  std::vector<NodeId> nodes_;
};

/// Log-probability; -inf encodes probability zero.
struct LogProb {
  double value = kNegInf;

  static LogProb zero() { return {kNegInf}; }
  static LogProb one() { return {0.0}; }
  bool is_zero() const { return value == kNegInf; }
  double prob() const { return std::exp(value); }

  friend bool operator==(const LogProb&, const LogProb&) = default;
};

}  // namespace seedeval
