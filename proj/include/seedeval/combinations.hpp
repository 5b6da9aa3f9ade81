#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seedeval/errors.hpp"
#include "seedeval/graph.hpp"
#include "seedeval/log_math.hpp"

namespace seedeval {

/// Binomial table C(i, j) for 0 <= i <= n, 0 <= j <= k, saturating at
/// UINT64_MAX. Backs colex ranking of k-subsets of [0, n).
class BinomialTable {
 public:
  BinomialTable(std::size_t n, std::size_t k) : k_(k), table_((n + 1) * (k + 1), 0) {
    constexpr std::uint64_t kMax = ~std::uint64_t{0};
    for (std::size_t i = 0; i <= n; ++i) {
      at(i, 0) = 1;
      for (std::size_t j = 1; j <= std::min(i, k); ++j) {
        const std::uint64_t a = at(i - 1, j - 1);
        const std::uint64_t b = j <= i - 1 ? at(i - 1, j) : 0;
        at(i, j) = (a > kMax - b) ? kMax : a + b;
      }
    }
  }
  std::uint64_t operator()(std::size_t i, std::size_t j) const { return j > k_ ? 0 : table_[i * (k_ + 1) + j]; }

 private:
  std::uint64_t& at(std::size_t i, std::size_t j) { return table_[i * (k_ + 1) + j]; }
  std::size_t k_;
  std::vector<std::uint64_t> table_;
};

/// Colex rank of a strictly increasing k-subset: sum_i C(c_i, i + 1).
inline std::uint64_t colex_rank(std::span<const NodeId> sorted, const BinomialTable& binom) {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) r += binom(sorted[i], i + 1);
  return r;
}

inline std::vector<NodeId> colex_unrank(std::uint64_t rank, std::size_t n, std::size_t k, const BinomialTable& binom) {
  std::vector<NodeId> out(k);
  std::size_t hi = n;
  for (std::size_t i = k; i-- > 0;) {
    // largest c < hi with C(c, i + 1) <= rank
    std::size_t c = hi - 1;
    while (binom(c, i + 1) > rank) --c;
    out[i] = static_cast<NodeId>(c);
    rank -= binom(c, i + 1);
    hi = c;
  }
  return out;
}

/// Calls fn(span<const NodeId>) for every k-subset of [0, n) in colex order.
template <typename Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<NodeId> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = static_cast<NodeId>(i);
  while (true) {
    fn(std::span<const NodeId>(c));
    // colex successor: bump the first element that can move up
    std::size_t i = 0;
    while (i < k && ((i + 1 < k) ? c[i] + 1 == c[i + 1] : c[i] + 1 == n)) ++i;
    if (i == k) return;
    ++c[i];
    for (std::size_t j = 0; j < i; ++j) c[j] = static_cast<NodeId>(j);
  }
}

}  // namespace seedeval
