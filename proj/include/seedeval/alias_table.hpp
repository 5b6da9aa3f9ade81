#pragma once

#include <algorithm>
#include <random>
#include <span>
#include <vector>

#include "seedeval/errors.hpp"
#include "seedeval/random.hpp"

namespace seedeval {

/// Walker/Vose alias table: O(n) build, O(1) draws from a discrete
/// distribution given by nonnegative (unnormalised) weights.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw NumericalError("alias table needs at least one outcome");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw NumericalError("alias table weights must be nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw NumericalError("alias table weights sum to zero");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    // rounding leftovers; a zero weight must never be drawn
    const std::size_t any_positive = static_cast<std::size_t>(
        std::find_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }) - weights.begin());
    for (std::size_t i : small) {
      prob_[i] = weights[i] > 0.0 ? 1.0 : 0.0;
      alias_[i] = any_positive;
    }
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> column(0, prob_.size() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const std::size_t i = column(rng);
    return coin(rng) < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace seedeval
