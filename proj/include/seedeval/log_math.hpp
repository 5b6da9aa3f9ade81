#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace seedeval {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)), exact for -inf operands.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  if (hi == kInf) return kInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// log(1 - exp(x)) for x <= 0.
inline double log1mexp(double x) {
  if (x == 0.0) return kNegInf;
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

/// log|exp(a) - exp(b)|; -inf when a == b.
inline double log_abs_diff(double a, double b) {
  if (a == b) return kNegInf;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (lo == kNegInf) return hi;
  return hi + log1mexp(lo - hi);
}

inline double log_factorial(std::uint64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

inline double log_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// Exact C(n, k) if it does not exceed `cap`, otherwise cap + 1.
inline std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // C(n, i) grows monotonically for i <= n/2, so any overshoot is final.
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace seedeval
