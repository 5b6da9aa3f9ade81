#pragma once

#include <cmath>

#include <boost/math/distributions/normal.hpp>

namespace seedeval {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

/// Two-sided normal critical value for a central interval of mass `level`.
inline double two_sided_z(double level) { return normal_quantile(0.5 + 0.5 * level); }

}  // namespace seedeval
