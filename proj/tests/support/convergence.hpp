#pragma once

#include <cmath>
#include <vector>

namespace testsupport {

// Observed convergence orders log2(e_i / e_{i+1}) for errors under uniform
// mesh doubling.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> orders;
  for (size_t i = 0; i + 1 < errors.size(); ++i)
    orders.push_back(std::log2(errors[i] / errors[i + 1]));
  return orders;
}

// Richardson extrapolation of the finest pair, with the order estimated from
// the last value triple (falls back to order 2 when the estimate is noisy).
inline double richardson_limit(const std::vector<double>& values) {
  const size_t n = values.size();
  double p = 2.0;
  if (n >= 3) {
    const double num = values[n - 3] - values[n - 2];
    const double den = values[n - 2] - values[n - 1];
    if (den != 0.0 && num / den > 0.0) p = std::log2(num / den);
  }
  const double factor = std::pow(2.0, p) - 1.0;
  return values[n - 1] + (values[n - 1] - values[n - 2]) / factor;
}

}  // namespace testsupport
