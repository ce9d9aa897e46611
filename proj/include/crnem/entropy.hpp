#pragma once

#include <cmath>
#include <limits>

namespace crnem {

/// One summand of the extended relative entropy, x log(x/y) - x + y, with
/// 0 log 0 = 0 and x log(x/0) = +inf for x > 0.
inline double entropy_term(double x, double y) {
  if (x == 0.0) return y;
  if (y == 0.0) return std::numeric_limits<double>::infinity();
  return x * std::log(x / y) - x + y;
}

}  // namespace crnem
