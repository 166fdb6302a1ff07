#pragma once

#include <boost/math/policies/error_handling.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "streampcq/error.hpp"

namespace streampcq {

// Fisher F distribution through the regularized incomplete beta function:
//   P(F <= x) = I_{d1 x / (d1 x + d2)}(d1 / 2, d2 / 2)

inline double f_cdf(double x, double d1, double d2)
{
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw Error(ErrorCode::InvalidInput, "f_cdf", "degrees of freedom must be positive");
  if (x <= 0.0)
    return 0.0;
  return boost::math::ibeta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

inline double f_quantile(double p, double d1, double d2)
{
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw Error(ErrorCode::InvalidInput, "f_quantile", "degrees of freedom must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::InvalidInput, "f_quantile", "p must lie in (0, 1)");
  const double a = d1 / 2.0, b = d2 / 2.0;
  double z = 0;
  try {
    z = boost::math::ibeta_inv(a, b, p);
  }
  catch (const boost::math::evaluation_error&) {
    // Boost 1.74 Newton iteration can stall (e.g. a = b, p = 0.5); the
    // incomplete beta is monotone in x, so bisect instead.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
      const double mid = 0.5 * (lo + hi);
      (boost::math::ibeta(a, b, mid) < p ? lo : hi) = mid;
    }
    z = 0.5 * (lo + hi);
  }
  return d2 * z / (d1 * (1.0 - z));
}

}  // namespace streampcq
