#pragma once

#include <cmath>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "compound/errors.hpp"

namespace compound {

// Counts are kept exact (arbitrary precision) until the moment they feed a
// logarithm or a bound comparison; capacity decisions must never be made on
// an overflowed integer.
using BigInt = boost::multiprecision::cpp_int;

inline BigInt binomial_exact(long n, long k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  for (long i = 1; i <= k; ++i) {
    r *= (n - k + i);
    r /= i;  // exact: r is always a binomial coefficient along the way
  }
  return r;
}

inline BigInt factorial_exact(long n) {
  BigInt r = 1;
  for (long i = 2; i <= n; ++i) r *= i;
  return r;
}

// Number of candidate supports of size at most s out of d coordinates,
// the empty support included.
inline BigInt count_supports(long d, long s) {
  if (d < 1) throw ParameterError("count_supports: d must be >= 1");
  if (s < 0 || s > d) throw ParameterError("count_supports: s must be in [0,d]");
  BigInt m = 0;
  for (long l = 0; l <= s; ++l) m += binomial_exact(d, l);
  return m;
}

// Upper bound (e d / s)^s on count_supports for s >= 1.
inline double count_supports_bound(long d, long s) {
  return std::pow(std::exp(1.0) * static_cast<double>(d) / static_cast<double>(s),
                  static_cast<double>(s));
}

inline double to_double(const BigInt& v) { return v.convert_to<double>(); }

inline double log_big(const BigInt& v) {
  if (v <= 0) throw ParameterError("log_big: nonpositive argument");
  // Peel off 512-bit chunks so huge counts stay in double range.
  BigInt x = v;
  double shift = 0.0;
  const double log2_512 = 512.0 * std::log(2.0);
  while (x > (BigInt(1) << 512)) {
    x >>= 512;
    shift += log2_512;
  }
  return std::log(to_double(x)) + shift;
}

inline double log_binomial(double n, double k) {
  if (k < 0 || k > n) throw ParameterError("log_binomial: k outside [0,n]");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace compound
