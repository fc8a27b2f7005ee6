#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bcrf {

// -inf is the sentinel for forbidden arcs and empty sums. Every piece of
// log-domain arithmetic that may touch it goes through the helpers below so
// the conventions x + (-inf) = -inf, exp(-inf) = 0 and 0*log(0) = 0 live in
// exactly one place.
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline bool is_neg_inf(double x) { return x == kNegInf; }

inline bool is_finite(double x) { return std::isfinite(x); }

// Log-domain product: x + y with x + (-inf) = -inf (never produces NaN from
// (-inf) + inf because +inf is rejected at tensor construction).
inline double log_mul(double x, double y) {
  if (is_neg_inf(x) || is_neg_inf(y)) return kNegInf;
  return x + y;
}

// exp with exp(-inf) = 0.
inline double log_to_linear(double x) {
  return is_neg_inf(x) ? 0.0 : std::exp(x);
}

// log(sum_i exp(v_i)), max-shifted; -inf on an empty or all -inf input.
inline double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (is_neg_inf(m)) return kNegInf;
  double sum = 0.0;
  for (double x : v) {
    if (!is_neg_inf(x)) sum += std::exp(x - m);
  }
  return m + std::log(sum);
}

// -p*log(p) with the 0*log(0) = 0 convention.
inline double entropy_term(double p) {
  return p > 0.0 ? -p * std::log(p) : 0.0;
}

// q*w with the 0*(-inf) = 0 convention (mass exactly 0 on a forbidden arc
// contributes nothing).
inline double weighted_score_term(double q, double w) {
  if (q == 0.0) return 0.0;
  return q * w;
}

}  // namespace bcrf
