#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace xicoal {

using Rational = mpq_class;

/// Bad model or function parameters (CLI exit code 2).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range state indices, e.g. an off-diagonal rate queried on the diagonal.
class StateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Truncation or term-cap failures (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "3", "-1/2", "0.25", "2.5e-3" into an exact rational.
Rational parse_rational(std::string_view text);

/// Exact rational value of a double (every finite double is dyadic).
Rational to_rational(double x);

/// n/d in lowest terms; gmpxx leaves two-argument construction uncanonicalized.
inline Rational ratio(long n, long d) {
  Rational q(n, d);
  q.canonicalize();
  return q;
}

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double x) { return x; }

/// Thread-safe log|Γ(x)|.
double log_gamma(double x);

/// log B(a, b) for a, b > 0.
double log_beta(double a, double b);

double log_binomial(double n, double k);

template <class T>
T ipow(T base, long exponent) {
  T result(1);
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

Rational binomial_exact(long n, long k);
Rational factorial_exact(long n);

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// A real stored as sign and log-magnitude.
struct SignedLog {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static SignedLog zero() { return {}; }
  static SignedLog one() { return {0.0, 1}; }
  static SignedLog from_double(double x);
  static SignedLog from_log(double log_abs) { return {log_abs, 1}; }

  bool is_zero() const { return sign == 0; }
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

SignedLog operator*(const SignedLog& a, const SignedLog& b);

/// Sum of two signed logs; sets *cancellation when addends of opposite sign
/// agree in magnitude to within 1e-9 relative.
SignedLog add(const SignedLog& a, const SignedLog& b, bool* cancellation = nullptr);

}  // namespace xicoal
