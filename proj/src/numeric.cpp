#include "xicoal/numeric.hpp"

#include <cctype>
#include <math.h>

namespace xicoal {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

Rational parse_decimal(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_part = s.substr(e + 1);
    bool exp_negative = false;
    if (!exp_part.empty() && (exp_part.front() == '+' || exp_part.front() == '-')) {
      exp_negative = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (!all_digits(exp_part) || exp_part.size() > 6)
      throw ParameterError("malformed number: '" + std::string(text) + "'");
    exponent = std::stol(std::string(exp_part));
    if (exp_negative) exponent = -exponent;
    s = s.substr(0, e);
  }
  std::string digits;
  long fraction_digits = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = s.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
        (whole.empty() && frac.empty()))
      throw ParameterError("malformed number: '" + std::string(text) + "'");
    digits = std::string(whole) + std::string(frac);
    fraction_digits = static_cast<long>(frac.size());
  } else {
    if (!all_digits(s)) throw ParameterError("malformed number: '" + std::string(text) + "'");
    digits = std::string(s);
  }
  mpz_class numerator(digits, 10);
  long scale = exponent - fraction_digits;
  mpz_class power;
  mpz_ui_pow_ui(power.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  Rational q = scale >= 0 ? Rational(numerator * power) : Rational(numerator, power);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw ParameterError("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw ParameterError("zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  return parse_decimal(text);
}

Rational to_rational(double x) {
  if (!std::isfinite(x)) throw ParameterError("non-finite value cannot be made rational");
  Rational q(x);
  q.canonicalize();
  return q;
}

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double log_binomial(double n, double k) {
  return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
}

Rational binomial_exact(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  mpz_class result;
  mpz_bin_uiui(result.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(result);
}

Rational factorial_exact(long n) {
  mpz_class result;
  mpz_fac_ui(result.get_mpz_t(), static_cast<unsigned long>(n));
  return Rational(result);
}

SignedLog SignedLog::from_double(double x) {
  if (x == 0.0) return zero();
  return {std::log(std::fabs(x)), x > 0 ? 1 : -1};
}

SignedLog operator*(const SignedLog& a, const SignedLog& b) {
  if (a.is_zero() || b.is_zero()) return SignedLog::zero();
  return {a.log_abs + b.log_abs, a.sign * b.sign};
}

SignedLog add(const SignedLog& a, const SignedLog& b, bool* cancellation) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.sign == b.sign) return {log_add_exp(a.log_abs, b.log_abs), a.sign};
  const SignedLog& big = a.log_abs >= b.log_abs ? a : b;
  const SignedLog& small = a.log_abs >= b.log_abs ? b : a;
  double diff = small.log_abs - big.log_abs;  // <= 0
  if (cancellation && -diff < 1e-9) *cancellation = true;
  double factor = -std::expm1(diff);  // 1 - |small|/|big|
  if (factor <= 0.0) return SignedLog::zero();
  return {big.log_abs + std::log(factor), big.sign};
}

}  // namespace xicoal
