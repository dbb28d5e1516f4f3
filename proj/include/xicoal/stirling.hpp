#pragma once

#include <cstdint>
#include <vector>

#include "xicoal/numeric.hpp"

namespace xicoal {

/// [x|y]_n = x (x + y) ... (x + (n-1) y); the empty product is 1.
template <class T>
T rising_factorial(const T& x, const T& y, int n) {
  T result(1);
  for (int k = 0; k < n; ++k) result *= x + T(k) * y;
  return result;
}

/// (x|y)_n = x (x - y) ... (x - (n-1) y); the empty product is 1.
template <class T>
T falling_factorial(const T& x, const T& y, int n) {
  T result(1);
  for (int k = 0; k < n; ++k) result *= x - T(k) * y;
  return result;
}

/// Parameters (a, b, r) of the generalized Stirling numbers S(i, j; a, b, r),
/// defined by S(0,0) = 1, S(i,j) = 0 for j > i or j < 0 and
/// S(i+1, j) = S(i, j-1) + (j b - i a + r) S(i, j).
struct StirlingParams {
  Rational a;
  Rational b;
  Rational r;
};

enum class Representation { exact_rational, signed_log };

inline constexpr int kDefaultStirlingCap = 200;

/// Triangular table of S(i, j; a, b, r), memoized row by row.
///
/// Optionally keeps only columns j <= max_col, which is all that the
/// rate formulas need when i grows large but the number of blocks stays small.
class StirlingTable {
 public:
  StirlingTable(StirlingParams params, int max_i, Representation representation, int max_col = -1);

  /// Appends rows until max_i() >= max_i.
  void extend_to(int max_i);

  int max_i() const { return static_cast<int>(row_count_) - 1; }
  int max_col() const { return max_col_; }
  Representation representation() const { return representation_; }
  const StirlingParams& params() const { return params_; }

  /// Exact entry; zero outside the triangle. Requires exact representation.
  Rational exact(int i, int j) const;
  /// Signed-log entry in either representation.
  SignedLog log_value(int i, int j) const;
  double value(int i, int j) const;
  /// True when the recursion step producing (i, j) nearly cancelled.
  bool possible_cancellation(int i, int j) const;

 private:
  void check_index(int i, int j) const;
  int stored_cols(int i) const { return max_col_ < 0 || i < max_col_ ? i : max_col_; }

  StirlingParams params_;
  Representation representation_;
  int max_col_;
  double a_, b_, r_;
  std::size_t row_count_ = 0;
  std::vector<std::vector<Rational>> exact_rows_;
  std::vector<std::vector<SignedLog>> log_rows_;
  std::vector<std::vector<std::uint8_t>> cancel_rows_;
};

Rational gen_stirling(int i, int j, const Rational& a, const Rational& b, const Rational& r);
double gen_stirling(int i, int j, double a, double b, double r);

/// s_alpha(i, j) = Γ(1-α)^j S(i, j; -1, -α, 0), in the log domain. Requires 0 <= α < 1.
SignedLog s_alpha(int i, int j, double alpha);

/// Table of s_alpha values sharing one recursion; rows grow on demand.
class SAlphaTable {
 public:
  SAlphaTable(double alpha, int max_i, int max_col = -1);
  void extend_to(int max_i) { table_.extend_to(max_i); }
  int max_i() const { return table_.max_i(); }
  double alpha() const { return alpha_; }
  /// log s_alpha(i, j); -inf outside the triangle.
  double log_value(int i, int j) const;
  /// log S(i, j; -1, -α, 0).
  double log_stirling(int i, int j) const { return table_.log_value(i, j).log_abs; }

 private:
  double alpha_;
  double log_gamma_one_minus_alpha_;
  StirlingTable table_;
};

enum class ClassicalKind { second_kind, first_kind_unsigned, lah };

StirlingParams classical_params(ClassicalKind kind);

/// Exact integer tables: second kind S(i,j;0,1,0), unsigned first kind
/// S(i,j;-1,0,0), Lah S(i,j;-1,1,0). Throws ParameterError when max_i > cap.
StirlingTable classical_tables(ClassicalKind kind, int max_i, int cap = kDefaultStirlingCap);

}  // namespace xicoal
