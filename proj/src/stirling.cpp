#include "xicoal/stirling.hpp"

#include <algorithm>
#include <string>

namespace xicoal {

StirlingTable::StirlingTable(StirlingParams params, int max_i, Representation representation,
                             int max_col)
    : params_(std::move(params)),
      representation_(representation),
      max_col_(max_col),
      a_(to_double(params_.a)),
      b_(to_double(params_.b)),
      r_(to_double(params_.r)) {
  if (max_i < 0) throw ParameterError("Stirling table size must be non-negative");
  extend_to(max_i);
}

void StirlingTable::extend_to(int max_i) {
  while (max_i >= static_cast<int>(row_count_)) {
    const int i = static_cast<int>(row_count_);
    const int cols = stored_cols(i);
    if (i == 0) {
      if (representation_ == Representation::exact_rational)
        exact_rows_.push_back({Rational(1)});
      else
        log_rows_.push_back({SignedLog::one()});
      cancel_rows_.push_back({0});
      ++row_count_;
      continue;
    }
    // Row i from row i-1: S(i, j) = S(i-1, j-1) + (j b - (i-1) a + r) S(i-1, j).
    const int prev = i - 1;
    const int prev_cols = stored_cols(prev);
    std::vector<std::uint8_t> cancel(cols + 1, 0);
    if (representation_ == Representation::exact_rational) {
      const auto& up = exact_rows_[prev];
      std::vector<Rational> row(cols + 1);
      for (int j = 0; j <= cols; ++j) {
        Rational value = 0;
        if (j >= 1 && j - 1 <= prev_cols) value += up[j - 1];
        if (j <= prev_cols) value += (params_.b * j - params_.a * prev + params_.r) * up[j];
        row[j] = value;
      }
      exact_rows_.push_back(std::move(row));
    } else {
      const auto& up = log_rows_[prev];
      std::vector<SignedLog> row(cols + 1);
      for (int j = 0; j <= cols; ++j) {
        SignedLog left = (j >= 1 && j - 1 <= prev_cols) ? up[j - 1] : SignedLog::zero();
        SignedLog right = SignedLog::zero();
        if (j <= prev_cols)
          right = SignedLog::from_double(j * b_ - prev * a_ + r_) * up[j];
        bool cancelled = false;
        row[j] = add(left, right, &cancelled);
        cancel[j] = cancelled ? 1 : 0;
      }
      log_rows_.push_back(std::move(row));
    }
    cancel_rows_.push_back(std::move(cancel));
    ++row_count_;
  }
}

void StirlingTable::check_index(int i, int j) const {
  if (i < 0 || i > max_i())
    throw ParameterError("Stirling row " + std::to_string(i) + " outside table (max " +
                         std::to_string(max_i()) + ")");
  if (max_col_ >= 0 && j > max_col_ && j <= i)
    throw ParameterError("Stirling column " + std::to_string(j) + " beyond stored columns");
}

Rational StirlingTable::exact(int i, int j) const {
  if (representation_ != Representation::exact_rational)
    throw ParameterError("Stirling table is not in exact representation");
  if (j < 0 || j > i) return 0;
  check_index(i, j);
  return exact_rows_[i][j];
}

SignedLog StirlingTable::log_value(int i, int j) const {
  if (j < 0 || j > i) return SignedLog::zero();
  check_index(i, j);
  if (representation_ == Representation::exact_rational) {
    const Rational& q = exact_rows_[i][j];
    if (q == 0) return SignedLog::zero();
    // log of numerator and denominator separately keeps huge values finite.
    long exp_num = 0, exp_den = 0;
    double mant_num = mpz_get_d_2exp(&exp_num, q.get_num_mpz_t());
    double mant_den = mpz_get_d_2exp(&exp_den, q.get_den_mpz_t());
    double log_abs = std::log(std::fabs(mant_num)) - std::log(mant_den) +
                     static_cast<double>(exp_num - exp_den) * std::log(2.0);
    return {log_abs, sgn(q)};
  }
  return log_rows_[i][j];
}

double StirlingTable::value(int i, int j) const {
  if (representation_ == Representation::exact_rational) return to_double(exact(i, j));
  return log_value(i, j).value();
}

bool StirlingTable::possible_cancellation(int i, int j) const {
  if (j < 0 || j > i) return false;
  check_index(i, j);
  return cancel_rows_[i][j] != 0;
}

Rational gen_stirling(int i, int j, const Rational& a, const Rational& b, const Rational& r) {
  if (i < 0 || j < 0) throw ParameterError("generalized Stirling indices must be non-negative");
  if (j > i) return 0;
  StirlingTable table({a, b, r}, i, Representation::exact_rational, j);
  return table.exact(i, j);
}

double gen_stirling(int i, int j, double a, double b, double r) {
  if (i < 0 || j < 0) throw ParameterError("generalized Stirling indices must be non-negative");
  if (j > i) return 0.0;
  StirlingTable table({to_rational(a), to_rational(b), to_rational(r)}, i,
                      Representation::signed_log, j);
  return table.value(i, j);
}

namespace {
void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ParameterError("s_alpha requires 0 <= alpha < 1, got " + std::to_string(alpha));
}
}  // namespace

SignedLog s_alpha(int i, int j, double alpha) {
  check_alpha(alpha);
  if (i < 0 || j < 0) throw ParameterError("s_alpha indices must be non-negative");
  if (j > i) return SignedLog::zero();
  SAlphaTable table(alpha, i, j);
  double lv = table.log_value(i, j);
  return std::isinf(lv) ? SignedLog::zero() : SignedLog::from_log(lv);
}

SAlphaTable::SAlphaTable(double alpha, int max_i, int max_col)
    : alpha_(alpha),
      log_gamma_one_minus_alpha_((check_alpha(alpha), log_gamma(1.0 - alpha))),
      table_({Rational(-1), Rational(-to_rational(alpha)), Rational(0)}, max_i,
             Representation::signed_log, max_col) {}

double SAlphaTable::log_value(int i, int j) const {
  SignedLog s = table_.log_value(i, j);
  if (s.is_zero()) return -std::numeric_limits<double>::infinity();
  return s.log_abs + j * log_gamma_one_minus_alpha_;
}

StirlingParams classical_params(ClassicalKind kind) {
  switch (kind) {
    case ClassicalKind::second_kind:
      return {0, 1, 0};
    case ClassicalKind::first_kind_unsigned:
      return {-1, 0, 0};
    case ClassicalKind::lah:
      return {-1, 1, 0};
  }
  throw ParameterError("unknown Stirling kind");
}

StirlingTable classical_tables(ClassicalKind kind, int max_i, int cap) {
  if (max_i > cap)
    throw ParameterError("Stirling table size " + std::to_string(max_i) + " exceeds cap " +
                         std::to_string(cap));
  return StirlingTable(classical_params(kind), max_i, Representation::exact_rational);
}

}  // namespace xicoal
