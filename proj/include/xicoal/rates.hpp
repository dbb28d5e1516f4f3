#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "xicoal/models.hpp"
#include "xicoal/stirling.hpp"

namespace xicoal {

struct RateValue {
  double value = 0.0;
  std::optional<Rational> exact;
  /// Mass of an infinite sum that was not summed term by term.
  std::optional<double> remainder_bound;
};

/// Rates of the block counting process (q) and of the fixation line (γ).
///
/// Exact-capable models answer both the Rational and the double interfaces;
/// the others throw ParameterError from the Rational one. Stirling tables
/// grow on demand and are shared between threads through immutable snapshots.
class RateEngine {
 public:
  explicit RateEngine(CoalescentModel model);

  const CoalescentModel& model() const { return model_; }
  bool exact() const { return exact_; }

  // Block counting process.
  double q(int i, int j) const;
  double q_total(int i) const;
  /// Σ_{j<i} q_ij, independent of the closed-form total.
  double q_total_by_summation(int i) const;
  /// q_{i,≤j} = Σ_{k≤j} q_ik for j < i.
  double q_cumulative(int i, int j) const;
  /// Off-diagonal row i: element j-1 holds q_ij for j = 1..i-1.
  std::vector<double> q_row(int i) const;

  Rational q_exact(int i, int j) const;
  Rational q_total_exact(int i) const;
  Rational q_cumulative_exact(int i, int j) const;

  // Fixation line.
  double gamma(int i, int j) const;
  double gamma_total(int i) const { return q_total(i + 1); }
  Rational gamma_exact(int i, int j) const;
  Rational gamma_total_exact(int i) const { return q_total_exact(i + 1); }

  /// ν(Δ_j); also γ_{j∞} and the limit of q_{k,≤j} as k grows.
  Rational nu(int j) const { return nu_delta(model_, j); }

  // Checked interfaces with state validation.
  RateValue q_rate(int i, int j) const;
  RateValue q_total_rate(int i) const;
  RateValue q_row_infinity(int j) const;
  /// q_{∞∞} = -ν(Δ_f).
  RateValue q_infinity_infinity() const;
  RateValue gamma_rate(int i, int j) const;
  RateValue gamma_to_infinity(int i) const;
  RateValue gamma_total_rate(int i) const;

  /// γ_i from Σ_{j=i+1}^{K} γ_ij + γ_{i∞} plus the telescoped remainder
  /// q_{K+1,≤i} - ν(Δ_i), with K doubled until the remainder is below
  /// tol * value or max_terms is reached. The remainder ships as the bound.
  RateValue gamma_total_summed(int i, double tol = 1e-12, int max_terms = 4096) const;

  /// Second Dirichlet representation of q_ij through compositions of i into
  /// j parts; exact.
  Rational dirichlet_q_by_compositions(int i, int j) const;

 private:
  std::shared_ptr<const StirlingTable> exact_table(int rows) const;
  std::shared_ptr<const StirlingTable> log_table(int rows) const;
  double q_with(const StirlingTable* table, int i, int j) const;
  double gamma_with(const StirlingTable* table, int i, int j) const;
  double pd_log_c(int j) const;

  CoalescentModel model_;
  bool exact_;
  // Cached parameters in double precision.
  double alpha_ = 0.0, theta_ = 0.0, a_ = 0.0, b_ = 0.0;
  int N_ = 0;
  MassPoint point_double_;

  mutable std::mutex mutex_;
  mutable std::shared_ptr<const StirlingTable> exact_table_;
  mutable std::shared_ptr<const StirlingTable> log_table_;
  mutable std::vector<double> pd_log_c_;
};

/// Closed forms of γ_i for β(2-α, α) and β(3, b); empty for other parameters.
std::optional<double> beta_gamma_total_closed_form(const BetaLambda& beta, int i);

/// Monte Carlo estimate of q_ij = ∫ P(Y(i,x) = j) ν(dx) for models whose ν is
/// a probability law that can be sampled.
Estimate mc_rate_oracle(const CoalescentModel& model, int i, int j, long reps, std::uint64_t seed,
                        int threads = 1);

/// Monte Carlo estimate of γ_ij = ∫ P(Y(j,x) = i, Y(j+1,x) = i+1) ν(dx).
Estimate mc_gamma_oracle(const CoalescentModel& model, int i, int j, long reps, std::uint64_t seed,
                         int threads = 1);

/// Draws x from ν (normalized to a probability law); parts are not sorted.
/// Supports Dirichlet, Poisson-Dirichlet and Dirac models.
MassPoint sample_nu(const CoalescentModel& model, Rng& rng);

}  // namespace xicoal
