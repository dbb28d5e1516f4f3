#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "xicoal/duality.hpp"
#include "xicoal/random.hpp"
#include "xicoal/rates.hpp"

namespace xicoal {

// ---------------------------------------------------------------------------
// Chinese restaurant chains.

/// K_{n+1} = K_n + 1 with probability p_k(n) given K_n = k.
struct CrpChainSpec {
  enum class Family { dirichlet, poisson_dirichlet } family = Family::dirichlet;
  int N = 1;
  Rational alpha;
  Rational theta;

  static CrpChainSpec from_model(const CoalescentModel& model);
  Rational step_exact(int k, int n) const;
  double step(int k, int n) const;
};

/// P(K_n = k) for k = 1..min(n, N); element k-1. Exact forward recursion.
std::vector<Rational> crp_distribution_exact(const CrpChainSpec& spec, int n);
std::vector<double> crp_distribution(const CrpChainSpec& spec, int n);

/// E K_n for the Dirichlet chain: N - N [(N-1)α]_n / [Nα]_n.
Rational dirichlet_crp_mean(int N, const Rational& alpha, int n);

// ---------------------------------------------------------------------------
// Path simulation.

struct SamplePath {
  std::vector<double> times;  // jump times, increasing
  std::vector<int> states;    // states[0] is the initial state; kInfinity may end an L path
  double horizon = 0.0;
  /// L only: the path crossed the censoring level and was stopped there.
  bool censored = false;

  /// State at time t <= horizon.
  int state_at(double t) const;
};

/// Simulates N and L from their rates with per-state cached jump rows.
///
/// Rows of N are complete; rows of L grow lazily toward the first target
/// whose cumulative mass covers the draw. Both caches are LRU-bounded and
/// guarded by a mutex, so one simulator can serve many threads.
class ChainSimulator {
 public:
  explicit ChainSimulator(const RateEngine& engine, std::size_t cache_rows = 100000,
                          long term_cap = 1000000);

  const RateEngine& engine() const { return engine_; }

  /// N from n until absorption in 1 or the horizon.
  SamplePath simulate_N(int n, double horizon, Rng& rng) const;
  /// N_t from n, without storing the path.
  int N_at(int n, double t, Rng& rng) const;

  /// L from n until ∞ or the horizon. With stop_at set, the path stops at the
  /// first jump to a state >= stop_at; the last state is then recorded as
  /// stop_at and `censored` is set.
  SamplePath simulate_L(int n, double horizon, Rng& rng, int stop_at = kInfinity) const;
  int L_at(int n, double t, Rng& rng, int stop_at = kInfinity) const;

  /// Next state of the jump chain of N from i (i >= 2).
  int jump_N(int i, Rng& rng) const;
  /// Next state of the jump chain of L from i; kInfinity for ∞.
  int jump_L(int i, Rng& rng, int stop_at = kInfinity) const;

 private:
  struct RowN {
    double total = 0.0;
    std::vector<double> cumulative;  // cumulative[j-1] = Σ_{k<=j} q_ik, trimmed after the last positive entry
  };
  struct RowL {
    double total = 0.0;      // γ_i
    double to_infinity = 0.0;  // γ_{i∞}
    std::vector<double> cumulative;  // cumulative[m] = Σ_{k=i+1}^{i+1+m} γ_ik
  };
  std::shared_ptr<const RowN> row_N(int i) const;
  /// Row of L with at least min_terms accumulated targets (fewer if capped).
  std::shared_ptr<const RowL> row_L(int i, std::size_t min_terms) const;
  /// Telescoped mass of targets beyond the accumulated prefix.
  double L_row_remainder(int i, std::size_t terms) const;

  const RateEngine& engine_;
  std::size_t cache_rows_;
  long term_cap_;
  bool L_explodes_;

  mutable std::mutex mutex_;
  mutable std::list<int> lru_N_, lru_L_;
  mutable std::unordered_map<int, std::pair<std::shared_ptr<const RowN>, std::list<int>::iterator>> cache_N_;
  mutable std::unordered_map<int, std::pair<std::shared_ptr<const RowL>, std::list<int>::iterator>> cache_L_;
};

// ---------------------------------------------------------------------------
// Experiments.

/// One estimate against a reference, decided at `sigma` standard errors.
struct Comparison {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  std::optional<double> reference;
  std::string reference_source;
  double sigma = 4.0;
  /// When set, the decision is |estimate - reference| <= tolerance instead
  /// of the σ rule.
  std::optional<double> tolerance;
  /// Unset when there is no reference to decide against.
  std::optional<bool> pass;

  void decide();
};

struct ExperimentReport {
  std::string experiment;
  std::string model;
  long reps = 0;
  std::uint64_t seed = 0;
  std::vector<Comparison> comparisons;
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  std::vector<std::string> notes;
  bool pass = true;

  /// pass = every decided comparison passed and no extra condition failed.
  void finish(bool extra_conditions = true);
};

/// Per-replicate stream row (rep, init, t, value).
struct ReplicateRow {
  long rep;
  int init;
  double t;
  double value;
};
using ReplicateSink = std::function<void(const ReplicateRow&)>;

/// P(N_t^{(i)} <= j) against P(L_t^{(j)} >= i) from independent batches, with
/// a pooled two-proportion z-test at `sigma`. L is censored at level i.
ExperimentReport mc_duality_test(const RateEngine& engine, int i, int j, double t, long reps, std::uint64_t seed,
                                 int threads = 1, double sigma = 4.0, const ReplicateSink& sink = {});

/// Exact law of the number of jumps C_n of N^{(n)} to absorption, by dynamic
/// programming over the states reachable from n. Element k holds P(C_n = k).
std::vector<double> jump_count_distribution(const RateEngine& engine, int n, long max_states = 20000);

/// E τ_n and Var τ_n by first-step analysis.
std::pair<double, double> absorption_time_moments(const RateEngine& engine, int n, long max_states = 20000);

struct DirichletLimitLaws {
  int N = 0;
  /// P(C_∞ = k) for k = 0..; C_∞ = 1 + C_N.
  std::vector<double> jump_count;
  double tau_mean = 0.0;
  double tau_variance = 0.0;
  /// Exact sub-generator of the phase-type law of τ_∞ on {E, 2..N}.
  Matrix<double> phase_generator;

  /// P(τ_∞ <= t) by uniformization.
  double tau_cdf(double t, double tol = 1e-13) const;
};

DirichletLimitLaws dirichlet_limit_laws(int N, const Rational& alpha);

/// Total variation distance between two laws on {0, 1, ...}.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// Empirical C_n and τ_n from `reps` paths, compared with the exact DP (when
/// the reachable state set is small enough) and, for Dirichlet models, with
/// the limit laws.
ExperimentReport jumps_and_absorption(const RateEngine& engine, int n, long reps, std::uint64_t seed,
                                      int threads = 1, double sigma = 3.0, const ReplicateSink& sink = {});

struct DustOptions {
  std::vector<int> n_list{100, 500, 2000};
  double t = 0.5;
  std::vector<int> moments{1, 2};
  long reps = 20000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Absolute error allowed at the largest n.
  double tolerance = 0.05;
  /// Monotone decay is judged within this many standard errors.
  double decay_sigma = 2.0;
  /// Grid for P(n / L_t^{(n)} <= y); empty to skip the L side.
  std::vector<double> y_grid;
};

/// E[(N_t^{(n)}/n)^k] against e^{-t Φ(k)} along n_list.
ExperimentReport dust_convergence_experiment(const RateEngine& engine, const DustOptions& options,
                                             const ReplicateSink& sink = {});

}  // namespace xicoal
