#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xicoal/linalg.hpp"
#include "xicoal/rates.hpp"

namespace xicoal {

/// Marker for the infinite state in generators and sample paths.
inline constexpr int kInfinity = std::numeric_limits<int>::max();

/// Generator restricted to states 1..n plus ∞ (index n).
///
/// Diagonal entries are minus the full row total, so the mass that leaves the
/// window is carried in `tail`, not silently moved to ∞.
struct TruncatedGenerator {
  int n = 0;
  Matrix<double> rates;
  std::optional<Matrix<Rational>> exact;
  std::vector<double> tail;
  std::optional<std::vector<Rational>> exact_tail;

  /// Row/column index of a state (1..n or kInfinity).
  int index(int state) const { return state == kInfinity ? n : state - 1; }
  double at(int from, int to) const { return rates[index(from)][index(to)]; }
  /// Row sum including the tail; zero up to rounding.
  double row_balance(int state) const;
};

struct GeneratorPair {
  TruncatedGenerator Q;
  TruncatedGenerator Gamma;
};

/// Q and Γ on {1..n, ∞}. Γ's tail for row j is q_{n+1,≤j} - ν(Δ_j).
GeneratorPair build_generators(const RateEngine& engine, int n);

struct CheckReport {
  std::string identity;
  std::string window;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  std::pair<int, int> worst_entry{0, 0};
  std::string truncation_note;
  /// "absolute" or "relative": which residual decides `pass`.
  std::string measure = "absolute";
  double tolerance = 0.0;
  bool pass = false;
  bool exact = false;
  bool heuristic = false;
  long entries = 0;
  /// Extra named diagnostics (e.g. an uncorrected residual).
  std::vector<std::pair<std::string, double>> diagnostics;

  void record(int i, int j, double lhs, double rhs);
  void record_exact(int i, int j, const Rational& lhs, const Rational& rhs);
  void finish(double tol);
};

/// q_{i,≤j} against Σ_{k≥i} γ_jk + γ_{j∞} for 1 ≤ j < i ≤ n and for i = ∞.
/// The infinite sum is cut at K and completed by the telescoped remainder
/// q_{K+1,≤j} - ν(Δ_j); exact models use rational arithmetic throughout.
CheckReport check_siegmund(const RateEngine& engine, int n, double tol, bool relative = false,
                           int max_terms = 2048);

/// QH = HΓ^T with H(i,j) = 1{i ≤ j} on {(i,j): i + j ≤ n} and the ∞ row.
CheckReport check_generator_identity(const GeneratorPair& generators, double tol);

/// Green matrix of N on states 2..n: g = -Q̃^{-1}. Index [i-2][j-2].
struct GreenMatrix {
  int first_state = 2;
  Matrix<double> g;
  std::optional<Matrix<Rational>> exact;
  /// max |Q̃ g + I|.
  double solve_residual = 0.0;
};

GreenMatrix green_matrix_N(const RateEngine& engine, int n, bool exact = false);

/// Column j of N's Green matrix for starting states j..last, from the
/// first-step recursion g_{mj} = Σ_l (q_ml / q_m) g_{lj}. Element m-j holds g_{mj}.
std::vector<double> green_column_N(const RateEngine& engine, int j, int last);

/// Green matrix of L: ĝ_ij = P(L^{(i)} visits j) / γ_j for starting states
/// 1..n_start_max and targets 1..K. Index [i-1][j-1]; per-entry tail bounds are
/// zero because every entry up to K is an exact finite recursion.
struct GreenMatrixL {
  int n_start_max = 0;
  int K = 0;
  Matrix<double> g;
  Matrix<double> tail_bound;
};

GreenMatrixL green_matrix_L(const RateEngine& engine, int n_start_max, int K);

/// g_ij = Σ_{k=i}^{K} (ĝ_jk - ĝ_{j-1,k}) + g_{K+1,j} for 2 ≤ i, j ≤ window.
/// B_j (the ∞ boundary term) is reported through the tail g_{K+1,j} - B_j;
/// the uncorrected form g_ij = Σ_{k≥i} (ĝ_jk - ĝ_{j-1,k}) (without ĝ_1 for
/// j = 2) is recorded as a diagnostic and never gates the result.
CheckReport check_green_duality(const RateEngine& engine, int window, double tol, int K = 256);

/// Boundary term B_j: 1/C(j,2) for Kingman, g_{Nj} for Dirichlet, 0 for
/// Poisson-Dirichlet. Throws ParameterError for other families.
double green_boundary_term(const RateEngine& engine, int j);

// Stirling duality on the generalized Stirling numbers S(i,j;a,b,r).

struct AppendixParams {
  Rational a, b, r, t;
};

/// q_ij = (t - r | b)_j / (t | a)_i S(i, j; a, b, r). At t = 0 with r = 0 the
/// common factor t is cancelled (continuous extension); other poles throw.
Rational appendix_q(const AppendixParams& p, int i, int j);

struct AppendixLimit {
  Rational value;
  std::string source;  // "dirichlet", "poisson-dirichlet" or "stabilized"
  bool heuristic = false;
};

/// lim_k q_{k,≤j}: known for the two Markov-chain parameterizations,
/// otherwise read off q_{2K,≤j} with K = stabilization_k.
AppendixLimit appendix_limit(const AppendixParams& p, int j, int stabilization_k = 200);

/// q_{k,≤j} - q_{k+1,≤j} = (t - r - jb)/(t - ka) q_kj for 0 ≤ k ≤ k_max (exact).
CheckReport check_appendix_telescoping(const AppendixParams& p, int j, int k_max);

/// q_{i,≤j} - lim = Σ_{k≥i} (t - r - jb)/(t - ka) q_kj for i_min ≤ i ≤ i_max,
/// with the sum cut at K and completed by q_{K+1,≤j} - lim.
CheckReport check_appendix_duality(const AppendixParams& p, int j, int i_min, int i_max, double tol,
                                   int K = 0);

}  // namespace xicoal
