#include "xicoal/duality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xicoal {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

double relative_gap(double lhs, double rhs) {
  double scale = std::max(std::fabs(lhs), std::fabs(rhs));
  return scale == 0.0 ? 0.0 : std::fabs(lhs - rhs) / scale;
}

}  // namespace

double TruncatedGenerator::row_balance(int state) const {
  const auto& row = rates[index(state)];
  double sum = tail[index(state)];
  for (double v : row) sum += v;
  return sum;
}

void CheckReport::record(int i, int j, double lhs, double rhs) {
  ++entries;
  double abs_gap = std::fabs(lhs - rhs);
  double rel_gap = relative_gap(lhs, rhs);
  if (std::isnan(abs_gap)) abs_gap = rel_gap = INFINITY;
  double key_new = measure == "relative" ? rel_gap : abs_gap;
  double key_old = measure == "relative" ? max_rel_residual : max_abs_residual;
  if (key_new > key_old || entries == 1) worst_entry = {i, j};
  max_abs_residual = std::max(max_abs_residual, abs_gap);
  max_rel_residual = std::max(max_rel_residual, rel_gap);
}

void CheckReport::record_exact(int i, int j, const Rational& lhs, const Rational& rhs) {
  record(i, j, to_double(lhs), to_double(rhs));
  if (lhs != rhs) {
    // Keep exact disagreement visible even when it rounds away in double.
    double gap = std::fabs(to_double(Rational(lhs - rhs)));
    if (gap == 0.0) gap = std::numeric_limits<double>::denorm_min();
    max_abs_residual = std::max(max_abs_residual, gap);
  } else if (entries == 1) {
    worst_entry = {i, j};
  }
}

void CheckReport::finish(double tol) {
  tolerance = tol;
  double value = measure == "relative" ? max_rel_residual : max_abs_residual;
  pass = value <= tol;
}

// ---------------------------------------------------------------------------

GeneratorPair build_generators(const RateEngine& engine, int n) {
  if (n < 2) throw ParameterError("generators need n >= 2");
  const bool exact = engine.exact();
  const int size = n + 1;
  GeneratorPair out;
  for (TruncatedGenerator* G : {&out.Q, &out.Gamma}) {
    G->n = n;
    G->rates.assign(size, std::vector<double>(size, 0.0));
    G->tail.assign(size, 0.0);
    if (exact) {
      G->exact = Matrix<Rational>(size, std::vector<Rational>(size, Rational(0)));
      G->exact_tail = std::vector<Rational>(size, Rational(0));
    }
  }
  auto set = [exact](TruncatedGenerator& G, int r, int c, const RateValue& v) {
    G.rates[r][c] = v.value;
    if (exact) (*G.exact)[r][c] = *v.exact;
  };
  // Q: finite rows jump downward only.
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j < i; ++j) set(out.Q, i - 1, j - 1, engine.q_rate(i, j));
    RateValue total = engine.q_total_rate(i);
    out.Q.rates[i - 1][i - 1] = -total.value;
    if (exact) (*out.Q.exact)[i - 1][i - 1] = -*total.exact;
  }
  // Q: the ∞ row.
  for (int j = 1; j <= n; ++j) set(out.Q, n, j - 1, engine.q_row_infinity(j));
  set(out.Q, n, n, engine.q_infinity_infinity());
  {
    Rational tail = nu_delta_finite(engine.model()) - engine.nu(n);
    out.Q.tail[n] = to_double(tail);
    if (exact) (*out.Q.exact_tail)[n] = tail;
  }
  // Γ: upward jumps within the window, the ∞ column and the remainder beyond n.
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) set(out.Gamma, i - 1, j - 1, engine.gamma_rate(i, j));
    set(out.Gamma, i - 1, n, engine.gamma_to_infinity(i));
    RateValue total = engine.gamma_total_rate(i);
    out.Gamma.rates[i - 1][i - 1] = -total.value;
    if (exact) {
      (*out.Gamma.exact)[i - 1][i - 1] = -*total.exact;
      Rational tail = engine.q_cumulative_exact(n + 1, i) - engine.nu(i);
      (*out.Gamma.exact_tail)[i - 1] = tail;
      out.Gamma.tail[i - 1] = to_double(tail);
    } else {
      out.Gamma.tail[i - 1] = engine.q_cumulative(n + 1, i) - to_double(engine.nu(i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CheckReport check_siegmund(const RateEngine& engine, int n, double tol, bool relative, int max_terms) {
  if (n < 2) throw ParameterError("duality check needs n >= 2");
  CheckReport report;
  report.identity = "siegmund: q_{i,<=j} = sum_{k>=i} gamma_{jk} + gamma_{j,inf}";
  report.window = "1 <= j < i <= " + std::to_string(n) + " and i = inf";
  report.measure = relative ? "relative" : "absolute";
  double max_remainder = 0.0;
  int used_K = 0;
  if (engine.exact()) {
    report.exact = true;
    const int K = 2 * n;
    used_K = K;
    // Rows of q up to K+1, computed once.
    std::vector<std::vector<Rational>> qrow(K + 2);
    for (int i = 2; i <= K + 1; ++i) {
      qrow[i].resize(i);
      for (int j = 1; j < i; ++j) qrow[i][j] = engine.q_exact(i, j);
    }
    auto q_cum = [&](int i, int j) {
      Rational s = 0;
      for (int k = 1; k <= j; ++k) s += qrow[i][k];
      return s;
    };
    for (int j = 1; j < n; ++j) {
      const Rational nu_j = engine.nu(j);
      const Rational remainder = q_cum(K + 1, j) - nu_j;
      max_remainder = std::max(max_remainder, std::fabs(to_double(remainder)));
      // suffix[k] = Σ_{l=k}^{K} γ_jl
      std::vector<Rational> suffix(K + 2, Rational(0));
      for (int k = K; k > j; --k) suffix[k] = suffix[k + 1] + engine.gamma_exact(j, k);
      for (int i = j + 1; i <= n; ++i) report.record_exact(i, j, q_cum(i, j), suffix[i] + nu_j + remainder);
      report.record_exact(kInfinity, j, nu_j, nu_j);
    }
  } else {
    for (int j = 1; j < n; ++j) {
      const double nu_j = to_double(engine.nu(j));
      std::vector<double> gamma_row(1, 0.0);  // gamma_row[k - j] = γ_jk
      int K = std::max(2 * n, 64);
      int summed_to = j;
      double remainder = 0.0;
      while (true) {
        K = std::min(K, max_terms);
        for (int k = summed_to + 1; k <= K; ++k) gamma_row.push_back(engine.gamma(j, k));
        summed_to = K;
        remainder = std::max(0.0, engine.q_cumulative(K + 1, j) - nu_j);
        if (remainder <= tol / 10.0 || K >= max_terms) break;
        K *= 2;
      }
      used_K = std::max(used_K, K);
      max_remainder = std::max(max_remainder, remainder);
      std::vector<double> suffix(K - j + 2, 0.0);
      for (int k = K; k > j; --k) suffix[k - j] = suffix[k - j + 1] + gamma_row[k - j];
      for (int i = j + 1; i <= n; ++i)
        report.record(i, j, engine.q_cumulative(i, j), suffix[i - j] + nu_j + remainder);
      report.record(kInfinity, j, nu_j, nu_j);
    }
  }
  report.truncation_note = "K=" + std::to_string(used_K) +
                           "; tail beyond K added as q_{K+1,<=j} - nu(Delta_j), max " + fmt(max_remainder);
  report.diagnostics.push_back({"max_telescoped_remainder", max_remainder});
  report.diagnostics.push_back({"K", static_cast<double>(used_K)});
  report.finish(tol);
  return report;
}

CheckReport check_generator_identity(const GeneratorPair& generators, double tol) {
  const auto& Q = generators.Q;
  const auto& G = generators.Gamma;
  const int n = Q.n;
  CheckReport report;
  report.identity = "QH = H Gamma^T";
  report.window = "i + j <= " + std::to_string(n) + " and the inf row";
  const bool exact = Q.exact && G.exact;
  report.exact = exact;
  if (n < 2) throw ParameterError("generator identity needs n >= 2");
  for (int i = 1; i < n; ++i) {
    for (int j = 1; i + j <= n; ++j) {
      if (exact) {
        Rational lhs = 0, rhs = (*G.exact)[j - 1][n] + (*G.exact_tail)[j - 1];
        for (int k = 1; k <= j; ++k) lhs += (*Q.exact)[i - 1][k - 1];
        for (int k = i; k <= n; ++k) rhs += (*G.exact)[j - 1][k - 1];
        report.record_exact(i, j, lhs, rhs);
      } else {
        double lhs = 0.0, rhs = G.rates[j - 1][n] + G.tail[j - 1];
        for (int k = 1; k <= j; ++k) lhs += Q.rates[i - 1][k - 1];
        for (int k = i; k <= n; ++k) rhs += G.rates[j - 1][k - 1];
        report.record(i, j, lhs, rhs);
      }
    }
  }
  for (int j = 1; j <= n; ++j) {
    if (exact) {
      Rational lhs = 0;
      for (int k = 1; k <= j; ++k) lhs += (*Q.exact)[n][k - 1];
      report.record_exact(kInfinity, j, lhs, (*G.exact)[j - 1][n]);
    } else {
      double lhs = 0.0;
      for (int k = 1; k <= j; ++k) lhs += Q.rates[n][k - 1];
      report.record(kInfinity, j, lhs, G.rates[j - 1][n]);
    }
  }
  report.truncation_note = "Gamma rows carry the mass beyond n as an explicit tail";
  report.finish(tol);
  return report;
}

// ---------------------------------------------------------------------------
// Green matrices.

GreenMatrix green_matrix_N(const RateEngine& engine, int n, bool exact) {
  if (n < 2) throw ParameterError("green matrix needs n >= 2");
  const int size = n - 1;
  GreenMatrix out;
  if (exact) {
    Matrix<Rational> A(size, std::vector<Rational>(size, Rational(0)));
    for (int i = 2; i <= n; ++i) {
      for (int j = 2; j < i; ++j) A[i - 2][j - 2] = engine.q_exact(i, j);
      A[i - 2][i - 2] = -engine.q_total_exact(i);
    }
    Matrix<Rational> minus_identity = identity_matrix<Rational>(size);
    for (auto& row : minus_identity)
      for (auto& v : row) v = -v;
    Matrix<Rational> g = solve_exact(A, minus_identity);
    // Q̃ g + I must vanish identically.
    Rational worst = 0;
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        Rational s = r == c ? 1 : 0;
        for (int k = 0; k < size; ++k) s += A[r][k] * g[k][c];
        if (abs(s) > worst) worst = abs(s);
      }
    out.solve_residual = to_double(worst);
    out.g.assign(size, std::vector<double>(size));
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) out.g[r][c] = to_double(g[r][c]);
    out.exact = std::move(g);
    return out;
  }
  Matrix<double> A(size, std::vector<double>(size, 0.0));
  for (int i = 2; i <= n; ++i) {
    auto row = engine.q_row(i);
    for (int j = 2; j < i; ++j) A[i - 2][j - 2] = row[j - 1];
    A[i - 2][i - 2] = -engine.q_total(i);
  }
  Matrix<double> minus_identity = identity_matrix<double>(size);
  for (auto& row : minus_identity)
    for (auto& v : row) v = -v;
  SolveResult solved = solve_refined(A, minus_identity);
  out.g = std::move(solved.X);
  out.solve_residual = solved.residual;
  return out;
}

std::vector<double> green_column_N(const RateEngine& engine, int j, int last) {
  if (j < 2 || last < j) throw ParameterError("green column needs 2 <= j <= last");
  std::vector<double> col(last - j + 1, 0.0);
  col[0] = 1.0 / engine.q_total(j);
  for (int m = j + 1; m <= last; ++m) {
    auto row = engine.q_row(m);
    double q_m = engine.q_total(m);
    double s = 0.0;
    for (int l = j; l < m; ++l) s += row[l - 1] * col[l - j];
    col[m - j] = s / q_m;
  }
  return col;
}

GreenMatrixL green_matrix_L(const RateEngine& engine, int n_start_max, int K) {
  if (n_start_max < 1 || K < n_start_max) throw ParameterError("green_matrix_L needs 1 <= n_start_max <= K");
  GreenMatrixL out;
  out.n_start_max = n_start_max;
  out.K = K;
  out.g.assign(n_start_max, std::vector<double>(K, 0.0));
  out.tail_bound.assign(n_start_max, std::vector<double>(K, 0.0));
  // Jump probabilities p_kl = γ_kl / γ_k for 1 <= k < l <= K.
  std::vector<double> total(K + 1);
  for (int k = 1; k <= K; ++k) total[k] = engine.gamma_total(k);
  std::vector<std::vector<double>> p(K + 1);
  for (int k = 1; k < K; ++k) {
    p[k].assign(K + 1, 0.0);
    if (total[k] == 0.0) continue;
    for (int l = k + 1; l <= K; ++l) p[k][l] = engine.gamma(k, l) / total[k];
  }
  for (int i = 1; i <= n_start_max; ++i) {
    std::vector<double> visit(K + 1, 0.0);
    visit[i] = 1.0;
    for (int l = i + 1; l <= K; ++l) {
      double s = 0.0;
      for (int k = i; k < l; ++k) s += visit[k] * p[k][l];
      visit[l] = s;
    }
    for (int l = i; l <= K; ++l) out.g[i - 1][l - 1] = total[l] > 0.0 ? visit[l] / total[l] : 0.0;
  }
  return out;
}

double green_boundary_term(const RateEngine& engine, int j) {
  const auto& model = engine.model();
  if (std::holds_alternative<Kingman>(model)) return 2.0 / (j * (j - 1.0));
  if (auto* d = std::get_if<Dirichlet>(&model)) {
    if (j > d->N || d->N < 2) return 0.0;
    return green_column_N(engine, j, d->N).back();
  }
  if (std::holds_alternative<PoissonDirichlet>(model)) return 0.0;
  throw ParameterError("green duality check supports kingman, dirichlet and pd models");
}

namespace {

/// Columns 2..j_max of N's Green matrix at starting states `probes`, sharing
/// one pass over the rows of Q. result[p][j-2] = g_{probes[p], j}.
std::vector<std::vector<double>> green_columns_at(const RateEngine& engine, int j_max,
                                                  const std::vector<int>& probes) {
  const int last = *std::max_element(probes.begin(), probes.end());
  std::vector<std::vector<double>> col(j_max - 1, std::vector<double>(last + 1, 0.0));
  for (int m = 2; m <= last; ++m) {
    auto row = engine.q_row(m);
    const double q_m = engine.q_total(m);
    for (int j = 2; j <= std::min(j_max, m); ++j) {
      auto& c = col[j - 2];
      if (m == j) {
        c[m] = 1.0 / q_m;
        continue;
      }
      double s = 0.0;
      for (int l = j; l < m; ++l) s += row[l - 1] * c[l];
      c[m] = s / q_m;
    }
  }
  std::vector<std::vector<double>> out(probes.size(), std::vector<double>(j_max - 1));
  for (std::size_t p = 0; p < probes.size(); ++p)
    for (int j = 2; j <= j_max; ++j) out[p][j - 2] = col[j - 2][probes[p]];
  return out;
}

}  // namespace

CheckReport check_green_duality(const RateEngine& engine, int window, double tol, int K) {
  if (window < 2) throw ParameterError("green duality window must be at least 2");
  if (K <= window) throw ParameterError("green duality needs K > window");
  green_boundary_term(engine, 2);  // rejects unsupported families
  CheckReport report;
  report.identity = "green: g_ij = sum_{k>=i} (ghat_jk - ghat_{j-1,k}) + B_j";
  report.window = "2 <= i, j <= " + std::to_string(window);
  GreenMatrix G = green_matrix_N(engine, window);
  GreenMatrixL L = green_matrix_L(engine, window, K);
  // g_{K+1,j} closes the truncated sum; g_{16K+1,j} shows whether it tends to B_j.
  const int far = 16 * K + 1;
  auto probes = green_columns_at(engine, window, {K + 1, far});
  const int half = K / 2;
  double tail_K = 0.0, tail_far = 0.0;
  double uncorrected_max = 0.0;
  double uncorrected_32 = NAN;
  for (int j = 2; j <= window; ++j) {
    const double g_next = probes[0][j - 2];
    const double B = green_boundary_term(engine, j);
    tail_K = std::max(tail_K, std::fabs(g_next - B));
    tail_far = std::max(tail_far, std::fabs(probes[1][j - 2] - B));
    for (int i = 2; i <= window; ++i) {
      auto ghat = [&](int from, int to) { return L.g[from - 1][to - 1]; };
      double paired = 0.0, plain = 0.0, plain_half = 0.0;
      for (int k = i; k <= K; ++k) {
        double d = ghat(j, k) - ghat(j - 1, k);
        paired += d;
        plain += j == 2 ? ghat(2, k) : d;
        if (k <= half) plain_half += j == 2 ? ghat(2, k) : d;
      }
      const double lhs = G.g[i - 2][j - 2];
      report.record(i, j, lhs, paired + g_next);
      // Uncorrected form, its tail extrapolated from the partial sums at K/2 and K.
      double uncorrected = std::fabs(lhs - (2.0 * plain - plain_half));
      uncorrected_max = std::max(uncorrected_max, uncorrected);
      if (i == 3 && j == 2) uncorrected_32 = uncorrected;
    }
  }
  report.truncation_note = "sums cut at K=" + std::to_string(K) + " and closed by g_{K+1,j}; max |g_{K+1,j} - B_j| = " +
                           fmt(tail_K) + ", at 16K: " + fmt(tail_far);
  report.diagnostics.push_back({"boundary_tail_K", tail_K});
  report.diagnostics.push_back({"boundary_tail_16K", tail_far});
  report.diagnostics.push_back({"uncorrected_max_abs_residual", uncorrected_max});
  if (!std::isnan(uncorrected_32)) report.diagnostics.push_back({"uncorrected_residual_3_2", uncorrected_32});
  report.diagnostics.push_back({"green_solve_residual", G.solve_residual});
  report.finish(tol);
  // The closing term only stands in for B_j if g_{K,j} visibly approaches it.
  if (tail_far > std::max(tol, 0.5 * tail_K)) {
    report.pass = false;
    report.truncation_note += "; g_{K,j} does not approach B_j";
  }
  return report;
}

// ---------------------------------------------------------------------------
// Generalized Stirling duality.

namespace {

/// Shared exact Stirling rows for a parameter set.
class AppendixTable {
 public:
  AppendixTable(const AppendixParams& p, int rows)
      : p_(p), table_({p.a, p.b, p.r}, rows, Representation::exact_rational) {}
  Rational q(int i, int j) {
    if (i < 0 || j < 0) throw ParameterError("appendix indices must be non-negative");
    if (j > i) return 0;
    table_.extend_to(i);
    Rational s = table_.exact(i, j);
    if (s == 0) return 0;
    return prefactor(i, j) * s;
  }
  Rational q_cumulative(int i, int j) {
    Rational sum = 0;
    for (int k = 0; k <= std::min(i, j); ++k) sum += q(i, k);
    return sum;
  }
  Rational prefactor(int i, int j) const {
    Rational den = falling_factorial(p_.t, p_.a, i);
    if (den != 0) return falling_factorial(Rational(p_.t - p_.r), p_.b, j) / den;
    if (p_.t == 0 && p_.r == 0 && i >= 1 && j >= 1) {
      // Cancel the common factor t of (t|b)_j and (t|a)_i.
      Rational num = 1, den2 = 1;
      for (int l = 1; l < j; ++l) num *= -l * p_.b;
      for (int l = 1; l < i; ++l) den2 *= -l * p_.a;
      if (den2 != 0) return num / den2;
    }
    throw ParameterError("appendix rate has a pole: (t|a)_i vanishes at t = " + p_.t.get_str());
  }

 private:
  AppendixParams p_;
  StirlingTable table_;
};

}  // namespace

Rational appendix_q(const AppendixParams& p, int i, int j) {
  AppendixTable table(p, std::max(i, 0));
  return table.q(i, j);
}

AppendixLimit appendix_limit(const AppendixParams& p, int j, int stabilization_k) {
  AppendixLimit out;
  if (p.a == -1 && p.r == 0) {
    if (p.b > 0) {
      Rational ratio = p.t / p.b;
      if (ratio.get_den() == 1 && ratio >= 1) {
        out.value = j >= ratio ? 1 : 0;
        out.source = "dirichlet";
        return out;
      }
    } else if (p.b > -1 && p.t > p.b && !(p.b == 0 && p.t == 0)) {
      out.value = 0;
      out.source = "poisson-dirichlet";
      return out;
    }
  }
  AppendixTable table(p, 2 * stabilization_k);
  out.value = table.q_cumulative(2 * stabilization_k, j);
  out.source = "stabilized";
  out.heuristic = true;
  return out;
}

CheckReport check_appendix_telescoping(const AppendixParams& p, int j, int k_max) {
  CheckReport report;
  report.identity = "appendix telescoping: q_{k,<=j} - q_{k+1,<=j} = (t-r-jb)/(t-ka) q_kj";
  report.window = "0 <= k <= " + std::to_string(k_max) + ", j = " + std::to_string(j);
  report.exact = true;
  AppendixTable table(p, k_max + 1);
  int skipped = 0;
  for (int k = 0; k <= k_max; ++k) {
    Rational denom = p.t - k * p.a;
    if (denom == 0) {
      ++skipped;
      continue;
    }
    Rational lhs = table.q_cumulative(k, j) - table.q_cumulative(k + 1, j);
    Rational rhs = (p.t - p.r - j * p.b) / denom * table.q(k, j);
    report.record_exact(k, j, lhs, rhs);
  }
  if (skipped) report.truncation_note = std::to_string(skipped) + " pole index skipped";
  report.finish(0.0);
  return report;
}

CheckReport check_appendix_duality(const AppendixParams& p, int j, int i_min, int i_max, double tol, int K) {
  if (i_min < 0 || i_max < i_min) throw ParameterError("appendix duality needs 0 <= i_min <= i_max");
  if (K <= 0) K = 2 * i_max + 10;
  if (K < i_max) throw ParameterError("appendix duality needs K >= i_max");
  CheckReport report;
  report.identity = "appendix duality: q_{i,<=j} - lim_k q_{k,<=j} = sum_{k>=i} (t-r-jb)/(t-ka) q_kj";
  report.window = std::to_string(i_min) + " <= i <= " + std::to_string(i_max) + ", j = " + std::to_string(j);
  report.exact = true;
  AppendixLimit limit = appendix_limit(p, j);
  report.heuristic = limit.heuristic;
  AppendixTable table(p, 2 * K + 1);
  // terms[k] = (t - r - jb)/(t - ka) q_kj, summed from the top.
  std::vector<Rational> suffix(K + 2, Rational(0));
  std::vector<bool> pole(K + 1, false);
  for (int k = K; k >= 0; --k) {
    Rational denom = p.t - k * p.a;
    Rational term = 0;
    if (denom == 0) {
      pole[k] = true;
    } else {
      term = (p.t - p.r - j * p.b) / denom * table.q(k, j);
    }
    suffix[k] = suffix[k + 1] + term;
  }
  const Rational remainder = table.q_cumulative(K + 1, j) - limit.value;
  const Rational remainder_2k = table.q_cumulative(2 * K + 1, j) - limit.value;
  for (int i = i_min; i <= i_max; ++i) {
    bool hits_pole = false;
    for (int k = i; k <= K; ++k) hits_pole = hits_pole || pole[k];
    if (hits_pole) continue;
    report.record_exact(i, j, table.q_cumulative(i, j) - limit.value, suffix[i] + remainder);
  }
  const double r1 = to_double(remainder), r2 = to_double(remainder_2k);
  report.truncation_note = "sum cut at K=" + std::to_string(K) + ", remainder q_{K+1,<=j} - lim = " + fmt(r1) +
                           " (at 2K: " + fmt(r2) + "); limit from " + limit.source;
  report.diagnostics.push_back({"remainder_K", r1});
  report.diagnostics.push_back({"remainder_2K", r2});
  report.finish(tol);
  // The remainder must shrink toward the claimed limit.
  if (std::fabs(r2) > std::fabs(r1) && std::fabs(r1) > tol) report.pass = false;
  return report;
}

}  // namespace xicoal
