#include "xicoal/rates.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace xicoal {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Rational choose2(long n) { return Rational(n * (n - 1) / 2); }

void require_q_state(int i, int j) {
  if (i < 2 || j < 1 || j >= i)
    throw StateError("q_ij needs 1 <= j < i, got i=" + std::to_string(i) + ", j=" + std::to_string(j));
}

void require_gamma_state(int i, int j) {
  if (i < 1 || j <= i)
    throw StateError("gamma_ij needs 1 <= i < j, got i=" + std::to_string(i) + ", j=" + std::to_string(j));
}

void require_exact(bool exact) {
  if (!exact) throw ParameterError("model has no exact rational rates");
}

/// log C(n, k) x^p (1-x)^q with the conventions 0^0 = 1.
double log_atom_term(int n, int k, double x, int p, int q) {
  if (x >= 1.0 && q > 0) return -INFINITY;
  double v = log_binomial(n, k) + p * std::log(x);
  if (q > 0) v += q * std::log1p(-x);
  return v;
}

/// Rising factorial [x]_n in the log domain, x > 0.
double log_rising(double x, int n) { return log_gamma(x + n) - log_gamma(x); }

}  // namespace

RateEngine::RateEngine(CoalescentModel model) : model_(std::move(model)) {
  validate(model_);
  exact_ = exact_capable(model_);
  std::visit(overloaded{
                 [](const Kingman&) {},
                 [this](const BetaLambda& m) {
                   a_ = to_double(m.a);
                   b_ = to_double(m.b);
                 },
                 [](const LambdaAtoms&) {},
                 [this](const DiracNu& m) { point_double_ = to_double(m.point); },
                 [this](const Dirichlet& m) {
                   N_ = m.N;
                   alpha_ = to_double(m.alpha);
                 },
                 [this](const PoissonDirichlet& m) {
                   alpha_ = to_double(m.alpha);
                   theta_ = to_double(m.theta);
                 },
             },
             model_);
}

std::shared_ptr<const StirlingTable> RateEngine::exact_table(int rows) const {
  const auto& d = std::get<Dirichlet>(model_);
  std::lock_guard<std::mutex> lock(mutex_);
  if (!exact_table_) {
    exact_table_ = std::make_shared<StirlingTable>(StirlingParams{-1, d.alpha, 0}, std::max(rows, 16),
                                                   Representation::exact_rational, d.N);
  } else if (exact_table_->max_i() < rows) {
    auto grown = std::make_shared<StirlingTable>(*exact_table_);
    grown->extend_to(std::max(rows, 2 * exact_table_->max_i()));
    exact_table_ = grown;
  }
  return exact_table_;
}

std::shared_ptr<const StirlingTable> RateEngine::log_table(int rows) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!log_table_) {
    StirlingParams params;
    int max_col = -1;
    if (auto* d = std::get_if<Dirichlet>(&model_)) {
      params = {-1, d->alpha, 0};
      max_col = d->N;
    } else {
      const auto& pd = std::get<PoissonDirichlet>(model_);
      params = {-1, Rational(-pd.alpha), 0};
    }
    log_table_ = std::make_shared<StirlingTable>(params, std::max(rows, 64), Representation::signed_log, max_col);
  } else if (log_table_->max_i() < rows) {
    auto grown = std::make_shared<StirlingTable>(*log_table_);
    grown->extend_to(std::max(rows, 2 * log_table_->max_i()));
    log_table_ = grown;
  }
  return log_table_;
}

double RateEngine::pd_log_c(int j) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (pd_log_c_.empty()) pd_log_c_.push_back(0.0);
  while (static_cast<int>(pd_log_c_.size()) <= j) {
    int k = static_cast<int>(pd_log_c_.size());
    pd_log_c_.push_back(pd_log_c_.back() + log_gamma(theta_ + 1.0 + (k - 1) * alpha_) -
                        log_gamma(theta_ + k * alpha_));
  }
  return pd_log_c_[j];
}

// ---------------------------------------------------------------------------
// Double-precision rates.

double RateEngine::q_with(const StirlingTable* table, int i, int j) const {
  return std::visit(
      overloaded{
          [&](const Kingman&) { return j == i - 1 ? 0.5 * i * (i - 1.0) : 0.0; },
          [&](const BetaLambda&) {
            if (exact_) return static_cast<double>(i) / ((i - j) * (i - j + 1.0));
            int k = i - j + 1;  // blocks merged
            return std::exp(log_binomial(i, k) + log_beta(k - 2.0 + a_, j - 1.0 + b_) - log_beta(a_, b_));
          },
          [&](const LambdaAtoms& m) {
            double v = j == i - 1 ? to_double(m.kingman_mass) * 0.5 * i * (i - 1.0) : 0.0;
            for (const auto& atom : m.atoms)
              v += to_double(atom.weight) * std::exp(log_atom_term(i, j - 1, to_double(atom.x), i - j - 1, j - 1));
            return v;
          },
          [&](const DiracNu& m) { return to_double(m.weight) * prob_Y(i, point_double_, j); },
          [&](const Dirichlet&) {
            if (j > N_) return 0.0;
            double log_fall = j * std::log(alpha_) + log_gamma(N_ + 1.0) - log_gamma(N_ - j + 1.0);
            double log_s = table->log_value(i, j).log_abs;
            return std::exp(log_fall - log_rising(N_ * alpha_, i) + log_s);
          },
          [&](const PoissonDirichlet&) {
            double log_s = table->log_value(i, j).log_abs;
            return std::exp(pd_log_c(j) + log_gamma(theta_ + alpha_ * j) - log_gamma(theta_ + i) + log_s);
          },
      },
      model_);
}

double RateEngine::gamma_with(const StirlingTable* table, int i, int j) const {
  return std::visit(
      overloaded{
          [&](const Kingman&) { return j == i + 1 ? 0.5 * j * (j - 1.0) : 0.0; },
          [&](const BetaLambda&) {
            if (exact_) return static_cast<double>(i) / ((j - i) * (j - i + 1.0));
            return std::exp(log_binomial(j, i - 1) + log_beta(j - i - 1.0 + a_, i + b_) - log_beta(a_, b_));
          },
          [&](const LambdaAtoms& m) {
            double v = j == i + 1 ? to_double(m.kingman_mass) * 0.5 * j * (j - 1.0) : 0.0;
            for (const auto& atom : m.atoms)
              v += to_double(atom.weight) * std::exp(log_atom_term(j, i - 1, to_double(atom.x), j - i - 1, i));
            return v;
          },
          [&](const DiracNu& m) { return to_double(m.weight) * prob_Y_step(j, point_double_, i); },
          [&](const Dirichlet&) {
            if (i + 1 > N_) return 0.0;
            double log_fall = (i + 1) * std::log(alpha_) + log_gamma(N_ + 1.0) - log_gamma(N_ - i);
            double log_s = table->log_value(j, i).log_abs;
            return std::exp(log_fall - log_rising(N_ * alpha_, j + 1) + log_s);
          },
          [&](const PoissonDirichlet&) {
            double log_s = table->log_value(j, i).log_abs;
            return std::exp(pd_log_c(i) + log_gamma(theta_ + alpha_ * i + 1.0) - log_gamma(theta_ + j + 1.0) +
                            log_s);
          },
      },
      model_);
}

namespace {
bool uses_log_table(const CoalescentModel& m) {
  return std::holds_alternative<Dirichlet>(m) || std::holds_alternative<PoissonDirichlet>(m);
}
}  // namespace

double RateEngine::q(int i, int j) const {
  require_q_state(i, j);
  std::shared_ptr<const StirlingTable> table;
  if (uses_log_table(model_)) table = log_table(i);
  return q_with(table.get(), i, j);
}

double RateEngine::gamma(int i, int j) const {
  require_gamma_state(i, j);
  std::shared_ptr<const StirlingTable> table;
  if (uses_log_table(model_)) table = log_table(j);
  return gamma_with(table.get(), i, j);
}

std::vector<double> RateEngine::q_row(int i) const {
  if (i < 1) throw StateError("q_row needs i >= 1");
  std::vector<double> row(i > 1 ? i - 1 : 0, 0.0);
  std::shared_ptr<const StirlingTable> table;
  if (uses_log_table(model_)) table = log_table(i);
  int last = i - 1;
  if (std::holds_alternative<Dirichlet>(model_)) last = std::min(last, N_);
  if (std::holds_alternative<Kingman>(model_)) {
    if (i > 1) row[i - 2] = 0.5 * i * (i - 1.0);
    return row;
  }
  for (int j = 1; j <= last; ++j) row[j - 1] = q_with(table.get(), i, j);
  return row;
}

double RateEngine::q_total_by_summation(int i) const {
  if (i < 1) throw StateError("q_i needs i >= 1");
  auto row = q_row(i);
  return std::accumulate(row.begin(), row.end(), 0.0);
}

double RateEngine::q_cumulative(int i, int j) const {
  require_q_state(i, j);
  std::shared_ptr<const StirlingTable> table;
  if (uses_log_table(model_)) table = log_table(i);
  int last = j;
  if (std::holds_alternative<Dirichlet>(model_)) last = std::min(last, N_);
  if (std::holds_alternative<Kingman>(model_)) return j == i - 1 ? 0.5 * i * (i - 1.0) : 0.0;
  double sum = 0.0;
  for (int k = 1; k <= last; ++k) sum += q_with(table.get(), i, k);
  return sum;
}

std::optional<double> beta_gamma_total_closed_form(const BetaLambda& beta, int i) {
  if (i < 1) return std::nullopt;
  if (beta.a + beta.b == 2 && beta.b < 2) {
    double alpha = to_double(beta.b);
    return std::exp(log_gamma(i + alpha) - log_gamma(alpha + 1.0) - log_gamma(i));
  }
  if (beta.a == 3) {
    double b = to_double(beta.b);
    return (b + 1.0) * (b + 2.0) / 2.0 * i * (i + 1.0) / ((i + b) * (i + b + 1.0));
  }
  return std::nullopt;
}

double RateEngine::q_total(int i) const {
  if (i < 1) throw StateError("q_i needs i >= 1");
  if (i == 1) return 0.0;
  return std::visit(
      overloaded{
          [&](const Kingman&) { return 0.5 * i * (i - 1.0); },
          [&](const BetaLambda& m) {
            if (exact_) return i - 1.0;
            if (auto closed = beta_gamma_total_closed_form(m, i - 1)) return *closed;
            return q_total_by_summation(i);
          },
          [&](const LambdaAtoms& m) {
            double v = to_double(m.kingman_mass) * 0.5 * i * (i - 1.0);
            for (const auto& atom : m.atoms) {
              double x = to_double(atom.x);
              // (1 - (1-x)^i - i x (1-x)^{i-1}) / x^2
              double stay = x >= 1.0 ? 0.0 : std::exp(i * std::log1p(-x));
              double one_hit = x >= 1.0 ? 0.0 : std::exp(std::log(i * x) + (i - 1) * std::log1p(-x));
              v += to_double(atom.weight) * (1.0 - stay - one_hit) / (x * x);
            }
            return v;
          },
          [&](const DiracNu& m) { return to_double(m.weight) * (1.0 - prob_Y(i, point_double_, i)); },
          [&](const Dirichlet&) {
            if (i > N_) return 1.0;
            double log_fall = i * std::log(alpha_) + log_gamma(N_ + 1.0) - log_gamma(N_ - i + 1.0);
            return -std::expm1(log_fall - log_rising(N_ * alpha_, i));
          },
          [&](const PoissonDirichlet&) {
            return -std::expm1(pd_log_c(i) + log_gamma(theta_ + alpha_ * i) - log_gamma(theta_ + i));
          },
      },
      model_);
}

// ---------------------------------------------------------------------------
// Exact rates.

Rational RateEngine::q_exact(int i, int j) const {
  require_q_state(i, j);
  require_exact(exact_);
  return std::visit(
      overloaded{
          [&](const Kingman&) { return j == i - 1 ? choose2(i) : Rational(0); },
          [&](const BetaLambda&) { return ratio(i, (i - j) * (i - j + 1)); },
          [&](const LambdaAtoms& m) {
            Rational v = j == i - 1 ? Rational(m.kingman_mass * choose2(i)) : Rational(0);
            for (const auto& atom : m.atoms)
              v += atom.weight * binomial_exact(i, j - 1) * ipow(atom.x, i - j - 1) *
                   ipow(Rational(1 - atom.x), j - 1);
            return v;
          },
          [&](const DiracNu& m) { return Rational(m.weight * prob_Y(i, m.point, j)); },
          [&](const Dirichlet& m) {
            if (j > m.N) return Rational(0);
            Rational n_alpha = m.N * m.alpha;
            auto table = exact_table(i);
            return Rational(falling_factorial(n_alpha, m.alpha, j) / rising_factorial(n_alpha, Rational(1), i) *
                            table->exact(i, j));
          },
          [&](const PoissonDirichlet&) -> Rational { throw ParameterError("pd rates are not exact"); },
      },
      model_);
}

Rational RateEngine::q_total_exact(int i) const {
  if (i < 1) throw StateError("q_i needs i >= 1");
  require_exact(exact_);
  if (i == 1) return 0;
  return std::visit(
      overloaded{
          [&](const Kingman&) { return choose2(i); },
          [&](const BetaLambda&) { return Rational(i - 1); },
          [&](const LambdaAtoms& m) {
            Rational v = m.kingman_mass * choose2(i);
            for (const auto& atom : m.atoms) {
              Rational rest = 1 - atom.x;
              v += atom.weight * (1 - ipow(rest, i) - i * atom.x * ipow(rest, i - 1)) / (atom.x * atom.x);
            }
            return v;
          },
          [&](const DiracNu& m) { return Rational(m.weight * (1 - prob_Y(i, m.point, i))); },
          [&](const Dirichlet& m) {
            Rational n_alpha = m.N * m.alpha;
            return Rational(1 - falling_factorial(n_alpha, m.alpha, i) / rising_factorial(n_alpha, Rational(1), i));
          },
          [&](const PoissonDirichlet&) -> Rational { throw ParameterError("pd rates are not exact"); },
      },
      model_);
}

Rational RateEngine::q_cumulative_exact(int i, int j) const {
  require_q_state(i, j);
  Rational sum = 0;
  for (int k = 1; k <= j; ++k) sum += q_exact(i, k);
  return sum;
}

Rational RateEngine::gamma_exact(int i, int j) const {
  require_gamma_state(i, j);
  require_exact(exact_);
  return std::visit(
      overloaded{
          [&](const Kingman&) { return j == i + 1 ? choose2(j) : Rational(0); },
          [&](const BetaLambda&) { return ratio(i, (j - i) * (j - i + 1)); },
          [&](const LambdaAtoms& m) {
            Rational v = j == i + 1 ? Rational(m.kingman_mass * choose2(j)) : Rational(0);
            for (const auto& atom : m.atoms)
              v += atom.weight * binomial_exact(j, i - 1) * ipow(atom.x, j - i - 1) * ipow(Rational(1 - atom.x), i);
            return v;
          },
          [&](const DiracNu& m) { return Rational(m.weight * prob_Y_step(j, m.point, i)); },
          [&](const Dirichlet& m) {
            if (i + 1 > m.N) return Rational(0);
            Rational n_alpha = m.N * m.alpha;
            auto table = exact_table(j);
            return Rational(falling_factorial(n_alpha, m.alpha, i + 1) /
                            rising_factorial(n_alpha, Rational(1), j + 1) * table->exact(j, i));
          },
          [&](const PoissonDirichlet&) -> Rational { throw ParameterError("pd rates are not exact"); },
      },
      model_);
}

Rational RateEngine::dirichlet_q_by_compositions(int i, int j) const {
  require_q_state(i, j);
  const auto* d = std::get_if<Dirichlet>(&model_);
  if (!d) throw ParameterError("composition formula applies to the Dirichlet family only");
  if (j > d->N) return 0;
  // weight[s] = C(s + α - 1, s) = [α]_s / s!
  std::vector<Rational> weight(i + 1);
  weight[0] = 1;
  for (int s = 1; s <= i; ++s) weight[s] = weight[s - 1] * (d->alpha + s - 1) / s;
  // conv[s]: sum over compositions of s into the parts used so far.
  std::vector<Rational> conv(i + 1, Rational(0));
  conv[0] = 1;
  for (int part = 0; part < j; ++part) {
    std::vector<Rational> next(i + 1, Rational(0));
    for (int s = 0; s <= i; ++s) {
      if (conv[s] == 0) continue;
      for (int c = 1; s + c <= i; ++c) next[s + c] += conv[s] * weight[c];
    }
    conv = std::move(next);
  }
  // C(Nα + i - 1, i) = [Nα]_i / i!
  Rational denom = rising_factorial(Rational(d->N * d->alpha), Rational(1), i) / factorial_exact(i);
  return binomial_exact(d->N, j) / denom * conv[i];
}

// ---------------------------------------------------------------------------
// Checked interfaces.

RateValue RateEngine::q_rate(int i, int j) const {
  require_q_state(i, j);
  RateValue r;
  if (exact_) {
    r.exact = q_exact(i, j);
    r.value = to_double(*r.exact);
  } else {
    r.value = q(i, j);
  }
  return r;
}

RateValue RateEngine::q_total_rate(int i) const {
  RateValue r;
  if (exact_) {
    r.exact = q_total_exact(i);
    r.value = to_double(*r.exact);
  } else {
    r.value = q_total(i);
  }
  return r;
}

RateValue RateEngine::q_row_infinity(int j) const {
  if (j < 1) throw StateError("q_{inf,j} needs j >= 1");
  RateValue r;
  r.exact = nu(j) - nu(j - 1);
  r.value = to_double(*r.exact);
  return r;
}

RateValue RateEngine::q_infinity_infinity() const {
  RateValue r;
  r.exact = -nu_delta_finite(model_);
  r.value = to_double(*r.exact);
  return r;
}

RateValue RateEngine::gamma_rate(int i, int j) const {
  require_gamma_state(i, j);
  RateValue r;
  if (exact_) {
    r.exact = gamma_exact(i, j);
    r.value = to_double(*r.exact);
  } else {
    r.value = gamma(i, j);
  }
  return r;
}

RateValue RateEngine::gamma_to_infinity(int i) const {
  if (i < 1) throw StateError("gamma_{i,inf} needs i >= 1");
  RateValue r;
  r.exact = nu(i);
  r.value = to_double(*r.exact);
  return r;
}

RateValue RateEngine::gamma_total_rate(int i) const {
  if (i < 1) throw StateError("gamma_i needs i >= 1");
  return q_total_rate(i + 1);
}

RateValue RateEngine::gamma_total_summed(int i, double tol, int max_terms) const {
  if (i < 1) throw StateError("gamma_i needs i >= 1");
  RateValue r;
  if (exact_) {
    const int K = std::max(2 * i + 8, 16);
    Rational sum = nu(i);
    for (int k = i + 1; k <= K; ++k) sum += gamma_exact(i, k);
    Rational remainder = q_cumulative_exact(K + 1, i) - nu(i);
    r.exact = sum + remainder;
    r.value = to_double(*r.exact);
    r.remainder_bound = to_double(remainder);
    return r;
  }
  const double nu_i = to_double(nu(i));
  double partial = 0.0;
  int summed_to = i;
  int K = std::max(2 * i, 64);
  while (true) {
    K = std::min(K, max_terms);
    std::shared_ptr<const StirlingTable> table;
    if (uses_log_table(model_)) table = log_table(K + 1);
    for (int k = summed_to + 1; k <= K; ++k) partial += gamma_with(table.get(), i, k);
    summed_to = K;
    double remainder = std::max(0.0, q_cumulative(K + 1, i) - nu_i);
    double value = partial + nu_i + remainder;
    if (remainder <= tol * std::fabs(value) || K >= max_terms) {
      r.value = value;
      r.remainder_bound = remainder;
      return r;
    }
    K *= 2;
  }
}

// ---------------------------------------------------------------------------
// Monte Carlo oracles.

MassPoint sample_nu(const CoalescentModel& model, Rng& rng) {
  if (auto* d = std::get_if<Dirichlet>(&model)) {
    std::gamma_distribution<double> g(to_double(d->alpha), 1.0);
    std::vector<double> parts(d->N);
    double total = 0.0;
    for (double& p : parts) total += (p = g(rng));
    std::vector<double> kept;
    for (double p : parts)
      if (p > 0.0) kept.push_back(p / total);
    return MassPoint(std::move(kept), false);
  }
  if (auto* pd = std::get_if<PoissonDirichlet>(&model)) {
    const double alpha = to_double(pd->alpha), theta = to_double(pd->theta);
    std::vector<double> parts;
    double residual = 1.0;
    for (int k = 1; k <= 10000 && residual >= 1e-12; ++k) {
      std::gamma_distribution<double> ga(1.0 - alpha, 1.0), gb(theta + k * alpha, 1.0);
      double x = ga(rng), y = gb(rng);
      double v = x + y > 0.0 ? x / (x + y) : 0.0;
      double part = v * residual;
      if (part > 0.0) parts.push_back(part);
      residual *= 1.0 - v;
    }
    return MassPoint(std::move(parts), false);
  }
  if (auto* dn = std::get_if<DiracNu>(&model)) return to_double(dn->point);
  throw ParameterError("sampling from nu is supported for dirichlet, pd and dirac-nu models");
}

namespace {

Estimate mean_estimate(const std::vector<double>& values) {
  Estimate e;
  e.reps = static_cast<long>(values.size());
  if (values.empty()) return e;
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  e.estimate = mean;
  e.std_error = values.size() > 1 ? std::sqrt(ss / (values.size() - 1) / values.size()) : 0.0;
  return e;
}

double nu_mass(const CoalescentModel& model) {
  if (auto* dn = std::get_if<DiracNu>(&model)) return to_double(dn->weight);
  return 1.0;
}

void require_sampleable(const CoalescentModel& model) {
  if (!std::holds_alternative<Dirichlet>(model) && !std::holds_alternative<PoissonDirichlet>(model) &&
      !std::holds_alternative<DiracNu>(model))
    throw ParameterError("sampling from nu is supported for dirichlet, pd and dirac-nu models");
}

bool finitely_supported(const CoalescentModel& model) { return !std::holds_alternative<PoissonDirichlet>(model); }

}  // namespace

Estimate mc_rate_oracle(const CoalescentModel& model, int i, int j, long reps, std::uint64_t seed, int threads) {
  require_q_state(i, j);
  if (reps < 1) throw ParameterError("reps must be at least 1");
  const bool inner_exact = finitely_supported(model);
  require_sampleable(model);
  auto values = run_replicates(reps, seed, threads, [&](Rng& rng, long) {
    MassPoint x = sample_nu(model, rng);
    if (inner_exact) return prob_Y(i, x, j);
    return sample_Y(i, x, rng).y == j ? 1.0 : 0.0;
  });
  Estimate e = mean_estimate(values);
  double w = nu_mass(model);
  e.estimate *= w;
  e.std_error *= w;
  return e;
}

Estimate mc_gamma_oracle(const CoalescentModel& model, int i, int j, long reps, std::uint64_t seed, int threads) {
  require_gamma_state(i, j);
  if (reps < 1) throw ParameterError("reps must be at least 1");
  const bool inner_exact = finitely_supported(model);
  require_sampleable(model);
  auto values = run_replicates(reps, seed, threads, [&](Rng& rng, long) {
    MassPoint x = sample_nu(model, rng);
    if (inner_exact) return prob_Y_step(j, x, i);
    auto path = sample_Y_path(j + 1, x, rng);
    return path[j] == i && path[j + 1] == i + 1 ? 1.0 : 0.0;
  });
  Estimate e = mean_estimate(values);
  double w = nu_mass(model);
  e.estimate *= w;
  e.std_error *= w;
  return e;
}

}  // namespace xicoal
