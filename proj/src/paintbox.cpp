#include "xicoal/paintbox.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace xicoal {

namespace {

template <class T>
T tolerance_slack() {
  if constexpr (std::is_same_v<T, Rational>)
    return T(0);
  else
    return T(1e-12);
}

template <class T>
T factorial_as(int n) {
  if constexpr (std::is_same_v<T, Rational>) {
    return factorial_exact(n);
  } else {
    return std::exp(log_gamma(n + 1.0));
  }
}

template <class T>
T power(const T& base, int exponent) {
  if constexpr (std::is_same_v<T, Rational>)
    return ipow(base, exponent);
  else
    return exponent == 0 ? 1.0 : std::pow(base, exponent);
}

template <class T>
T binomial_pmf(int n, int c, const T& q) {
  if constexpr (std::is_same_v<T, Rational>) {
    return binomial_exact(n, c) * ipow(q, c) * ipow(Rational(1 - q), n - c);
  } else {
    if (q <= 0.0) return c == 0 ? 1.0 : 0.0;
    if (q >= 1.0) return c == n ? 1.0 : 0.0;
    return std::exp(log_binomial(n, c) + c * std::log(q) + (n - c) * std::log1p(-q));
  }
}

/// Boxes are filled one at a time: box r receives Binomial(remaining balls,
/// x_r / remaining mass) balls and whatever is left at the end goes to dust.
/// P[k][s] is the probability that k boxes are occupied by s balls in total;
/// W[k][s] is the same quantity weighted by the mass of the occupied boxes.
template <class T>
struct BoxTables {
  std::vector<std::vector<T>> P;
  std::vector<std::vector<T>> W;
};

template <class T>
BoxTables<T> box_tables(const BasicMassPoint<T>& x, int balls, int max_k, bool weighted) {
  BoxTables<T> t;
  t.P.assign(max_k + 1, std::vector<T>(balls + 1, T(0)));
  if (weighted) t.W.assign(max_k + 1, std::vector<T>(balls + 1, T(0)));
  t.P[0][0] = T(1);
  const auto& parts = x.parts();
  std::vector<T> remaining(parts.size() + 1);
  remaining[parts.size()] = x.dust();
  for (std::size_t r = parts.size(); r-- > 0;) remaining[r] = remaining[r + 1] + parts[r];
  std::vector<T> pmf(balls + 1);
  for (std::size_t r = 0; r < parts.size(); ++r) {
    const T& xr = parts[r];
    T q = remaining[r] > T(0) ? T(xr / remaining[r]) : T(1);
    if (q > T(1)) q = T(1);
    auto nextP = std::vector<std::vector<T>>(max_k + 1, std::vector<T>(balls + 1, T(0)));
    auto nextW = weighted ? nextP : std::vector<std::vector<T>>();
    for (int s = 0; s <= balls; ++s) {
      const int left = balls - s;
      for (int c = 0; c <= left; ++c) pmf[c] = binomial_pmf(left, c, q);
      for (int k = 0; k <= max_k; ++k) {
        const T& p = t.P[k][s];
        if (p == T(0)) continue;
        nextP[k][s] += p * pmf[0];
        if (weighted) nextW[k][s] += t.W[k][s] * pmf[0];
        if (k == max_k) continue;
        for (int c = 1; c <= left; ++c) {
          if (pmf[c] == T(0)) continue;
          nextP[k + 1][s + c] += p * pmf[c];
          if (weighted) nextW[k + 1][s + c] += (t.W[k][s] + xr * p) * pmf[c];
        }
      }
    }
    t.P = std::move(nextP);
    if (weighted) t.W = std::move(nextW);
  }
  return t;
}

template <class T>
void check_point(const BasicMassPoint<T>& x) {
  if (x.dust() < -tolerance_slack<T>()) throw ParameterError("mass point parts sum above 1");
}

template <class T>
void enumerate_compositions(int total, int parts, std::vector<int>& current,
                            const std::function<void(const std::vector<int>&)>& visit) {
  if (parts == 0) {
    if (total == 0) visit(current);
    return;
  }
  for (int c = 1; c <= total - (parts - 1); ++c) {
    current.push_back(c);
    enumerate_compositions<T>(total - c, parts - 1, current, visit);
    current.pop_back();
  }
}

template <class T>
void enumerate_subsets(std::size_t m, int k, std::size_t start, std::vector<std::size_t>& current,
                       const std::function<void(const std::vector<std::size_t>&)>& visit) {
  if (static_cast<int>(current.size()) == k) {
    visit(current);
    return;
  }
  for (std::size_t r = start; r < m; ++r) {
    current.push_back(r);
    enumerate_subsets<T>(m, k, r + 1, current, visit);
    current.pop_back();
  }
}

double term_count(std::size_t m, int k, int balls) {
  // C(m, k) * C(balls - 1, k - 1)
  if (k > static_cast<int>(m) || balls < k) return 0.0;
  return std::exp(log_binomial(static_cast<double>(m), k) + log_binomial(balls - 1.0, k - 1.0));
}

/// Shared enumeration: sum over k, k-subsets, compositions of `balls(k)` into k
/// parts, of x_0^{new}/new! * n! * prod x^c/c!, times `extra(subset)`.
template <class T>
T enumerate_sum(int n_balls, int y, const BasicMassPoint<T>& x, double max_terms,
                const std::function<T(const std::vector<std::size_t>&)>& extra) {
  const std::size_t m = x.size();
  double terms = 0.0;
  for (int k = 0; k <= y; ++k) terms += term_count(m, k, n_balls - y + k);
  if (terms > max_terms)
    throw NumericalError("paintbox enumeration needs " + std::to_string(terms) +
                         " terms, above the cap");
  T total(0);
  for (int k = 0; k <= y; ++k) {
    int balls = n_balls - y + k;  // balls in the k coloured boxes
    if (balls < k || k > static_cast<int>(m)) continue;
    if (k == 0 && balls != 0) continue;
    T dust_factor = power(x.dust(), y - k) / factorial_as<T>(y - k);
    if (dust_factor == T(0)) continue;
    std::vector<std::size_t> subset;
    enumerate_subsets<T>(m, k, 0, subset, [&](const std::vector<std::size_t>& boxes) {
      T weight = extra(boxes);
      if (weight == T(0)) return;
      std::vector<int> comp;
      enumerate_compositions<T>(balls, k, comp, [&](const std::vector<int>& counts) {
        T term = dust_factor * weight;
        for (int l = 0; l < k; ++l)
          term *= power(x.parts()[boxes[l]], counts[l]) / factorial_as<T>(counts[l]);
        total += term;
      });
    });
  }
  return total * factorial_as<T>(n_balls);
}

}  // namespace

template <class T>
BasicMassPoint<T>::BasicMassPoint(std::vector<T> parts, bool sort) : parts_(std::move(parts)) {
  T sum(0);
  for (const T& p : parts_) {
    if (!(p > T(0))) throw ParameterError("mass point parts must be positive");
    sum += p;
  }
  if (sum > T(1) + tolerance_slack<T>()) throw ParameterError("mass point parts sum above 1");
  if (sum > T(1)) {
    // Float input within rounding of 1: rescale so that the sum is at most 1.
    for (T& p : parts_) p /= sum;
    sum = T(0);
    for (const T& p : parts_) sum += p;
  }
  dust_ = T(1) - sum;
  if (dust_ < T(0)) dust_ = T(0);
  if (sort) std::sort(parts_.begin(), parts_.end(), [](const T& a, const T& b) { return a > b; });
}

template class BasicMassPoint<double>;
template class BasicMassPoint<Rational>;

MassPoint to_double(const ExactMassPoint& x) {
  std::vector<double> parts;
  parts.reserve(x.size());
  for (const Rational& p : x.parts()) parts.push_back(p.get_d());
  return MassPoint(std::move(parts), false);
}

template <class T>
T prob_Y(int i, const BasicMassPoint<T>& x, int j) {
  if (i < 0 || j < 0) throw ParameterError("paintbox counts must be non-negative");
  check_point(x);
  if (i == 0) return T(j == 0 ? 1 : 0);
  if (j < 1 || j > i) return T(0);
  const int max_k = std::min<int>(j, static_cast<int>(x.size()));
  BoxTables<T> t = box_tables(x, i, max_k, false);
  // k occupied boxes plus i - s dust balls give j colours when s = i - j + k.
  T total(0);
  for (int k = 0; k <= max_k; ++k) total += t.P[k][i - j + k];
  return total;
}

template <class T>
T prob_Y_step(int j, const BasicMassPoint<T>& x, int i) {
  if (i < 0 || j < 0) throw ParameterError("paintbox counts must be non-negative");
  check_point(x);
  if (i > j) return T(0);
  if (j == 0) return T(i == 0 ? 1 : 0);
  if (i < 1) return T(0);
  const int max_k = std::min<int>(i, static_cast<int>(x.size()));
  BoxTables<T> t = box_tables(x, j, max_k, true);
  // The next ball adds a colour unless it lands in an occupied box.
  T total(0);
  for (int k = 0; k <= max_k; ++k) {
    const int s = j - i + k;
    total += t.P[k][s] - t.W[k][s];
  }
  return total;
}

template <class T>
T prob_Y_enumerate(int i, const BasicMassPoint<T>& x, int j, double max_terms) {
  check_point(x);
  if (i == 0) return T(j == 0 ? 1 : 0);
  if (j < 1 || j > i) return T(0);
  return enumerate_sum<T>(i, j, x, max_terms, [](const std::vector<std::size_t>&) { return T(1); });
}

template <class T>
T prob_Y_step_enumerate(int j, const BasicMassPoint<T>& x, int i, double max_terms) {
  check_point(x);
  if (i > j) return T(0);
  if (j == 0) return T(i == 0 ? 1 : 0);
  if (i < 1) return T(0);
  return enumerate_sum<T>(j, i, x, max_terms, [&x](const std::vector<std::size_t>& boxes) -> T {
    T used(0);
    for (std::size_t r : boxes) used += x.parts()[r];
    return T(1) - used;
  });
}

template double prob_Y(int, const MassPoint&, int);
template Rational prob_Y(int, const ExactMassPoint&, int);
template double prob_Y_step(int, const MassPoint&, int);
template Rational prob_Y_step(int, const ExactMassPoint&, int);
template double prob_Y_enumerate(int, const MassPoint&, int, double);
template Rational prob_Y_enumerate(int, const ExactMassPoint&, int, double);
template double prob_Y_step_enumerate(int, const MassPoint&, int, double);
template Rational prob_Y_step_enumerate(int, const ExactMassPoint&, int, double);

namespace {
/// Box index for one ball: 0 for dust, r >= 1 for part r.
std::size_t throw_ball(const MassPoint& x, Rng& rng) {
  double u = uniform_open(rng);
  double cumulative = 0.0;
  const auto& parts = x.parts();
  for (std::size_t r = 0; r < parts.size(); ++r) {
    cumulative += parts[r];
    if (u < cumulative) return r + 1;
  }
  return 0;
}
}  // namespace

YSample sample_Y(int i, const MassPoint& x, Rng& rng) {
  if (i < 0) throw ParameterError("paintbox counts must be non-negative");
  YSample out;
  for (int b = 0; b < i; ++b) {
    std::size_t box = throw_ball(x, rng);
    int& count = out.box_counts[box];
    if (box == 0 || count == 0) ++out.y;
    ++count;
  }
  return out;
}

std::vector<int> sample_Y_path(int n, const MassPoint& x, Rng& rng) {
  std::vector<int> path(n + 1, 0);
  std::vector<char> used(x.size() + 1, 0);
  int y = 0;
  for (int b = 1; b <= n; ++b) {
    std::size_t box = throw_ball(x, rng);
    if (box == 0 || !used[box]) ++y;
    if (box != 0) used[box] = 1;
    path[b] = y;
  }
  return path;
}

Estimate binomial_estimate(long successes, long reps) {
  Estimate e;
  e.reps = reps;
  if (reps <= 0) return e;
  e.estimate = static_cast<double>(successes) / static_cast<double>(reps);
  e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(reps));
  return e;
}

Estimate mc_prob_Y(int i, const MassPoint& x, int j, long reps, std::uint64_t seed, int threads) {
  if (reps < 1) throw ParameterError("reps must be at least 1");
  auto hits = run_replicates(reps, seed, threads, [&](Rng& rng, long) -> char {
    return sample_Y(i, x, rng).y == j ? 1 : 0;
  });
  long successes = std::accumulate(hits.begin(), hits.end(), 0L);
  return binomial_estimate(successes, reps);
}

Estimate mc_prob_Y_step(int j, const MassPoint& x, int i, long reps, std::uint64_t seed, int threads) {
  if (reps < 1) throw ParameterError("reps must be at least 1");
  if (j < 0) throw StateError("ball count must be non-negative");
  auto hits = run_replicates(reps, seed, threads, [&](Rng& rng, long) -> char {
    auto path = sample_Y_path(j + 1, x, rng);
    return path[j] == i && path[j + 1] == i + 1 ? 1 : 0;
  });
  long successes = std::accumulate(hits.begin(), hits.end(), 0L);
  return binomial_estimate(successes, reps);
}

}  // namespace xicoal
