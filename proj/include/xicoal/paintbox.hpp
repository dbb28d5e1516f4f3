#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "xicoal/numeric.hpp"
#include "xicoal/random.hpp"

namespace xicoal {

/// A point x_1 >= x_2 >= ... >= x_m > 0 of the simplex with dust x_0 = 1 - sum.
///
/// Sorting can be skipped for sampled points; every quantity computed from a
/// point depends only on the multiset of parts.
template <class T>
class BasicMassPoint {
 public:
  BasicMassPoint() = default;
  explicit BasicMassPoint(std::vector<T> parts, bool sort = true);

  const std::vector<T>& parts() const { return parts_; }
  std::size_t size() const { return parts_.size(); }
  const T& dust() const { return dust_; }
  /// |x| = sum of parts.
  T total() const { return T(1) - dust_; }

 private:
  std::vector<T> parts_;
  T dust_ = T(1);
};

using MassPoint = BasicMassPoint<double>;
using ExactMassPoint = BasicMassPoint<Rational>;

MassPoint to_double(const ExactMassPoint& x);

/// P(Y(i, x) = j): number of colours after i balls are thrown.
/// Evaluated by a dynamic program over boxes; exact for rational x.
template <class T>
T prob_Y(int i, const BasicMassPoint<T>& x, int j);

/// P(Y(j, x) = i, Y(j+1, x) = i+1).
template <class T>
T prob_Y_step(int j, const BasicMassPoint<T>& x, int i);

/// Direct evaluation over subsets of boxes and compositions of the ball count.
/// Kept as an independent oracle for the dynamic program; refuses inputs whose
/// term count exceeds max_terms.
template <class T>
T prob_Y_enumerate(int i, const BasicMassPoint<T>& x, int j, double max_terms = 1e8);
template <class T>
T prob_Y_step_enumerate(int j, const BasicMassPoint<T>& x, int i, double max_terms = 1e8);

struct YSample {
  int y = 0;
  /// Balls per occupied box; key 0 is the dust box.
  std::map<std::size_t, int> box_counts;
};

YSample sample_Y(int i, const MassPoint& x, Rng& rng);

/// Y(1, x), ..., Y(n, x) from one shared sequence of ball allocations.
std::vector<int> sample_Y_path(int n, const MassPoint& x, Rng& rng);

struct Estimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long reps = 0;
};

Estimate binomial_estimate(long successes, long reps);

/// Monte Carlo frequency of {Y(i, x) = j}.
Estimate mc_prob_Y(int i, const MassPoint& x, int j, long reps, std::uint64_t seed, int threads = 1);

/// Monte Carlo frequency of {Y(j, x) = i, Y(j+1, x) = i+1}.
Estimate mc_prob_Y_step(int j, const MassPoint& x, int i, long reps, std::uint64_t seed, int threads = 1);

/// Probability that ball j+1 gets a new colour: x_0 + Σ_r x_r (1 - x_r)^j.
/// Equals Σ_i P(Y(j, x) = i, Y(j+1, x) = i+1).
template <class T>
T prob_new_colour(int j, const BasicMassPoint<T>& x) {
  T sum = x.dust();
  for (const T& p : x.parts()) sum += p * ipow(T(T(1) - p), j);
  return sum;
}

}  // namespace xicoal
