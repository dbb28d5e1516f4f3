#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <vector>

namespace xicoal {

using Rng = std::mt19937_64;

/// Independent generator for replicate `index` under master `seed`.
/// The seed words come from a SplitMix64 mix of both values, so streams
/// depend only on (seed, index) and never on how replicates are scheduled.
Rng substream(std::uint64_t seed, std::uint64_t index);

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random bits, shifted by half an ulp so neither endpoint occurs.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Exp(rate) by inversion; rate must be positive.
inline double exponential(Rng& rng, double rate) { return -std::log(uniform_open(rng)) / rate; }

struct KahanSum {
  double sum = 0.0;
  double compensation = 0.0;
  void add(double x) {
    double y = x - compensation;
    double t = sum + y;
    compensation = (t - sum) - y;
    sum = t;
  }
};

/// Runs f(rng, r) for r = 0..reps-1, each replicate with its own substream.
/// threads <= 1 takes the plain serial loop; otherwise an OpenMP loop fills
/// the same result slots. Results are identical either way.
template <class F>
auto run_replicates(long reps, std::uint64_t seed, int threads, F&& f)
    -> std::vector<decltype(f(std::declval<Rng&>(), 0L))> {
  using Result = decltype(f(std::declval<Rng&>(), 0L));
  std::vector<Result> results(static_cast<std::size_t>(reps > 0 ? reps : 0));
  if (threads <= 1) {
    for (long r = 0; r < reps; ++r) {
      Rng rng = substream(seed, static_cast<std::uint64_t>(r));
      results[r] = f(rng, r);
    }
    return results;
  }
  std::exception_ptr failure;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 64)
  for (long r = 0; r < reps; ++r) {
    try {
      Rng rng = substream(seed, static_cast<std::uint64_t>(r));
      results[r] = f(rng, r);
    } catch (...) {
#pragma omp critical(xicoal_replicate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Number of worker threads used when the caller passes threads = 0.
int default_threads();

}  // namespace xicoal
