#include <set>
#include <stdexcept>

#include "doctest.h"
#include "xicoal/random.hpp"

using namespace xicoal;

TEST_SUITE("random") {
  TEST_CASE("substreams depend only on seed and index") {
    CHECK(substream(7, 3)() == substream(7, 3)());
    CHECK(substream(7, 3)() != substream(7, 4)());
    CHECK(substream(7, 3)() != substream(8, 3)());
    std::set<std::uint64_t> firsts;
    for (std::uint64_t k = 0; k < 1000; ++k) firsts.insert(substream(1, k)());
    CHECK(firsts.size() == 1000);
  }

  TEST_CASE("uniform_open stays inside (0, 1)") {
    Rng rng = substream(2, 0);
    double lo = 1, hi = 0, mean = 0;
    for (int k = 0; k < 100000; ++k) {
      double u = uniform_open(rng);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
      mean += u / 100000;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("exponential mean") {
    Rng rng = substream(3, 0);
    KahanSum s;
    for (int k = 0; k < 200000; ++k) s.add(exponential(rng, 4.0));
    CHECK(s.sum / 200000 == doctest::Approx(0.25).epsilon(0.01));
  }

  TEST_CASE("kahan summation keeps small terms") {
    KahanSum s;
    s.add(1.0);
    for (int k = 0; k < 1000000; ++k) s.add(1e-16);
    CHECK(s.sum + (-s.compensation) == doctest::Approx(1.0 + 1e-10).epsilon(1e-14));
  }

  TEST_CASE("serial and threaded replicates are identical") {
    auto f = [](Rng& rng, long r) { return uniform_open(rng) + static_cast<double>(r); };
    auto serial = run_replicates(5000, 17, 1, f);
    auto parallel = run_replicates(5000, 17, 4, f);
    CHECK(serial == parallel);
    CHECK(run_replicates(0, 1, 1, f).empty());
    CHECK(default_threads() >= 1);
  }

  TEST_CASE("exceptions in workers propagate") {
    auto f = [](Rng&, long r) -> int {
      if (r == 123) throw std::runtime_error("boom");
      return 0;
    };
    CHECK_THROWS_AS(run_replicates(1000, 1, 2, f), std::runtime_error);
    CHECK_THROWS_AS(run_replicates(1000, 1, 1, f), std::runtime_error);
  }
}
