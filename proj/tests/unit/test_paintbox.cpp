#include "doctest.h"
#include "xicoal/chains.hpp"
#include "xicoal/paintbox.hpp"
#include "xicoal/rates.hpp"

using namespace xicoal;

namespace {

ExactMassPoint point(std::initializer_list<Rational> parts) { return ExactMassPoint(std::vector<Rational>(parts)); }

// Brute force over all (m+1)^i allocations; box 0 always opens a new colour.
Rational brute_Y(int i, const ExactMassPoint& x, int j) {
  const int boxes = static_cast<int>(x.size()) + 1;
  std::vector<int> alloc(i, 0);
  Rational total = 0;
  while (true) {
    Rational p = 1;
    int colours = 0;
    std::vector<char> used(boxes, 0);
    for (int b : alloc) {
      p *= b == 0 ? x.dust() : x.parts()[b - 1];
      if (b == 0 || !used[b]) ++colours;
      used[b] = 1;
    }
    if (colours == j) total += p;
    int k = 0;
    while (k < i && ++alloc[k] == boxes) alloc[k++] = 0;
    if (k == i) break;
  }
  return total;
}

}  // namespace

TEST_SUITE("paintbox") {
  TEST_CASE("worked values") {
    auto half = point({Rational(1, 2), Rational(1, 2)});
    CHECK(prob_Y(2, half, 1) == Rational(1, 2));
    CHECK(prob_Y(2, half, 2) == Rational(1, 2));
    CHECK(prob_Y_step(2, half, 1) == Rational(1, 4));
    ExactMassPoint dust_only(std::vector<Rational>{});
    for (int i = 1; i <= 6; ++i) {
      CHECK(prob_Y(i, dust_only, i) == 1);
      CHECK(prob_Y(i, dust_only, i - 1 > 0 ? i - 1 : 1) == (i == 1 ? 1 : 0));
      for (int k = 1; k <= i; ++k) CHECK(prob_Y_step(i, dust_only, k) == (k == i ? 1 : 0));
    }
    auto one = point({Rational(1)});
    for (int i = 1; i <= 6; ++i) CHECK(prob_Y(i, one, 1) == 1);
  }

  TEST_CASE("dynamic program, enumeration and brute force agree") {
    for (const auto& x : {point({Rational(1, 2), Rational(3, 10)}), point({Rational(2, 5), Rational(3, 10), Rational(1, 5)}),
                          point({Rational(1, 3), Rational(1, 3), Rational(1, 3)}), point({Rational(9, 10)})}) {
      for (int i = 1; i <= 6; ++i)
        for (int j = 1; j <= i; ++j) {
          Rational dp = prob_Y(i, x, j);
          CHECK(dp == prob_Y_enumerate(i, x, j));
          CHECK(dp == brute_Y(i, x, j));
          CHECK(prob_Y_step(i, x, j) == prob_Y_step_enumerate(i, x, j));
        }
    }
  }

  TEST_CASE("normalization and step identities are exact for i <= 8") {
    for (const auto& x : {point({Rational(1, 2), Rational(1, 2)}), point({Rational(1, 2), Rational(3, 10)}),
                          point({Rational(2, 5), Rational(3, 10), Rational(1, 5)})}) {
      for (int i = 1; i <= 8; ++i) {
        Rational total = 0, steps = 0;
        for (int j = 1; j <= i; ++j) {
          total += prob_Y(i, x, j);
          steps += prob_Y_step(i, x, j);
        }
        CHECK(total == 1);
        CHECK(steps == prob_new_colour(i, x));
      }
    }
    // P(Y(3) = 2, Y(4) = 3) = P(Y(3) <= 2) - P(Y(4) <= 2)
    auto x = point({Rational(1, 2), Rational(3, 10)});
    Rational le3 = prob_Y(3, x, 1) + prob_Y(3, x, 2), le4 = prob_Y(4, x, 1) + prob_Y(4, x, 2);
    CHECK(prob_Y_step(3, x, 2) == le3 - le4);
  }

  TEST_CASE("permutation invariance") {
    ExactMassPoint sorted(std::vector<Rational>{Rational(1, 2), Rational(1, 5), Rational(1, 10)});
    ExactMassPoint shuffled(std::vector<Rational>{Rational(1, 10), Rational(1, 2), Rational(1, 5)}, false);
    for (int i = 1; i <= 7; ++i)
      for (int j = 1; j <= i; ++j) {
        CHECK(prob_Y(i, sorted, j) == prob_Y(i, shuffled, j));
        CHECK(prob_Y_step(i, sorted, j) == prob_Y_step(i, shuffled, j));
      }
  }

  TEST_CASE("mass points are validated") {
    CHECK_THROWS_AS(ExactMassPoint(std::vector<Rational>{Rational(3, 4), Rational(1, 2)}), ParameterError);
    CHECK_THROWS_AS(ExactMassPoint(std::vector<Rational>{Rational(0)}), ParameterError);
    MassPoint nearly(std::vector<double>{0.6, 0.4 + 1e-13});
    CHECK(nearly.total() <= 1.0);
    auto p = point({Rational(1, 5), Rational(1, 2)});
    CHECK(p.parts().front() == Rational(1, 2));
    CHECK(p.dust() == Rational(3, 10));
  }

  TEST_CASE("floating dynamic program tracks the rational one") {
    auto x = point({Rational(2, 5), Rational(3, 10), Rational(1, 5)});
    MassPoint xd = to_double(x);
    for (int i = 1; i <= 30; ++i)
      for (int j = 1; j <= std::min(i, 4); ++j)
        CHECK(prob_Y(i, xd, j) == doctest::Approx(to_double(prob_Y(i, x, j))).epsilon(1e-12));
  }

  TEST_CASE("enumeration refuses to blow up") {
    std::vector<double> parts(60, 1.0 / 64);
    MassPoint x(parts);
    CHECK_THROWS_AS(prob_Y_enumerate(40, x, 20, 1e6), NumericalError);
  }

  TEST_CASE("sampled paths move in unit steps") {
    MassPoint x(std::vector<double>{0.4, 0.3, 0.2});
    Rng rng = substream(5, 0);
    for (int rep = 0; rep < 200; ++rep) {
      auto path = sample_Y_path(30, x, rng);
      for (int b = 0; b < 30; ++b) {
        int d = path[b + 1] - path[b];
        CHECK((d == 0 || d == 1));
      }
    }
    YSample s = sample_Y(12, x, rng);
    int occupied = 0;
    for (const auto& [box, balls] : s.box_counts)
      if (box != 0 && balls > 0) ++occupied;
    int dust = s.box_counts.count(0) ? s.box_counts.at(0) : 0;
    CHECK(s.y == dust + occupied);
  }

  TEST_CASE("monte carlo frequencies match the exact law") {
    auto x = point({Rational(1, 2), Rational(3, 10)});
    MassPoint xd = to_double(x);
    Estimate e = mc_prob_Y(5, xd, 3, 100000, 11);
    CHECK(std::fabs(e.estimate - to_double(prob_Y(5, x, 3))) <= 4 * e.std_error);
    Estimate s = mc_prob_Y_step(3, xd, 2, 100000, 12);
    CHECK(std::fabs(s.estimate - to_double(prob_Y_step(3, x, 2))) <= 4 * s.std_error);
    CHECK(mc_prob_Y(3, xd, 5, 1000, 1).estimate == 0.0);
    MassPoint half(std::vector<double>{0.5, 0.5});
    Estimate h = mc_prob_Y(2, half, 1, 100000, 13);
    CHECK(std::fabs(h.estimate - 0.5) <= 4 * h.std_error);
  }

  TEST_CASE("sampling nu") {
    Rng rng = substream(9, 1);
    MassPoint d = sample_nu(parse_model("dirichlet:N=2,alpha=1"), rng);
    CHECK(d.size() == 2);
    CHECK(d.total() == doctest::Approx(1.0));
    MassPoint pd = sample_nu(parse_model("pd:alpha=0.3,theta=1"), rng);
    CHECK(pd.total() <= 1.0);
    CHECK(pd.total() >= 1.0 - 1e-6);  // stick-breaking is cut once the leftover is tiny
    MassPoint dirac = sample_nu(parse_model("dirac-nu:x=1/2,1/4;w=2"), rng);
    CHECK(dirac.parts() == std::vector<double>{0.5, 0.25});
    CHECK_THROWS_AS(sample_nu(parse_model("kingman"), rng), ParameterError);
  }

  TEST_CASE("paintbox mixture over Poisson-Dirichlet reproduces the restaurant chain") {
    auto model = parse_model("pd:alpha=0.3,theta=1");
    auto law = crp_distribution(CrpChainSpec::from_model(model), 6);
    const long reps = 5000;
    std::vector<long> counts(7, 0);
    auto ys = run_replicates(reps, 21, 1, [&](Rng& rng, long) { return sample_Y(6, sample_nu(model, rng), rng).y; });
    for (int y : ys) ++counts[y];
    for (int j = 1; j <= 6; ++j) {
      Estimate e = binomial_estimate(counts[j], reps);
      CHECK(std::fabs(e.estimate - law[j - 1]) <= 4 * std::max(e.std_error, 1e-4));
    }
  }
}
