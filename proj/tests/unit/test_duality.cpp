#include "doctest.h"
#include "xicoal/duality.hpp"

using namespace xicoal;

namespace {

double diagnostic(const CheckReport& r, const std::string& name) {
  for (const auto& [key, value] : r.diagnostics)
    if (key == name) return value;
  FAIL("missing diagnostic " << name);
  return 0.0;
}

}  // namespace

TEST_SUITE("duality") {
  TEST_CASE("siegmund identity is exact for rational models") {
    for (const char* spec : {"kingman", "dirichlet:N=2,alpha=1/2", "dirichlet:N=3,alpha=1", "dirichlet:N=5,alpha=2",
                             "beta:a=1,b=1", "lambda-atoms:k0=1/2;1/2:1,1:1", "dirac-nu:x=1/2,1/4;w=2"}) {
      RateEngine e(parse_model(spec));
      auto r = check_siegmund(e, 12, 0.0);
      CAPTURE(spec);
      CHECK(r.exact);
      CHECK(r.max_abs_residual == 0.0);
      CHECK(r.pass);
      CHECK(r.entries > 0);
    }
  }

  TEST_CASE("siegmund identity in floating point") {
    for (const char* spec : {"pd:alpha=0,theta=1", "pd:alpha=0.3,theta=0.5", "pd:alpha=0.7,theta=2", "pd:alpha=0.5,theta=0", "beta:a=3/2,b=1"}) {
      RateEngine e(parse_model(spec));
      auto r = check_siegmund(e, 15, 1e-9, true);
      CAPTURE(spec);
      CHECK_FALSE(r.exact);
      CHECK(r.max_rel_residual <= 1e-9);
      CHECK(r.pass);
    }
  }

  TEST_CASE("generator identity on the window") {
    for (const char* spec : {"kingman", "dirichlet:N=3,alpha=1", "pd:alpha=0.3,theta=1", "beta:a=1,b=1"}) {
      RateEngine e(parse_model(spec));
      auto gens = build_generators(e, 12);
      for (int s = 1; s <= 12; ++s) CHECK(std::fabs(gens.Q.row_balance(s)) <= 1e-9 * (1 + e.q_total(std::max(s, 1))));
      auto r = check_generator_identity(gens, 1e-9);
      CAPTURE(spec);
      CHECK(r.pass);
    }
  }

  TEST_CASE("kingman green matrices") {
    RateEngine e(Kingman{});
    auto g = green_matrix_N(e, 8, true);
    REQUIRE(g.exact.has_value());
    for (int i = 2; i <= 8; ++i)
      for (int j = 2; j <= 8; ++j)
        CHECK((*g.exact)[i - 2][j - 2] == (j <= i ? 1 / binomial_exact(j, 2) : Rational(0)));
    auto L = green_matrix_L(e, 6, 20);
    for (int i = 1; i <= 6; ++i)
      for (int j = 1; j <= 20; ++j)
        CHECK(L.g[i - 1][j - 1] == doctest::Approx(j >= i ? 1.0 / to_double(binomial_exact(j + 1, 2)) : 0.0));
    auto col = green_column_N(e, 3, 10);
    for (int m = 3; m <= 10; ++m) CHECK(col[m - 3] == doctest::Approx(1.0 / 3));
    CHECK(green_boundary_term(e, 4) == doctest::Approx(1.0 / 6));
  }

  TEST_CASE("float and exact green matrices agree") {
    RateEngine e(parse_model("dirichlet:N=3,alpha=1"));
    auto g = green_matrix_N(e, 10, true);
    auto gd = green_matrix_N(e, 10, false);
    CHECK(gd.solve_residual <= 1e-12);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) CHECK(gd.g[i][j] == doctest::Approx(to_double((*g.exact)[i][j])));
    auto col = green_column_N(e, 2, 10);
    for (int m = 2; m <= 10; ++m) CHECK(col[m - 2] == doctest::Approx(gd.g[m - 2][0]));
  }

  TEST_CASE("green duality holds where the boundary term is known") {
    for (const char* spec : {"kingman", "dirichlet:N=3,alpha=1", "dirichlet:N=2,alpha=2"}) {
      RateEngine e(parse_model(spec));
      auto r = check_green_duality(e, 8, 1e-6, 256);
      CAPTURE(spec);
      CHECK(r.pass);
      CHECK(r.max_abs_residual <= 1e-6);
    }
  }

  TEST_CASE("without the boundary correction the identity is off") {
    RateEngine e(Kingman{});
    auto r = check_green_duality(e, 8, 1e-6, 256);
    CHECK(diagnostic(r, "uncorrected_max_abs_residual") > 0.1);
  }

  TEST_CASE("poisson-dirichlet boundary tail does not vanish") {
    RateEngine e(parse_model("pd:alpha=0,theta=1"));
    auto r = check_green_duality(e, 6, 1e-6, 128);
    CHECK(diagnostic(r, "boundary_tail_16K") > 0.1);
    CHECK_FALSE(r.pass);
    CHECK(green_boundary_term(e, 3) == 0.0);
    CHECK_THROWS_AS(green_boundary_term(RateEngine(parse_model("beta:a=1,b=1")), 2), ParameterError);
  }

  TEST_CASE("stirling-parameter chain reproduces the restaurant rates") {
    AppendixParams p{-1, 1, 0, 2};
    CHECK(appendix_q(p, 2, 1) == Rational(2, 3));
    for (int N : {2, 3})
      for (Rational alpha : {Rational(1, 2), Rational(2)}) {
        RateEngine e(Dirichlet{N, alpha});
        AppendixParams d{-1, alpha, 0, N * alpha};
        for (int i = 2; i <= 10; ++i)
          for (int j = 1; j < i; ++j) CHECK(appendix_q(d, i, j) == e.q_exact(i, j));
      }
    RateEngine ewens(parse_model("pd:alpha=0,theta=3/2"));
    AppendixParams pd{-1, 0, 0, Rational(3, 2)};
    for (int i = 2; i <= 10; ++i)
      for (int j = 1; j < i; ++j) CHECK(to_double(appendix_q(pd, i, j)) == doctest::Approx(ewens.q(i, j)).epsilon(1e-12));
  }

  TEST_CASE("stirling-parameter rows sum to one") {
    for (AppendixParams p : {AppendixParams{-1, 1, 0, 2}, AppendixParams{-1, Rational(-3, 10), 0, 1},
                             AppendixParams{-1, 0, 0, 0}, AppendixParams{Rational(-1, 2), Rational(1, 3), Rational(1, 4), 3}}) {
      for (int i = 1; i <= 9; ++i) {
        Rational total = 0;
        for (int j = 0; j <= i; ++j) total += appendix_q(p, i, j);
        CHECK(total == 1);
      }
    }
  }

  TEST_CASE("stirling-parameter telescoping and duality") {
    AppendixParams p{-1, 1, 0, 2};
    CHECK(check_appendix_telescoping(p, 1, 40).pass);
    CHECK(check_appendix_telescoping(AppendixParams{-1, Rational(-1, 2), 0, 1}, 2, 30).pass);
    auto lim = appendix_limit(p, 1);
    CHECK(lim.source == "dirichlet");
    CHECK_FALSE(lim.heuristic);
    CHECK(lim.value == 0);
    CHECK(appendix_limit(p, 2).value == 1);
    auto r = check_appendix_duality(p, 1, 1, 15, 1e-9);
    CHECK(r.pass);
    CHECK(r.exact);
    auto pd = check_appendix_duality(AppendixParams{-1, Rational(-3, 10), 0, 1}, 2, 1, 10, 1e-9);
    CHECK(pd.pass);
  }
}
