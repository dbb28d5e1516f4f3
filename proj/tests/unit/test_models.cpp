#include <boost/math/special_functions/digamma.hpp>

#include "doctest.h"
#include "xicoal/models.hpp"

using namespace xicoal;

namespace {

// Φ for Beta(a, b), 1 < a < 2, by analytic continuation of the Beta-function form:
// Γ(a-2) [Γ(b)/Γ(a-2+b) - Γ(b+η)/Γ(a-2+b+η)] / B(a, b).
double beta_phi_continued(double a, double b, double eta) {
  double lead = std::tgamma(a - 2.0);
  double diff = std::tgamma(b) / std::tgamma(a - 2.0 + b) - std::tgamma(b + eta) / std::tgamma(a - 2.0 + b + eta);
  return lead * diff / std::exp(log_beta(a, b));
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("specs round-trip through the grammar") {
    for (const char* spec : {"kingman", "beta:a=3/2,b=1", "lambda-atoms:k0=1;1/2:1,1:2", "dirac-nu:x=1/2,1/4;w=3",
                             "dirichlet:N=3,alpha=1", "pd:alpha=3/10,theta=1/2"}) {
      auto model = parse_model(spec);
      CHECK(model_spec(parse_model(model_spec(model))) == model_spec(model));
    }
    CHECK(family_name(parse_model("pd:alpha=0.3,theta=1")) == "pd");
    auto pd = std::get<PoissonDirichlet>(parse_model("pd:alpha=0.3,theta=1"));
    CHECK(pd.alpha == Rational(3, 10));
  }

  TEST_CASE("validation names the broken constraint") {
    CHECK_NOTHROW(parse_model("dirichlet:N=3,alpha=1"));
    CHECK_THROWS_AS(parse_model("dirichlet:N=0,alpha=1"), ParameterError);
    CHECK_THROWS_AS(parse_model("dirichlet:N=2,alpha=0"), ParameterError);
    CHECK_THROWS_AS(parse_model("pd:alpha=0,theta=0"), ParameterError);
    CHECK_THROWS_AS(parse_model("pd:alpha=1,theta=1"), ParameterError);
    CHECK_THROWS_AS(parse_model("pd:alpha=0.5,theta=-0.5"), ParameterError);
    CHECK_NOTHROW(parse_model("pd:alpha=0.5,theta=-0.4"));
    CHECK_THROWS_AS(parse_model("beta:a=0,b=1"), ParameterError);
    CHECK_THROWS_AS(parse_model("lambda-atoms:k0=0;3/2:1"), ParameterError);
    CHECK_THROWS_AS(parse_model("dirac-nu:x=0.7,0.5;w=1"), ParameterError);
    CHECK_THROWS_AS(parse_model("nonsense"), ParameterError);
    CHECK_THROWS_AS(parse_model("dirichlet:N=2"), ParameterError);
  }

  TEST_CASE("nu on Delta_j") {
    auto d = parse_model("dirichlet:N=3,alpha=1");
    CHECK(nu_delta(d, 2) == 0);
    CHECK(nu_delta(d, 3) == 1);
    CHECK(nu_delta(parse_model("pd:alpha=0.3,theta=1"), 7) == 0);
    CHECK(nu_delta(parse_model("lambda-atoms:k0=0;1:5/2"), 1) == Rational(5, 2));
    CHECK(nu_delta(parse_model("lambda-atoms:k0=0;1/2:1"), 4) == 0);
    CHECK(nu_delta(parse_model("kingman"), 3) == 0);
    auto point = parse_model("dirac-nu:x=1/2,1/4,1/4;w=2");
    CHECK(nu_delta(point, 2) == 0);
    CHECK(nu_delta(point, 3) == 2);
    CHECK(nu_delta(parse_model("dirac-nu:x=1/2,1/4;w=2"), 5) == 0);
  }

  TEST_CASE("nu_delta is non-decreasing in j") {
    for (const char* spec : {"kingman", "beta:a=1,b=1", "lambda-atoms:k0=1;1:1,1/3:2", "dirac-nu:x=1/2,1/2;w=1",
                             "dirichlet:N=4,alpha=2", "pd:alpha=0,theta=1"}) {
      auto m = parse_model(spec);
      for (int j = 1; j < 12; ++j) CHECK(nu_delta(m, j) <= nu_delta(m, j + 1));
    }
  }

  TEST_CASE("dust classification follows the family table") {
    auto d = dust_classification(parse_model("dirichlet:N=2,alpha=1"));
    CHECK(*d.has_dust);
    CHECK_FALSE(*d.comes_down);
    CHECK_FALSE(*d.stays_infinite);
    CHECK(*d.L_explodes);
    auto pd = dust_classification(parse_model("pd:alpha=0.3,theta=0.5"));
    CHECK(*pd.has_dust);
    CHECK(*pd.stays_infinite);
    CHECK_FALSE(*pd.L_explodes);
    auto k = dust_classification(parse_model("kingman"));
    CHECK_FALSE(*k.has_dust);
    CHECK(*k.comes_down);
    CHECK(*k.L_explodes);
    CHECK(*dust_classification(parse_model("beta:a=3/2,b=1")).has_dust);
    CHECK_FALSE(*dust_classification(parse_model("beta:a=1,b=1")).has_dust);
    CHECK_FALSE(dust_classification(parse_model("beta:a=3/2,b=1")).comes_down.has_value());
    CHECK(*dust_classification(parse_model("dirac-nu:x=1/2,1/2;w=1")).has_dust);
  }

  TEST_CASE("classification implications hold for every family") {
    for (const char* spec : {"kingman", "beta:a=1,b=1", "beta:a=5/2,b=1", "lambda-atoms:k0=1;1/2:1",
                             "lambda-atoms:k0=0;1/2:1", "dirac-nu:x=1/2,1/2;w=1", "dirac-nu:x=1/2;w=1",
                             "dirichlet:N=3,alpha=1", "pd:alpha=0.7,theta=2"}) {
      auto r = dust_classification(parse_model(spec));
      if (r.stays_infinite.value_or(false)) CHECK_FALSE(r.L_explodes.value_or(true));
      if (r.comes_down.value_or(false)) CHECK(r.L_explodes.value_or(false));
    }
  }

  TEST_CASE("laplace exponent") {
    CHECK(laplace_exponent(parse_model("pd:alpha=0.3,theta=1"), 2.0) == doctest::Approx(1.0));
    CHECK(laplace_exponent(parse_model("dirichlet:N=3,alpha=1"), 0.0) == 0.0);
    CHECK(laplace_exponent(parse_model("beta:a=3,b=1"), 1.0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK_THROWS_AS(laplace_exponent(parse_model("kingman"), 1.0), ParameterError);
    CHECK_THROWS_AS(laplace_exponent(parse_model("beta:a=1,b=1"), 1.0), ParameterError);
    // atoms: Σ w (1 - (1-x)^η) / x²
    double want = 1.0 * (1.0 - std::pow(0.5, 3.0)) / 0.25;
    CHECK(laplace_exponent(parse_model("lambda-atoms:k0=0;1/2:1"), 3.0) == doctest::Approx(want));
  }

  TEST_CASE("beta quadrature agrees with the continued closed form") {
    for (double a : {1.2, 1.5, 1.9})
      for (double b : {0.5, 1.0, 2.5})
        for (double eta : {0.5, 1.0, 4.0}) {
          auto model = BetaLambda{to_rational(a), to_rational(b)};
          CHECK(laplace_exponent(model, eta) == doctest::Approx(beta_phi_continued(a, b, eta)).epsilon(1e-8));
        }
    // a = 2: [ψ(b+η) - ψ(b)] / B(2, b)
    for (double b : {0.5, 1.0, 3.0}) {
      double want = (boost::math::digamma(b + 2.0) - boost::math::digamma(b)) / std::exp(log_beta(2.0, b));
      CHECK(laplace_exponent(BetaLambda{2, to_rational(b)}, 2.0) == doctest::Approx(want).epsilon(1e-8));
    }
  }

  TEST_CASE("laplace exponent is non-decreasing and concave on a grid") {
    for (const char* spec : {"beta:a=3/2,b=1", "beta:a=3,b=2", "lambda-atoms:k0=0;1/2:1,1/5:2",
                             "dirac-nu:x=1/2,1/4;w=1", "dirichlet:N=2,alpha=1", "pd:alpha=0,theta=1"}) {
      auto m = parse_model(spec);
      std::vector<double> phi;
      for (int k = 0; k <= 20; ++k) phi.push_back(laplace_exponent(m, 0.5 * k));
      for (int k = 0; k + 1 < 21; ++k) CHECK(phi[k] <= phi[k + 1] + 1e-12);
      for (int k = 1; k + 1 < 21; ++k) CHECK(phi[k + 1] - phi[k] <= phi[k] - phi[k - 1] + 1e-9);
    }
  }
}
