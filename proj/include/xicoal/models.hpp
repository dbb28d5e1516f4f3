#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xicoal/numeric.hpp"
#include "xicoal/paintbox.hpp"

namespace xicoal {

struct Kingman {};

/// Λ = Beta(a, b) density.
struct BetaLambda {
  Rational a;
  Rational b;
};

struct LambdaAtom {
  Rational x;  // in (0, 1]
  Rational weight;
};

/// Λ = kingman_mass δ_0 + Σ weight δ_x.
struct LambdaAtoms {
  std::vector<LambdaAtom> atoms;
  Rational kingman_mass;
};

/// ν = weight δ_point.
struct DiracNu {
  ExactMassPoint point;
  Rational weight;
};

/// ν = symmetric Dirichlet(α, ..., α) law on N coordinates.
struct Dirichlet {
  int N = 1;
  Rational alpha;
};

/// ν = two-parameter Poisson-Dirichlet law.
struct PoissonDirichlet {
  Rational alpha;
  Rational theta;
};

using CoalescentModel =
    std::variant<Kingman, BetaLambda, LambdaAtoms, DiracNu, Dirichlet, PoissonDirichlet>;

/// Returns the model unchanged or throws ParameterError naming the broken constraint.
const CoalescentModel& validate(const CoalescentModel& model);

/// Parses the model grammar, e.g. "dirichlet:N=3,alpha=1" or "pd:alpha=0.3,theta=1".
CoalescentModel parse_model(std::string_view spec);

/// Canonical spec string that parse_model maps back to the same model.
std::string model_spec(const CoalescentModel& model);

std::string family_name(const CoalescentModel& model);

/// True when all rates of the model are rational and computed exactly.
bool exact_capable(const CoalescentModel& model);

/// ν(Δ_j): mass of points supported on at most j coordinates summing to 1.
Rational nu_delta(const CoalescentModel& model, int j);

/// ν(Δ_f) = lim_j ν(Δ_j).
Rational nu_delta_finite(const CoalescentModel& model);

struct DustReport {
  std::optional<bool> has_dust;
  std::optional<bool> comes_down;
  std::optional<bool> stays_infinite;
  std::optional<bool> L_explodes;
  std::optional<double> nu_total_on_delta_star;
};

DustReport dust_classification(const CoalescentModel& model);

/// Φ(η) = ∫ (1 - (1 - |x|)^η) ν(dx). Throws ParameterError for models without dust.
double laplace_exponent(const CoalescentModel& model, double eta);

}  // namespace xicoal
