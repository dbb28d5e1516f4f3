#include "xicoal/models.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cctype>
#include <map>

namespace xicoal {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// "k1=v1,k2=v2" with every key required exactly once.
std::map<std::string, std::string> key_values(std::string_view family, std::string_view args,
                                              std::initializer_list<const char*> keys) {
  std::map<std::string, std::string> out;
  for (std::string_view item : split(args, ',')) {
    item = trim(item);
    auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ParameterError("model '" + std::string(family) + "': expected key=value, got '" +
                           std::string(item) + "'");
    std::string key(trim(item.substr(0, eq)));
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end())
      throw ParameterError("model '" + std::string(family) + "': unknown parameter '" + key + "'");
    if (!out.emplace(key, std::string(trim(item.substr(eq + 1)))).second)
      throw ParameterError("model '" + std::string(family) + "': repeated parameter '" + key + "'");
  }
  for (const char* k : keys)
    if (!out.count(k))
      throw ParameterError("model '" + std::string(family) + "': missing parameter '" + k + "'");
  return out;
}

int parse_int(const std::string& s, const char* what) {
  Rational q = parse_rational(s);
  if (q.get_den() != 1 || abs(q) > 1000000000)
    throw ParameterError(std::string(what) + " must be an integer, got '" + s + "'");
  return static_cast<int>(q.get_num().get_si());
}

std::string str(const Rational& q) { return q.get_str(); }

}  // namespace

const CoalescentModel& validate(const CoalescentModel& model) {
  std::visit(overloaded{
                 [](const Kingman&) {},
                 [](const BetaLambda& m) {
                   if (m.a <= 0) throw ParameterError("beta: a must be positive");
                   if (m.b <= 0) throw ParameterError("beta: b must be positive");
                 },
                 [](const LambdaAtoms& m) {
                   if (m.kingman_mass < 0) throw ParameterError("lambda-atoms: k0 must be non-negative");
                   for (const auto& atom : m.atoms) {
                     if (atom.x <= 0 || atom.x > 1)
                       throw ParameterError("lambda-atoms: atom locations must lie in (0, 1]");
                     if (atom.weight <= 0) throw ParameterError("lambda-atoms: weights must be positive");
                   }
                   if (m.atoms.empty() && m.kingman_mass == 0)
                     throw ParameterError("lambda-atoms: the measure must be non-zero");
                 },
                 [](const DiracNu& m) {
                   if (m.weight <= 0) throw ParameterError("dirac-nu: w must be positive");
                   if (m.point.size() == 0) throw ParameterError("dirac-nu: the point needs at least one part");
                 },
                 [](const Dirichlet& m) {
                   if (m.N < 1) throw ParameterError("dirichlet: N must be at least 1");
                   if (m.alpha <= 0) throw ParameterError("dirichlet: alpha must be positive");
                 },
                 [](const PoissonDirichlet& m) {
                   if (m.alpha < 0 || m.alpha >= 1) throw ParameterError("pd: alpha must lie in [0, 1)");
                   if (m.theta <= -m.alpha) throw ParameterError("pd: theta must exceed -alpha");
                   if (m.alpha == 0 && m.theta == 0)
                     throw ParameterError("pd: alpha and theta cannot both be zero");
                 },
             },
             model);
  return model;
}

CoalescentModel parse_model(std::string_view spec) {
  spec = trim(spec);
  auto colon = spec.find(':');
  std::string family(trim(spec.substr(0, colon)));
  std::string_view args = colon == std::string_view::npos ? std::string_view() : trim(spec.substr(colon + 1));
  CoalescentModel model;
  if (family == "kingman") {
    if (!args.empty()) throw ParameterError("model 'kingman' takes no parameters");
    model = Kingman{};
  } else if (family == "beta") {
    auto kv = key_values(family, args, {"a", "b"});
    model = BetaLambda{parse_rational(kv["a"]), parse_rational(kv["b"])};
  } else if (family == "lambda-atoms") {
    auto sections = split(args, ';');
    if (sections.size() > 2) throw ParameterError("lambda-atoms: expected 'k0=<f>;<x>:<w>,...'");
    auto kv = key_values(family, sections[0], {"k0"});
    LambdaAtoms m{{}, parse_rational(kv["k0"])};
    if (sections.size() == 2 && !trim(sections[1]).empty()) {
      for (std::string_view item : split(sections[1], ',')) {
        auto c = item.find(':');
        if (c == std::string_view::npos) throw ParameterError("lambda-atoms: atoms are written <x>:<w>");
        m.atoms.push_back({parse_rational(trim(item.substr(0, c))), parse_rational(trim(item.substr(c + 1)))});
      }
    }
    model = std::move(m);
  } else if (family == "dirac-nu") {
    auto sections = split(args, ';');
    if (sections.size() != 2) throw ParameterError("dirac-nu: expected 'x=<f>[,<f>]*;w=<f>'");
    std::string_view xs = trim(sections[0]);
    if (xs.substr(0, 2) != "x=") throw ParameterError("dirac-nu: expected 'x=' first");
    std::vector<Rational> parts;
    for (std::string_view v : split(xs.substr(2), ',')) parts.push_back(parse_rational(trim(v)));
    auto kv = key_values(family, sections[1], {"w"});
    model = DiracNu{ExactMassPoint(std::move(parts)), parse_rational(kv["w"])};
  } else if (family == "dirichlet") {
    auto kv = key_values(family, args, {"N", "alpha"});
    model = Dirichlet{parse_int(kv["N"], "dirichlet: N"), parse_rational(kv["alpha"])};
  } else if (family == "pd") {
    auto kv = key_values(family, args, {"alpha", "theta"});
    model = PoissonDirichlet{parse_rational(kv["alpha"]), parse_rational(kv["theta"])};
  } else {
    throw ParameterError("unknown model family '" + family + "'");
  }
  validate(model);
  return model;
}

std::string model_spec(const CoalescentModel& model) {
  return std::visit(
      overloaded{
          [](const Kingman&) -> std::string { return "kingman"; },
          [](const BetaLambda& m) { return "beta:a=" + str(m.a) + ",b=" + str(m.b); },
          [](const LambdaAtoms& m) {
            std::string s = "lambda-atoms:k0=" + str(m.kingman_mass);
            for (std::size_t r = 0; r < m.atoms.size(); ++r)
              s += (r == 0 ? ";" : ",") + str(m.atoms[r].x) + ":" + str(m.atoms[r].weight);
            return s;
          },
          [](const DiracNu& m) {
            std::string s = "dirac-nu:x=";
            for (std::size_t r = 0; r < m.point.size(); ++r) s += (r ? "," : "") + str(m.point.parts()[r]);
            return s + ";w=" + str(m.weight);
          },
          [](const Dirichlet& m) { return "dirichlet:N=" + std::to_string(m.N) + ",alpha=" + str(m.alpha); },
          [](const PoissonDirichlet& m) { return "pd:alpha=" + str(m.alpha) + ",theta=" + str(m.theta); },
      },
      model);
}

std::string family_name(const CoalescentModel& model) {
  static const char* names[] = {"kingman", "beta", "lambda-atoms", "dirac-nu", "dirichlet", "pd"};
  return names[model.index()];
}

bool exact_capable(const CoalescentModel& model) {
  if (auto* beta = std::get_if<BetaLambda>(&model)) return beta->a == 1 && beta->b == 1;
  return !std::holds_alternative<PoissonDirichlet>(model);
}

Rational nu_delta(const CoalescentModel& model, int j) {
  if (j < 0) throw StateError("nu_delta needs j >= 0");
  if (j == 0) return 0;
  return std::visit(overloaded{
                        [](const Kingman&) { return Rational(0); },
                        [](const BetaLambda&) { return Rational(0); },
                        [](const LambdaAtoms& m) {
                          Rational mass = 0;
                          for (const auto& atom : m.atoms)
                            if (atom.x == 1) mass += atom.weight;
                          return mass;
                        },
                        [j](const DiracNu& m) {
                          bool on_delta_j = m.point.dust() == 0 && static_cast<int>(m.point.size()) <= j;
                          return on_delta_j ? m.weight : Rational(0);
                        },
                        [j](const Dirichlet& m) { return Rational(j >= m.N ? 1 : 0); },
                        [](const PoissonDirichlet&) { return Rational(0); },
                    },
                    model);
}

Rational nu_delta_finite(const CoalescentModel& model) {
  if (auto* d = std::get_if<DiracNu>(&model)) return nu_delta(model, static_cast<int>(d->point.size()));
  if (auto* d = std::get_if<Dirichlet>(&model)) return nu_delta(model, d->N);
  return nu_delta(model, 1);
}

DustReport dust_classification(const CoalescentModel& model) {
  DustReport r;
  std::visit(overloaded{
                 [&r](const Kingman&) {
                   r.has_dust = false;
                   r.comes_down = true;
                   r.stays_infinite = false;
                   r.L_explodes = true;
                   r.nu_total_on_delta_star = 0.0;
                 },
                 [&r](const BetaLambda& m) {
                   r.has_dust = m.a > 1;
                   if (m.a > 2) r.nu_total_on_delta_star = std::exp(log_beta(to_double(m.a - 2), to_double(m.b)) -
                                                                    log_beta(to_double(m.a), to_double(m.b)));
                 },
                 [&r](const LambdaAtoms& m) {
                   if (m.kingman_mass > 0) {
                     r.has_dust = false;
                     r.comes_down = true;
                     r.stays_infinite = false;
                     r.L_explodes = true;
                   } else {
                     r.has_dust = true;
                   }
                   double total = 0.0;
                   for (const auto& atom : m.atoms) total += to_double(atom.weight / (atom.x * atom.x));
                   if (m.kingman_mass == 0) r.nu_total_on_delta_star = total;
                 },
                 [&r](const DiracNu& m) {
                   // Finitely many events: N stays infinite until the first one.
                   bool proper = m.point.dust() == 0;
                   r.has_dust = true;
                   r.comes_down = false;
                   r.stays_infinite = !proper;
                   r.L_explodes = proper;
                   r.nu_total_on_delta_star = to_double(m.weight);
                 },
                 [&r](const Dirichlet&) {
                   r.has_dust = true;
                   r.comes_down = false;
                   r.stays_infinite = false;
                   r.L_explodes = true;
                   r.nu_total_on_delta_star = 1.0;
                 },
                 [&r](const PoissonDirichlet&) {
                   r.has_dust = true;
                   r.comes_down = false;
                   r.stays_infinite = true;
                   r.L_explodes = false;
                   r.nu_total_on_delta_star = 1.0;
                 },
             },
             model);
  return r;
}

namespace {

/// ∫_0^1 (1 - (1-x)^η) x^{a-3} (1-x)^{b-1} dx / B(a, b) for 1 < a.
/// Both endpoint singularities are removed by power substitutions before
/// Gauss-Kronrod is applied on each half of [0, 1].
double beta_laplace_quadrature(double a, double b, double eta) {
  using boost::math::quadrature::gauss_kronrod;
  const double log_norm = log_beta(a, b);
  auto integrand = [&](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    double lead = -std::expm1(eta * std::log1p(-x));
    return lead * std::exp((a - 3.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_norm);
  };
  // Left half, x = u^p with p = 1/(a-1): the integrand becomes bounded at u = 0.
  const double p = a < 2.0 ? 1.0 / (a - 1.0) : 1.0;
  auto left = [&](double u) {
    if (u <= 0.0) return a <= 2.0 ? eta * p * std::exp(-log_norm) : 0.0;
    return integrand(std::pow(u, p)) * p * std::pow(u, p - 1.0);
  };
  double err = 0.0;
  double result = gauss_kronrod<double, 61>::integrate(left, 0.0, std::pow(0.5, 1.0 / p), 15, 1e-13, &err);
  if (b < 1.0) {
    // Right half, 1 - x = v^{1/b}.
    auto right = [&](double v) {
      if (v <= 0.0) return 0.0;
      double x = 1.0 - std::pow(v, 1.0 / b);
      double lead = -std::expm1(eta * std::log(std::pow(v, 1.0 / b)));
      return lead * std::exp((a - 3.0) * std::log(x) - log_norm) / b;
    };
    result += gauss_kronrod<double, 61>::integrate(right, 0.0, std::pow(0.5, b), 15, 1e-13, &err);
  } else {
    result += gauss_kronrod<double, 61>::integrate(integrand, 0.5, 1.0, 15, 1e-13, &err);
  }
  return result;
}

}  // namespace

double laplace_exponent(const CoalescentModel& model, double eta) {
  if (!(eta >= 0.0)) throw ParameterError("laplace exponent needs eta >= 0");
  DustReport dust = dust_classification(model);
  if (!dust.has_dust.value_or(false)) throw ParameterError("model has no dust; laplace exponent undefined");
  if (eta == 0.0) return 0.0;
  return std::visit(
      overloaded{
          [](const Kingman&) -> double { throw ParameterError("kingman has no dust"); },
          [eta](const BetaLambda& m) {
            double a = to_double(m.a), b = to_double(m.b);
            if (a > 2.0) {
              // [B(a-2, b) - B(a-2, b+η)] / B(a, b)
              double lead = log_beta(a - 2.0, b) - log_beta(a, b);
              double ratio = log_beta(a - 2.0, b + eta) - log_beta(a - 2.0, b);
              return std::exp(lead) * -std::expm1(ratio);
            }
            return beta_laplace_quadrature(a, b, eta);
          },
          [eta](const LambdaAtoms& m) {
            double total = 0.0;
            for (const auto& atom : m.atoms) {
              double x = to_double(atom.x);
              double keep = x >= 1.0 ? 0.0 : std::exp(eta * std::log1p(-x));
              total += to_double(atom.weight) / (x * x) * (1.0 - keep);
            }
            return total;
          },
          [eta](const DiracNu& m) {
            double x0 = to_double(m.point.dust());
            return to_double(m.weight) * (1.0 - (x0 <= 0.0 ? 0.0 : std::pow(x0, eta)));
          },
          [](const Dirichlet&) { return 1.0; },
          [](const PoissonDirichlet&) { return 1.0; },
      },
      model);
}

}  // namespace xicoal
