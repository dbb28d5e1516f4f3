#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "xicoal/chains.hpp"
#include "xicoal/duality.hpp"
#include "xicoal/report.hpp"

namespace xicoal {

namespace {

struct Common {
  std::vector<std::string> models;
  std::uint64_t seed = 1;
  std::string format = "text";
  int threads = 0;
  std::string out;
  bool timing = false;
};

/// What a subcommand hands back for printing.
struct Outcome {
  Json results = Json::object();
  Json checks = Json::array();
  bool pass = true;
  /// Rows for --format csv; empty when the command has no tabular payload.
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  /// Set when text output is a bare value.
  std::optional<std::string> plain_text;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<Rational> parse_rational_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<Rational> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(parse_rational(item));
  if (expected && values.size() != expected)
    throw ParameterError(std::string(what) + " needs " + std::to_string(expected) + " comma-separated values");
  return values;
}

std::deque<RateEngine> engines_for(const Common& c, bool at_least_one = true) {
  if (at_least_one && c.models.empty()) throw ParameterError("--model is required");
  std::deque<RateEngine> engines;
  for (const auto& spec : c.models) engines.emplace_back(parse_model(spec));
  return engines;
}

int threads_of(const Common& c) { return c.threads > 0 ? c.threads : default_threads(); }

std::uint64_t config_seed(std::uint64_t seed, std::uint64_t index) {
  Rng rng = substream(seed, 1000 + index);
  return rng();
}

Json rational_json(const Rational& q) { return q.get_str(); }

// ---------------------------------------------------------------------------

struct RatesArgs {
  std::optional<int> i, j, imax;
  bool gamma = false;
  std::string check;
  double tol = 1e-10;
};

Outcome cmd_rates(const Common& c, const RatesArgs& a) {
  auto engines = engines_for(c);
  Outcome o;
  if (a.i && a.j) {
    if (engines.size() != 1) throw ParameterError("--i/--j take a single --model");
    const RateEngine& e = engines[0];
    RateValue v = a.gamma ? e.gamma_rate(*a.i, *a.j) : e.q_rate(*a.i, *a.j);
    o.results = Json{{"model", model_spec(e.model())}, {"i", *a.i}, {"j", *a.j},
                     {"rate", a.gamma ? "gamma" : "q"}, {"value", v.value}};
    if (v.exact) o.results["exact"] = rational_json(*v.exact);
    o.plain_text = num(v.value);
    o.csv_header = {"model", "i", "j", "value"};
    o.csv_rows.push_back({model_spec(e.model()), std::to_string(*a.i), std::to_string(*a.j), num(v.value)});
    return o;
  }
  const int imax = a.imax.value_or(10);
  if (imax < 2) throw ParameterError("--imax must be at least 2");
  o.csv_header = {"model", "i", "j", "q", "gamma"};
  Json tables = Json::array();
  for (const auto& e : engines) {
    const std::string spec = model_spec(e.model());
    if (a.check == "compositions") {
      if (!std::holds_alternative<Dirichlet>(e.model())) throw ParameterError("compositions check needs a dirichlet model");
      CheckReport r;
      r.identity = "dirichlet q_ij: stirling form = composition form";
      r.window = "1 <= j < i <= " + std::to_string(imax);
      r.exact = true;
      for (int i = 2; i <= imax; ++i)
        for (int j = 1; j < i; ++j) r.record_exact(i, j, e.q_exact(i, j), e.dirichlet_q_by_compositions(i, j));
      r.finish(0.0);
      Json item = to_json(r);
      item["model"] = spec;
      o.checks.push_back(item);
      o.pass = o.pass && r.pass;
      continue;
    }
    if (a.check == "bridge") {
      CrpChainSpec crp = CrpChainSpec::from_model(e.model());
      CheckReport r;
      r.identity = "q_ij = P(K_i = j) for j < i";
      r.window = "1 <= j < i <= " + std::to_string(imax);
      r.exact = e.exact();
      if (e.exact()) {
        for (int i = 2; i <= imax; ++i) {
          auto law = crp_distribution_exact(crp, i);
          for (int j = 1; j < i; ++j)
            r.record_exact(i, j, e.q_exact(i, j), j <= static_cast<int>(law.size()) ? law[j - 1] : Rational(0));
        }
        r.finish(0.0);
      } else {
        r.measure = "relative";
        for (int i = 2; i <= imax; ++i) {
          auto law = crp_distribution(crp, i);
          for (int j = 1; j < i; ++j) r.record(i, j, e.q(i, j), law[j - 1]);
        }
        r.finish(a.tol);
      }
      Json item = to_json(r);
      item["model"] = spec;
      o.checks.push_back(item);
      o.pass = o.pass && r.pass;
      if (auto* d = std::get_if<Dirichlet>(&e.model())) {
        CheckReport m;
        m.identity = "E K_i = N - N [(N-1)alpha]_i / [N alpha]_i";
        m.window = "1 <= i <= " + std::to_string(imax);
        m.exact = true;
        for (int i = 1; i <= imax; ++i) {
          auto law = crp_distribution_exact(crp, i);
          Rational mean = 0;
          for (std::size_t k = 0; k < law.size(); ++k) mean += Rational(static_cast<long>(k + 1)) * law[k];
          m.record_exact(i, 0, mean, dirichlet_crp_mean(d->N, d->alpha, i));
        }
        m.finish(0.0);
        Json mi = to_json(m);
        mi["model"] = spec;
        o.checks.push_back(mi);
        o.pass = o.pass && m.pass;
      }
      continue;
    }
    if (!a.check.empty()) throw ParameterError("unknown --check '" + a.check + "' (compositions or bridge)");
    Json rows = Json::array();
    for (int i = 2; i <= imax; ++i)
      for (int j = 1; j < i; ++j) {
        double q = e.q(i, j), g = e.gamma(j, i);
        rows.push_back(Json{{"i", i}, {"j", j}, {"q", q}, {"gamma_ji", g}});
        o.csv_rows.push_back({spec, std::to_string(i), std::to_string(j), num(q), num(g)});
      }
    tables.push_back(Json{{"model", spec}, {"rows", rows}});
  }
  if (!tables.empty()) o.results["tables"] = tables;
  return o;
}

// ---------------------------------------------------------------------------

struct TotalArgs {
  std::optional<int> i;
  int imax = 50;
  double tol = 1e-9;
  double closed_form_tol = 1e-10;
};

Outcome cmd_total_rates(const Common& c, const TotalArgs& a) {
  auto engines = engines_for(c);
  Outcome o;
  o.csv_header = {"model", "i", "gamma_total", "summed", "remainder"};
  const int lo = a.i.value_or(1), hi = a.i.value_or(a.imax);
  if (lo < 1) throw StateError("--i must be at least 1");
  Json tables = Json::array();
  for (const auto& e : engines) {
    const std::string spec = model_spec(e.model());
    CheckReport r;
    r.identity = "gamma_i by summation = q_{i+1}";
    r.window = std::to_string(lo) + " <= i <= " + std::to_string(hi);
    r.measure = "relative";
    double worst_remainder = 0.0;
    Json rows = Json::array();
    for (int i = lo; i <= hi; ++i) {
      RateValue summed = e.gamma_total_summed(i);
      double direct = e.q_total(i + 1);
      r.record(i, 0, summed.value, direct);
      worst_remainder = std::max(worst_remainder, summed.remainder_bound.value_or(0.0));
      rows.push_back(Json{{"i", i}, {"gamma_total", direct}, {"summed", summed.value}});
      o.csv_rows.push_back({spec, std::to_string(i), num(direct), num(summed.value),
                            num(summed.remainder_bound.value_or(0.0))});
    }
    r.truncation_note = "telescoped remainder up to " + num(worst_remainder);
    r.finish(a.tol);
    Json item = to_json(r);
    item["model"] = spec;
    o.checks.push_back(item);
    o.pass = o.pass && r.pass;
    if (auto* beta = std::get_if<BetaLambda>(&e.model()); beta && beta_gamma_total_closed_form(*beta, lo)) {
      CheckReport cf;
      cf.identity = "gamma_i = beta closed form";
      cf.window = r.window;
      for (int i = lo; i <= hi; ++i) cf.record(i, 0, e.q_total(i + 1), *beta_gamma_total_closed_form(*beta, i));
      cf.finish(a.closed_form_tol);
      Json ci = to_json(cf);
      ci["model"] = spec;
      o.checks.push_back(ci);
      o.pass = o.pass && cf.pass;
    }
    tables.push_back(Json{{"model", spec}, {"rows", rows}});
  }
  o.results["tables"] = tables;
  if (a.i && engines.size() == 1) o.plain_text = num(engines[0].q_total(*a.i + 1));
  return o;
}

// ---------------------------------------------------------------------------

struct DualityArgs {
  int imax = 25;
  double tol = 1e-9;
  std::string measure = "auto";
  int max_terms = 2048;
};

Outcome cmd_duality(const Common& c, const DualityArgs& a) {
  auto engines = engines_for(c);
  Outcome o;
  for (const auto& e : engines) {
    bool relative = a.measure == "relative" || (a.measure == "auto" && !e.exact());
    if (a.measure != "auto" && a.measure != "relative" && a.measure != "absolute")
      throw ParameterError("--measure is auto, absolute or relative");
    // Rational arithmetic leaves nothing to tolerate.
    const double tol = e.exact() ? 0.0 : a.tol;
    CheckReport s = check_siegmund(e, a.imax, tol, relative, a.max_terms);
    CheckReport g = check_generator_identity(build_generators(e, a.imax), tol);
    for (auto* r : {&s, &g}) {
      Json item = to_json(*r);
      item["model"] = model_spec(e.model());
      o.checks.push_back(item);
      o.pass = o.pass && r->pass;
    }
  }
  return o;
}

// ---------------------------------------------------------------------------

struct GreenArgs {
  int window = 10;
  int K = 256;
  double tol = 1e-6;
};

Outcome cmd_green(const Common& c, const GreenArgs& a) {
  auto engines = engines_for(c);
  Outcome o;
  for (const auto& e : engines) {
    CheckReport r = check_green_duality(e, a.window, a.tol, a.K);
    Json item = to_json(r);
    item["model"] = model_spec(e.model());
    o.checks.push_back(item);
    o.pass = o.pass && r.pass;
  }
  return o;
}

// ---------------------------------------------------------------------------

struct AppendixArgs {
  std::vector<std::string> params;
  int jmax = 3;
  int imin = 1;
  int imax = 20;
  int kmax = 50;
  int K = 0;
  double tol = 1e-9;
};

AppendixParams appendix_params_for(const CoalescentModel& model) {
  if (auto* d = std::get_if<Dirichlet>(&model)) return {-1, d->alpha, 0, d->N * d->alpha};
  if (auto* pd = std::get_if<PoissonDirichlet>(&model)) return {-1, -pd->alpha, 0, pd->theta};
  throw ParameterError("appendix parameters follow from dirichlet and pd models only");
}

Outcome cmd_appendix(const Common& c, const AppendixArgs& a) {
  std::vector<AppendixParams> sets;
  for (const auto& spec : c.models) sets.push_back(appendix_params_for(validate(parse_model(spec))));
  for (const auto& text : a.params) {
    auto v = parse_rational_list(text, 4, "--params");
    sets.push_back({v[0], v[1], v[2], v[3]});
  }
  if (sets.empty()) throw ParameterError("give --model or --params a,b,r,t");
  if (a.jmax < 0) throw ParameterError("--jmax must be non-negative");
  Outcome o;
  Json values = Json::array();
  for (const auto& p : sets) {
    Json label = Json::array({p.a.get_str(), p.b.get_str(), p.r.get_str(), p.t.get_str()});
    for (int j = 0; j <= a.jmax; ++j) {
      CheckReport tele = check_appendix_telescoping(p, j, a.kmax);
      CheckReport dual = check_appendix_duality(p, j, a.imin, a.imax, a.tol, a.K);
      for (auto* r : {&tele, &dual}) {
        Json item = to_json(*r);
        item["params"] = label;
        o.checks.push_back(item);
        o.pass = o.pass && r->pass;
      }
      // Both sides at i = imin, exactly.
      AppendixLimit limit = appendix_limit(p, j);
      Rational lhs = 0;
      for (int k = 0; k <= std::min(a.imin, j); ++k) lhs += appendix_q(p, a.imin, k);
      values.push_back(Json{{"params", label},
                            {"i", a.imin},
                            {"j", j},
                            {"q_i_le_j", rational_json(lhs)},
                            {"limit", rational_json(limit.value)},
                            {"limit_source", limit.source}});
    }
  }
  o.results["values"] = values;
  return o;
}

// ---------------------------------------------------------------------------

struct StirlingArgs {
  std::string params;
  std::string kind;
  int imax = 10;
  std::optional<double> alpha;
};

Outcome cmd_stirling(const Common&, const StirlingArgs& a) {
  if (a.imax < 0) throw ParameterError("--imax must be non-negative");
  Outcome o;
  o.csv_header = {"i", "j", "value"};
  Json rows = Json::array();
  if (a.alpha) {
    SAlphaTable table(*a.alpha, a.imax);
    for (int i = 0; i <= a.imax; ++i)
      for (int j = 0; j <= i; ++j) {
        double lv = table.log_value(i, j);
        rows.push_back(Json{{"i", i}, {"j", j}, {"log_s_alpha", lv}});
        o.csv_rows.push_back({std::to_string(i), std::to_string(j), num(lv)});
      }
    o.results = Json{{"alpha", *a.alpha}, {"rows", rows}};
    return o;
  }
  StirlingParams params = classical_params(ClassicalKind::second_kind);
  if (!a.kind.empty()) {
    if (a.kind == "second") params = classical_params(ClassicalKind::second_kind);
    else if (a.kind == "first") params = classical_params(ClassicalKind::first_kind_unsigned);
    else if (a.kind == "lah") params = classical_params(ClassicalKind::lah);
    else throw ParameterError("--kind is second, first or lah");
  }
  if (!a.params.empty()) {
    auto v = parse_rational_list(a.params, 3, "--params");
    params = {v[0], v[1], v[2]};
  }
  StirlingTable table(params, a.imax, Representation::exact_rational);
  std::ostringstream text;
  for (int i = 0; i <= a.imax; ++i) {
    for (int j = 0; j <= i; ++j) {
      std::string v = table.exact(i, j).get_str();
      rows.push_back(Json{{"i", i}, {"j", j}, {"value", v}});
      o.csv_rows.push_back({std::to_string(i), std::to_string(j), v});
      text << (j ? " " : "") << v;
    }
    text << '\n';
  }
  o.results = Json{{"params", Json::array({params.a.get_str(), params.b.get_str(), params.r.get_str()})}, {"rows", rows}};
  std::string t = text.str();
  t.pop_back();
  o.plain_text = t;
  return o;
}

// ---------------------------------------------------------------------------

struct PaintboxArgs {
  std::vector<std::string> points;
  std::optional<int> i, j;
  int imax = 8;
  long reps = 100000;
  double sigma = 4.0;
};

Outcome cmd_paintbox(const Common& c, const PaintboxArgs& a) {
  if (a.points.empty()) throw ParameterError("--x is required");
  Outcome o;
  if (a.i && a.j) {
    if (a.points.size() != 1) throw ParameterError("--i/--j take a single --x");
    ExactMassPoint x(parse_rational_list(a.points[0], 0, "--x"));
    Rational p = prob_Y(*a.i, x, *a.j);
    o.results = Json{{"x", a.points[0]}, {"i", *a.i}, {"j", *a.j}, {"value", to_double(p)}, {"exact", rational_json(p)}};
    o.plain_text = p.get_str();
    return o;
  }
  if (a.imax < 1) throw ParameterError("--imax must be at least 1");
  for (std::size_t idx = 0; idx < a.points.size(); ++idx) {
    ExactMassPoint x(parse_rational_list(a.points[idx], 0, "--x"));
    MassPoint xd = to_double(x);
    CheckReport norm;
    norm.identity = "paintbox normalization: sum_j P(Y(i)=j) = 1; sum_i P(step) = P(new colour); step telescoping";
    norm.window = "1 <= i <= " + std::to_string(a.imax);
    norm.exact = true;
    for (int i = 1; i <= a.imax; ++i) {
      Rational total = 0, steps = 0;
      for (int j = 1; j <= i; ++j) total += prob_Y(i, x, j);
      norm.record_exact(i, 0, total, Rational(1));
      for (int k = 1; k <= i; ++k) {
        steps += prob_Y_step(i, x, k);
        Rational le_i = 0, le_next = 0;
        for (int l = 1; l <= k; ++l) {
          le_i += prob_Y(i, x, l);
          le_next += prob_Y(i + 1, x, l);
        }
        norm.record_exact(i, k, prob_Y_step(i, x, k), le_i - le_next);
      }
      norm.record_exact(i, -1, steps, prob_new_colour(i, x));
    }
    norm.finish(0.0);
    Json ni = to_json(norm);
    ni["x"] = a.points[idx];
    o.checks.push_back(ni);
    o.pass = o.pass && norm.pass;

    // One batch of shared-allocation paths gives every (i, j) frequency.
    const int len = a.imax + 1;
    auto paths = run_replicates(a.reps, config_seed(c.seed, idx), threads_of(c),
                                [&](Rng& rng, long) { return sample_Y_path(len, xd, rng); });
    ExperimentReport mc;
    mc.experiment = "paintbox_monte_carlo";
    mc.model = a.points[idx];
    mc.reps = a.reps;
    mc.seed = c.seed;
    for (int i = 1; i <= a.imax; ++i)
      for (int j = 1; j <= i; ++j) {
        long hits = 0, step_hits = 0;
        for (const auto& p : paths) {
          hits += p[i] == j;
          step_hits += p[i] == j && p[i + 1] == j + 1;
        }
        Estimate e = binomial_estimate(hits, a.reps);
        Estimate s = binomial_estimate(step_hits, a.reps);
        Comparison cy{"P(Y(" + std::to_string(i) + ")=" + std::to_string(j) + ")", e.estimate, e.std_error,
                      to_double(prob_Y(i, x, j)), "exact paintbox law", a.sigma, std::nullopt, std::nullopt};
        Comparison cs{"P(Y(" + std::to_string(i) + ")=" + std::to_string(j) + ", Y(" + std::to_string(i + 1) +
                          ")=" + std::to_string(j + 1) + ")",
                      s.estimate, s.std_error, to_double(prob_Y_step(i, x, j)), "exact paintbox law",
                      a.sigma, std::nullopt, std::nullopt};
        mc.comparisons.push_back(cy);
        mc.comparisons.push_back(cs);
      }
    // Exact 0 or 1 probabilities give se = 0 and must then be hit exactly.
    mc.finish();
    Json mi = to_json(mc);
    o.checks.push_back(mi);
    o.pass = o.pass && mc.pass;
  }
  return o;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::vector<int> i_list, j_list;
  std::vector<double> t_list;
  long reps = 100000;
  double sigma = 4.0;
  std::string path;
  int n = 10;
};

Outcome cmd_simulate(const Common& c, const SimulateArgs& a, const ReplicateSink& sink) {
  auto engines = engines_for(c);
  Outcome o;
  o.csv_header = {"rep", "init", "t", "value"};
  if (!a.path.empty()) {
    if (engines.size() != 1 || a.t_list.size() != 1) throw ParameterError("--path takes one --model and one --t");
    ChainSimulator sim(engines[0]);
    Rng rng = substream(c.seed, 0);
    SamplePath p = a.path == "N"   ? sim.simulate_N(a.n, a.t_list[0], rng)
                   : a.path == "L" ? sim.simulate_L(a.n, a.t_list[0], rng)
                                   : throw ParameterError("--path is N or L");
    Json states = Json::array();
    for (int s : p.states) states.push_back(state_json(s));
    o.results = Json{{"model", model_spec(engines[0].model())}, {"process", a.path}, {"n", a.n},
                     {"horizon", p.horizon}, {"times", p.times}, {"states", states}};
    for (std::size_t k = 0; k < p.states.size(); ++k)
      o.csv_rows.push_back({std::to_string(k), std::to_string(a.n), num(k ? p.times[k - 1] : 0.0),
                            p.states[k] == kInfinity ? "inf" : std::to_string(p.states[k])});
    return o;
  }
  if (a.i_list.empty() || a.j_list.empty() || a.t_list.empty()) throw ParameterError("need --i, --j and --t");
  std::uint64_t index = 0;
  for (const auto& e : engines)
    for (int i : a.i_list)
      for (int j : a.j_list)
        for (double t : a.t_list) {
          ExperimentReport r = mc_duality_test(e, i, j, t, a.reps, config_seed(c.seed, index++), threads_of(c),
                                               a.sigma, sink);
          o.checks.push_back(to_json(r));
          o.pass = o.pass && r.pass;
        }
  return o;
}

// ---------------------------------------------------------------------------

struct ConvergeArgs {
  std::vector<int> n_list{100, 500, 2000};
  std::vector<double> t_list{0.5};
  std::vector<int> moments{1, 2};
  std::vector<double> y_grid;
  long reps = 20000;
  double tol = 0.05;
  double decay_sigma = 2.0;
};

Outcome cmd_converge(const Common& c, const ConvergeArgs& a, const ReplicateSink& sink) {
  auto engines = engines_for(c);
  Outcome o;
  o.csv_header = {"rep", "init", "t", "value"};
  std::uint64_t index = 0;
  for (const auto& e : engines)
    for (double t : a.t_list) {
      DustOptions opt;
      opt.n_list = a.n_list;
      opt.t = t;
      opt.moments = a.moments;
      opt.reps = a.reps;
      opt.seed = config_seed(c.seed, index++);
      opt.threads = threads_of(c);
      opt.tolerance = a.tol;
      opt.decay_sigma = a.decay_sigma;
      opt.y_grid = a.y_grid;
      ExperimentReport r = dust_convergence_experiment(e, opt, sink);
      o.checks.push_back(to_json(r));
      o.pass = o.pass && r.pass;
    }
  return o;
}

// ---------------------------------------------------------------------------

struct LimitsArgs {
  std::vector<int> n_list{1000};
  long reps = 20000;
  double sigma = 3.0;
  double tv_max = 0.05;
};

Outcome cmd_limits(const Common& c, const LimitsArgs& a, const ReplicateSink& sink) {
  auto engines = engines_for(c);
  Outcome o;
  o.csv_header = {"rep", "init", "t", "value"};
  std::uint64_t index = 0;
  Json laws = Json::array();
  for (const auto& e : engines) {
    if (auto* d = std::get_if<Dirichlet>(&e.model())) {
      DirichletLimitLaws limit = dirichlet_limit_laws(d->N, d->alpha);
      laws.push_back(Json{{"model", model_spec(e.model())},
                          {"C_inf", limit.jump_count},
                          {"tau_inf_mean", limit.tau_mean},
                          {"tau_inf_variance", limit.tau_variance}});
    }
    for (int n : a.n_list) {
      ExperimentReport r = jumps_and_absorption(e, n, a.reps, config_seed(c.seed, index++), threads_of(c), a.sigma, sink);
      bool tv_ok = true;
      for (const auto& [name, v] : r.values)
        if (name == "tv_exact_limit" && !(v <= a.tv_max)) tv_ok = false;
      if (!tv_ok) {
        r.pass = false;
        r.notes.push_back("TV(C_n, C_inf) above " + num(a.tv_max));
      }
      o.checks.push_back(to_json(r));
      o.pass = o.pass && r.pass;
    }
  }
  if (!laws.empty()) o.results["limit_laws"] = laws;
  return o;
}

// ---------------------------------------------------------------------------

void emit(const Common& c, const std::string& command, const Json& config, const Outcome& o,
          std::optional<double> seconds, const std::vector<ReplicateRow>* stream, std::ostream& out) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) throw ParameterError("cannot open --out file " + c.out);
    sink = &file;
  }
  if (c.format == "json") {
    *sink << dump_canonical(make_document(command, config, o.results, o.checks, seconds));
  } else if (c.format == "csv") {
    if (stream) {
      *sink << "rep,init,t,value\n";
      for (const auto& r : *stream) *sink << r.rep << ',' << r.init << ',' << num(r.t) << ',' << num(r.value) << '\n';
    } else {
      bool first = true;
      for (const auto& h : o.csv_header) *sink << (first ? "" : ",") << csv_field(h), first = false;
      *sink << '\n';
      for (const auto& row : o.csv_rows) {
        first = true;
        for (const auto& f : row) *sink << (first ? "" : ",") << csv_field(f), first = false;
        *sink << '\n';
      }
    }
  } else if (o.plain_text) {
    *sink << *o.plain_text << '\n';
    if (seconds) *sink << "seconds: " << num(*seconds) << '\n';
  } else {
    Json body{{"results", o.results}, {"checks", o.checks}, {"pass", o.pass}};
    if (seconds) body["seconds"] = *seconds;
    *sink << render_text(body);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rates, duality checks and simulations for exchangeable coalescents"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub, bool with_model = true) {
    if (with_model)
      sub->add_option("--model", common.models, "model spec, e.g. dirichlet:N=3,alpha=1 (repeatable)");
    sub->add_option("--seed", common.seed, "master seed");
    sub->add_option("--format", common.format, "text, json or csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    sub->add_option("--threads", common.threads, "worker threads; 0 uses all cores, 1 the serial path");
    sub->add_option("--out", common.out, "write output to this file");
    sub->add_flag("--timing", common.timing, "report wall-clock seconds (output is then not reproducible)");
  };

  RatesArgs rates;
  auto* s_rates = app.add_subcommand("rates", "q_ij (or gamma_ij) values, tables and cross-checks");
  add_common(s_rates);
  s_rates->add_option("--i", rates.i);
  s_rates->add_option("--j", rates.j);
  s_rates->add_option("--imax", rates.imax, "table size");
  s_rates->add_flag("--gamma", rates.gamma, "fixation-line rate gamma_ij instead of q_ij");
  s_rates->add_option("--check", rates.check, "compositions or bridge");
  s_rates->add_option("--tol", rates.tol, "relative tolerance for floating checks");

  TotalArgs total;
  auto* s_total = app.add_subcommand("total-rates", "gamma_i by summation against q_{i+1}");
  add_common(s_total);
  s_total->add_option("--i", total.i);
  s_total->add_option("--imax", total.imax);
  s_total->add_option("--tol", total.tol);

  DualityArgs duality;
  auto* s_dual = app.add_subcommand("duality", "Siegmund duality and generator identity checks");
  add_common(s_dual);
  s_dual->add_option("--imax,--n", duality.imax, "window 1 <= j < i <= imax");
  s_dual->add_option("--tol", duality.tol, "tolerance for floating models; exact models must match exactly");
  s_dual->add_option("--measure", duality.measure, "auto, absolute or relative");
  s_dual->add_option("--max-terms", duality.max_terms);

  GreenArgs green;
  auto* s_green = app.add_subcommand("green", "Green matrix duality with boundary term");
  add_common(s_green);
  s_green->add_option("--window,--n", green.window);
  s_green->add_option("--K", green.K, "truncation level for the fixation-line sums");
  s_green->add_option("--tol", green.tol);

  AppendixArgs appendix;
  auto* s_app = app.add_subcommand("appendix", "generalized Stirling duality lemma");
  add_common(s_app);
  s_app->add_option("--params", appendix.params, "a,b,r,t (repeatable)");
  s_app->add_option("--jmax", appendix.jmax);
  s_app->add_option("--imin", appendix.imin);
  s_app->add_option("--imax", appendix.imax);
  s_app->add_option("--kmax", appendix.kmax, "telescoping range 0..kmax");
  s_app->add_option("--K", appendix.K, "sum truncation; 0 picks 2*imax+10");
  s_app->add_option("--tol", appendix.tol);

  StirlingArgs stirling;
  auto* s_stir = app.add_subcommand("stirling", "tables of generalized Stirling numbers");
  add_common(s_stir, false);
  s_stir->add_option("--params", stirling.params, "a,b,r");
  s_stir->add_option("--kind", stirling.kind, "second, first or lah");
  s_stir->add_option("--imax", stirling.imax);
  s_stir->add_option("--alpha", stirling.alpha, "log s_alpha table instead");

  PaintboxArgs paintbox;
  auto* s_paint = app.add_subcommand("paintbox", "exact and simulated paintbox laws");
  add_common(s_paint, false);
  s_paint->add_option("--x", paintbox.points, "mass point, e.g. 1/2,1/4 (repeatable)");
  s_paint->add_option("--i", paintbox.i);
  s_paint->add_option("--j", paintbox.j);
  s_paint->add_option("--imax", paintbox.imax);
  s_paint->add_option("--reps", paintbox.reps);
  s_paint->add_option("--sigma", paintbox.sigma);

  SimulateArgs simulate;
  auto* s_sim = app.add_subcommand("simulate", "Monte Carlo duality tests and sample paths");
  add_common(s_sim);
  s_sim->add_option("--i", simulate.i_list)->delimiter(',');
  s_sim->add_option("--j", simulate.j_list)->delimiter(',');
  s_sim->add_option("--t", simulate.t_list)->delimiter(',');
  s_sim->add_option("--reps", simulate.reps);
  s_sim->add_option("--sigma", simulate.sigma);
  s_sim->add_option("--path", simulate.path, "print one path of N or L");
  s_sim->add_option("--n", simulate.n, "initial state for --path");

  ConvergeArgs converge;
  auto* s_conv = app.add_subcommand("converge", "dust limit of N_t/n");
  add_common(s_conv);
  s_conv->add_option("--n", converge.n_list)->delimiter(',');
  s_conv->add_option("--t", converge.t_list)->delimiter(',');
  s_conv->add_option("--moments", converge.moments)->delimiter(',');
  s_conv->add_option("--y", converge.y_grid, "grid for P(n/L_t <= y)")->delimiter(',');
  s_conv->add_option("--reps", converge.reps);
  s_conv->add_option("--tol", converge.tol, "allowed error at the largest n");
  s_conv->add_option("--decay-sigma", converge.decay_sigma);

  LimitsArgs limits;
  auto* s_lim = app.add_subcommand("limits", "jump counts and absorption times");
  add_common(s_lim);
  s_lim->add_option("--n", limits.n_list)->delimiter(',');
  s_lim->add_option("--reps", limits.reps);
  s_lim->add_option("--sigma", limits.sigma);
  s_lim->add_option("--tv-max", limits.tv_max);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    Json config = Json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      if (opt->get_name() == "--help" || opt->count() == 0) continue;
      auto results = opt->results();
      std::string key = opt->get_name();
      while (!key.empty() && key.front() == '-') key.erase(key.begin());
      if (opt->get_expected_max() == 0) config[key] = true;
      else config[key] = results.size() == 1 ? Json(results[0]) : Json(results);
    }
    std::vector<ReplicateRow> stream;
    const bool want_stream = common.format == "csv" && (command == "simulate" || command == "converge" || command == "limits") &&
                             simulate.path.empty();
    ReplicateSink sink;
    if (want_stream) sink = [&stream](const ReplicateRow& r) { stream.push_back(r); };

    auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    if (command == "rates") outcome = cmd_rates(common, rates);
    else if (command == "total-rates") outcome = cmd_total_rates(common, total);
    else if (command == "duality") outcome = cmd_duality(common, duality);
    else if (command == "green") outcome = cmd_green(common, green);
    else if (command == "appendix") outcome = cmd_appendix(common, appendix);
    else if (command == "stirling") outcome = cmd_stirling(common, stirling);
    else if (command == "paintbox") outcome = cmd_paintbox(common, paintbox);
    else if (command == "simulate") outcome = cmd_simulate(common, simulate, sink);
    else if (command == "converge") outcome = cmd_converge(common, converge, sink);
    else outcome = cmd_limits(common, limits, sink);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (common.format == "csv" && !want_stream && outcome.csv_header.empty())
      throw ParameterError(command + " has no tabular output; use --format json or text");
    outcome.results["pass"] = outcome.pass;
    emit(common, command, config, outcome, common.timing ? std::optional<double>(seconds) : std::nullopt,
         want_stream ? &stream : nullptr, out);
    return outcome.pass ? 0 : 1;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const StateError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace xicoal
