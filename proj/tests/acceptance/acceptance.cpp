// Acceptance suite: one PASS/FAIL line per criterion. Each criterion runs the
// same command lines as the matching script in repro/.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"

using Json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  Json doc;
  double seconds = 0.0;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "xicoal");
  args.push_back("--format");
  args.push_back("json");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  auto start = std::chrono::steady_clock::now();
  Run r;
  r.code = xicoal::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.err = err.str();
  if (!out.str().empty()) r.doc = Json::parse(out.str());
  return r;
}

std::vector<std::string> with_models(std::vector<std::string> args, const std::vector<std::string>& models) {
  for (const auto& m : models) {
    args.push_back("--model");
    args.push_back(m);
  }
  return args;
}

std::vector<std::string> dirichlet_grid(std::vector<int> Ns = {2, 3, 5}) {
  std::vector<std::string> out;
  for (int N : Ns)
    for (const char* a : {"1/2", "1", "2"}) out.push_back("dirichlet:N=" + std::to_string(N) + ",alpha=" + a);
  return out;
}

std::vector<std::string> pd_grid() {
  std::vector<std::string> out;
  for (const char* a : {"0", "0.3", "0.7"})
    for (const char* t : {"0.5", "1", "2"}) out.push_back(std::string("pd:alpha=") + a + ",theta=" + t);
  out.push_back("pd:alpha=0.5,theta=0");  // (0, 1) is already in the product grid
  return out;
}

template <class... Lists>
std::vector<std::string> concat(const Lists&... lists) {
  std::vector<std::string> out;
  (out.insert(out.end(), lists.begin(), lists.end()), ...);
  return out;
}

double worst(const Json& checks, const char* field) {
  double w = 0.0;
  for (const auto& c : checks)
    if (c.contains(field) && c[field].is_number()) w = std::max(w, c[field].get<double>());
  return w;
}

int failures_in(const Json& checks) {
  int n = 0;
  for (const auto& c : checks) n += c.value("pass", false) ? 0 : 1;
  return n;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Verdict {
  bool pass;
  std::string detail;
};

Verdict criterion_1() {
  auto r = run(with_models({"duality", "--imax", "25", "--tol", "1e-9"},
                           concat(std::vector<std::string>{"kingman", "beta:a=1,b=1"}, dirichlet_grid(), pd_grid())));
  double exact_worst = 0.0, float_worst = 0.0;
  for (const auto& c : r.doc["checks"]) {
    if (c["exact"] == true) exact_worst = std::max(exact_worst, c["max_abs_residual"].get<double>());
    else if (c["measure"] == "relative") float_worst = std::max(float_worst, c["max_rel_residual"].get<double>());
  }
  bool pass = r.code == 0 && exact_worst == 0.0 && r.seconds <= 30.0;
  return {pass, "exact max residual " + fmt(exact_worst) + ", floating max rel residual " + fmt(float_worst) + ", " +
                    fmt(r.seconds) + " s"};
}

Verdict criterion_2() {
  auto all = concat(std::vector<std::string>{"kingman", "beta:a=1,b=1", "beta:a=3,b=1"}, dirichlet_grid(), pd_grid());
  auto r = run(with_models({"total-rates", "--imax", "50", "--tol", "1e-9"}, all));
  bool bs = false, beta31 = false;
  for (const auto& table : r.doc["results"]["tables"]) {
    for (const auto& row : table["rows"]) {
      double g = row["gamma_total"].get<double>();
      int i = row["i"].get<int>();
      if (table["model"] == "beta:a=1,b=1" && i == 10) bs = std::fabs(g - 10.0) <= 1e-10 * 10;
      if (table["model"] == "beta:a=3,b=1" && i == 2) beta31 = std::fabs(g - 1.5) <= 1e-10 * 1.5;
    }
  }
  return {r.code == 0 && bs && beta31,
          "max rel residual " + fmt(worst(r.doc["checks"], "max_rel_residual")) + ", failing checks " +
              std::to_string(failures_in(r.doc["checks"]))};
}

Verdict criterion_3() {
  auto r = run(with_models({"rates", "--check", "compositions", "--imax", "15"}, dirichlet_grid({1, 2, 3, 4, 5, 6})));
  return {r.code == 0, std::to_string(r.doc["checks"].size()) + " models, max residual " +
                           fmt(worst(r.doc["checks"], "max_abs_residual"))};
}

Verdict criterion_4() {
  auto r = run(with_models({"rates", "--check", "bridge", "--imax", "25", "--tol", "1e-10"}, concat(dirichlet_grid(), pd_grid())));
  return {r.code == 0, "failing checks " + std::to_string(failures_in(r.doc["checks"])) + ", float max rel residual " +
                           fmt(worst(r.doc["checks"], "max_rel_residual"))};
}

Verdict criterion_5() {
  auto r = run(with_models({"appendix", "--params=-1,1,0,2", "--jmax", "3", "--imin", "2", "--imax", "20", "--kmax", "50",
                            "--tol", "1e-9"},
                           concat(dirichlet_grid(), pd_grid())));
  std::string worked = "missing";
  for (const auto& v : r.doc["results"]["values"])
    if (v["params"] == Json::array({"-1", "1", "0", "2"}) && v["i"] == 2 && v["j"] == 1) worked = v["q_i_le_j"];
  bool exact_rhs = false;
  for (const auto& c : r.doc["checks"])
    if (c.value("params", Json()) == Json::array({"-1", "1", "0", "2"}) && c["exact"] == true &&
        c["window"] == "2 <= i <= 20, j = 1")
      exact_rhs = c["max_abs_residual"] == 0.0;
  return {r.code == 0 && worked == "2/3" && exact_rhs,
          "worked value " + worked + ", failing checks " + std::to_string(failures_in(r.doc["checks"]))};
}

Verdict criterion_6() {
  auto r = run({"paintbox", "--x", "1/2,1/2", "--x", "0.5,0.3", "--x", "0.4,0.3,0.2", "--imax", "8", "--reps", "100000",
                "--sigma", "4"});
  return {r.code == 0, "failing checks " + std::to_string(failures_in(r.doc["checks"]))};
}

Verdict criterion_7() {
  auto r = run({"simulate", "--model", "kingman", "--model", "dirichlet:N=3,alpha=1", "--model", "pd:alpha=0,theta=1",
                "--i", "20", "--j", "1,2,5", "--t", "0.1,0.5,1", "--reps", "100000", "--sigma", "4"});
  double zmax = 0.0;
  for (const auto& c : r.doc["checks"]) zmax = std::max(zmax, std::fabs(c["values"]["z"].get<double>()));
  return {r.code == 0 && r.seconds <= 300.0, std::to_string(r.doc["checks"].size()) + " configurations, max |z| " +
                                                 fmt(zmax) + ", " + fmt(r.seconds) + " s"};
}

Verdict criterion_8() {
  auto r = run({"converge", "--model", "dirichlet:N=3,alpha=1", "--model", "pd:alpha=0,theta=1", "--n", "100,500,2000",
                "--t", "0.25,0.5,1", "--moments", "1,2", "--reps", "20000", "--tol", "0.05", "--decay-sigma", "2"});
  return {r.code == 0, "failing experiments " + std::to_string(failures_in(r.doc["checks"]))};
}

Verdict criterion_9() {
  auto r = run({"limits", "--model", "dirichlet:N=2,alpha=1", "--model", "dirichlet:N=3,alpha=1", "--n", "1000", "--reps",
                "20000", "--sigma", "3", "--tv-max", "0.05"});
  std::string detail;
  for (const auto& c : r.doc["checks"]) {
    const auto& v = c["values"];
    detail += c["model"].get<std::string>() + " TV " + fmt(v["tv_exact_limit"].get<double>()) + " tau " +
              fmt(v["tau_n_mean"].get<double>()) + "/" + fmt(v["tau_inf_mean"].get<double>()) + "; ";
  }
  return {r.code == 0, detail};
}

Verdict criterion_10() {
  auto r = run({"green", "--model", "kingman", "--model", "dirichlet:N=3,alpha=1", "--model", "pd:alpha=0,theta=1",
                "--window", "10", "--tol", "1e-8"});
  std::string detail;
  double uncorrected = 0.0;
  for (const auto& c : r.doc["checks"]) {
    const auto& d = c["diagnostics"];
    detail += c["model"].get<std::string>() + (c["pass"] == true ? " ok" : " FAIL") + " residual " +
              fmt(c["max_abs_residual"].get<double>()) + " boundary tail " + fmt(d.value("boundary_tail_16K", 0.0)) + "; ";
    if (c["model"] == "kingman") uncorrected = d.value("uncorrected_residual_3_2", 0.0);
  }
  detail += "uncorrected Kingman residual at (3,2) " + fmt(uncorrected);
  return {r.code == 0, detail};
}

}  // namespace

int main() {
  std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"siegmund duality, exact and floating", criterion_1},
      {"total rate by summation and closed forms", criterion_2},
      {"dirichlet rates, two representations", criterion_3},
      {"rates equal restaurant laws", criterion_4},
      {"stirling-parameter duality", criterion_5},
      {"paintbox exactness and simulation", criterion_6},
      {"duality in distribution by simulation", criterion_7},
      {"dust limit of block counts", criterion_8},
      {"jump-count and absorption-time limits", criterion_9},
      {"green matrix duality", criterion_10},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("criterion %2zu %s  %s (%s)\n", k + 1, v.pass ? "PASS" : "FAIL", criteria[k].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
