#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace xicoal;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "xicoal");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("single rate") {
    auto r = run({"rates", "--model", "dirichlet:N=2,alpha=1", "--i", "3", "--j", "2"});
    CHECK(r.code == 0);
    CHECK(r.out.find("0.5") != std::string::npos);
  }

  TEST_CASE("duality check exits zero") {
    auto r = run({"duality", "--model", "pd:alpha=0,theta=1", "--imax", "20", "--tol", "1e-9"});
    CHECK(r.code == 0);
  }

  TEST_CASE("bad parameters exit two") {
    CHECK(run({"rates", "--model", "dirichlet:N=0,alpha=1", "--i", "3", "--j", "2"}).code == 2);
    CHECK(run({"rates", "--model", "dirichlet:N=2,alpha=1", "--i", "3", "--j", "3"}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("json output is reproducible") {
    std::vector<std::string> args{"simulate", "--model", "dirichlet:N=3,alpha=1", "--i", "8", "--j", "2",
                                  "--t",      "0.5",     "--reps",                "2000", "--format", "json"};
    auto a = run(args), b = run(args);
    CHECK(a.out == b.out);
    auto doc = nlohmann::json::parse(a.out);
    CHECK(doc["command"] == "simulate");
    CHECK(doc["timing"].is_null());
  }

  TEST_CASE("csv output") {
    auto r = run({"rates", "--model", "kingman", "--imax", "4", "--format", "csv"});
    CHECK(r.code == 0);
    CHECK(r.out.find(',') != std::string::npos);
    auto s = run({"simulate", "--model", "kingman", "--i", "4", "--j", "2", "--t", "0.3", "--reps", "10", "--format", "csv"});
    CHECK(s.out.rfind("rep,init,t,value", 0) == 0);
  }

  TEST_CASE("paintbox needs no model") {
    auto r = run({"paintbox", "--x", "1/2,1/2", "--i", "2", "--j", "1"});
    CHECK(r.code == 0);
    CHECK(r.out == "1/2\n");
  }
}
