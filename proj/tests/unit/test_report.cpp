#include "doctest.h"
#include "xicoal/report.hpp"

using namespace xicoal;

TEST_SUITE("report") {
  TEST_CASE("canonical dump sorts keys and prints round-trip floats") {
    Json j = {{"b", 0.1}, {"a", 1}, {"c", {{"z", true}, {"y", nullptr}}}};
    std::string s = dump_canonical(j, 0);
    CHECK(s.find("\"a\"") < s.find("\"b\""));
    CHECK(s.find("0.10000000000000001") != std::string::npos);
    CHECK(std::stod(s.substr(s.find("0.1"))) == 0.1);
    CHECK(dump_canonical(j) == dump_canonical(Json::parse(dump_canonical(j))));
  }

  TEST_CASE("non-finite values become null") {
    Json j = {{"x", std::numeric_limits<double>::infinity()}, {"y", std::nan("")}};
    auto s = dump_canonical(j, 0);
    CHECK(s.find("inf") == std::string::npos);
    CHECK(Json::parse(s)["x"].is_null());
    CHECK(Json::parse(s)["y"].is_null());
  }

  TEST_CASE("document layout") {
    auto doc = make_document("rates", {{"model", "kingman"}}, Json::object(), Json::array());
    for (const char* key : {"command", "config", "results", "checks", "timing"}) CHECK(doc.contains(key));
    CHECK(doc["timing"].is_null());
    CHECK(make_document("x", {}, {}, {}, 1.5)["timing"].is_object());
  }

  TEST_CASE("states and reports serialize") {
    CHECK(state_json(kInfinity) == "inf");
    CHECK(state_json(4) == 4);
    CheckReport r;
    r.identity = "lhs = rhs";
    r.record(3, 2, 1.0, 1.0 + 1e-12);
    r.finish(1e-9);
    Json j = to_json(r);
    CHECK(j["pass"] == true);
    CHECK(j["identity"] == "lhs = rhs");
    CHECK(to_json(Estimate{0.5, 0.01, 100})["std_error"] == 0.01);
  }

  TEST_CASE("text rendering flattens paths") {
    Json j = {{"a", {{"b", 1}}}, {"c", Json::array({1, 2})}};
    auto text = render_text(j);
    CHECK(text.find("a.b: 1") != std::string::npos);
    CHECK(text.find("c: [1,2]") != std::string::npos);
  }

  TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  }
}
