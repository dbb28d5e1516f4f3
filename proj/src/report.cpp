#include "xicoal/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace xicoal {

Json state_json(int state) {
  if (state == kInfinity) return "inf";
  return state;
}

Json to_json(const CheckReport& report) {
  Json diagnostics = Json::object();
  for (const auto& [name, value] : report.diagnostics) diagnostics[name] = value;
  return Json{{"identity", report.identity},
              {"window", report.window},
              {"max_abs_residual", report.max_abs_residual},
              {"max_rel_residual", report.max_rel_residual},
              {"worst_entry", Json::array({state_json(report.worst_entry.first), state_json(report.worst_entry.second)})},
              {"truncation_note", report.truncation_note},
              {"measure", report.measure},
              {"tolerance", report.tolerance},
              {"pass", report.pass},
              {"exact", report.exact},
              {"heuristic", report.heuristic},
              {"entries", report.entries},
              {"diagnostics", diagnostics}};
}

Json to_json(const ExperimentReport& report) {
  Json comparisons = Json::array();
  for (const auto& c : report.comparisons) {
    Json item{{"name", c.name}, {"estimate", c.estimate}, {"std_error", c.std_error}, {"sigma", c.sigma}};
    item["reference"] = c.reference ? Json(*c.reference) : Json(nullptr);
    item["reference_source"] = c.reference_source;
    item["tolerance"] = c.tolerance ? Json(*c.tolerance) : Json(nullptr);
    item["pass"] = c.pass ? Json(*c.pass) : Json(nullptr);
    comparisons.push_back(item);
  }
  Json values = Json::object();
  for (const auto& [name, v] : report.values) values[name] = v;
  Json series = Json::object();
  for (const auto& [name, v] : report.series) series[name] = v;
  return Json{{"experiment", report.experiment}, {"model", report.model},     {"reps", report.reps},
              {"seed", report.seed},             {"comparisons", comparisons}, {"values", values},
              {"series", series},                {"notes", report.notes},     {"pass", report.pass}};
}

Json to_json(const Estimate& estimate) {
  return Json{{"estimate", estimate.estimate}, {"std_error", estimate.std_error}, {"reps", estimate.reps}};
}

Json make_document(const std::string& command, Json config, Json results, Json checks,
                   std::optional<double> seconds) {
  Json doc{{"command", command}, {"config", std::move(config)}, {"results", std::move(results)},
           {"checks", std::move(checks)}};
  doc["timing"] = seconds ? Json{{"seconds", *seconds}} : Json(nullptr);
  return doc;
}

namespace {

std::string format_float(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep floats recognizable as floats.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void dump(const Json& v, int indent, int depth, std::string& out) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump(item, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      out += format_float(v.get<double>());
      return;
    default:
      out += v.dump();
  }
}

void flatten(const Json& v, const std::string& path, std::ostringstream& os) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), os);
  } else if (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array())) {
    for (std::size_t k = 0; k < v.size(); ++k) flatten(v[k], path + "[" + std::to_string(k) + "]", os);
  } else {
    std::string text;
    dump(v, -1, 0, text);
    os << path << ": " << text << '\n';
  }
}

}  // namespace

std::string dump_canonical(const Json& value, int indent) {
  std::string out;
  dump(value, indent, 0, out);
  out += '\n';
  return out;
}

std::string render_text(const Json& value) {
  std::ostringstream os;
  flatten(value, "", os);
  return os.str();
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace xicoal
