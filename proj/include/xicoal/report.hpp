#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"
#include "xicoal/chains.hpp"
#include "xicoal/duality.hpp"

namespace xicoal {

using Json = nlohmann::json;

/// "inf" for kInfinity, the number otherwise.
Json state_json(int state);

Json to_json(const CheckReport& report);
Json to_json(const ExperimentReport& report);
Json to_json(const Estimate& estimate);

/// Top-level document {command, config, results, checks, timing}.
Json make_document(const std::string& command, Json config, Json results, Json checks,
                   std::optional<double> seconds = std::nullopt);

/// Canonical JSON: keys sorted, floats with 17 significant digits, non-finite
/// floats as null. Identical input gives byte-identical output.
std::string dump_canonical(const Json& value, int indent = 2);

/// Flat "path: value" rendering for terminals.
std::string render_text(const Json& value);

/// Quotes a CSV field when needed.
std::string csv_field(const std::string& text);

}  // namespace xicoal
