#ifndef ENBCDS_SCENARIO_HPP
#define ENBCDS_SCENARIO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "enbcds/model.hpp"
#include "enbcds/sensitivity.hpp"

namespace enbcds {

struct ScenarioMetadata {
  std::string title;
  std::string notes;
  bool operator==(const ScenarioMetadata&) const = default;
};

// Scenario document, schema version 1 (see docs/schema.md).
struct ScenarioFile {
  int schema_version = 1;
  ScenarioMetadata metadata;
  Portfolio portfolio;
  std::vector<UncertainParam> uncertainty;
  // Unknown fields skipped in lenient mode. Not part of the document.
  std::vector<std::string> warnings;

  bool operator==(const ScenarioFile& o) const {
    return schema_version == o.schema_version && metadata == o.metadata &&
           portfolio == o.portfolio && uncertainty == o.uncertainty;
  }
};

struct ParseOptions {
  // Unknown fields become warnings instead of a SchemaError.
  bool lenient = false;
  // Run validate_portfolio and check uncertainty targets after parsing.
  bool validate = true;
};

// Parses and validates a scenario. Throws Error with kind kSyntaxError
// (message carries line and column), kSchemaError (path of the offending
// field) or kValidationError (every model violation).
ScenarioFile parse_scenario(std::string_view text, const ParseOptions& options = {});

ScenarioFile load_scenario(const std::filesystem::path& path, const ParseOptions& options = {});

// Pretty-printed JSON; every field written explicitly, numbers in shortest
// round-trip form.
std::string serialize_scenario(const ScenarioFile& scenario);

}  // namespace enbcds

#endif  // ENBCDS_SCENARIO_HPP
