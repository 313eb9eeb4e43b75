#ifndef ENBCDS_OUTPUT_HPP
#define ENBCDS_OUTPUT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "enbcds/model.hpp"
#include "enbcds/net_benefit.hpp"
#include "enbcds/optimize.hpp"
#include "enbcds/sensitivity.hpp"

namespace enbcds {

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

enum class CurveFormat { kCsv, kSvg };

// CSV: header `s,enbcds`, one row per sample, then a `# s_star,<value>` row.
// SVG: standalone SVG 1.1 line plot with the peak marked and, when the curve
// carries one, the actual spend. Throws Error(kEmptyCurve) below 2 samples.
std::string emit_curve(const EnbcdsCurve& curve, CurveFormat format);

// Reads CSV produced by emit_curve (RFC 4180 fields). Throws
// Error(kSyntaxError).
EnbcdsCurve parse_curve_csv(std::string_view text);

// Splits RFC 4180 CSV into records of fields.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view text);

struct GdfComparison {
  std::string id;
  std::string name;
  bool mandatory = false;
  std::optional<Money> actual_spend;
  std::optional<Money> value_at_actual;
  std::optional<double> marginal_at_actual;
  Money s_star = 0.0;
  Money value_at_star = 0.0;
  Money allocated = 0.0;
  std::optional<Money> value_at_allocated;  // empty when dropped
  bool dropped = false;
  std::string status;
  std::string recommendation;
};

struct ComparisonReport {
  std::string title;
  CybMode mode = CybMode::kAdditive;
  std::vector<GdfComparison> rows;
  AllocationResult allocation;
  std::vector<std::string> advice;
};

// Per-GDF actual vs optimal spend, values at each, drop status and the
// reallocation the budget allocation implies. Curves of coupled GDFs are
// evaluated with every other GDF at its actual spend.
ComparisonReport build_report(const Portfolio& p, const AllocationOptions& options = {},
                              std::string title = {});

std::string emit_report(const ComparisonReport& report);

nlohmann::ordered_json to_json(const ComparisonReport& report);
nlohmann::ordered_json to_json(const AllocationResult& result);
nlohmann::ordered_json to_json(const SensitivityReport& report);
nlohmann::ordered_json to_json(const EnbcdsCurve& curve);
nlohmann::ordered_json to_json(const ValidationReport& report);

std::string emit_allocation(const AllocationResult& result);
std::string emit_sensitivity(const SensitivityReport& report);

}  // namespace enbcds

#endif  // ENBCDS_OUTPUT_HPP
