#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sillopt/design_space.hpp"
#include "sillopt/objective.hpp"
#include "sillopt/oracle.hpp"

namespace sill::cli {

inline constexpr int kResultFormatVersion = 1;

/// One optimizer outcome, validated on the oracle.
struct MethodResult {
  std::string method;  // ga | netinv | rl | rl-coupled
  std::string label;   // table row name
  DesignSpace space;
  TargetSpec target;
  ScalingReference scaling;
  std::uint64_t seed = 0;
  ThicknessVector design;
  std::optional<ObjectiveTriple> predicted;  // backend's own estimate
  ObjectiveTriple validated;                 // oracle evaluation of `design`
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
};

nlohmann::ordered_json to_json_value(const MethodResult& r);
MethodResult result_from_json(const nlohmann::json& j);
MethodResult load_result(const std::filesystem::path& path);

struct ComparisonRow {
  std::string method;
  ThicknessVector thickness;
  double total_energy = 0.0;
  double mass = 0.0;
  double objective = 0.0;
  std::optional<double> duration_s;  // reported on stdout only
};

/// Totals and O are recomputed from the validated triple.
ComparisonRow make_row(const MethodResult& r);

/// Throws std::runtime_error when the results disagree on the design space.
std::vector<ComparisonRow> compare(const std::vector<MethodResult>& results);

/// "1.7-2.0-2.4": shortest text with at least one decimal.
std::string format_thickness(const ThicknessVector& t);
std::string markdown_table(const std::vector<ComparisonRow>& rows);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace sill::cli
