#pragma once

#include "chart.hpp"
#include "functions.hpp"
#include "ruled.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hyperbend {

inline constexpr const char* kScenarioSchema = "hyperbend/v1";

struct PipelineConfig {
  std::string type;  // verify | construct | transport | kernel
  nlohmann::json config;
};

struct Scenario {
  std::string name;
  std::string kind;  // graph_chart | cylinder | ruled_spec | external_chart
  bool theorem_grade = false;
  int n = 0;
  nlohmann::json parameters;
  nlohmann::json claims;
  std::vector<PipelineConfig> pipelines;
  nlohmann::json source;

  int claimed_rank() const;
};

// Throws ParseError with line and column, or ValidationError naming the offending field.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
void validate_scenario(const Scenario& sc);
// A readable file path, otherwise a built-in name.
Scenario load_scenario(const std::string& path_or_name);

ChartPtr build_chart(const Scenario& sc);
RuledSpec ruled_spec_from_json(const nlohmann::json& params);
nlohmann::json ruled_spec_to_json(const RuledSpec& spec);

Box box_from_json(const nlohmann::json& j, int n, const std::string& where);
nlohmann::json box_to_json(const Box& box);

// Built-in registry in stable order.
const std::vector<std::string>& list_scenarios();
const std::string& builtin_scenario_text(const std::string& name);
std::string describe_scenario(const std::string& name);

}  // namespace hyperbend
