#pragma once

#include "pipeline.hpp"
#include "scenario.hpp"

#include <json.hpp>

#include <string>

namespace hyperbend {

// Sorted keys, two-space indent, numbers at 17 significant digits; non-finite numbers become null.
std::string dump_report_json(const nlohmann::json& j);

struct RunResult {
  nlohmann::json report;
  int exit_code = 1;  // 0 all tolerances met, 2 a tolerance failed, 1 error
  std::string report_path;
};

// HYPERBEND_OUT, when set, replaces options.out_dir.
RunResult run_scenario(const Scenario& sc, RunOptions options);
// Loads then runs; parse and validation errors are reported with exit code 1.
RunResult run_scenario(const std::string& path_or_name, RunOptions options);

// Report without the "timing" key, for determinism comparisons.
nlohmann::json strip_timing(nlohmann::json report);

}  // namespace hyperbend
