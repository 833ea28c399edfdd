#pragma once

#include "bending.hpp"
#include "scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hyperbend {

struct RunOptions {
  std::string out_dir = ".";
  int jobs = 1;
  std::uint64_t seed = 0;
};

// Named metrics with pass/fail checks against per-pipeline tolerance overrides.
// Overrides are looked up by full metric name, then by the part after the last '/'.
class CheckSet {
 public:
  explicit CheckSet(nlohmann::json tolerances = nlohmann::json::object()) : tol_(std::move(tolerances)) {}

  void below(const std::string& name, double value, double default_tol);
  void above(const std::string& name, double value, double default_tol);
  void equal(const std::string& name, long long value, long long expected);
  void require(const std::string& name, bool ok);
  void record(const std::string& name, double value) { metrics_[name] = value; }
  void merge(const CheckSet& other);

  bool passed() const { return passed_; }
  const nlohmann::json& metrics() const { return metrics_; }
  const nlohmann::json& checks() const { return checks_; }

 private:
  double tolerance(const std::string& name, double fallback) const;
  void add(const std::string& name, double value, const char* op, double tol, bool ok);

  nlohmann::json tol_;
  nlohmann::json metrics_ = nlohmann::json::object();
  nlohmann::json checks_ = nlohmann::json::array();
  bool passed_ = true;
};

struct PipelineContext {
  const Scenario& scenario;
  ChartPtr chart;
  const RunOptions& options;
  int index = 0;
  std::string file_tag;  // output file stem suffix, empty for the first pipeline of a type
};

// Result object: type, status, metrics, checks, files, plus pipeline-specific details.
nlohmann::json run_pipeline(const PipelineContext& ctx, const PipelineConfig& cfg);

std::vector<Vec> grid_from_json(const nlohmann::json& grid, const ChartImmersion& chart);

// Index-ordered results computed by up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

}  // namespace hyperbend
