#include "report.hpp"

#include "errors.hpp"
#include "version.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

namespace hyperbend {

using nlohmann::json;

namespace {

void escape(const std::string& s, std::string& out) {
  out += '"';
  for (const unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void emit(const json& j, int indent, std::string& out) {
  const std::string pad(static_cast<size_t>(indent) + 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        escape(it.key(), out);
        out += ": ";
        emit(it.value(), indent + 2, out);
      }
      out += "\n" + std::string(static_cast<size_t>(indent), ' ') + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(j[i], indent + 2, out);
      }
      out += "\n" + std::string(static_cast<size_t>(indent), ' ') + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    case json::value_t::string:
      escape(j.get<std::string>(), out);
      return;
    default:
      out += j.dump();
  }
}

json error_json(const Error& e) {
  json out = {{"code", error_code_name(e.code())}, {"module", e.module()}, {"message", e.detail()}};
  if (!e.point().empty()) out["point"] = e.point();
  return out;
}

void write_report(RunResult& res, const std::string& dir) {
  std::filesystem::create_directories(dir);
  res.report_path = (std::filesystem::path(dir) / "report.json").string();
  std::ofstream out(res.report_path, std::ios::binary);
  if (!out) fail(ErrorCode::PipelineError, "cli", "cannot write " + res.report_path);
  out << dump_report_json(res.report);
}

std::string resolve_out(const RunOptions& options) {
  const char* env = std::getenv("HYPERBEND_OUT");
  return env && *env ? std::string(env) : options.out_dir;
}

}  // namespace

std::string dump_report_json(const json& j) {
  std::string out;
  emit(j, 0, out);
  out += "\n";
  return out;
}

json strip_timing(json report) {
  report.erase("timing");
  return report;
}

RunResult run_scenario(const Scenario& sc, RunOptions options) {
  options.out_dir = resolve_out(options);
  std::filesystem::create_directories(options.out_dir);
  RunResult res;
  json& rep = res.report;
  rep["schema"] = "hyperbend-report/v1";
  rep["tool_version"] = kVersion;
  rep["scenario"] = sc.name;
  rep["kind"] = sc.kind;
  rep["seed"] = options.seed;
  rep["pipelines"] = json::array();
  json timing = {{"jobs", options.jobs}, {"pipelines", json::array()}};
  const auto t_start = std::chrono::steady_clock::now();

  std::map<std::string, int> seen;
  bool all_pass = true;
  try {
    const ChartPtr chart = build_chart(sc);
    for (size_t i = 0; i < sc.pipelines.size(); ++i) {
      const auto& cfg = sc.pipelines[i];
      const int nth = seen[cfg.type]++;
      PipelineContext ctx{sc, chart, options, static_cast<int>(i), nth == 0 ? "" : "-" + std::to_string(nth + 1)};
      const auto t0 = std::chrono::steady_clock::now();
      json result = run_pipeline(ctx, cfg);
      timing["pipelines"].push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      all_pass = all_pass && result["status"] == "pass";
      rep["pipelines"].push_back(std::move(result));
    }
    rep["status"] = all_pass ? "pass" : "fail";
    res.exit_code = all_pass ? 0 : 2;
  } catch (const Error& e) {
    rep["status"] = "error";
    rep["error"] = error_json(e);
    res.exit_code = 1;
  } catch (const std::exception& e) {
    rep["status"] = "error";
    rep["error"] = {{"code", "PipelineError"}, {"module", "cli"}, {"message", e.what()}};
    res.exit_code = 1;
  }
  rep["exit_code"] = res.exit_code;
  timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  rep["timing"] = timing;
  write_report(res, options.out_dir);
  return res;
}

RunResult run_scenario(const std::string& path_or_name, RunOptions options) {
  try {
    return run_scenario(load_scenario(path_or_name), options);
  } catch (const Error& e) {
    RunResult res;
    res.report = {{"schema", "hyperbend-report/v1"},
                  {"tool_version", kVersion},
                  {"scenario", path_or_name},
                  {"status", "error"},
                  {"error", error_json(e)},
                  {"exit_code", 1}};
    res.exit_code = 1;
    options.out_dir = resolve_out(options);
    write_report(res, options.out_dir);
    return res;
  }
}

}  // namespace hyperbend
