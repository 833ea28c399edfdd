#include "hyperbend/hyperbend.h"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

int fail_with(hb_status status) {
  std::cerr << "hyperbend: " << hb_status_name(status) << ": " << hb_last_error() << "\n";
  return 1;
}

int cmd_list() {
  for (int i = 0; i < hb_scenario_count(); ++i) {
    const char* name = nullptr;
    if (const hb_status st = hb_scenario_name(i, &name); st != HB_OK) return fail_with(st);
    std::cout << name << "\n";
  }
  return 0;
}

int cmd_describe(const std::string& name) {
  size_t needed = 0;
  hb_status st = hb_scenario_describe(name.c_str(), nullptr, 0, &needed);
  if (st != HB_OK && st != HB_ERR_BUFFER_TOO_SMALL) return fail_with(st);
  std::vector<char> buf(needed);
  st = hb_scenario_describe(name.c_str(), buf.data(), buf.size(), &needed);
  if (st != HB_OK) return fail_with(st);
  std::cout << buf.data();
  return 0;
}

int cmd_run(const std::string& scenario, const std::string& out, int jobs, std::uint64_t seed) {
  hb_run_options opts{out.c_str(), jobs, seed};
  int code = 1;
  if (const hb_status st = hb_run_scenario(scenario.c_str(), &opts, &code); st != HB_OK) return fail_with(st);
  if (code == 1) std::cerr << "hyperbend: " << hb_last_error() << "\n";
  if (code == 2) std::cerr << "hyperbend: tolerance failure, see report.json\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infinitesimal bending toolkit for Euclidean hypersurfaces"};
  app.set_version_flag("--version", std::string(hb_version()));
  app.require_subcommand(1);

  std::string scenario, out = ".", name;
  int jobs = 1;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run the pipelines of a scenario file or built-in name");
  run->add_option("scenario", scenario, "Scenario JSON path or built-in name")->required();
  run->add_option("--out", out, "Output directory (HYPERBEND_OUT overrides)");
  run->add_option("--jobs", jobs, "Worker cap")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Seed for randomized steps");
  app.add_subcommand("list", "List built-in scenarios");
  auto* describe = app.add_subcommand("describe", "Print a built-in scenario");
  describe->add_option("name", name, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (app.got_subcommand("list")) return cmd_list();
  if (app.got_subcommand("describe")) return cmd_describe(name);
  return cmd_run(scenario, out, jobs, seed);
}
