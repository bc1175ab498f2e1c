// Command-line front end: run, compare, validate.

#include <iostream>

#include <CLI11.hpp>

#include "morphsurf/cli.hpp"

namespace cli = morphsurf::cli;

int main(int argc, char** argv)
{
  CLI::App app{"Simulate objects conveyed by a reconfigurable actuator surface"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run one scenario; writes trace.csv and metrics.json");
  run->add_option("scenario", scenario, "Scenario JSON file")->required();
  run->add_option("-o,--out", out_dir, "Output directory")->required();

  std::string modes = "wave,distributed,funnel";
  std::string seeds = "1";
  auto* compare = app.add_subcommand("compare", "Run several controllers over several seeds");
  compare->add_option("scenario", scenario, "Scenario JSON file")->required();
  compare->add_option("--modes", modes, "Comma-separated controller modes")->capture_default_str();
  compare->add_option("--seeds", seeds, "Seed range a..b or comma list")->capture_default_str();
  compare->add_option("-o,--out", out_dir, "Output directory")->required();

  std::string input;
  std::string geometry;
  cli::ValidateOptions options;
  auto* validate = app.add_subcommand("validate", "Check a height grid, trace, or scenario against the surface constraints");
  validate->add_option("path", input, "Grid CSV, trace CSV, or scenario JSON")->required();
  validate->add_option("--scenario", geometry, "Scenario supplying W, L, l");
  validate->add_option("--tol", options.tol, "Height tolerance, m")->capture_default_str();
  validate->add_option("--tol-angle", options.tol_angle, "Angle tolerance, rad")->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    // CLI11 reports --help as success; every other parse failure is invalid input.
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_invalid;
  }

  if (run->parsed())
    return cli::cmd_run(scenario, out_dir, std::cout, std::cerr);

  if (compare->parsed())
  {
    try
    {
      return cli::cmd_compare(scenario, cli::parse_modes(modes), cli::parse_seeds(seeds), out_dir, std::cout,
                              std::cerr);
    }
    catch (const std::exception& e)
    {
      std::cerr << "error: " << e.what() << '\n';
      return cli::exit_invalid;
    }
  }

  if (!geometry.empty())
    options.scenario = geometry;
  return cli::cmd_validate(input, options, std::cout, std::cerr);
}
