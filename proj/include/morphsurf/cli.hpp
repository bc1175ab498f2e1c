#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "morphsurf/control.hpp"

namespace morphsurf::cli {

enum ExitCode : int
{
  exit_converged = 0,
  exit_invalid = 1,
  exit_timeout = 2,
};

/// Runs one scenario and writes trace.csv and metrics.json into out_dir.
int cmd_run(const std::filesystem::path& scenario, const std::filesystem::path& out_dir, std::ostream& out,
            std::ostream& err);

/**
 * Runs every (mode, seed) pair. Each seed fixes the initial placement, so the
 * modes see identical objects. Writes metrics_<mode>.json and summary.csv.
 */
int cmd_compare(const std::filesystem::path& scenario, const std::vector<ControlMode>& modes,
                const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir, std::ostream& out,
                std::ostream& err);

struct ValidateOptions
{
  // Geometry source for traces and for grids without a `# W= L= l=` line.
  std::optional<std::filesystem::path> scenario;
  double tol{1e-9};
  double tol_angle{1e-9};
};

/**
 * Checks a raw height grid CSV, a trace CSV (every row), or a scenario file
 * (its t = 0 commanded grid). Exit 0 iff no constraint is violated.
 */
int cmd_validate(const std::filesystem::path& input, const ValidateOptions& options, std::ostream& out,
                 std::ostream& err);

/// "1..20", "3", or "1,4,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// Comma-separated mode names.
std::vector<ControlMode> parse_modes(const std::string& text);

}  // namespace morphsurf::cli
