#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "morphsurf/simulation.hpp"

namespace morphsurf {

/// Malformed scenario, trace, or grid file. The message names the key or line.
class FormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/**
 * Scenario documents are JSON objects with the keys
 *
 *   surface   {n, m, W, L, l, ref: [I, J]}
 *   physics   {g, b, tau, dt}
 *   control   {mode, a, b, rate, axis_switching, gains {kx, ky, mx, my, kvx, kvy, target: [x, y]}}
 *   objects   [{x, y, vx, vy, mass}]      or   objects_random {count, seed, mass}
 *   t_max
 *   reference_schedule [{t, ref: [I, J]}]
 *   description (free text, ignored)
 *
 * All values are SI. Unknown keys are rejected.
 */
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const Scenario& sc);

/// CSV trace: t, obj<k>.{x,y,vx,vy}, dz1[I], dz2[J], za_i[Ia], za_j[Ja].
void write_trace(std::ostream& out, const SimTrace& tr);
SimTrace read_trace(std::istream& in);

nlohmann::json metrics_to_json(const RunMetrics& m, const Scenario& sc);

/// Cell metrics carried by a raw height grid file.
struct GridGeometry
{
  double W{1.0};
  double L{1.0};
  double l{1.0};
};

/**
 * Raw height grid: an optional `# W=.. L=.. l=..` line, then m + 1 CSV rows
 * (Ja = 1 first) of n + 1 heights each.
 */
struct GridFile
{
  HeightField heights;
  std::optional<GridGeometry> geometry;
};

GridFile read_grid(std::istream& in);
void write_grid(std::ostream& out, const HeightField& h, const GridGeometry& geometry);

/// Formats a double with enough digits to round-trip exactly.
std::string format_number(double v);

}  // namespace morphsurf
