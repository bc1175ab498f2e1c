#include "morphsurf/cli.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "morphsurf/io.hpp"
#include "morphsurf/simulation.hpp"

namespace morphsurf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f)
    throw std::runtime_error("write failed for " + path.string());
}

std::string optional_number(const std::optional<double>& v)
{
  return v ? format_number(*v) : std::string();
}

// Console output only; files keep full precision.
std::string brief(const std::optional<double>& v)
{
  if (!v)
    return "-";
  std::ostringstream s;
  s << std::setprecision(6) << *v;
  return s.str();
}

void print_report(std::ostream& out, const ConstraintReport& r, const std::string& prefix)
{
  for (const auto& v : r.planarity_violations)
    out << prefix << "planarity cell (" << v.cell.col << "," << v.cell.row << ") residual " << format_number(v.residual)
        << " m\n";
  for (const auto& v : r.pitch_violations)
    out << prefix << "pitch column " << v.column << " spread " << format_number(v.residual) << " rad\n";
  for (const auto& v : r.roll_violations)
    out << prefix << "roll cells (" << v.cell.col << "," << v.cell.row << ")-(" << v.cell.col + 1 << "," << v.cell.row
        << ") residual " << format_number(v.residual) << '\n';
  for (const auto& v : r.bound_violations)
    out << prefix << "bound actuator (" << v.actuator.col << "," << v.actuator.row << ") height "
        << format_number(v.height) << " m\n";
}

std::string first_line(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  return line;
}

int validate_trace(const fs::path& input, const ValidateOptions& options, std::ostream& out)
{
  if (!options.scenario)
    throw FormatError("validating a trace needs --scenario for the cell geometry");
  SurfaceConfig cfg = load_scenario(*options.scenario).cfg;
  std::ifstream in(input);
  const SimTrace tr = read_trace(in);
  if (tr.n != cfg.n || tr.m != cfg.m)
    throw FormatError("trace is S(" + std::to_string(tr.n) + "," + std::to_string(tr.m) + ") but the scenario is S(" +
                      std::to_string(cfg.n) + "," + std::to_string(cfg.m) + ")");
  std::size_t bad_rows = 0;
  for (const TraceRow& row : tr.rows)
  {
    const ConstraintReport r = validate_grid(row.grid, cfg, options.tol, options.tol_angle);
    if (!r.feasible())
    {
      ++bad_rows;
      print_report(out, r, "t=" + format_number(row.t) + " ");
    }
  }
  out << tr.rows.size() << " grids checked, " << bad_rows << " infeasible\n";
  return bad_rows == 0 ? exit_converged : exit_invalid;
}

int validate_raw_grid(const fs::path& input, const ValidateOptions& options, std::ostream& out)
{
  std::ifstream in(input);
  if (!in)
    throw FormatError("cannot open " + input.string());
  const GridFile file = read_grid(in);
  GridGeometry geometry;
  if (file.geometry)
    geometry = *file.geometry;
  else if (options.scenario)
  {
    const SurfaceConfig s = load_scenario(*options.scenario).cfg;
    geometry = {s.W, s.L, s.l};
  }
  else
    throw FormatError("grid has no '# W= L= l=' line; pass --scenario for the cell geometry");

  SurfaceConfig cfg;
  cfg.n = file.heights.cols() - 1;
  cfg.m = file.heights.rows() - 1;
  cfg.W = geometry.W;
  cfg.L = geometry.L;
  cfg.l = geometry.l;
  cfg.ref = {1, 1};
  const ConstraintReport r = validate_grid(file.heights, cfg, options.tol, options.tol_angle);
  print_report(out, r, "");
  out << (r.feasible() ? "feasible" : "infeasible") << " S(" << cfg.n << "," << cfg.m << ") grid\n";
  return r.feasible() ? exit_converged : exit_invalid;
}

int validate_scenario(const fs::path& input, const ValidateOptions& options, std::ostream& out)
{
  const Scenario sc = load_scenario(input);
  Controller controller(sc.control, sc.cfg);
  const std::vector<ObjectState> objects = sc.initial_objects();
  const ActuatorGrid grid = controller.tick(objects).grid;
  const ConstraintReport r = validate_grid(grid, sc.cfg, options.tol, options.tol_angle);
  print_report(out, r, "");
  out << (r.feasible() ? "feasible" : "infeasible") << " initial commanded grid\n";
  return r.feasible() ? exit_converged : exit_invalid;
}

}  // namespace

int cmd_run(const fs::path& scenario, const fs::path& out_dir, std::ostream& out, std::ostream& err)
{
  try
  {
    const Scenario sc = load_scenario(scenario);
    const RunResult result = run(sc);
    fs::create_directories(out_dir);

    std::ostringstream trace;
    write_trace(trace, result.trace);
    write_file(out_dir / "trace.csv", trace.str());
    write_file(out_dir / "metrics.json", metrics_to_json(result.metrics, sc).dump(2) + "\n");

    if (result.metrics.converged())
    {
      out << "converged at t = " << brief(result.metrics.convergence_time) << " s\n";
      return exit_converged;
    }
    out << "not converged by t_max = " << brief(sc.t_max) << " s\n";
    return exit_timeout;
  }
  catch (const std::exception& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_invalid;
  }
}

int cmd_compare(const fs::path& scenario, const std::vector<ControlMode>& modes, const std::vector<std::uint64_t>& seeds,
                const fs::path& out_dir, std::ostream& out, std::ostream& err)
{
  try
  {
    if (modes.empty() || seeds.empty())
      throw std::invalid_argument("compare needs at least one mode and one seed");
    const Scenario base = load_scenario(scenario);

    std::vector<Scenario> jobs;
    for (ControlMode mode : modes)
    {
      for (std::uint64_t seed : seeds)
      {
        Scenario sc = with_seed(base, seed);
        sc.control.mode = mode;
        sc.validate();
        jobs.push_back(std::move(sc));
      }
    }
    const std::vector<BatchEntry> entries = batch(jobs);
    for (std::size_t k = 0; k < entries.size(); ++k)
      if (!entries[k].error.empty())
        throw std::runtime_error(std::string(to_string(jobs[k].control.mode)) + " seed " +
                                 std::to_string(jobs[k].seed) + ": " + entries[k].error);

    fs::create_directories(out_dir);
    std::ostringstream summary;
    summary << "mode,runs,converged,median_s,min_s,max_s\n";
    out << std::left << std::setw(14) << "mode" << std::setw(6) << "runs" << std::setw(11) << "converged"
        << std::setw(10) << "median_s" << std::setw(10) << "min_s" << "max_s\n";
    for (std::size_t mi = 0; mi < modes.size(); ++mi)
    {
      const auto first = entries.begin() + static_cast<std::ptrdiff_t>(mi * seeds.size());
      const std::vector<BatchEntry> slice(first, first + static_cast<std::ptrdiff_t>(seeds.size()));
      const ConvergenceSummary s = summarize(slice);
      const std::string name(to_string(modes[mi]));

      json runs = json::array();
      for (std::size_t si = 0; si < seeds.size(); ++si)
      {
        json entry = metrics_to_json(*slice[si].metrics, jobs[mi * seeds.size() + si]);
        entry["seed"] = seeds[si];
        runs.push_back(std::move(entry));
      }
      json doc = {{"mode", name}, {"runs", runs}};
      doc["summary"] = {{"runs", s.runs},
                        {"converged", s.converged},
                        {"median", s.median ? json(*s.median) : json(nullptr)},
                        {"min", s.min ? json(*s.min) : json(nullptr)},
                        {"max", s.max ? json(*s.max) : json(nullptr)}};
      write_file(out_dir / ("metrics_" + name + ".json"), doc.dump(2) + "\n");

      summary << name << ',' << s.runs << ',' << s.converged << ',' << optional_number(s.median) << ','
              << optional_number(s.min) << ',' << optional_number(s.max) << '\n';
      out << std::setw(14) << name << std::setw(6) << s.runs << std::setw(11) << s.converged << std::setw(10)
          << brief(s.median) << std::setw(10) << brief(s.min) << brief(s.max) << '\n';
    }
    write_file(out_dir / "summary.csv", summary.str());
    return exit_converged;
  }
  catch (const std::exception& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_invalid;
  }
}

int cmd_validate(const fs::path& input, const ValidateOptions& options, std::ostream& out, std::ostream& err)
{
  try
  {
    if (input.extension() == ".json")
      return validate_scenario(input, options, out);
    const std::string head = first_line(input);
    if (head == "t" || head.rfind("t,", 0) == 0)
      return validate_trace(input, options, out);
    return validate_raw_grid(input, options, out);
  }
  catch (const std::exception& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_invalid;
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try
    {
      v = std::stoull(s, &used);
    }
    catch (const std::exception&)
    {
      used = 0;
    }
    if (s.empty() || used != s.size() || s.front() == '-')
      throw std::invalid_argument("bad seed list '" + text + "'");
    return static_cast<std::uint64_t>(v);
  };

  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos)
  {
    const std::uint64_t lo = number(text.substr(0, dots));
    const std::uint64_t hi = number(text.substr(dots + 2));
    if (hi < lo)
      throw std::invalid_argument("empty seed range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; ++s)
      seeds.push_back(s);
    return seeds;
  }
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ','))
    seeds.push_back(number(part));
  if (seeds.empty())
    throw std::invalid_argument("empty seed list");
  return seeds;
}

std::vector<ControlMode> parse_modes(const std::string& text)
{
  std::vector<ControlMode> modes;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ','))
    modes.push_back(parse_control_mode(part));
  if (modes.empty())
    throw std::invalid_argument("empty mode list");
  return modes;
}

}  // namespace morphsurf::cli
