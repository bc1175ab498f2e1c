#include "morphsurf/io.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace morphsurf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
  throw FormatError(path.empty() ? what : path + ": " + what);
}

std::string join(const std::string& parent, const std::string& key)
{
  return parent.empty() ? key : parent + "." + key;
}

void require_object(const json& j, const std::string& path)
{
  if (!j.is_object())
    fail(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> known)
{
  for (auto it = j.begin(); it != j.end(); ++it)
  {
    bool ok = false;
    for (const char* k : known)
      ok = ok || it.key() == k;
    if (!ok)
      fail(join(path, it.key()), "unknown key");
  }
}

double number(const json& j, const std::string& path)
{
  if (!j.is_number())
    fail(path, "expected a number");
  return j.get<double>();
}

double number_or(const json& parent, const char* key, const std::string& path, double fallback)
{
  return parent.contains(key) ? number(parent.at(key), join(path, key)) : fallback;
}

double required_number(const json& parent, const char* key, const std::string& path)
{
  if (!parent.contains(key))
    fail(join(path, key), "missing required key");
  return number(parent.at(key), join(path, key));
}

int integer(const json& j, const std::string& path)
{
  if (!j.is_number_integer())
    fail(path, "expected an integer");
  return j.get<int>();
}

int required_integer(const json& parent, const char* key, const std::string& path)
{
  if (!parent.contains(key))
    fail(join(path, key), "missing required key");
  return integer(parent.at(key), join(path, key));
}

CellIndex cell_pair(const json& j, const std::string& path)
{
  if (!j.is_array() || j.size() != 2)
    fail(path, "expected [column, row]");
  return {integer(j[0], path + "[0]"), integer(j[1], path + "[1]")};
}

SurfaceConfig parse_surface(const json& j)
{
  const std::string path = "surface";
  require_object(j, path);
  reject_unknown(j, path, {"n", "m", "W", "L", "l", "ref"});
  SurfaceConfig cfg;
  cfg.n = required_integer(j, "n", path);
  cfg.m = required_integer(j, "m", path);
  cfg.W = required_number(j, "W", path);
  cfg.L = required_number(j, "L", path);
  cfg.l = required_number(j, "l", path);
  if (!j.contains("ref"))
    fail("surface.ref", "missing required key");
  cfg.ref = cell_pair(j.at("ref"), "surface.ref");
  return cfg;
}

PhysicsParams parse_physics(const json& j)
{
  const std::string path = "physics";
  require_object(j, path);
  reject_unknown(j, path, {"g", "b", "tau", "dt"});
  PhysicsParams p;
  p.g = number_or(j, "g", path, p.g);
  p.b = required_number(j, "b", path);
  p.tau = number_or(j, "tau", path, p.tau);
  p.dt = number_or(j, "dt", path, p.dt);
  return p;
}

void parse_gains(const json& j, ControlParams& c)
{
  const std::string path = "control.gains";
  require_object(j, path);
  reject_unknown(j, path, {"kx", "ky", "mx", "my", "kvx", "kvy", "target"});
  c.gains.kx = number_or(j, "kx", path, 0.0);
  c.gains.ky = number_or(j, "ky", path, 0.0);
  if (j.contains("mx"))
    c.gains.mx = number(j.at("mx"), path + ".mx");
  if (j.contains("my"))
    c.gains.my = number(j.at("my"), path + ".my");
  c.gains.kvx = number_or(j, "kvx", path, 0.0);
  c.gains.kvy = number_or(j, "kvy", path, 0.0);
  if (j.contains("target"))
  {
    const json& t = j.at("target");
    if (!t.is_array() || t.size() != 2)
      fail(path + ".target", "expected [x, y]");
    c.target_x = number(t[0], path + ".target[0]");
    c.target_y = number(t[1], path + ".target[1]");
  }
}

ControlParams parse_control(const json& j, double& rate)
{
  const std::string path = "control";
  require_object(j, path);
  reject_unknown(j, path, {"mode", "a", "b", "rate", "gains", "axis_switching"});
  ControlParams c;
  if (!j.contains("mode") || !j.at("mode").is_string())
    fail("control.mode", "expected one of distributed, wave, funnel, single_cell");
  try
  {
    c.mode = parse_control_mode(j.at("mode").get<std::string>());
  }
  catch (const std::invalid_argument& e)
  {
    fail("control.mode", e.what());
  }
  c.a = number_or(j, "a", path, c.a);
  c.b = number_or(j, "b", path, c.b);
  rate = number_or(j, "rate", path, rate);
  if (j.contains("axis_switching"))
  {
    if (!j.at("axis_switching").is_boolean())
      fail("control.axis_switching", "expected true or false");
    c.axis_switching = j.at("axis_switching").get<bool>();
  }
  if (j.contains("gains"))
    parse_gains(j.at("gains"), c);
  return c;
}

ObjectState parse_object(const json& j, const std::string& path)
{
  require_object(j, path);
  reject_unknown(j, path, {"x", "y", "vx", "vy", "mass"});
  ObjectState o;
  o.x = required_number(j, "x", path);
  o.y = required_number(j, "y", path);
  o.vx = number_or(j, "vx", path, 0.0);
  o.vy = number_or(j, "vy", path, 0.0);
  o.mass = number_or(j, "mass", path, 1.0);
  return o;
}

json cell_json(CellIndex c)
{
  return json::array({c.col, c.row});
}

}  // namespace

Scenario parse_scenario(const json& doc)
{
  require_object(doc, "scenario");
  reject_unknown(doc, "",
                 {"description", "surface", "physics", "control", "objects", "objects_random", "t_max",
                  "reference_schedule"});
  for (const char* key : {"surface", "physics", "control", "t_max"})
    if (!doc.contains(key))
      fail(key, "missing required key");

  Scenario sc;
  sc.cfg = parse_surface(doc.at("surface"));
  sc.physics = parse_physics(doc.at("physics"));
  sc.control = parse_control(doc.at("control"), sc.control_rate);
  sc.t_max = number(doc.at("t_max"), "t_max");

  if (doc.contains("objects"))
  {
    const json& list = doc.at("objects");
    if (!list.is_array())
      fail("objects", "expected an array");
    for (std::size_t k = 0; k < list.size(); ++k)
      sc.objects.push_back(parse_object(list[k], "objects[" + std::to_string(k) + "]"));
  }
  if (doc.contains("objects_random"))
  {
    const json& r = doc.at("objects_random");
    const std::string path = "objects_random";
    require_object(r, path);
    reject_unknown(r, path, {"count", "seed", "mass"});
    RandomObjects random;
    random.count = required_integer(r, "count", path);
    random.mass = number_or(r, "mass", path, 1.0);
    if (r.contains("seed"))
    {
      const json& seed = r.at("seed");
      if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
        fail("objects_random.seed", "expected an unsigned integer");
      sc.seed = r.at("seed").get<std::uint64_t>();
    }
    sc.random_objects = random;
  }
  if (doc.contains("reference_schedule"))
  {
    const json& list = doc.at("reference_schedule");
    if (!list.is_array())
      fail("reference_schedule", "expected an array");
    for (std::size_t k = 0; k < list.size(); ++k)
    {
      const std::string path = "reference_schedule[" + std::to_string(k) + "]";
      require_object(list[k], path);
      reject_unknown(list[k], path, {"t", "ref"});
      if (!list[k].contains("ref"))
        fail(path + ".ref", "missing required key");
      sc.reference_schedule.push_back({required_number(list[k], "t", path), cell_pair(list[k].at("ref"), path + ".ref")});
    }
  }

  try
  {
    sc.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw FormatError(std::string("invalid scenario: ") + e.what());
  }
  return sc;
}

Scenario parse_scenario_text(const std::string& text)
{
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try
  {
    return parse_scenario_text(text.str());
  }
  catch (const FormatError& e)
  {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json scenario_to_json(const Scenario& sc)
{
  json doc;
  doc["surface"] = {{"n", sc.cfg.n}, {"m", sc.cfg.m}, {"W", sc.cfg.W},
                    {"L", sc.cfg.L}, {"l", sc.cfg.l}, {"ref", cell_json(sc.cfg.ref)}};
  doc["physics"] = {{"g", sc.physics.g}, {"b", sc.physics.b}, {"tau", sc.physics.tau}, {"dt", sc.physics.dt}};

  json control = {{"mode", std::string(to_string(sc.control.mode))},
                  {"a", sc.control.a},
                  {"b", sc.control.b},
                  {"rate", sc.control_rate},
                  {"axis_switching", sc.control.axis_switching}};
  if (sc.control.mode == ControlMode::single_cell)
  {
    json gains = {{"kx", sc.control.gains.kx},
                  {"ky", sc.control.gains.ky},
                  {"kvx", sc.control.gains.kvx},
                  {"kvy", sc.control.gains.kvy}};
    if (sc.control.gains.mx)
      gains["mx"] = *sc.control.gains.mx;
    if (sc.control.gains.my)
      gains["my"] = *sc.control.gains.my;
    if (sc.control.target_x && sc.control.target_y)
      gains["target"] = json::array({*sc.control.target_x, *sc.control.target_y});
    control["gains"] = gains;
  }
  doc["control"] = control;

  if (sc.random_objects)
  {
    doc["objects_random"] = {{"count", sc.random_objects->count},
                             {"seed", sc.seed},
                             {"mass", sc.random_objects->mass}};
  }
  else
  {
    json list = json::array();
    for (const ObjectState& o : sc.objects)
      list.push_back({{"x", o.x}, {"y", o.y}, {"vx", o.vx}, {"vy", o.vy}, {"mass", o.mass}});
    doc["objects"] = list;
  }
  doc["t_max"] = sc.t_max;
  if (!sc.reference_schedule.empty())
  {
    json list = json::array();
    for (const ReferenceChange& c : sc.reference_schedule)
      list.push_back({{"t", c.t}, {"ref", cell_json(c.ref)}});
    doc["reference_schedule"] = list;
  }
  return doc;
}

std::string format_number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace(std::ostream& out, const SimTrace& tr)
{
  const std::size_t count = tr.rows.empty() ? 0 : tr.rows.front().objects.size();
  out << "t";
  for (std::size_t k = 1; k <= count; ++k)
    out << ",obj" << k << ".x,obj" << k << ".y,obj" << k << ".vx,obj" << k << ".vy";
  for (int i = 1; i <= tr.n; ++i)
    out << ",dz1[" << i << "]";
  for (int j = 1; j <= tr.m; ++j)
    out << ",dz2[" << j << "]";
  for (int i = 1; i <= tr.n + 1; ++i)
    out << ",za_i[" << i << "]";
  for (int j = 1; j <= tr.m + 1; ++j)
    out << ",za_j[" << j << "]";
  out << '\n';

  for (const TraceRow& row : tr.rows)
  {
    out << format_number(row.t);
    for (const ObjectState& o : row.objects)
      out << ',' << format_number(o.x) << ',' << format_number(o.y) << ',' << format_number(o.vx) << ','
          << format_number(o.vy);
    for (double v : row.input.dz1)
      out << ',' << format_number(v);
    for (double v : row.input.dz2)
      out << ',' << format_number(v);
    for (double v : row.grid.za_i)
      out << ',' << format_number(v);
    for (double v : row.grid.za_j)
      out << ',' << format_number(v);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ','))
    fields.push_back(field);
  if (!line.empty() && line.back() == ',')
    fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line)
{
  try
  {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
      throw std::invalid_argument(text);
    return v;
  }
  catch (const std::exception&)
  {
    throw FormatError("line " + std::to_string(line) + ": not a number: '" + text + "'");
  }
}

int count_prefix(const std::vector<std::string>& header, const std::string& prefix)
{
  int c = 0;
  for (const std::string& h : header)
    if (h.rfind(prefix, 0) == 0)
      ++c;
  return c;
}

}  // namespace

SimTrace read_trace(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("empty trace");
  const std::vector<std::string> header = split_csv(line);
  if (header.empty() || header.front() != "t")
    throw FormatError("line 1: trace header must start with 't'");

  const int count = count_prefix(header, "obj") / 4;
  SimTrace tr;
  tr.n = count_prefix(header, "dz1[");
  tr.m = count_prefix(header, "dz2[");
  const std::size_t expected = 1 + 4 * static_cast<std::size_t>(count) + tr.n + tr.m + (tr.n + 1) + (tr.m + 1);
  if (tr.n < 1 || tr.m < 1 || header.size() != expected ||
      count_prefix(header, "za_i[") != tr.n + 1 || count_prefix(header, "za_j[") != tr.m + 1)
    throw FormatError("line 1: trace header does not match the t/obj/dz1/dz2/za_i/za_j layout");

  std::size_t line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
      continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != expected)
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) + " fields");
    std::size_t c = 0;
    TraceRow row;
    row.t = parse_double(fields[c++], line_no);
    for (int k = 0; k < count; ++k)
    {
      ObjectState o;
      o.x = parse_double(fields[c++], line_no);
      o.y = parse_double(fields[c++], line_no);
      o.vx = parse_double(fields[c++], line_no);
      o.vy = parse_double(fields[c++], line_no);
      row.objects.push_back(o);
    }
    for (int i = 0; i < tr.n; ++i)
      row.input.dz1.push_back(parse_double(fields[c++], line_no));
    for (int j = 0; j < tr.m; ++j)
      row.input.dz2.push_back(parse_double(fields[c++], line_no));
    for (int i = 0; i <= tr.n; ++i)
      row.grid.za_i.push_back(parse_double(fields[c++], line_no));
    for (int j = 0; j <= tr.m; ++j)
      row.grid.za_j.push_back(parse_double(fields[c++], line_no));
    tr.rows.push_back(std::move(row));
  }
  return tr;
}

json metrics_to_json(const RunMetrics& m, const Scenario& sc)
{
  json arrivals = json::array();
  for (const auto& a : m.arrival_times)
    arrivals.push_back(a ? json(*a) : json(nullptr));
  json doc;
  doc["convergence_time"] = m.convergence_time ? json(*m.convergence_time) : json(nullptr);
  doc["converged"] = m.converged();
  doc["t_end"] = m.t_end;
  doc["arrival_times"] = arrivals;
  doc["path_lengths"] = m.path_lengths;
  doc["wall_clock_s"] = m.wall_clock_s;
  doc["settle"] = {{"window", sc.control_period()}, {"speed", sc.settle_speed}};
  doc["scenario"] = scenario_to_json(sc);
  return doc;
}

GridFile read_grid(std::istream& in)
{
  GridFile file;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
      continue;
    if (line.front() == '#')
    {
      GridGeometry g;
      bool any = false;
      std::istringstream s(line.substr(1));
      std::string token;
      while (s >> token)
      {
        const auto eq = token.find('=');
        if (eq == std::string::npos)
          continue;
        const std::string key = token.substr(0, eq);
        const double v = parse_double(token.substr(eq + 1), line_no);
        if (key == "W")
          g.W = v;
        else if (key == "L")
          g.L = v;
        else if (key == "l")
          g.l = v;
        else
          throw FormatError("line " + std::to_string(line_no) + ": unknown grid key '" + key + "'");
        any = true;
      }
      if (any)
        file.geometry = g;
      continue;
    }
    std::vector<double> row;
    for (const std::string& f : split_csv(line))
      row.push_back(parse_double(f, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("line " + std::to_string(line_no) + ": ragged grid row");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2 || rows.front().size() < 2)
    throw FormatError("grid needs at least 2 x 2 actuator heights");

  const int cols = static_cast<int>(rows.front().size());
  const int nrows = static_cast<int>(rows.size());
  file.heights = HeightField(cols, nrows);
  for (int j = 1; j <= nrows; ++j)
    for (int i = 1; i <= cols; ++i)
      file.heights.at({i, j}) = rows[j - 1][i - 1];
  return file;
}

void write_grid(std::ostream& out, const HeightField& h, const GridGeometry& geometry)
{
  out << "# W=" << format_number(geometry.W) << " L=" << format_number(geometry.L)
      << " l=" << format_number(geometry.l) << '\n';
  for (int j = 1; j <= h.rows(); ++j)
  {
    for (int i = 1; i <= h.cols(); ++i)
      out << (i > 1 ? "," : "") << format_number(h.at({i, j}));
    out << '\n';
  }
}

}  // namespace morphsurf
