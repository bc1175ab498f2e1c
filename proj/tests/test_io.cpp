#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "morphsurf/cli.hpp"
#include "morphsurf/io.hpp"

using namespace morphsurf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path scenarios = fs::path(MORPHSURF_SOURCE_DIR) / "scenarios";

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("morphsurf_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void dump(const fs::path& p, const std::string& text)
{
  std::ofstream(p, std::ios::binary) << text;
}

json small_doc()
{
  return json::parse(R"({
    "surface": {"n": 2, "m": 2, "W": 1.0, "L": 1.0, "l": 0.5, "ref": [2, 2]},
    "physics": {"g": 1.0, "b": 0.5},
    "control": {"mode": "wave", "a": 0.5, "b": 0.5},
    "objects": [{"x": 0.2, "y": 0.3}, {"x": 1.9, "y": 0.1, "vx": 0.1}],
    "t_max": 100
  })");
}

std::string error_of(const json& doc)
{
  try
  {
    parse_scenario(doc);
  }
  catch (const FormatError& e)
  {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("io")
{
  TEST_CASE("scenario parsing and echo")
  {
    const Scenario sc = parse_scenario(small_doc());
    CHECK(sc.cfg.n == 2);
    CHECK(sc.cfg.ref == CellIndex{2, 2});
    CHECK(sc.physics.dt == 1e-3);
    CHECK(sc.control.mode == ControlMode::wave);
    REQUIRE(sc.objects.size() == 2);
    CHECK(sc.objects[1].vx == 0.1);
    CHECK(sc.objects[0].mass == 1.0);
    CHECK(sc.control_rate == 10.0);

    const json echo = scenario_to_json(sc);
    CHECK(scenario_to_json(parse_scenario(echo)) == echo);
  }

  TEST_CASE("scenario diagnostics name the key")
  {
    json doc = small_doc();
    doc["surface"]["depth"] = 3;
    CHECK(error_of(doc).find("surface.depth: unknown key") != std::string::npos);

    doc = small_doc();
    doc["extra"] = true;
    CHECK(error_of(doc).find("extra: unknown key") != std::string::npos);

    doc = small_doc();
    doc["objects"][1]["z"] = 0.0;
    CHECK(error_of(doc).find("objects[1].z") != std::string::npos);

    doc = small_doc();
    doc["surface"].erase("W");
    CHECK(error_of(doc).find("surface.W: missing") != std::string::npos);

    doc = small_doc();
    doc["surface"]["n"] = 2.5;
    CHECK(error_of(doc).find("surface.n: expected an integer") != std::string::npos);

    doc = small_doc();
    doc["control"]["b"] = 0.6;
    CHECK(error_of(doc).find("control.a + control.b must equal 1") != std::string::npos);

    doc = small_doc();
    doc["control"]["mode"] = "spiral";
    CHECK(error_of(doc).find("control.mode") != std::string::npos);

    CHECK_THROWS_WITH_AS(parse_scenario_text("{\n  \"surface\": {,\n}"), doctest::Contains("line 2"), FormatError);
  }

  TEST_CASE("random objects and schedules")
  {
    json doc = small_doc();
    doc.erase("objects");
    doc["objects_random"] = {{"count", 5}, {"seed", 9}};
    doc["reference_schedule"] = json::array({{{"t", 0}, {"ref", {1, 1}}}, {{"t", 10}, {"ref", {2, 1}}}});
    const Scenario sc = parse_scenario(doc);
    CHECK(sc.seed == 9);
    CHECK(sc.initial_objects().size() == 5);
    CHECK(sc.final_config().ref == CellIndex{2, 1});
    const json echo = scenario_to_json(sc);
    CHECK(scenario_to_json(parse_scenario(echo)) == echo);

    doc["objects"] = json::array({{{"x", 0.1}, {"y", 0.1}}});
    CHECK(error_of(doc).find("not both") != std::string::npos);
  }

  TEST_CASE("canned scenarios load")
  {
    for (const char* name : {"paper-s5x6.json", "paper-s1x10.json", "uturn.json"})
      CHECK_NOTHROW(load_scenario(scenarios / name));
    const Scenario s56 = load_scenario(scenarios / "paper-s5x6.json");
    CHECK(s56.cfg.n == 5);
    CHECK(s56.cfg.m == 6);
    CHECK(s56.cfg.ref == CellIndex{3, 1});
    CHECK(s56.initial_objects().size() == 20);
    const Scenario track = load_scenario(scenarios / "paper-s1x10.json");
    CHECK(track.objects.size() == 10);
    CHECK(track.cfg.ref == CellIndex{1, 10});
    CHECK_THROWS_AS(load_scenario(scenarios / "missing.json"), FormatError);
  }

  TEST_CASE("trace round trip is exact")
  {
    Scenario sc = parse_scenario(small_doc());
    const RunResult r = run(sc);
    std::stringstream buf;
    write_trace(buf, r.trace);
    const std::string header = buf.str().substr(0, buf.str().find('\n'));
    CHECK(header ==
          "t,obj1.x,obj1.y,obj1.vx,obj1.vy,obj2.x,obj2.y,obj2.vx,obj2.vy,dz1[1],dz1[2],dz2[1],dz2[2],"
          "za_i[1],za_i[2],za_i[3],za_j[1],za_j[2],za_j[3]");

    const SimTrace back = read_trace(buf);
    REQUIRE(back.rows.size() == r.trace.rows.size());
    CHECK(back.n == 2);
    CHECK(back.m == 2);
    for (std::size_t k = 0; k < back.rows.size(); ++k)
    {
      CHECK(back.rows[k].t == r.trace.rows[k].t);
      CHECK(back.rows[k].grid == r.trace.rows[k].grid);
      CHECK(back.rows[k].input.dz1 == r.trace.rows[k].input.dz1);
      for (std::size_t i = 0; i < back.rows[k].objects.size(); ++i)
      {
        CHECK(back.rows[k].objects[i].x == r.trace.rows[k].objects[i].x);
        CHECK(back.rows[k].objects[i].vy == r.trace.rows[k].objects[i].vy);
      }
    }
    CHECK(convergence_time(back, sc.final_config(), sc.control_period(), sc.settle_speed) ==
          r.metrics.convergence_time);
  }

  TEST_CASE("trace reader rejects bad input")
  {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_trace(empty), FormatError);
    std::istringstream wrong("time,x\n1,2\n");
    CHECK_THROWS_AS(read_trace(wrong), FormatError);
    std::istringstream ragged("t,dz1[1],dz2[1],za_i[1],za_i[2],za_j[1],za_j[2]\n0,0,0,0,0,0\n");
    CHECK_THROWS_WITH_AS(read_trace(ragged), doctest::Contains("line 2"), FormatError);
    std::istringstream text("t,dz1[1],dz2[1],za_i[1],za_i[2],za_j[1],za_j[2]\n0,0,0,0,zero,0,0\n");
    CHECK_THROWS_AS(read_trace(text), FormatError);
  }

  TEST_CASE("numbers round-trip")
  {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k)
    {
      const double v = d(rng) / 3.0;
      CHECK(std::stod(format_number(v)) == v);
    }
  }

  TEST_CASE("grid files")
  {
    HeightField h(3, 2);
    h.at({1, 1}) = 0.25;
    h.at({3, 2}) = 1.0 / 3.0;
    std::stringstream buf;
    write_grid(buf, h, {2.0, 1.5, 1.0});
    const GridFile back = read_grid(buf);
    REQUIRE(back.geometry.has_value());
    CHECK(back.geometry->W == 2.0);
    CHECK(back.geometry->L == 1.5);
    CHECK(back.heights.cols() == 3);
    CHECK(back.heights.rows() == 2);
    CHECK(back.heights.at({3, 2}) == 1.0 / 3.0);

    std::istringstream ragged("0,0\n0\n");
    CHECK_THROWS_AS(read_grid(ragged), FormatError);
    std::istringstream tiny("0,0\n");
    CHECK_THROWS_AS(read_grid(tiny), FormatError);
  }
}

TEST_SUITE("cli")
{
  TEST_CASE("seed and mode lists")
  {
    CHECK(cli::parse_seeds("1..4") == std::vector<std::uint64_t>{1, 2, 3, 4});
    CHECK(cli::parse_seeds("7") == std::vector<std::uint64_t>{7});
    CHECK(cli::parse_seeds("3,1,9") == std::vector<std::uint64_t>{3, 1, 9});
    CHECK_THROWS_AS(cli::parse_seeds("5..2"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_seeds("a"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_seeds("-1"), std::invalid_argument);
    CHECK(cli::parse_modes("wave,funnel") == std::vector<ControlMode>{ControlMode::wave, ControlMode::funnel});
    CHECK_THROWS_AS(cli::parse_modes("wave,zigzag"), std::invalid_argument);
  }

  TEST_CASE("run writes both files and reports convergence")
  {
    const fs::path out = scratch("run");
    std::ostringstream o, e;
    CHECK(cli::cmd_run(scenarios / "paper-s1x10.json", out, o, e) == cli::exit_converged);
    CHECK(fs::exists(out / "trace.csv"));
    CHECK(fs::exists(out / "metrics.json"));
    const json m = json::parse(slurp(out / "metrics.json"));
    CHECK(m["converged"] == true);
    CHECK(m["arrival_times"].size() == 10);
    CHECK(m["scenario"]["surface"]["m"] == 10);

    // The persisted trace reproduces the reported convergence time exactly.
    const Scenario sc = load_scenario(scenarios / "paper-s1x10.json");
    std::ifstream in(out / "trace.csv");
    const SimTrace tr = read_trace(in);
    const auto t = convergence_time(tr, sc.final_config(), sc.control_period(), sc.settle_speed);
    REQUIRE(t.has_value());
    CHECK(*t == m["convergence_time"].get<double>());
  }

  TEST_CASE("run exit codes for bad input and timeouts")
  {
    const fs::path dir = scratch("codes");
    json bad = small_doc();
    bad["control"]["a"] = 0.7;
    dump(dir / "bad.json", bad.dump());
    std::ostringstream o, e;
    CHECK(cli::cmd_run(dir / "bad.json", dir / "bad", o, e) == cli::exit_invalid);
    CHECK(e.str().find("control.a + control.b must equal 1") != std::string::npos);

    dump(dir / "broken.json", "{\"surface\": ");
    std::ostringstream e2;
    CHECK(cli::cmd_run(dir / "broken.json", dir / "broken", o, e2) == cli::exit_invalid);

    json quick = json::parse(slurp(scenarios / "paper-s5x6.json"));
    quick["t_max"] = 0.1;
    dump(dir / "quick.json", quick.dump());
    CHECK(cli::cmd_run(dir / "quick.json", dir / "quick", o, e) == cli::exit_timeout);
    const json m = json::parse(slurp(dir / "quick" / "metrics.json"));
    CHECK(m["converged"] == false);
    CHECK(m["convergence_time"].is_null());
  }

  TEST_CASE("identical invocations give byte-identical traces")
  {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    std::ostringstream o, e;
    REQUIRE(cli::cmd_run(scenarios / "paper-s5x6.json", a, o, e) == cli::exit_converged);
    REQUIRE(cli::cmd_run(scenarios / "paper-s5x6.json", b, o, e) == cli::exit_converged);
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  }

  TEST_CASE("compare with one mode and one seed matches run")
  {
    const fs::path dir = scratch("cmp");
    std::ostringstream o, e;
    REQUIRE(cli::cmd_run(scenarios / "uturn.json", dir / "run", o, e) == cli::exit_converged);
    REQUIRE(cli::cmd_compare(scenarios / "uturn.json", {ControlMode::wave}, {1}, dir / "cmp", o, e) == 0);
    const json run_metrics = json::parse(slurp(dir / "run" / "metrics.json"));
    const json cmp = json::parse(slurp(dir / "cmp" / "metrics_wave.json"));
    CHECK(cmp["summary"]["median"] == run_metrics["convergence_time"]);
    CHECK(cmp["runs"][0]["convergence_time"] == run_metrics["convergence_time"]);

    std::istringstream summary(slurp(dir / "cmp" / "summary.csv"));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(summary, line))
      lines.push_back(line);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "mode,runs,converged,median_s,min_s,max_s");
    const std::string t = format_number(run_metrics["convergence_time"].get<double>());
    CHECK(lines[1] == "wave,1,1," + t + "," + t + "," + t);
  }

  TEST_CASE("compare reuses placements across modes")
  {
    const fs::path dir = scratch("cmp3");
    std::ostringstream o, e;
    REQUIRE(cli::cmd_compare(scenarios / "paper-s1x10.json",
                             {ControlMode::wave, ControlMode::distributed, ControlMode::funnel}, {1, 2}, dir, o,
                             e) == 0);
    for (const char* mode : {"wave", "distributed", "funnel"})
      CHECK(fs::exists(dir / (std::string("metrics_") + mode + ".json")));
    const json w = json::parse(slurp(dir / "metrics_wave.json"));
    const json f = json::parse(slurp(dir / "metrics_funnel.json"));
    CHECK(w["runs"][1]["scenario"]["objects"] == f["runs"][1]["scenario"]["objects"]);
    CHECK(w["summary"]["median"].get<double>() < f["summary"]["median"].get<double>());

    std::ostringstream e2;
    CHECK(cli::cmd_compare(scenarios / "missing.json", {ControlMode::wave}, {1}, dir, o, e2) == cli::exit_invalid);
  }

  TEST_CASE("validate grids, traces and scenarios")
  {
    const fs::path dir = scratch("val");
    std::ostringstream o, e;
    REQUIRE(cli::cmd_run(scenarios / "paper-s5x6.json", dir / "run", o, e) == cli::exit_converged);

    cli::ValidateOptions with_geometry;
    with_geometry.scenario = scenarios / "paper-s5x6.json";
    std::ostringstream trace_out;
    CHECK(cli::cmd_validate(dir / "run" / "trace.csv", with_geometry, trace_out, e) == 0);
    CHECK(trace_out.str().find(" 0 infeasible") != std::string::npos);
    std::ostringstream e_trace;
    CHECK(cli::cmd_validate(dir / "run" / "trace.csv", {}, o, e_trace) == cli::exit_invalid);
    CHECK(e_trace.str().find("--scenario") != std::string::npos);

    // A grid taken from the trace, then edited.
    std::ifstream in(dir / "run" / "trace.csv");
    const SimTrace tr = read_trace(in);
    const HeightField h = tr.rows.front().grid.heights();
    std::ostringstream good;
    write_grid(good, h, {2.0, 2.0, 1.0});
    dump(dir / "good.csv", good.str());
    std::ostringstream good_out;
    CHECK(cli::cmd_validate(dir / "good.csv", {}, good_out, e) == 0);
    CHECK(good_out.str().find("feasible") == 0);

    HeightField bumped = h;
    bumped.at({4, 4}) += 0.01;
    std::ostringstream bump;
    write_grid(bump, bumped, {2.0, 2.0, 1.0});
    dump(dir / "bumped.csv", bump.str());
    std::ostringstream bump_out;
    CHECK(cli::cmd_validate(dir / "bumped.csv", {}, bump_out, e) == cli::exit_invalid);
    CHECK(bump_out.str().find("planarity cell (3,3)") != std::string::npos);

    HeightField tall = h;
    tall.at({1, 1}) = 1.01;
    std::ostringstream t;
    write_grid(t, tall, {2.0, 2.0, 1.0});
    std::string text = t.str();
    text = text.substr(text.find('\n') + 1);  // drop the geometry line; --scenario supplies it
    dump(dir / "tall.csv", text);
    std::ostringstream tall_out;
    CHECK(cli::cmd_validate(dir / "tall.csv", with_geometry, tall_out, e) == cli::exit_invalid);
    CHECK(tall_out.str().find("bound actuator (1,1) height 1.01") != std::string::npos);

    std::ostringstream sc_out;
    CHECK(cli::cmd_validate(scenarios / "paper-s5x6.json", {}, sc_out, e) == 0);
  }
}
