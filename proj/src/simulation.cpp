#include "morphsurf/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <thread>

namespace morphsurf {

namespace {

bool settled(const ObjectState& o, const SurfaceConfig& cfg, double settle_speed)
{
  return locate_cell(o, cfg) == cfg.ref && o.speed() < settle_speed;
}

// Rows closer than this fraction of a period count as one full window.
constexpr double kWindowSlack = 1e-9;

}  // namespace

void Scenario::validate() const
{
  cfg.validate();
  physics.validate();
  control.validate(cfg);
  if (!(control_rate > 0.0))
    throw std::invalid_argument("control.rate must be > 0");
  if (!(t_max > 0.0))
    throw std::invalid_argument("t_max must be > 0");
  if (!(settle_speed > 0.0))
    throw std::invalid_argument("settle speed must be > 0");
  substeps_per_period();

  if (random_objects && !objects.empty())
    throw std::invalid_argument("give either explicit objects or objects_random, not both");
  if (random_objects && !(random_objects->count >= 0 && random_objects->mass > 0.0))
    throw std::invalid_argument("objects_random needs count >= 0 and mass > 0");
  for (const ObjectState& o : objects)
  {
    if (!(o.mass > 0.0))
      throw std::invalid_argument("object mass must be > 0");
    if (!(o.x >= 0.0 && o.x <= cfg.width() && o.y >= 0.0 && o.y <= cfg.length()))
      throw std::invalid_argument("object starts outside the workspace");
  }
  if (control.mode == ControlMode::single_cell && initial_objects().size() != 1)
    throw std::invalid_argument("single_cell mode controls exactly one object");

  double last = 0.0;
  for (const ReferenceChange& change : reference_schedule)
  {
    if (!(change.t >= last))
      throw std::invalid_argument("reference_schedule times must be non-decreasing and >= 0");
    last = change.t;
    SurfaceConfig moved = cfg;
    moved.ref = change.ref;
    moved.validate();
  }
}

int Scenario::substeps_per_period() const
{
  const double period = control_period();
  const double ratio = period / physics.dt;
  const long steps = std::lround(ratio);
  if (steps < 1 || std::abs(steps * physics.dt - period) > 1e-6 * period)
    throw std::invalid_argument("physics.dt must divide the control period");
  return static_cast<int>(steps);
}

std::vector<ObjectState> Scenario::initial_objects() const
{
  if (!random_objects)
    return objects;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, cfg.width());
  std::uniform_real_distribution<double> uy(0.0, cfg.length());
  std::vector<ObjectState> out;
  out.reserve(random_objects->count);
  for (int k = 0; k < random_objects->count; ++k)
  {
    ObjectState o;
    o.x = ux(rng);
    o.y = uy(rng);
    o.mass = random_objects->mass;
    out.push_back(o);
  }
  return out;
}

SurfaceConfig Scenario::final_config() const
{
  SurfaceConfig out = cfg;
  if (!reference_schedule.empty())
    out.ref = reference_schedule.back().ref;
  return out;
}

RunResult run(const Scenario& sc)
{
  const auto wall_start = std::chrono::steady_clock::now();
  sc.validate();

  const double period = sc.control_period();
  const int substeps = sc.substeps_per_period();
  const SurfaceConfig judge = sc.final_config();
  const double last_change = sc.reference_schedule.empty() ? 0.0 : sc.reference_schedule.back().t;

  std::vector<ObjectState> objects = sc.initial_objects();
  Controller controller(sc.control, sc.cfg);
  // Lagging actuators start fully retracted.
  ActuatorGrid actual = ActuatorGrid::level(sc.cfg);

  RunResult result;
  result.trace.n = sc.cfg.n;
  result.trace.m = sc.cfg.m;
  result.metrics.path_lengths.assign(objects.size(), 0.0);

  std::size_t next_change = 0;
  double streak_start = std::nan("");  // start of the current all-settled run
  const long max_ticks = static_cast<long>(std::floor(sc.t_max / period * (1.0 + 1e-12)));

  for (long k = 0;; ++k)
  {
    const double t = static_cast<double>(k) * period;
    while (next_change < sc.reference_schedule.size() && sc.reference_schedule[next_change].t <= t)
      controller.set_reference(sc.reference_schedule[next_change++].ref);

    Controller::Output command = controller.tick(objects);
    if (sc.physics.tau == 0.0)
      actual = command.grid;
    result.trace.rows.push_back({t, objects, command.input, actual});

    const bool all_settled = std::all_of(objects.begin(), objects.end(),
                                         [&](const ObjectState& o) { return settled(o, judge, sc.settle_speed); });
    if (all_settled)
    {
      if (std::isnan(streak_start))
        streak_start = t;
      if (t - streak_start >= period * (1.0 - kWindowSlack) && t >= last_change)
        break;
    }
    else
    {
      streak_start = std::nan("");
    }
    if (k >= max_ticks)
      break;

    if (sc.physics.tau == 0.0)
    {
      const GravityDrive drive(surface_orientation_field(actual, controller.config()), sc.physics);
      for (int s = 0; s < substeps; ++s)
      {
        step_in_place(objects, drive, sc.physics, controller.config());
        for (std::size_t i = 0; i < objects.size(); ++i)
          result.metrics.path_lengths[i] += sc.physics.dt * objects[i].speed();
      }
    }
    else
    {
      for (int s = 0; s < substeps; ++s)
      {
        actual = actuator_response(actual, command.grid, sc.physics);
        const GravityDrive drive(surface_orientation_field(actual, controller.config()), sc.physics);
        step_in_place(objects, drive, sc.physics, controller.config());
        for (std::size_t i = 0; i < objects.size(); ++i)
          result.metrics.path_lengths[i] += sc.physics.dt * objects[i].speed();
      }
    }
  }

  result.metrics.t_end = result.trace.rows.back().t;
  result.metrics.arrival_times = arrival_times(result.trace, judge);
  result.metrics.convergence_time = convergence_time(result.trace, judge, period, sc.settle_speed);
  result.metrics.wall_clock_s =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

std::vector<std::optional<double>> arrival_times(const SimTrace& tr, const SurfaceConfig& cfg)
{
  if (tr.rows.empty())
    throw std::invalid_argument("arrival_times needs a non-empty trace");
  const std::size_t count = tr.rows.front().objects.size();
  std::vector<std::optional<double>> out(count);
  for (std::size_t i = 0; i < count; ++i)
  {
    for (auto row = tr.rows.rbegin(); row != tr.rows.rend(); ++row)
    {
      if (!(locate_cell(row->objects[i], cfg) == cfg.ref))
        break;
      out[i] = row->t;
    }
  }
  return out;
}

bool settled_at_end(const SimTrace& tr, const SurfaceConfig& cfg, double settle_window, double settle_speed)
{
  if (tr.rows.empty())
    throw std::invalid_argument("settled_at_end needs a non-empty trace");
  const double t_end = tr.rows.back().t;
  for (auto row = tr.rows.rbegin(); row != tr.rows.rend(); ++row)
  {
    const bool all = std::all_of(row->objects.begin(), row->objects.end(),
                                 [&](const ObjectState& o) { return settled(o, cfg, settle_speed); });
    if (!all)
      return false;
    if (t_end - row->t >= settle_window * (1.0 - kWindowSlack))
      return true;
  }
  return false;
}

std::optional<double> convergence_time(const SimTrace& tr, const SurfaceConfig& cfg, double settle_window,
                                       double settle_speed)
{
  if (!settled_at_end(tr, cfg, settle_window, settle_speed))
    return std::nullopt;
  double latest = tr.rows.front().t;
  for (const auto& a : arrival_times(tr, cfg))
    latest = std::max(latest, *a);
  return latest;
}

unsigned batch_threads()
{
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MORPHSURF_THREADS"))
  {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1)
      threads = std::min(threads, static_cast<unsigned>(cap));
  }
  return threads;
}

std::vector<BatchEntry> batch(const std::vector<Scenario>& scenarios)
{
  std::vector<BatchEntry> out(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++)
    {
      try
      {
        out[i].metrics = run(scenarios[i]).metrics;
      }
      catch (const std::exception& e)
      {
        out[i].error = e.what();
      }
    }
  };

  const unsigned threads = std::min<std::size_t>(batch_threads(), std::max<std::size_t>(1, scenarios.size()));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t)
    pool.emplace_back(worker);
  worker();
  return out;
}

Scenario with_seed(Scenario sc, std::uint64_t seed)
{
  sc.seed = seed;
  return sc;
}

ConvergenceSummary summarize(const std::vector<BatchEntry>& entries)
{
  ConvergenceSummary s;
  std::vector<double> times;
  for (const BatchEntry& e : entries)
  {
    ++s.runs;
    if (e.metrics && e.metrics->convergence_time)
      times.push_back(*e.metrics->convergence_time);
  }
  s.converged = static_cast<int>(times.size());
  if (times.empty())
    return s;
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  s.median = times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  s.min = times.front();
  s.max = times.back();
  return s;
}

}  // namespace morphsurf
