#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morphsurf/control.hpp"
#include "morphsurf/dynamics.hpp"
#include "morphsurf/surface.hpp"

namespace morphsurf {

struct ReferenceChange
{
  double t;
  CellIndex ref;
};

/// Objects drawn uniformly over the workspace from a seeded generator.
struct RandomObjects
{
  int count{0};
  double mass{1.0};
};

struct Scenario
{
  SurfaceConfig cfg;
  PhysicsParams physics;
  ControlParams control;
  std::vector<ObjectState> objects;
  std::optional<RandomObjects> random_objects;
  double control_rate{10.0};
  double t_max{600.0};
  std::uint64_t seed{1};
  std::vector<ReferenceChange> reference_schedule;
  // Objects count as settled below this speed, m/s.
  double settle_speed{1e-3};

  void validate() const;

  double control_period() const { return 1.0 / control_rate; }
  int substeps_per_period() const;

  /// Explicit objects, or the seeded random draw.
  std::vector<ObjectState> initial_objects() const;

  /// Surface configuration with the last scheduled reference applied.
  SurfaceConfig final_config() const;
};

struct TraceRow
{
  double t;
  std::vector<ObjectState> objects;
  ControlInput input;
  ActuatorGrid grid;
};

/// One row per control tick.
struct SimTrace
{
  int n{0};
  int m{0};
  std::vector<TraceRow> rows;
};

struct RunMetrics
{
  std::optional<double> convergence_time;
  std::vector<std::optional<double>> arrival_times;
  std::vector<double> path_lengths;
  double t_end{0.0};
  double wall_clock_s{0.0};

  bool converged() const { return convergence_time.has_value(); }
};

struct RunResult
{
  SimTrace trace;
  RunMetrics metrics;
};

/**
 * Runs a scenario until every object settles in the reference cell for one
 * control period, or until t_max.
 *
 * Each control tick computes the commanded grid, then the dynamics advance
 * with the (possibly lagging) actuator grid until the next tick. Throws
 * InfeasibleInput if a controller produces an unrealizable input.
 */
RunResult run(const Scenario& sc);

/// Per-object arrival: earliest row time after which the object stays inside the
/// reference cell until the end of the trace; none if it ends elsewhere.
std::vector<std::optional<double>> arrival_times(const SimTrace& tr, const SurfaceConfig& cfg);

/// True when every object sits in the reference cell below `settle_speed` for
/// the last `settle_window` seconds of the trace.
bool settled_at_end(const SimTrace& tr, const SurfaceConfig& cfg, double settle_window, double settle_speed = 1e-3);

/**
 * Earliest row time after which every object remains inside the reference
 * cell until the end of the trace. Defined only for traces that end settled
 * (see settled_at_end); none otherwise.
 */
std::optional<double> convergence_time(const SimTrace& tr, const SurfaceConfig& cfg, double settle_window,
                                       double settle_speed = 1e-3);

struct BatchEntry
{
  std::optional<RunMetrics> metrics;
  std::string error;
};

/// Number of worker threads for batch runs; MORPHSURF_THREADS caps it.
unsigned batch_threads();

/// Runs independent scenarios concurrently. Failures are reported per entry.
std::vector<BatchEntry> batch(const std::vector<Scenario>& scenarios);

/// Copy of the scenario with its random draw reseeded.
Scenario with_seed(Scenario sc, std::uint64_t seed);

struct ConvergenceSummary
{
  int runs{0};
  int converged{0};
  std::optional<double> median;
  std::optional<double> min;
  std::optional<double> max;
};

/// Median/min/max over converged runs; order-independent.
ConvergenceSummary summarize(const std::vector<BatchEntry>& entries);

}  // namespace morphsurf
