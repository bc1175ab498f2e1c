#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "morphsurf/dynamics.hpp"
#include "morphsurf/surface.hpp"

namespace morphsurf {

enum class ControlMode
{
  distributed,
  wave,
  funnel,
  single_cell,
};

std::string_view to_string(ControlMode mode);
/// Throws std::invalid_argument for unknown names.
ControlMode parse_control_mode(std::string_view name);

/// Occupied columns and rows on each side of the reference cell.
struct OccupancySets
{
  std::set<int> cl;  // columns left of the reference
  std::set<int> cr;  // columns right of the reference
  std::set<int> rd;  // rows below the reference
  std::set<int> ru;  // rows above the reference

  friend bool operator==(const OccupancySets&, const OccupancySets&) = default;
};

/**
 * Gains of the single-cell saturated feedback law.
 *
 * Admissible gains satisfy kx <= l / 2W and ky <= l / 2L. The saturation
 * bounds default to the cell dimensions. kvx and kvy add optional velocity
 * feedback inside the saturation; they are zero for the plain law.
 */
struct SingleCellGains
{
  double kx{0.0};
  double ky{0.0};
  std::optional<double> mx;
  std::optional<double> my;
  double kvx{0.0};
  double kvy{0.0};

  static SingleCellGains max_admissible(const SurfaceConfig& cfg);

  /// Throws std::invalid_argument if the gains can drive an actuator out of [0, l].
  void validate(const SurfaceConfig& cfg) const;
};

struct SingleCellCommand
{
  double dz1;
  double dz2;
  double z1, z2, z3, z4;
};

struct ControlParams
{
  ControlMode mode{ControlMode::wave};
  double a{0.5};
  double b{0.5};
  SingleCellGains gains;
  // Single-cell target in workspace coordinates; the cell centre when unset.
  std::optional<double> target_x;
  std::optional<double> target_y;
  // Put the whole stroke on one axis per tick (a, b in {0, 1}), choosing the
  // axis with the larger remaining distance to the reference.
  bool axis_switching{false};

  void validate(const SurfaceConfig& cfg) const;
};

OccupancySets occupancy_sets(std::span<const ObjectState> objects, const SurfaceConfig& cfg);

ControlInput distributed_allocation(const OccupancySets& s, double a, double b, const SurfaceConfig& cfg);

ControlInput wave(const OccupancySets& s, double a, double b, const SurfaceConfig& cfg);

ControlInput static_funnel(double a, double b, const SurfaceConfig& cfg);

/// sat_M(x): x clipped to [-M, M].
double saturate(double x, double bound);

/// Saturated position feedback for one cell, tilting about the cell midlines.
SingleCellCommand single_cell_feedback(double e_x, double e_y, const SingleCellGains& gains,
                                       const SurfaceConfig& cfg, double e_vx = 0.0, double e_vy = 0.0);

/// Separable grid realizing a single-cell command on an S(1,1) surface.
ActuatorGrid single_cell_grid(const SingleCellCommand& cmd, const SurfaceConfig& cfg);

/**
 * Stateful wrapper that turns object observations into a commanded grid
 * once per control tick. The funnel input is frozen on the first tick and
 * recomputed only when the reference cell changes.
 */
class Controller
{
public:
  Controller(ControlParams params, SurfaceConfig cfg);

  struct Output
  {
    ControlInput input;
    ActuatorGrid grid;
  };

  Output tick(std::span<const ObjectState> objects);

  void set_reference(CellIndex ref);

  const SurfaceConfig& config() const { return cfg_; }
  const ControlParams& params() const { return params_; }

private:
  ControlParams params_;
  SurfaceConfig cfg_;
  std::optional<ControlInput> frozen_funnel_;
};

/// One-shot control tick; funnel mode is recomputed from scratch.
ActuatorGrid control_tick(std::span<const ObjectState> objects, const ControlParams& params,
                          const SurfaceConfig& cfg);

}  // namespace morphsurf
