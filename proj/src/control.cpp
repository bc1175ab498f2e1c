#include "morphsurf/control.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace morphsurf {

std::string_view to_string(ControlMode mode)
{
  switch (mode)
  {
    case ControlMode::distributed:
      return "distributed";
    case ControlMode::wave:
      return "wave";
    case ControlMode::funnel:
      return "funnel";
    case ControlMode::single_cell:
      return "single_cell";
  }
  return "unknown";
}

ControlMode parse_control_mode(std::string_view name)
{
  if (name == "distributed")
    return ControlMode::distributed;
  if (name == "wave")
    return ControlMode::wave;
  if (name == "funnel")
    return ControlMode::funnel;
  if (name == "single_cell")
    return ControlMode::single_cell;
  throw std::invalid_argument("unknown control mode '" + std::string(name) +
                              "' (expected distributed, wave, funnel or single_cell)");
}

SingleCellGains SingleCellGains::max_admissible(const SurfaceConfig& cfg)
{
  SingleCellGains g;
  g.kx = cfg.l / (2.0 * cfg.W);
  g.ky = cfg.l / (2.0 * cfg.L);
  return g;
}

void SingleCellGains::validate(const SurfaceConfig& cfg) const
{
  const double mx_eff = mx.value_or(cfg.W);
  const double my_eff = my.value_or(cfg.L);
  if (!(kx >= 0.0 && ky >= 0.0 && mx_eff > 0.0 && my_eff > 0.0 && kvx >= 0.0 && kvy >= 0.0))
    throw std::invalid_argument("single-cell gains and bounds must be non-negative");
  // |dz| <= k * M must stay within l / 2 so every corner stays in [0, l].
  const double slack = 1e-12 * cfg.l;
  if (kx * mx_eff > cfg.l / 2.0 + slack || ky * my_eff > cfg.l / 2.0 + slack)
    throw std::invalid_argument("single-cell gains exceed the admissible bound k * M <= l / 2");
}

void ControlParams::validate(const SurfaceConfig& cfg) const
{
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
    throw std::invalid_argument("control.a and control.b must lie in [0, 1]");
  if (std::abs(a + b - 1.0) > 1e-12)
    throw std::invalid_argument("control.a + control.b must equal 1 (got " + std::to_string(a + b) + ")");
  if (mode == ControlMode::single_cell)
  {
    if (cfg.n != 1 || cfg.m != 1)
      throw std::invalid_argument("single_cell mode requires a 1 x 1 surface");
    gains.validate(cfg);
  }
}

OccupancySets occupancy_sets(std::span<const ObjectState> objects, const SurfaceConfig& cfg)
{
  OccupancySets s;
  for (const ObjectState& o : objects)
  {
    const CellIndex c = locate_cell(o, cfg);
    if (c.col < cfg.ref.col)
      s.cl.insert(c.col);
    else if (c.col > cfg.ref.col)
      s.cr.insert(c.col);
    if (c.row < cfg.ref.row)
      s.rd.insert(c.row);
    else if (c.row > cfg.ref.row)
      s.ru.insert(c.row);
  }
  return s;
}

ControlInput distributed_allocation(const OccupancySets& s, double a, double b, const SurfaceConfig& cfg)
{
  ControlInput u = ControlInput::zero(cfg, a, b);
  for (int i : s.cl)
    u.dz1[i - 1] = a * cfg.l / static_cast<double>(s.cl.size());
  for (int i : s.cr)
    u.dz1[i - 1] = -a * cfg.l / static_cast<double>(s.cr.size());
  for (int j : s.rd)
    u.dz2[j - 1] = b * cfg.l / static_cast<double>(s.rd.size());
  for (int j : s.ru)
    u.dz2[j - 1] = -b * cfg.l / static_cast<double>(s.ru.size());
  return u;
}

ControlInput wave(const OccupancySets& s, double a, double b, const SurfaceConfig& cfg)
{
  // The full stroke goes to the outermost occupied column/row on each side.
  ControlInput u = ControlInput::zero(cfg, a, b);
  if (!s.cl.empty())
    u.dz1[*s.cl.begin() - 1] = a * cfg.l;
  if (!s.cr.empty())
    u.dz1[*s.cr.rbegin() - 1] = -a * cfg.l;
  if (!s.rd.empty())
    u.dz2[*s.rd.begin() - 1] = b * cfg.l;
  if (!s.ru.empty())
    u.dz2[*s.ru.rbegin() - 1] = -b * cfg.l;
  return u;
}

ControlInput static_funnel(double a, double b, const SurfaceConfig& cfg)
{
  OccupancySets all;
  for (int i = 1; i < cfg.ref.col; ++i)
    all.cl.insert(i);
  for (int i = cfg.ref.col + 1; i <= cfg.n; ++i)
    all.cr.insert(i);
  for (int j = 1; j < cfg.ref.row; ++j)
    all.rd.insert(j);
  for (int j = cfg.ref.row + 1; j <= cfg.m; ++j)
    all.ru.insert(j);
  return distributed_allocation(all, a, b, cfg);
}

double saturate(double x, double bound)
{
  if (std::abs(x) <= bound)
    return x;
  return std::copysign(bound, x);
}

SingleCellCommand single_cell_feedback(double e_x, double e_y, const SingleCellGains& gains,
                                       const SurfaceConfig& cfg, double e_vx, double e_vy)
{
  // Negative feedback: dz1 > 0 accelerates toward +x, so a positive error
  // must tilt the cell the other way.
  const double dz1 = -gains.kx * saturate(e_x + gains.kvx * e_vx, gains.mx.value_or(cfg.W));
  const double dz2 = -gains.ky * saturate(e_y + gains.kvy * e_vy, gains.my.value_or(cfg.L));
  const double half = cfg.l / 2.0;
  SingleCellCommand cmd{dz1, dz2, 0, 0, 0, 0};
  cmd.z1 = half + dz1 / 2.0 + dz2 / 2.0;
  cmd.z2 = half - dz1 / 2.0 + dz2 / 2.0;
  cmd.z3 = half - dz1 / 2.0 - dz2 / 2.0;
  cmd.z4 = half + dz1 / 2.0 - dz2 / 2.0;
  return cmd;
}

ActuatorGrid single_cell_grid(const SingleCellCommand& cmd, const SurfaceConfig& cfg)
{
  const double quarter = cfg.l / 4.0;
  return ActuatorGrid{{quarter + cmd.dz1 / 2.0, quarter - cmd.dz1 / 2.0},
                      {quarter + cmd.dz2 / 2.0, quarter - cmd.dz2 / 2.0}};
}

Controller::Controller(ControlParams params, SurfaceConfig cfg) : params_(std::move(params)), cfg_(cfg)
{
  cfg_.validate();
  params_.validate(cfg_);
}

void Controller::set_reference(CellIndex ref)
{
  SurfaceConfig next = cfg_;
  next.ref = ref;
  next.validate();
  if (!(next.ref == cfg_.ref))
    frozen_funnel_.reset();
  cfg_ = next;
}

namespace {

// Stroke split for one tick under axis switching: everything on the axis with
// more distance left to cover, measured in cells.
std::pair<double, double> switched_fractions(std::span<const ObjectState> objects, const SurfaceConfig& cfg,
                                             double a, double b)
{
  long col_mass = 0;
  long row_mass = 0;
  for (const ObjectState& o : objects)
  {
    const CellIndex c = locate_cell(o, cfg);
    col_mass += std::abs(c.col - cfg.ref.col);
    row_mass += std::abs(c.row - cfg.ref.row);
  }
  if (col_mass == 0 && row_mass == 0)
    return {a, b};
  if (col_mass >= row_mass)
    return {1.0, 0.0};
  return {0.0, 1.0};
}

}  // namespace

Controller::Output Controller::tick(std::span<const ObjectState> objects)
{
  if (params_.mode == ControlMode::single_cell)
  {
    if (objects.size() != 1)
      throw std::invalid_argument("single_cell mode controls exactly one object");
    const ObjectState& o = objects.front();
    const double tx = params_.target_x.value_or(0.5 * cfg_.W);
    const double ty = params_.target_y.value_or(0.5 * cfg_.L);
    const SingleCellCommand cmd = single_cell_feedback(o.x - tx, o.y - ty, params_.gains, cfg_, o.vx, o.vy);
    ControlInput u{{cmd.dz1}, {cmd.dz2}, params_.a, params_.b};
    return {u, single_cell_grid(cmd, cfg_)};
  }

  auto [a, b] = params_.axis_switching ? switched_fractions(objects, cfg_, params_.a, params_.b)
                                       : std::pair{params_.a, params_.b};
  ControlInput u;
  switch (params_.mode)
  {
    case ControlMode::distributed:
      u = distributed_allocation(occupancy_sets(objects, cfg_), a, b, cfg_);
      break;
    case ControlMode::wave:
      u = wave(occupancy_sets(objects, cfg_), a, b, cfg_);
      break;
    case ControlMode::funnel:
      if (!frozen_funnel_)
        frozen_funnel_ = static_funnel(a, b, cfg_);
      u = *frozen_funnel_;
      break;
    case ControlMode::single_cell:
      break;
  }
  return {u, reconstruct_actuator_grid(u, cfg_)};
}

ActuatorGrid control_tick(std::span<const ObjectState> objects, const ControlParams& params,
                          const SurfaceConfig& cfg)
{
  Controller c(params, cfg);
  return c.tick(objects).grid;
}

}  // namespace morphsurf
