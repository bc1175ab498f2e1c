#include "morphsurf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace morphsurf {

double ObjectState::speed() const
{
  return std::hypot(vx, vy);
}

void PhysicsParams::validate() const
{
  if (!(g > 0.0))
    throw std::invalid_argument("physics.g must be > 0");
  if (!(b >= 0.0))
    throw std::invalid_argument("physics.b must be >= 0");
  if (!(tau >= 0.0))
    throw std::invalid_argument("physics.tau must be >= 0");
  if (!(dt > 0.0))
    throw std::invalid_argument("physics.dt must be > 0");
}

CellIndex locate_cell(double x, double y, const SurfaceConfig& cfg)
{
  if (!(x >= 0.0 && x <= cfg.width() && y >= 0.0 && y <= cfg.length()))
  {
    std::ostringstream msg;
    msg << "position (" << x << ", " << y << ") outside workspace";
    throw std::out_of_range(msg.str());
  }
  // floor + 1 puts seams in the higher-index cell; the far walls clamp back.
  const int col = std::clamp(static_cast<int>(std::floor(x / cfg.W)) + 1, 1, cfg.n);
  const int row = std::clamp(static_cast<int>(std::floor(y / cfg.L)) + 1, 1, cfg.m);
  return {col, row};
}

CellIndex locate_cell(const ObjectState& s, const SurfaceConfig& cfg)
{
  return locate_cell(s.x, s.y, cfg);
}

double height_at(const ObjectState& s, const ActuatorGrid& g, const SurfaceConfig& cfg)
{
  const CellIndex c = locate_cell(s, cfg);
  const double z1 = g.height({c.col, c.row});
  const double z2 = g.height({c.col + 1, c.row});
  const double z4 = g.height({c.col, c.row + 1});
  const double u = (s.x - (c.col - 1) * cfg.W) / cfg.W;
  const double v = (s.y - (c.row - 1) * cfg.L) / cfg.L;
  return z1 + u * (z2 - z1) + v * (z4 - z1);
}

Acceleration acceleration(const CellOrientation& o, double vx, double vy, const PhysicsParams& p)
{
  const double ct = std::cos(o.theta);
  const double st = std::sin(o.theta);
  const double cp = std::cos(o.phi);
  const double sp = std::sin(o.phi);
  return {p.g * ct * cp * cp * st - p.b * vx, -p.g * ct * cp * sp - p.b * vy};
}

double steady_speed(const CellOrientation& o, const PhysicsParams& p)
{
  if (p.b == 0.0)
    throw std::domain_error("steady speed is unbounded without friction (b = 0)");
  return p.g / p.b * std::cos(o.theta) * std::cos(o.phi) * std::sin(o.theta);
}

double mechanical_energy(const ObjectState& s, const ActuatorGrid& g, const SurfaceConfig& cfg,
                         const PhysicsParams& p)
{
  const CellIndex c = locate_cell(s, cfg);
  const double dzdx = (g.height({c.col + 1, c.row}) - g.height({c.col, c.row})) / cfg.W;
  const double dzdy = (g.height({c.col, c.row + 1}) - g.height({c.col, c.row})) / cfg.L;
  const double vz = dzdx * s.vx + dzdy * s.vy;
  return 0.5 * s.mass * (s.vx * s.vx + s.vy * s.vy + vz * vz) + s.mass * p.g * height_at(s, g, cfg);
}

namespace {

// Mirrors a coordinate back into [0, hi], flipping the velocity on each bounce.
// On the first bounce the step is split at the wall and the remainder runs on
// the flipped velocity. Applying the whole step's gravity before the flip would
// hand a sloped wall O(dt) of free energy per hit. Drag follows the velocity.
void reflect(double& pos, double& vel, double hi, double prev, double v0, double grav, double b, double dt)
{
  bool first = true;
  while (pos < 0.0 || pos > hi)
  {
    const double wall = pos < 0.0 ? 0.0 : hi;
    if (first)
    {
      const double s = std::clamp((wall - prev) / (pos - prev), 0.0, 1.0);
      const double v_hit = v0 + s * dt * (grav - b * v0);
      vel = -v_hit + (1.0 - s) * dt * (grav + b * v_hit);
      first = false;
    }
    else
      vel = -vel;
    pos = 2.0 * wall - pos;
  }
}

}  // namespace

GravityDrive::GravityDrive(const OrientationField& field, const PhysicsParams& p)
  : n_(field.cols()), cells_(static_cast<std::size_t>(field.cols()) * field.rows())
{
  for (int j = 1; j <= field.rows(); ++j)
    for (int i = 1; i <= field.cols(); ++i)
      cells_[static_cast<std::size_t>(j - 1) * n_ + (i - 1)] = acceleration(field.at({i, j}), 0.0, 0.0, p);
}

void step_in_place(std::span<ObjectState> objects, const GravityDrive& drive, const PhysicsParams& p,
                   const SurfaceConfig& cfg)
{
  for (ObjectState& s : objects)
  {
    const Acceleration& gravity = drive.at(locate_cell(s, cfg));
    const ObjectState before = s;
    s.vx += p.dt * (gravity.ax - p.b * s.vx);
    s.vy += p.dt * (gravity.ay - p.b * s.vy);
    s.x += p.dt * s.vx;
    s.y += p.dt * s.vy;
    reflect(s.x, s.vx, cfg.width(), before.x, before.vx, gravity.ax, p.b, p.dt);
    reflect(s.y, s.vy, cfg.length(), before.y, before.vy, gravity.ay, p.b, p.dt);
  }
}

std::vector<ObjectState> step(std::span<const ObjectState> objects, const OrientationField& field,
                              const PhysicsParams& p, const SurfaceConfig& cfg)
{
  std::vector<ObjectState> next(objects.begin(), objects.end());
  step_in_place(next, GravityDrive(field, p), p, cfg);
  return next;
}

double actuator_response(double z, double z_com, const PhysicsParams& p)
{
  if (p.tau == 0.0)
    return z_com;
  return z + (z_com - z) * -std::expm1(-p.dt / p.tau);
}

ActuatorGrid actuator_response(const ActuatorGrid& actual, const ActuatorGrid& commanded, const PhysicsParams& p)
{
  ActuatorGrid next = commanded;
  for (std::size_t k = 0; k < next.za_i.size(); ++k)
    next.za_i[k] = actuator_response(actual.za_i[k], commanded.za_i[k], p);
  for (std::size_t k = 0; k < next.za_j.size(); ++k)
    next.za_j[k] = actuator_response(actual.za_j[k], commanded.za_j[k], p);
  return next;
}

}  // namespace morphsurf
