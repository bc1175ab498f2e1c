#pragma once

#include <span>
#include <vector>

#include "morphsurf/surface.hpp"

namespace morphsurf {

/// Planar state of a point object; its height is slaved to the surface.
struct ObjectState
{
  double x{0.0};
  double y{0.0};
  double vx{0.0};
  double vy{0.0};
  double mass{1.0};

  double speed() const;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct PhysicsParams
{
  double g{9.81};
  double b{0.1};    // viscous friction, 1/s
  double tau{0.0};  // actuator time constant, s; 0 means ideal actuators
  double dt{1e-3};

  void validate() const;
};

struct Acceleration
{
  double ax;
  double ay;
};

/// Cell occupied by a workspace position; interior seams belong to the higher index.
/// Throws std::out_of_range outside [0, nW] x [0, mL].
CellIndex locate_cell(double x, double y, const SurfaceConfig& cfg);
CellIndex locate_cell(const ObjectState& s, const SurfaceConfig& cfg);

/// Surface height under the object, exact for planar cells.
double height_at(const ObjectState& s, const ActuatorGrid& g, const SurfaceConfig& cfg);

/// Planar acceleration of an object on a cell with orientation o.
Acceleration acceleration(const CellOrientation& o, double vx, double vy, const PhysicsParams& p);

/// Terminal speed along i on a constant pitched plane. Throws std::domain_error for b == 0.
double steady_speed(const CellOrientation& o, const PhysicsParams& p);

/// Total mechanical energy with the vertical velocity implied by the surface gradient.
double mechanical_energy(const ObjectState& s, const ActuatorGrid& g, const SurfaceConfig& cfg,
                         const PhysicsParams& p);

/// Gravity part of the acceleration per cell, evaluated once per surface configuration.
class GravityDrive
{
public:
  GravityDrive(const OrientationField& field, const PhysicsParams& p);

  const Acceleration& at(CellIndex c) const
  {
    return cells_[static_cast<std::size_t>(c.row - 1) * n_ + static_cast<std::size_t>(c.col - 1)];
  }

private:
  int n_;
  std::vector<Acceleration> cells_;
};

/**
 * Advances every object by one dt with semi-implicit Euler and reflects
 * elastically off the workspace margins.
 */
std::vector<ObjectState> step(std::span<const ObjectState> objects, const OrientationField& field,
                              const PhysicsParams& p, const SurfaceConfig& cfg);

/// In-place variant used by the simulation loop.
void step_in_place(std::span<ObjectState> objects, const GravityDrive& drive, const PhysicsParams& p,
                   const SurfaceConfig& cfg);

/// First-order actuator lag over one dt; exact solution of tau z' + z = z_com.
double actuator_response(double z, double z_com, const PhysicsParams& p);

/// Applies actuator_response component-wise. The lag is linear, so the
/// separable form (and with it planarity) is preserved.
ActuatorGrid actuator_response(const ActuatorGrid& actual, const ActuatorGrid& commanded, const PhysicsParams& p);

}  // namespace morphsurf
