#pragma once

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "morphsurf/surface.hpp"

namespace morphsurf::testing {

/**
 * Orientation of cell (I, J) from plain 3-D geometry of its corners: pitch from
 * the P1->P2 edge, roll from the unit normal of the plane through P1, P2, P4.
 * Uses none of the library's angle formulas.
 */
template <class Heights>
CellOrientation corner_orientation(const Heights& h, CellIndex c, const SurfaceConfig& cfg)
{
  const double z1 = h(c.col, c.row);
  const double z2 = h(c.col + 1, c.row);
  const double z4 = h(c.col, c.row + 1);
  const Eigen::Vector3d p1(0.0, 0.0, z1);
  const Eigen::Vector3d p2(cfg.W, 0.0, z2);
  const Eigen::Vector3d p4(0.0, cfg.L, z4);
  const Eigen::Vector3d edge = p2 - p1;
  const Eigen::Vector3d normal = edge.cross(p4 - p1).normalized();
  // The cell's i axis points along P1->P2 and descends when z1 > z2.
  return {std::atan2(-edge.z(), edge.x()), std::asin(-normal.y())};
}

inline CellOrientation corner_orientation(const ActuatorGrid& g, CellIndex c, const SurfaceConfig& cfg)
{
  return corner_orientation([&](int i, int j) { return g.height({i, j}); }, c, cfg);
}

/**
 * Random feasible input: every column/row component outside the reference
 * cell is drawn from [0, a l] / [0, b l], the reference components are zero,
 * and the differences become dz1 / dz2.
 */
inline ControlInput random_feasible_input(const SurfaceConfig& cfg, double a, std::mt19937_64& rng)
{
  const double b = 1.0 - a;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> zi(cfg.n + 1), zj(cfg.m + 1);
  for (int k = 1; k <= cfg.n + 1; ++k)
    zi[k - 1] = (k == cfg.ref.col || k == cfg.ref.col + 1) ? 0.0 : a * cfg.l * unit(rng);
  for (int k = 1; k <= cfg.m + 1; ++k)
    zj[k - 1] = (k == cfg.ref.row || k == cfg.ref.row + 1) ? 0.0 : b * cfg.l * unit(rng);
  ControlInput u = ControlInput::zero(cfg, a, b);
  for (int k = 0; k < cfg.n; ++k)
    u.dz1[k] = zi[k] - zi[k + 1];
  for (int k = 0; k < cfg.m; ++k)
    u.dz2[k] = zj[k] - zj[k + 1];
  return u;
}

inline SurfaceConfig random_config(int max_n, int max_m, std::mt19937_64& rng)
{
  std::uniform_int_distribution<int> dn(1, max_n), dm(1, max_m);
  std::uniform_real_distribution<double> size(0.5, 3.0);
  SurfaceConfig cfg;
  cfg.n = dn(rng);
  cfg.m = dm(rng);
  cfg.W = size(rng);
  cfg.L = size(rng);
  cfg.l = 0.5 * size(rng);
  cfg.ref = {std::uniform_int_distribution<int>(1, cfg.n)(rng), std::uniform_int_distribution<int>(1, cfg.m)(rng)};
  return cfg;
}

}  // namespace morphsurf::testing
