#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace morphsurf {

/// Raised when a control input cannot be realized within the actuator stroke.
class InfeasibleInput : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// 1-based cell address: column I in 1..n, row J in 1..m.
struct CellIndex
{
  int col{1};
  int row{1};

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// 1-based actuator address: column Ia in 1..n+1, row Ja in 1..m+1.
struct ActuatorIndex
{
  int col{1};
  int row{1};

  friend bool operator==(const ActuatorIndex&, const ActuatorIndex&) = default;
};

/**
 * Geometry of an n-column by m-row surface.
 *
 * Cell (I, J) spans x in [(I-1)W, IW] and y in [(J-1)L, JL]. Actuators retract
 * to height 0 and extend to the stroke `l`.
 */
struct SurfaceConfig
{
  int n{1};
  int m{1};
  double W{1.0};
  double L{1.0};
  double l{1.0};
  CellIndex ref{1, 1};

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const;

  double width() const { return n * W; }
  double length() const { return m * L; }
};

/// The n + m independent height differences plus the stroke split between axes.
struct ControlInput
{
  std::vector<double> dz1;  // n entries, Z1 - Z2 of each column
  std::vector<double> dz2;  // m entries, Z1 - Z4 of each row
  double a{0.5};
  double b{0.5};

  static ControlInput zero(const SurfaceConfig& cfg, double a = 0.5, double b = 0.5);

  /// Dimensions match cfg and a + b == 1. Throws std::invalid_argument.
  void validate(const SurfaceConfig& cfg) const;

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

/// Raw (n+1) x (m+1) actuator heights, as measured or hand-written.
class HeightField
{
public:
  HeightField() = default;
  HeightField(int cols, int rows, double value = 0.0);

  int cols() const { return cols_; }
  int rows() const { return rows_; }

  double& at(ActuatorIndex a);
  double at(ActuatorIndex a) const;

private:
  int cols_{0};
  int rows_{0};
  std::vector<double> heights_;
};

/// Separable actuator heights: z(Ia, Ja) = za_i[Ia] + za_j[Ja].
struct ActuatorGrid
{
  std::vector<double> za_i;  // n + 1 column components
  std::vector<double> za_j;  // m + 1 row components

  static ActuatorGrid level(const SurfaceConfig& cfg);

  double height(ActuatorIndex a) const { return za_i[a.col - 1] + za_j[a.row - 1]; }

  HeightField heights() const;

  /// Column and row height differences, za_i[I] - za_i[I+1] and za_j[J] - za_j[J+1].
  std::vector<double> column_differences() const;
  std::vector<double> row_differences() const;

  friend bool operator==(const ActuatorGrid&, const ActuatorGrid&) = default;
};

/// Pitch (about j) and roll (about i) of a cell; yaw is always zero.
struct CellOrientation
{
  double theta{0.0};
  double phi{0.0};
};

/// Orientation of every cell, indexed by (I, J).
class OrientationField
{
public:
  OrientationField() = default;
  OrientationField(int n, int m);

  int cols() const { return n_; }
  int rows() const { return m_; }

  CellOrientation& at(CellIndex c) { return cells_[index(c)]; }
  const CellOrientation& at(CellIndex c) const { return cells_[index(c)]; }

private:
  std::size_t index(CellIndex c) const
  {
    return static_cast<std::size_t>(c.row - 1) * n_ + static_cast<std::size_t>(c.col - 1);
  }

  int n_{0};
  int m_{0};
  std::vector<CellOrientation> cells_;
};

struct ConstraintReport
{
  struct CellResidual
  {
    CellIndex cell;
    double residual;
  };
  struct ColumnResidual
  {
    int column;
    double residual;
  };
  struct ActuatorHeight
  {
    ActuatorIndex actuator;
    double height;
  };

  std::vector<CellResidual> planarity_violations;
  std::vector<ColumnResidual> pitch_violations;
  // Cell (I, J) whose roll relation with (I+1, J) is broken.
  std::vector<CellResidual> roll_violations;
  std::vector<ActuatorHeight> bound_violations;

  bool feasible() const
  {
    return planarity_violations.empty() && pitch_violations.empty() && roll_violations.empty() &&
           bound_violations.empty();
  }
};

struct DofCount
{
  int coords;
  int constraints;
  int dof;
};

/// Height of the fourth corner (P3) that keeps the cell planar.
double planar_completion(double z1, double z2, double z4);

/// Orientation of a cell with Z1 - Z2 = dz1 and Z1 - Z4 = dz2.
CellOrientation cell_orientation(double dz1, double dz2, const SurfaceConfig& cfg);

/// Maps cell-frame vectors to the inertial frame; columns are the cell basis vectors.
Eigen::Matrix3d rotation_matrix(const CellOrientation& o);

/// Orientation of every cell induced by the independent pitch and roll inputs.
OrientationField surface_orientation_field(const ControlInput& u, const SurfaceConfig& cfg);

/// Same as above from an already realized grid (e.g. a lagging actuator state).
OrientationField surface_orientation_field(const ActuatorGrid& g, const SurfaceConfig& cfg);

/**
 * Builds actuator heights from the control input, starting from the reference
 * cell and accumulating height differences outward in both directions.
 *
 * Throws InfeasibleInput naming the first actuator outside [0, l].
 */
ActuatorGrid reconstruct_actuator_grid(const ControlInput& u, const SurfaceConfig& cfg);

ConstraintReport validate_grid(const HeightField& h, const SurfaceConfig& cfg, double tol = 1e-9,
                               double tol_angle = 1e-9);
ConstraintReport validate_grid(const ActuatorGrid& g, const SurfaceConfig& cfg, double tol = 1e-9,
                               double tol_angle = 1e-9);

DofCount dof_count(const SurfaceConfig& cfg);

/**
 * Residuals of the inter-cell orientation constraints over the 2nm cell angles.
 *
 * Pitch equality theta(I,J) - theta(I,1) for J = 2..m, then the roll relation
 * tan(phi(I,J))/cos(theta(I,J)) - tan(phi(I+1,J))/cos(theta(I+1,J)) for
 * I = 1..n-1. A feasible field has every residual zero.
 */
std::vector<double> orientation_constraint_residuals(const OrientationField& field);

}  // namespace morphsurf
