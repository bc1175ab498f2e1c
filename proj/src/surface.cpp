#include "morphsurf/surface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace morphsurf {

namespace {

// Slack on the [0, l] stroke check for reconstructed heights, relative to l.
// Cumulative sums like 3 * (l / 3) may overshoot l by an ulp or two.
constexpr double kStrokeSlack = 1e-12;

void require(bool ok, const std::string& what)
{
  if (!ok)
    throw std::invalid_argument(what);
}

// Eqs. for the separable components: suffix sums up to the reference index,
// negated prefix sums past it.
std::vector<double> accumulate_components(const std::vector<double>& dz, int ref)
{
  const int count = static_cast<int>(dz.size());
  std::vector<double> za(count + 1, 0.0);
  // za[k] for k <= ref (1-based): sum_{k'=k}^{ref} dz[k']
  double acc = 0.0;
  for (int k = ref; k >= 1; --k)
  {
    acc += dz[k - 1];
    za[k - 1] = acc;
  }
  // za[k] for k >= ref + 1: -sum_{k'=ref+1}^{k-1} dz[k']
  acc = 0.0;
  za[ref] = 0.0;
  for (int k = ref + 2; k <= count + 1; ++k)
  {
    acc -= dz[k - 2];
    za[k - 1] = acc;
  }
  return za;
}

}  // namespace

void SurfaceConfig::validate() const
{
  require(n >= 1, "surface.n must be >= 1");
  require(m >= 1, "surface.m must be >= 1");
  require(W > 0.0 && std::isfinite(W), "surface.W must be > 0");
  require(L > 0.0 && std::isfinite(L), "surface.L must be > 0");
  require(l > 0.0 && std::isfinite(l), "surface.l must be > 0");
  require(ref.col >= 1 && ref.col <= n, "surface.ref column must lie in 1..n");
  require(ref.row >= 1 && ref.row <= m, "surface.ref row must lie in 1..m");
}

ControlInput ControlInput::zero(const SurfaceConfig& cfg, double a, double b)
{
  return ControlInput{std::vector<double>(cfg.n, 0.0), std::vector<double>(cfg.m, 0.0), a, b};
}

void ControlInput::validate(const SurfaceConfig& cfg) const
{
  require(static_cast<int>(dz1.size()) == cfg.n, "control input dz1 must have n entries");
  require(static_cast<int>(dz2.size()) == cfg.m, "control input dz2 must have m entries");
  require(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0, "control fractions a, b must lie in [0, 1]");
  require(std::abs(a + b - 1.0) <= 1e-12, "control fractions must satisfy a + b = 1");
}

HeightField::HeightField(int cols, int rows, double value)
  : cols_(cols), rows_(rows), heights_(static_cast<std::size_t>(cols) * rows, value)
{
}

double& HeightField::at(ActuatorIndex a)
{
  return heights_[static_cast<std::size_t>(a.row - 1) * cols_ + (a.col - 1)];
}

double HeightField::at(ActuatorIndex a) const
{
  return heights_[static_cast<std::size_t>(a.row - 1) * cols_ + (a.col - 1)];
}

ActuatorGrid ActuatorGrid::level(const SurfaceConfig& cfg)
{
  return ActuatorGrid{std::vector<double>(cfg.n + 1, 0.0), std::vector<double>(cfg.m + 1, 0.0)};
}

HeightField ActuatorGrid::heights() const
{
  const int cols = static_cast<int>(za_i.size());
  const int rows = static_cast<int>(za_j.size());
  HeightField h(cols, rows);
  for (int j = 1; j <= rows; ++j)
    for (int i = 1; i <= cols; ++i)
      h.at({i, j}) = height({i, j});
  return h;
}

std::vector<double> ActuatorGrid::column_differences() const
{
  std::vector<double> d(za_i.size() - 1);
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] = za_i[k] - za_i[k + 1];
  return d;
}

std::vector<double> ActuatorGrid::row_differences() const
{
  std::vector<double> d(za_j.size() - 1);
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] = za_j[k] - za_j[k + 1];
  return d;
}

OrientationField::OrientationField(int n, int m)
  : n_(n), m_(m), cells_(static_cast<std::size_t>(n) * m)
{
}

double planar_completion(double z1, double z2, double z4)
{
  return -z1 + z2 + z4;
}

CellOrientation cell_orientation(double dz1, double dz2, const SurfaceConfig& cfg)
{
  // tan(theta) = dz1 / W; -sin(phi) = (dz2 / L) cos(theta) cos(phi).
  // The positive leg keeps both angles inside (-pi/2, pi/2).
  const double theta = std::atan2(dz1, cfg.W);
  const double phi = std::atan2(-std::cos(theta) * dz2, cfg.L);
  return {theta, phi};
}

Eigen::Matrix3d rotation_matrix(const CellOrientation& o)
{
  const double ct = std::cos(o.theta);
  const double st = std::sin(o.theta);
  const double cp = std::cos(o.phi);
  const double sp = std::sin(o.phi);
  Eigen::Matrix3d r;
  // clang-format off
  r <<  ct, st * sp, cp * st,
       0.0,      cp,     -sp,
       -st, ct * sp, ct * cp;
  // clang-format on
  return r;
}

OrientationField surface_orientation_field(const ControlInput& u, const SurfaceConfig& cfg)
{
  u.validate(cfg);
  OrientationField field(cfg.n, cfg.m);

  std::vector<double> pitch(cfg.n);
  for (int i = 1; i <= cfg.n; ++i)
    pitch[i - 1] = std::atan2(u.dz1[i - 1], cfg.W);

  // Row roll is carried by column 1 and propagated across each row through
  // tan(phi_I) = cos(Theta_I) / cos(Theta_1) * tan(Phi).
  const double c1 = std::cos(pitch[0]);
  for (int j = 1; j <= cfg.m; ++j)
  {
    const double row_roll = cell_orientation(u.dz1[0], u.dz2[j - 1], cfg).phi;
    const double t = std::tan(row_roll);
    for (int i = 1; i <= cfg.n; ++i)
      field.at({i, j}) = {pitch[i - 1], std::atan(std::cos(pitch[i - 1]) / c1 * t)};
  }
  return field;
}

OrientationField surface_orientation_field(const ActuatorGrid& g, const SurfaceConfig& cfg)
{
  if (static_cast<int>(g.za_i.size()) != cfg.n + 1 || static_cast<int>(g.za_j.size()) != cfg.m + 1)
    throw std::invalid_argument("actuator grid dimensions do not match the surface");
  ControlInput u{g.column_differences(), g.row_differences(), 0.5, 0.5};
  return surface_orientation_field(u, cfg);
}

ActuatorGrid reconstruct_actuator_grid(const ControlInput& u, const SurfaceConfig& cfg)
{
  u.validate(cfg);
  ActuatorGrid g{accumulate_components(u.dz1, cfg.ref.col), accumulate_components(u.dz2, cfg.ref.row)};

  const double slack = kStrokeSlack * cfg.l;
  for (int j = 1; j <= cfg.m + 1; ++j)
  {
    for (int i = 1; i <= cfg.n + 1; ++i)
    {
      const double z = g.height({i, j});
      if (z < -slack || z > cfg.l + slack)
      {
        std::ostringstream msg;
        msg << "infeasible control input: actuator (" << i << "," << j << ") height " << z
            << " outside [0, " << cfg.l << "]";
        throw InfeasibleInput(msg.str());
      }
    }
  }
  return g;
}

ConstraintReport validate_grid(const HeightField& h, const SurfaceConfig& cfg, double tol, double tol_angle)
{
  if (h.cols() != cfg.n + 1 || h.rows() != cfg.m + 1)
    throw std::invalid_argument("height field dimensions do not match the surface");

  ConstraintReport report;

  for (int j = 1; j <= cfg.m; ++j)
  {
    for (int i = 1; i <= cfg.n; ++i)
    {
      const double z1 = h.at({i, j});
      const double z2 = h.at({i + 1, j});
      const double z3 = h.at({i + 1, j + 1});
      const double z4 = h.at({i, j + 1});
      const double residual = std::abs(z3 - planar_completion(z1, z2, z4));
      if (residual > tol)
        report.planarity_violations.push_back({{i, j}, residual});
    }
  }

  // Per-cell angles from the P1-P2 and P1-P4 edges.
  OrientationField field(cfg.n, cfg.m);
  for (int j = 1; j <= cfg.m; ++j)
    for (int i = 1; i <= cfg.n; ++i)
      field.at({i, j}) =
        cell_orientation(h.at({i, j}) - h.at({i + 1, j}), h.at({i, j}) - h.at({i, j + 1}), cfg);

  for (int i = 1; i <= cfg.n; ++i)
  {
    double worst = 0.0;
    for (int j = 2; j <= cfg.m; ++j)
      worst = std::max(worst, std::abs(field.at({i, j}).theta - field.at({i, 1}).theta));
    if (worst > tol_angle)
      report.pitch_violations.push_back({i, worst});
  }

  for (int j = 1; j <= cfg.m; ++j)
  {
    for (int i = 1; i < cfg.n; ++i)
    {
      const auto& left = field.at({i, j});
      const auto& right = field.at({i + 1, j});
      const double residual = std::abs(std::tan(left.phi) / std::cos(left.theta) -
                                       std::tan(right.phi) / std::cos(right.theta));
      if (residual > tol_angle)
        report.roll_violations.push_back({{i, j}, residual});
    }
  }

  for (int j = 1; j <= cfg.m + 1; ++j)
  {
    for (int i = 1; i <= cfg.n + 1; ++i)
    {
      const double z = h.at({i, j});
      if (z < -tol || z > cfg.l + tol)
        report.bound_violations.push_back({{i, j}, z});
    }
  }
  return report;
}

ConstraintReport validate_grid(const ActuatorGrid& g, const SurfaceConfig& cfg, double tol, double tol_angle)
{
  if (static_cast<int>(g.za_i.size()) != cfg.n + 1 || static_cast<int>(g.za_j.size()) != cfg.m + 1)
    throw std::invalid_argument("actuator grid dimensions do not match the surface");
  return validate_grid(g.heights(), cfg, tol, tol_angle);
}

DofCount dof_count(const SurfaceConfig& cfg)
{
  const int coords = 2 * cfg.n * cfg.m;
  const int constraints = coords - cfg.n - cfg.m;
  return {coords, constraints, cfg.n + cfg.m};
}

std::vector<double> orientation_constraint_residuals(const OrientationField& field)
{
  const int n = field.cols();
  const int m = field.rows();
  std::vector<double> r;
  r.reserve(static_cast<std::size_t>(2 * n * m));
  for (int i = 1; i <= n; ++i)
    for (int j = 2; j <= m; ++j)
      r.push_back(field.at({i, j}).theta - field.at({i, 1}).theta);
  for (int j = 1; j <= m; ++j)
  {
    for (int i = 1; i < n; ++i)
    {
      const auto& left = field.at({i, j});
      const auto& right = field.at({i + 1, j});
      r.push_back(std::tan(left.phi) / std::cos(left.theta) - std::tan(right.phi) / std::cos(right.theta));
    }
  }
  return r;
}

}  // namespace morphsurf
