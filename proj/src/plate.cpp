#include <algorithm>
#include <cmath>

#include "romforge/dirichlet.hpp"
#include "romforge/error.hpp"
#include "romforge/fom.hpp"

namespace romforge::fom {

namespace {

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat3x12 = Eigen::Matrix<double, 3, 12>;
using Mat2x12 = Eigen::Matrix<double, 2, 12>;

constexpr double kShearCorrection = 5.0 / 6.0;
constexpr double kNodeXi[4] = {-1.0, 1.0, 1.0, -1.0};
constexpr double kNodeEta[4] = {-1.0, -1.0, 1.0, 1.0};

struct ShapeEval {
  double n[4];
  double dx[4];
  double dy[4];
};

ShapeEval shape_at(double xi, double eta, double a, double b) {
  ShapeEval s{};
  for (int i = 0; i < 4; ++i) {
    s.n[i] = 0.25 * (1.0 + xi * kNodeXi[i]) * (1.0 + eta * kNodeEta[i]);
    s.dx[i] = 0.25 * kNodeXi[i] * (1.0 + eta * kNodeEta[i]) * (2.0 / a);
    s.dy[i] = 0.25 * (1.0 + xi * kNodeXi[i]) * kNodeEta[i] * (2.0 / b);
  }
  return s;
}

}  // namespace

PlateProperties PlateProperties::from_point(const doe::ParameterPoint& p) {
  if (p.dim() != 3) throw UsageError("plate parameters must be (E, nu, t); got dimension " + std::to_string(p.dim()));
  return {p.values[0], p.values[1], p.values[2]};
}

Mat12 plate_element_stiffness(const PlateProperties& props, double a, double b) {
  const double e = props.youngs;
  const double nu = props.poisson;
  const double t = props.thickness;
  if (!(e > 0.0) || !(nu > 0.0 && nu < 0.5) || !(t > 0.0))
    throw UsageError("plate: require E > 0, 0 < nu < 0.5, t > 0");

  const double bend_rigidity = e * t * t * t / (12.0 * (1.0 - nu * nu));
  Eigen::Matrix3d db;
  db << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu);
  db *= bend_rigidity;
  const double shear_modulus = e / (2.0 * (1.0 + nu));
  const Eigen::Matrix2d ds = kShearCorrection * shear_modulus * t * Eigen::Matrix2d::Identity();

  const double det_j = 0.25 * a * b;
  Mat12 k = Mat12::Zero();

  const double g = 1.0 / std::sqrt(3.0);
  for (double xi : {-g, g}) {
    for (double eta : {-g, g}) {
      const ShapeEval s = shape_at(xi, eta, a, b);
      Mat3x12 bb = Mat3x12::Zero();
      for (int i = 0; i < 4; ++i) {
        bb(0, 3 * i + kRotX) = s.dx[i];
        bb(1, 3 * i + kRotY) = s.dy[i];
        bb(2, 3 * i + kRotX) = s.dy[i];
        bb(2, 3 * i + kRotY) = s.dx[i];
      }
      k.noalias() += bb.transpose() * db * bb * det_j;
    }
  }

  // one-point shear
  const ShapeEval s = shape_at(0.0, 0.0, a, b);
  Mat2x12 bs = Mat2x12::Zero();
  for (int i = 0; i < 4; ++i) {
    bs(0, 3 * i + kW) = s.dx[i];
    bs(0, 3 * i + kRotX) = -s.n[i];
    bs(1, 3 * i + kW) = s.dy[i];
    bs(1, 3 * i + kRotY) = -s.n[i];
  }
  k.noalias() += bs.transpose() * ds * bs * (4.0 * det_j);
  return 0.5 * (k + k.transpose());
}

PlateAssembly assemble_plate_full(const PlateProperties& props, const PlateGrid& grid, double center_load) {
  if (grid.nx < 2 || grid.ny < 2) throw UsageError("plate grid needs at least 2x2 nodes");
  if (!(grid.side > 0.0)) throw UsageError("plate side length must be positive");
  const int nx = grid.nx;
  const int ny = grid.ny;
  const double a = grid.side / (nx - 1);
  const double b = grid.side / (ny - 1);
  const Mat12 ke = plate_element_stiffness(props, a, b);

  PlateAssembly out;
  out.nodes = nx * ny;
  const int ndof = 3 * out.nodes;

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>((nx - 1) * (ny - 1)) * 144);
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int nodes[4] = {j * nx + i, j * nx + i + 1, (j + 1) * nx + i + 1, (j + 1) * nx + i};
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) trip.emplace_back(3 * nodes[p] + r, 3 * nodes[q] + s, ke(3 * p + r, 3 * q + s));
    }
  }
  out.stiffness.resize(ndof, ndof);
  out.stiffness.setFromTriplets(trip.begin(), trip.end());

  out.load = Vector::Zero(ndof);
  if (center_load != 0.0) {
    // centre position in element-index space
    const double ci = 0.5 * (nx - 1);
    const double cj = 0.5 * (ny - 1);
    const int ei = std::min(static_cast<int>(std::floor(ci)), nx - 2);
    const int ej = std::min(static_cast<int>(std::floor(cj)), ny - 2);
    const double xi = 2.0 * (ci - ei) - 1.0;
    const double eta = 2.0 * (cj - ej) - 1.0;
    const ShapeEval s = shape_at(xi, eta, a, b);
    const int nodes[4] = {ej * nx + ei, ej * nx + ei + 1, (ej + 1) * nx + ei + 1, (ej + 1) * nx + ei};
    for (int p = 0; p < 4; ++p)
      if (s.n[p] != 0.0) out.load[3 * nodes[p] + kW] += s.n[p] * center_load;
  }

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) out.constrained.push_back(3 * (j * nx + i) + kW);
  std::sort(out.constrained.begin(), out.constrained.end());
  return out;
}

LinearSystem assemble_plate(const doe::ParameterPoint& params, const PlateGrid& grid, double center_load) {
  const PlateAssembly full = assemble_plate_full(PlateProperties::from_point(params), grid, center_load);
  ConstrainedSystem reduced = apply_dirichlet(full.stiffness, full.load, full.constrained);

  LinearSystem sys;
  sys.stiffness = std::move(reduced.stiffness);
  sys.load = std::move(reduced.load);
  sys.eliminated = full.constrained;
  sys.full_dofs = 3 * full.nodes;
  sys.dofs_per_node = 3;
  sys.dof_map.reserve(reduced.dof_map.size());
  for (int g : reduced.dof_map) sys.dof_map.push_back({g / 3, g % 3});
  return sys;
}

}  // namespace romforge::fom
