#pragma once

#include <string>
#include <vector>

#include "romforge/doe.hpp"
#include "romforge/types.hpp"

namespace romforge::fom {

/// Origin of a retained DOF: node index and local DOF slot on that node.
struct DofRef {
  int node = 0;
  int local = 0;
};

/// Linear FOM after homogeneous Dirichlet elimination.
struct LinearSystem {
  SparseMatrix stiffness;
  Vector load;
  std::vector<DofRef> dof_map;
  /// sorted constrained global DOFs
  std::vector<int> eliminated;
  int full_dofs = 0;
  int dofs_per_node = 0;
};

/// Structured Q4 grid of nx x ny nodes on a square of the given side length.
struct PlateGrid {
  int nx = 11;
  int ny = 11;
  double side = 1.0;  ///< [m]
};

/// Mindlin plate material/geometry taken from a parameter point ordered (E [Pa], nu, t [m]).
struct PlateProperties {
  double youngs = 0.0;
  double poisson = 0.0;
  double thickness = 0.0;

  static PlateProperties from_point(const doe::ParameterPoint& p);
};

/// Slots on each plate node: transverse deflection and the two section rotations.
enum PlateDof : int { kW = 0, kRotX = 1, kRotY = 2 };

/// Full (unconstrained) assembly plus the DOFs the edge supports remove.
struct PlateAssembly {
  SparseMatrix stiffness;
  Vector load;
  std::vector<int> constrained;
  int nodes = 0;
};

/// Assembles the Q4 Mindlin plate: 2x2 Gauss for bending, 1-point shear, kappa = 5/6.
/// Edge nodes are restrained in w only; a point load acts at the plate centre
/// (distributed with the bilinear shape functions when the centre is not a node).
PlateAssembly assemble_plate_full(const PlateProperties& props, const PlateGrid& grid, double center_load);

/// assemble_plate_full followed by elimination of the restrained w DOFs.
LinearSystem assemble_plate(const doe::ParameterPoint& params, const PlateGrid& grid, double center_load);

/// Element stiffness for a rectangular a x b element (12x12, node order counter-clockwise from (0,0)).
Eigen::Matrix<double, 12, 12> plate_element_stiffness(const PlateProperties& props, double a, double b);

/// Direct sparse Cholesky solve with iterative refinement to ||Au-f||/||f|| <= 1e-10.
/// Throws NumericalError when A is not SPD.
Vector solve_linear(const SparseMatrix& a, const Vector& f);

/// Relative residual ||Au - f|| / ||f|| (absolute when f = 0).
double relative_residual(const SparseMatrix& a, const Vector& u, const Vector& f);

/// Relative symmetry defect ||A - A^T||_F / ||A||_F.
double symmetry_defect(const SparseMatrix& a);

}  // namespace romforge::fom
