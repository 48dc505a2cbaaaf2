#pragma once

#include <span>
#include <vector>

#include "romforge/types.hpp"

namespace romforge {

/// Retained-DOF system after homogeneous Dirichlet elimination.
struct ConstrainedSystem {
  SparseMatrix stiffness;
  Vector load;
  /// retained index -> global DOF index
  std::vector<int> dof_map;
};

/// Removes the rows and columns of `eliminated` (sorted, unique, in range) from A and f.
ConstrainedSystem apply_dirichlet(const SparseMatrix& a_full, const Vector& f_full, std::span<const int> eliminated);

/// Retained global DOFs, ascending, for a system of `full_dofs` unknowns.
std::vector<int> retained_dofs(int full_dofs, std::span<const int> eliminated);

/// Restriction of a full vector to the retained DOFs.
Vector restrict_vector(const Vector& full, std::span<const int> dof_map);

/// Scatter of a retained vector into a zero-initialised full vector.
Vector expand_vector(const Vector& retained, std::span<const int> dof_map, int full_dofs);

}  // namespace romforge
