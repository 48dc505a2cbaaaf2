#include "romforge/dirichlet.hpp"

#include <string>

#include "romforge/error.hpp"

namespace romforge {

std::vector<int> retained_dofs(int full_dofs, std::span<const int> eliminated) {
  for (std::size_t k = 0; k < eliminated.size(); ++k) {
    if (eliminated[k] < 0 || eliminated[k] >= full_dofs)
      throw DataError("dirichlet: eliminated DOF " + std::to_string(eliminated[k]) + " out of range [0, " +
                      std::to_string(full_dofs) + ")");
    if (k > 0 && eliminated[k] <= eliminated[k - 1])
      throw DataError("dirichlet: eliminated DOFs must be sorted and unique (offending entry " +
                      std::to_string(eliminated[k]) + ")");
  }
  std::vector<int> kept;
  kept.reserve(full_dofs - eliminated.size());
  std::size_t e = 0;
  for (int i = 0; i < full_dofs; ++i) {
    if (e < eliminated.size() && eliminated[e] == i) {
      ++e;
      continue;
    }
    kept.push_back(i);
  }
  return kept;
}

ConstrainedSystem apply_dirichlet(const SparseMatrix& a_full, const Vector& f_full, std::span<const int> eliminated) {
  const int n = static_cast<int>(a_full.rows());
  if (a_full.cols() != n || f_full.size() != n)
    throw DataError("dirichlet: stiffness " + std::to_string(a_full.rows()) + "x" + std::to_string(a_full.cols()) +
                    " incompatible with load of length " + std::to_string(f_full.size()));

  ConstrainedSystem out;
  out.dof_map = retained_dofs(n, eliminated);
  std::vector<int> new_index(n, -1);
  for (std::size_t r = 0; r < out.dof_map.size(); ++r) new_index[out.dof_map[r]] = static_cast<int>(r);

  std::vector<Triplet> trip;
  trip.reserve(a_full.nonZeros());
  for (int c = 0; c < a_full.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a_full, c); it; ++it) {
      const int i = new_index[it.row()];
      const int j = new_index[it.col()];
      if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
    }
  }
  const int m = static_cast<int>(out.dof_map.size());
  out.stiffness.resize(m, m);
  out.stiffness.setFromTriplets(trip.begin(), trip.end());
  out.load = restrict_vector(f_full, out.dof_map);
  return out;
}

Vector restrict_vector(const Vector& full, std::span<const int> dof_map) {
  Vector r(static_cast<Eigen::Index>(dof_map.size()));
  for (std::size_t i = 0; i < dof_map.size(); ++i) r[i] = full[dof_map[i]];
  return r;
}

Vector expand_vector(const Vector& retained, std::span<const int> dof_map, int full_dofs) {
  Vector full = Vector::Zero(full_dofs);
  for (std::size_t i = 0; i < dof_map.size(); ++i) full[dof_map[i]] = retained[i];
  return full;
}

}  // namespace romforge
