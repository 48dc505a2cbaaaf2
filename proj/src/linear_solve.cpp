#include <Eigen/SparseCholesky>

#include "romforge/error.hpp"
#include "romforge/fom.hpp"

namespace romforge::fom {

double relative_residual(const SparseMatrix& a, const Vector& u, const Vector& f) {
  const double r = (a * u - f).norm();
  const double fn = f.norm();
  return fn > 0.0 ? r / fn : r;
}

double symmetry_defect(const SparseMatrix& a) {
  const double n = a.norm();
  if (n == 0.0) return 0.0;
  const SparseMatrix at = a.transpose();
  return (a - at).norm() / n;
}

Vector solve_linear(const SparseMatrix& a, const Vector& f) {
  if (a.rows() != a.cols() || a.rows() != f.size())
    throw DataError("solve_linear: dimension mismatch between " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " matrix and vector of length " + std::to_string(f.size()));
  if (f.size() == 0) return Vector{};

  Eigen::SimplicialLLT<SparseMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("solve_linear: matrix is not symmetric positive definite");

  Vector u = llt.solve(f);
  if (!u.allFinite()) throw NumericalError("solve_linear: factorization produced non-finite solution");
  if (f.norm() == 0.0) return u;
  constexpr int kRefinementSweeps = 3;
  for (int sweep = 0; sweep < kRefinementSweeps && relative_residual(a, u, f) > 1e-12; ++sweep) {
    const Vector r = f - a * u;
    u += llt.solve(r);
  }
  return u;
}

}  // namespace romforge::fom
