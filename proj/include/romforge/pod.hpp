#pragma once

#include "romforge/types.hpp"

namespace romforge::pod {

/// Whether a truncation ratio applies to Gram eigenvalues (lambda = sigma^2) or to singular values.
enum class RatioKind { kEigenvalue, kSingularValue };

/// Orthonormal solution basis V (N x n) and the retained spectrum.
struct ReducedBasis {
  Matrix modes;
  Vector spectrum;       ///< retained eigenvalues, descending
  Vector full_spectrum;  ///< every eigenvalue of the correlation matrix, descending
  double truncation_ratio = 0.0;

  int size() const { return static_cast<int>(modes.cols()); }
};

/// POD of the columns of `snapshots`. Keeps the leading modes with lambda_i >= lambda_1 / ratio
/// (ratio squared for kSingularValue); eigenvalues tied within 1e-12 of the cut are kept together.
/// The correlation eigenproblem is solved on the smaller of S^T S and S S^T.
ReducedBasis pod_basis(const Matrix& snapshots, double ratio, RatioKind kind = RatioKind::kEigenvalue);

/// A_r = V^T A V, exactly symmetric.
Matrix reduce_system(const SparseMatrix& a, const Matrix& v);

Vector vectorize(const Matrix& m);                   ///< column-major flattening
Matrix unvectorize(const Vector& v, int n);          ///< inverse of vectorize for n x n

struct VectorizedInverse {
  Vector values;            ///< vec(A_r^{-1}), length n^2
  double condition = 0.0;   ///< 2-norm condition number of A_r
};

/// Inverts A_r by factorization and flattens the inverse. Throws NumericalError when cond(A_r) > 1e14.
VectorizedInverse invert_and_vectorize(const Matrix& a_r);

/// Second-stage basis over vectorized inverses: Phi (n^2 x R) orthonormal, Theta = Phi^T B.
struct MatrixModeBasis {
  Matrix modes;
  Matrix theta;
  Vector spectrum;
  Vector full_spectrum;

  int size() const { return static_cast<int>(modes.cols()); }
};

MatrixModeBasis matrix_mode_basis(const Matrix& b, double ratio, RatioKind kind = RatioKind::kEigenvalue);

/// Phi spanning all of R^{n^2}: the numerically nonzero modes of B completed by an
/// orthonormal complement (spectrum zero there). Used to bypass truncation entirely.
MatrixModeBasis complete_matrix_basis(const Matrix& b);

/// Least-squares coefficients (Phi^T Phi)^{-1} Phi^T B.
Matrix project_theta(const Matrix& b, const Matrix& phi);

/// unvectorize(Phi theta) symmetrised as (M + M^T) / 2.
Matrix reconstruct_inverse(const Vector& theta, const Matrix& phi, int n);

/// ||M - M^T||_F / ||M||_F of the unsymmetrised reconstruction unvectorize(Phi theta).
double reconstruction_symmetry_defect(const Vector& theta, const Matrix& phi, int n);

/// ||V^T V - I||_max
double orthonormality_defect(const Matrix& v);

}  // namespace romforge::pod
