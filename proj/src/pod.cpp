#include "romforge/pod.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "romforge/error.hpp"

namespace romforge::pod {

namespace {

// eigenvalues below this fraction of lambda_1 are indistinguishable from round-off
constexpr double kNoiseFloor = 1e-13;
constexpr double kTieTolerance = 1e-12;

void orthonormalize(Matrix& q) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
      const double nrm = q.col(j).norm();
      if (!(nrm > 0.0)) throw NumericalError("POD: mode " + std::to_string(j) + " collapsed during orthonormalization");
      q.col(j) /= nrm;
    }
  }
}

void fix_signs(Matrix& modes, const Matrix& snapshots) {
  for (Eigen::Index j = 0; j < modes.cols(); ++j) {
    const double s = (modes.col(j).transpose() * snapshots).sum();
    double flip = s < 0.0 ? -1.0 : 1.0;
    if (s == 0.0) {
      Eigen::Index imax = 0;
      modes.col(j).cwiseAbs().maxCoeff(&imax);
      if (modes(imax, j) < 0.0) flip = -1.0;
    }
    modes.col(j) *= flip;
  }
}

struct Decomposition {
  Matrix modes;
  Vector retained;
  Vector all;
};

/// Shared machinery of both POD stages. `eig_ratio` is a ratio on eigenvalues; `retain_all`
/// keeps every eigenvalue above the noise floor.
Decomposition decompose(const Matrix& s, double eig_ratio, bool retain_all) {
  if (s.size() == 0) throw DataError("POD: empty snapshot matrix");
  if (!s.allFinite()) throw DataError("POD: snapshot matrix contains non-finite values");
  if (s.norm() == 0.0) throw DataError("POD: all-zero snapshot matrix");

  const bool gram = s.cols() <= s.rows();
  Matrix corr = gram ? Matrix(s.transpose() * s) : Matrix(s * s.transpose());
  corr = 0.5 * (corr + corr.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr);
  if (eig.info() != Eigen::Success) throw NumericalError("POD: eigen-decomposition failed");

  const Eigen::Index m = corr.rows();
  Vector lambda(m);
  Matrix vecs(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    lambda[i] = std::max(0.0, eig.eigenvalues()[m - 1 - i]);
    vecs.col(i) = eig.eigenvectors().col(m - 1 - i);
  }

  const double l1 = lambda[0];
  const double floor = l1 * kNoiseFloor;
  Eigen::Index n = 0;
  while (n < m && lambda[n] > floor && (retain_all || lambda[n] >= l1 / eig_ratio)) ++n;
  while (n > 0 && n < m && lambda[n] > floor && lambda[n] >= lambda[n - 1] * (1.0 - kTieTolerance)) ++n;

  Decomposition out;
  out.all = lambda;
  out.retained = lambda.head(n);
  if (gram) {
    out.modes = s * vecs.leftCols(n);
    for (Eigen::Index j = 0; j < n; ++j) out.modes.col(j) /= std::sqrt(lambda[j]);
  } else {
    out.modes = vecs.leftCols(n);
  }
  orthonormalize(out.modes);
  fix_signs(out.modes, s);
  return out;
}

double eigen_ratio(double ratio, RatioKind kind) {
  if (!(ratio >= 1.0)) throw UsageError("POD truncation ratio must be >= 1");
  return kind == RatioKind::kEigenvalue ? ratio : ratio * ratio;
}

}  // namespace

ReducedBasis pod_basis(const Matrix& snapshots, double ratio, RatioKind kind) {
  auto d = decompose(snapshots, eigen_ratio(ratio, kind), false);
  ReducedBasis b;
  b.modes = std::move(d.modes);
  b.spectrum = std::move(d.retained);
  b.full_spectrum = std::move(d.all);
  b.truncation_ratio = eigen_ratio(ratio, kind);
  return b;
}

Matrix reduce_system(const SparseMatrix& a, const Matrix& v) {
  if (a.rows() != a.cols() || a.cols() != v.rows())
    throw DataError("reduce_system: matrix " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " incompatible with basis of " + std::to_string(v.rows()) + " rows");
  const Matrix av = a * v;
  Matrix ar = v.transpose() * av;
  return 0.5 * (ar + ar.transpose());
}

Vector vectorize(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvectorize(const Vector& v, int n) {
  if (v.size() != static_cast<Eigen::Index>(n) * n)
    throw DataError("unvectorize: length " + std::to_string(v.size()) + " is not " + std::to_string(n) + "^2");
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

VectorizedInverse invert_and_vectorize(const Matrix& a_r) {
  if (a_r.rows() != a_r.cols() || a_r.size() == 0) throw DataError("invert_and_vectorize: matrix must be square");
  if (!a_r.allFinite()) throw NumericalError("invert_and_vectorize: non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a_r);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  VectorizedInverse out;
  out.condition = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
  if (!(out.condition <= 1e14))
    throw NumericalError("invert_and_vectorize: reduced matrix numerically singular (condition " +
                         std::to_string(out.condition) + ")");
  const Eigen::Index n = a_r.rows();
  Matrix inv;
  if (a_r.isApprox(a_r.transpose(), 0.0) || (a_r - a_r.transpose()).norm() == 0.0)
    inv = a_r.ldlt().solve(Matrix::Identity(n, n));
  else
    inv = a_r.partialPivLu().solve(Matrix::Identity(n, n));
  out.values = vectorize(inv);
  return out;
}

MatrixModeBasis matrix_mode_basis(const Matrix& b, double ratio, RatioKind kind) {
  auto d = decompose(b, eigen_ratio(ratio, kind), false);
  MatrixModeBasis out;
  out.modes = std::move(d.modes);
  out.spectrum = std::move(d.retained);
  out.full_spectrum = std::move(d.all);
  out.theta = out.modes.transpose() * b;
  return out;
}

MatrixModeBasis complete_matrix_basis(const Matrix& b) {
  auto d = decompose(b, 1.0, true);
  const Eigen::Index dim = b.rows();
  Matrix phi(dim, dim);
  phi.leftCols(d.modes.cols()) = d.modes;
  Eigen::Index filled = d.modes.cols();
  for (Eigen::Index k = 0; k < dim && filled < dim; ++k) {
    Vector e = Vector::Unit(dim, k);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < filled; ++j) e -= phi.col(j).dot(e) * phi.col(j);
    const double nrm = e.norm();
    if (nrm < 0.5) continue;  // mostly inside the current span
    phi.col(filled++) = e / nrm;
  }
  if (filled != dim) throw NumericalError("complete_matrix_basis: failed to complete the basis");

  MatrixModeBasis out;
  out.modes = std::move(phi);
  out.spectrum = Vector::Zero(dim);
  out.spectrum.head(d.retained.size()) = d.retained;
  out.full_spectrum = d.all;
  out.theta = out.modes.transpose() * b;
  return out;
}

Matrix project_theta(const Matrix& b, const Matrix& phi) {
  if (b.rows() != phi.rows())
    throw DataError("project_theta: B has " + std::to_string(b.rows()) + " rows, Phi has " + std::to_string(phi.rows()));
  const Matrix gram = phi.transpose() * phi;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("project_theta: Phi^T Phi is not positive definite");
  return ldlt.solve(phi.transpose() * b);
}

Matrix reconstruct_inverse(const Vector& theta, const Matrix& phi, int n) {
  if (theta.size() != phi.cols())
    throw DataError("reconstruct_inverse: theta has " + std::to_string(theta.size()) + " entries for " +
                    std::to_string(phi.cols()) + " modes");
  const Matrix m = unvectorize(phi * theta, n);
  return 0.5 * (m + m.transpose());
}

double reconstruction_symmetry_defect(const Vector& theta, const Matrix& phi, int n) {
  const Matrix m = unvectorize(phi * theta, n);
  const double nrm = m.norm();
  return nrm > 0.0 ? (m - m.transpose()).norm() / nrm : 0.0;
}

double orthonormality_defect(const Matrix& v) {
  return (v.transpose() * v - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

}  // namespace romforge::pod
