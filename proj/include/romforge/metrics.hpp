#pragma once

#include <map>
#include <string>
#include <vector>

#include "romforge/types.hpp"

namespace romforge::metrics {

/// 100 ||ref - pred|| / ||ref||; 0 when both vanish, +inf when only ref does.
double frobenius_rel_error(const Vector& ref, const Vector& pred);

/// Same quantity for two vectors of any meaning (displacements, loads).
double relative_error_pct(const Vector& ref, const Vector& pred);

enum class ErrorMode { kPerDof, kMeanDeflection };

struct ErrorStats {
  double max_pct = 0.0;
  double mean_pct = 0.0;
  int samples = 0;
};

struct DisplacementErrors {
  ErrorStats all;
  std::map<std::string, ErrorStats> by_class;
};

/// kMeanDeflection: |u_pred - u_ref|_j / mean_{k in class(j)} |u_ref_k|, each DOF class normalised alone.
/// kPerDof: |u_pred - u_ref|_j / |u_ref_j| over DOFs with u_ref_j != 0.
/// An empty `classes` treats every DOF as one class.
DisplacementErrors displacement_errors(const Vector& ref, const Vector& pred, const std::vector<std::string>& classes,
                                       ErrorMode mode);

/// 1/2 u^T f.
double elastic_energy(const Vector& u, const Vector& f);

/// External work sum_i (f_i + f_{i-1})^T (u_i - u_{i-1}) / 2 over columns 0..m of u and f.
double external_work(const Matrix& u, const Matrix& f);

/// Coefficient of determination per row (component) of R x S matrices.
/// A constant reference row scores 1 if matched exactly and 0 otherwise.
std::vector<double> r2_scores(const Matrix& ref, const Matrix& pred);

}  // namespace romforge::metrics
