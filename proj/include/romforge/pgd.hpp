#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "romforge/types.hpp"

namespace romforge::ml {

inline constexpr int kPgdFormatVersion = 1;

struct PgdOptions {
  int max_modes = 10;
  double fp_tol = 1e-8;    ///< relative change of a mode between sweeps
  int max_fp_iters = 50;
  int max_degree = 4;      ///< Legendre degree per dimension, further capped at distinct values - 1
  double ridge = 1e-10;    ///< scaled by trace / size of each normal matrix
  double enrich_tol = 1e-10;  ///< stop when a new mode improves the residual norm by less (relative to ||y||)
  bool adaptive_degree = false;  ///< mode m (0-based) limited to degree m + 1
};

nlohmann::json pgd_options_to_json(const PgdOptions& o);
PgdOptions pgd_options_from_json(const nlohmann::json& j);

/// Legendre polynomials P_0..P_degree at s in [-1, 1].
Vector legendre(double s, int degree);

/// f(x) = sum_m prod_k N_k(x_k)^T a_{m,k}, each dimension mapped affinely onto [-1, 1].
struct PgdModel {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> degree;  ///< cap per dimension; a mode may use fewer coefficients
  std::vector<std::vector<Vector>> modes;  ///< modes[m][k]: coefficients of dimension k
  std::vector<double> residual_history;    ///< ||r|| after 0, 1, ..., M modes
  int ridge_events = 0;                    ///< normal solves that needed regularisation

  int dims() const { return static_cast<int>(degree.size()); }
  double eval(const Vector& x) const;
  /// Contribution of a single mode.
  double eval_mode(std::size_t m, const Vector& x) const;
};

/// Greedy rank-1 enrichment with cyclic alternating least squares over the d dimensions.
/// Rows of `points` are samples. A sweep is kept only if it lowers the residual.
PgdModel pgd_fit(const Matrix& points, const Vector& values, const PgdOptions& opts);

nlohmann::json pgd_to_json(const PgdModel& m);
PgdModel pgd_from_json(const nlohmann::json& j);

/// One scalar model per output column.
struct PgdRegressor {
  PgdOptions options;
  std::vector<PgdModel> outputs;

  static PgdRegressor train(const Matrix& x, const Matrix& y, const PgdOptions& opts);
  Vector predict(const Vector& x) const;
  Matrix predict(const Matrix& x) const;
  int n_features() const { return outputs.empty() ? 0 : outputs.front().dims(); }
  int n_outputs() const { return static_cast<int>(outputs.size()); }

  nlohmann::json to_json() const;
  static PgdRegressor from_json(const nlohmann::json& j);
};

}  // namespace romforge::ml
