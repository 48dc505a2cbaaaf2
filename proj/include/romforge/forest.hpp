#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "romforge/types.hpp"

namespace romforge::ml {

inline constexpr int kForestFormatVersion = 1;

struct ForestParams {
  int n_estimators = 50;
  int min_samples_leaf = 4;
  int max_depth = 0;  ///< 0 = unlimited
  bool bootstrap = true;
  std::uint64_t seed = 70;
  double max_features = 1.0 / 3.0;  ///< fraction of features tried per split, rounded up
  bool per_output = false;          ///< one tree set per output column instead of multi-output trees
};

nlohmann::json forest_params_to_json(const ForestParams& p);
ForestParams forest_params_from_json(const nlohmann::json& j);

/// CART regression tree stored as flat arrays. Leaves have feature = -1 and point into `values`.
struct RegressionTree {
  int output = -1;  ///< -1: all outputs; otherwise the single output column this tree predicts
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> leaf;       ///< leaf slot for leaves, -1 otherwise
  std::vector<double> values;  ///< leaf means, `width` values per leaf
  int width = 0;

  /// Index of the first value of the leaf reached by `x`.
  const double* evaluate(const double* x) const;
};

class RandomForest {
 public:
  /// Rows of `x` (P x F) are samples, rows of `y` (P x R) the matching targets.
  static RandomForest train(const Matrix& x, const Matrix& y, const ForestParams& params);

  Vector predict(const Vector& x) const;
  Matrix predict(const Matrix& x) const;  ///< row-wise

  int n_features() const { return n_features_; }
  int n_outputs() const { return n_outputs_; }
  const ForestParams& params() const { return params_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  ForestParams params_;
  int n_features_ = 0;
  int n_outputs_ = 0;
  std::vector<RegressionTree> trees_;
};

/// Per-tree random stream derived from (seed, tree index).
std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t tree);

}  // namespace romforge::ml
