#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "romforge/forest.hpp"

namespace romforge::ml {

struct ForestGrid {
  std::vector<int> n_estimators{50};
  std::vector<int> min_samples_leaf{4};
  std::vector<int> max_depth{0};
};

struct CvRow {
  ForestParams params;
  double mean_mse = 0.0;
  double std_mse = 0.0;
  std::vector<double> fold_mse;
};

struct GridSearchResult {
  ForestParams best;
  std::vector<CvRow> table;  ///< grid order
  int best_row = 0;
};

/// Fold index of every sample: a seeded permutation cut into k contiguous, near-equal parts.
std::vector<int> kfold_assignment(int samples, int folds, std::uint64_t seed);

/// k-fold cross-validated mean-squared error over all outputs for each grid configuration.
/// `base` supplies the remaining forest settings. Ties (equal mean MSE) go to the smaller
/// n_estimators, then the larger min_samples_leaf.
GridSearchResult grid_search_cv(const ForestGrid& grid, int folds, const Matrix& x, const Matrix& y,
                                const ForestParams& base, std::uint64_t seed);

/// CSV with header n_estimators,min_samples_leaf,max_depth,mean_mse,std_mse,fold_1..fold_k,best.
std::string cv_table_csv(const GridSearchResult& r);

}  // namespace romforge::ml
