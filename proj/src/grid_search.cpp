#include "romforge/grid_search.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "romforge/error.hpp"
#include "romforge/matrix_market.hpp"

namespace romforge::ml {

std::vector<int> kfold_assignment(int samples, int folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("grid search: need at least 2 folds");
  if (samples < folds)
    throw DataError("grid search: " + std::to_string(samples) + " samples cannot fill " + std::to_string(folds) + " folds");
  std::vector<int> perm(static_cast<std::size_t>(samples));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(tree_seed(seed, 0xF01D));
  for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[rng() % k]);
  std::vector<int> fold(perm.size());
  for (int pos = 0; pos < samples; ++pos)
    fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] =
        static_cast<int>(static_cast<long>(pos) * folds / samples);
  return fold;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

bool preferred(const CvRow& a, const CvRow& b) {
  if (a.mean_mse != b.mean_mse) return a.mean_mse < b.mean_mse;
  if (a.params.n_estimators != b.params.n_estimators) return a.params.n_estimators < b.params.n_estimators;
  return a.params.min_samples_leaf > b.params.min_samples_leaf;
}

}  // namespace

GridSearchResult grid_search_cv(const ForestGrid& grid, int folds, const Matrix& x, const Matrix& y,
                                const ForestParams& base, std::uint64_t seed) {
  if (grid.n_estimators.empty() || grid.min_samples_leaf.empty() || grid.max_depth.empty())
    throw UsageError("grid search: every grid axis needs at least one value");
  const auto fold = kfold_assignment(static_cast<int>(x.rows()), folds, seed);

  GridSearchResult res;
  for (int ne : grid.n_estimators)
    for (int leaf : grid.min_samples_leaf)
      for (int depth : grid.max_depth) {
        CvRow row;
        row.params = base;
        row.params.n_estimators = ne;
        row.params.min_samples_leaf = leaf;
        row.params.max_depth = depth;
        for (int k = 0; k < folds; ++k) {
          std::vector<int> tr, va;
          for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == k ? va : tr).push_back(static_cast<int>(i));
          const auto f = RandomForest::train(take_rows(x, tr), take_rows(y, tr), row.params);
          const Matrix err = f.predict(take_rows(x, va)) - take_rows(y, va);
          row.fold_mse.push_back(err.squaredNorm() / static_cast<double>(err.size()));
        }
        const double n = static_cast<double>(folds);
        row.mean_mse = std::accumulate(row.fold_mse.begin(), row.fold_mse.end(), 0.0) / n;
        double var = 0.0;
        for (double v : row.fold_mse) var += (v - row.mean_mse) * (v - row.mean_mse);
        row.std_mse = std::sqrt(var / n);
        res.table.push_back(std::move(row));
      }
  for (std::size_t i = 1; i < res.table.size(); ++i)
    if (preferred(res.table[i], res.table[static_cast<std::size_t>(res.best_row)])) res.best_row = static_cast<int>(i);
  res.best = res.table[static_cast<std::size_t>(res.best_row)].params;
  return res;
}

std::string cv_table_csv(const GridSearchResult& r) {
  std::ostringstream out;
  out << "n_estimators,min_samples_leaf,max_depth,mean_mse,std_mse";
  const std::size_t k = r.table.empty() ? 0 : r.table.front().fold_mse.size();
  for (std::size_t i = 0; i < k; ++i) out << ",fold_" << i + 1;
  out << ",best\n";
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    const auto& row = r.table[i];
    out << row.params.n_estimators << ',' << row.params.min_samples_leaf << ',' << row.params.max_depth << ','
        << io::format_double(row.mean_mse) << ',' << io::format_double(row.std_mse);
    for (double v : row.fold_mse) out << ',' << io::format_double(v);
    out << ',' << (static_cast<int>(i) == r.best_row ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace romforge::ml
