#include "romforge/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "romforge/error.hpp"

namespace romforge::ml {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// unbiased index in [0, n) independent of the standard library's distribution code
std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return static_cast<std::size_t>(r % n);
}

struct TreeBuilder {
  const Matrix& x;
  const Matrix& y;
  const ForestParams& params;
  int output;  // -1 for all
  int width;
  int mtry;
  std::mt19937_64 rng;
  RegressionTree tree;
  double gain_floor = 0.0;

  double target(int sample, int r) const { return output < 0 ? y(sample, r) : y(sample, output); }

  int add_leaf(const std::vector<int>& idx) {
    const int node = static_cast<int>(tree.feature.size());
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    const int slot = static_cast<int>(tree.values.size()) / width;
    tree.leaf.push_back(slot);
    for (int r = 0; r < width; ++r) {
      double s = 0.0;
      for (int i : idx) s += target(i, r);
      tree.values.push_back(s / static_cast<double>(idx.size()));
    }
    return node;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  Split best_split(const std::vector<int>& idx) {
    const std::size_t n = idx.size();
    const std::size_t leaf = static_cast<std::size_t>(params.min_samples_leaf);
    Split best;
    if (n < 2 * leaf) return best;

    std::vector<double> total(width, 0.0);
    for (int i : idx)
      for (int r = 0; r < width; ++r) total[r] += target(i, r);
    double parent = 0.0;
    for (int r = 0; r < width; ++r) parent += total[r] * total[r];
    parent /= static_cast<double>(n);

    std::vector<int> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[draw_index(rng, k)]);

    std::vector<int> sorted(idx);
    std::vector<double> left_sum(width);
    int tried = 0;
    for (int f : order) {
      if (tried >= mtry && best.feature >= 0) break;
      ++tried;
      std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
      if (x(sorted.front(), f) == x(sorted.back(), f)) continue;
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      for (std::size_t k = 0; k + leaf < n; ++k) {
        const int s = sorted[k];
        for (int r = 0; r < width; ++r) left_sum[r] += target(s, r);
        const std::size_t nl = k + 1;
        if (nl < leaf) continue;
        const double a = x(s, f), b = x(sorted[k + 1], f);
        if (!(a < b)) continue;
        double sl = 0.0, sr = 0.0;
        for (int r = 0; r < width; ++r) {
          sl += left_sum[r] * left_sum[r];
          const double rr = total[r] - left_sum[r];
          sr += rr * rr;
        }
        const double gain = sl / static_cast<double>(nl) + sr / static_cast<double>(n - nl) - parent;
        if (gain > best.gain && gain > gain_floor) {
          best.gain = gain;
          best.feature = f;
          double t = a + 0.5 * (b - a);
          if (!(t < b)) t = a;
          best.threshold = t;
        }
      }
    }
    return best;
  }

  int grow(std::vector<int>& idx, int depth) {
    if (params.max_depth > 0 && depth >= params.max_depth) return add_leaf(idx);
    const Split split = best_split(idx);
    if (split.feature < 0) return add_leaf(idx);

    std::vector<int> lhs, rhs;
    for (int i : idx) (x(i, split.feature) <= split.threshold ? lhs : rhs).push_back(i);
    const int node = static_cast<int>(tree.feature.size());
    tree.feature.push_back(split.feature);
    tree.threshold.push_back(split.threshold);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.leaf.push_back(-1);
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(lhs, depth + 1);
    const int r = grow(rhs, depth + 1);
    tree.left[node] = l;
    tree.right[node] = r;
    return node;
  }
};

void check_params(const ForestParams& p) {
  if (p.n_estimators < 1) throw UsageError("forest: n_estimators must be >= 1");
  if (p.min_samples_leaf < 1) throw UsageError("forest: min_samples_leaf must be >= 1");
  if (p.max_depth < 0) throw UsageError("forest: max_depth must be >= 0");
  if (!(p.max_features > 0.0 && p.max_features <= 1.0)) throw UsageError("forest: max_features must lie in (0, 1]");
}

}  // namespace

std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t tree) { return splitmix64(seed ^ splitmix64(tree + 1)); }

const double* RegressionTree::evaluate(const double* xv) const {
  int node = 0;
  while (feature[node] >= 0) node = xv[feature[node]] <= threshold[node] ? left[node] : right[node];
  return values.data() + static_cast<std::size_t>(leaf[node]) * static_cast<std::size_t>(width);
}

nlohmann::json forest_params_to_json(const ForestParams& p) {
  return {{"n_estimators", p.n_estimators}, {"min_samples_leaf", p.min_samples_leaf},
          {"max_depth", p.max_depth},       {"bootstrap", p.bootstrap},
          {"seed", p.seed},                 {"max_features", p.max_features},
          {"per_output", p.per_output}};
}

ForestParams forest_params_from_json(const nlohmann::json& j) {
  ForestParams p;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_estimators") p.n_estimators = value.get<int>();
    else if (key == "min_samples_leaf") p.min_samples_leaf = value.get<int>();
    else if (key == "max_depth") p.max_depth = value.get<int>();
    else if (key == "bootstrap") p.bootstrap = value.get<bool>();
    else if (key == "seed") p.seed = value.get<std::uint64_t>();
    else if (key == "max_features") p.max_features = value.get<double>();
    else if (key == "per_output") p.per_output = value.get<bool>();
    else throw DataError("forest params: unknown key '" + key + "'");
  }
  return p;
}

RandomForest RandomForest::train(const Matrix& x, const Matrix& y, const ForestParams& params) {
  check_params(params);
  if (x.rows() == 0 || x.cols() == 0) throw DataError("forest: empty training data");
  if (y.rows() != x.rows() || y.cols() == 0)
    throw DataError("forest: " + std::to_string(x.rows()) + " feature rows but " + std::to_string(y.rows()) +
                    " target rows");
  if (!x.allFinite()) throw DataError("forest: NaN or infinite feature values");
  if (!y.allFinite()) throw DataError("forest: NaN or infinite target values");

  RandomForest forest;
  forest.params_ = params;
  forest.n_features_ = static_cast<int>(x.cols());
  forest.n_outputs_ = static_cast<int>(y.cols());
  const int mtry = std::max(1, static_cast<int>(std::ceil(params.max_features * static_cast<double>(x.cols()) - 1e-12)));
  const int groups = params.per_output ? forest.n_outputs_ : 1;
  const std::size_t p = static_cast<std::size_t>(x.rows());

  for (int g = 0; g < groups; ++g) {
    const int output = params.per_output ? g : -1;
    const int width = params.per_output ? 1 : forest.n_outputs_;
    double sumsq = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (int r = 0; r < width; ++r) {
        const double v = output < 0 ? y(i, r) : y(i, output);
        sumsq += v * v;
      }
    for (int t = 0; t < params.n_estimators; ++t) {
      const std::uint64_t stream = static_cast<std::uint64_t>(g) * static_cast<std::uint64_t>(params.n_estimators) + t;
      TreeBuilder b{x, y, params, output, width, mtry, std::mt19937_64(tree_seed(params.seed, stream)), {}, 0.0};
      b.gain_floor = 1e-14 * sumsq;
      b.tree.output = output;
      b.tree.width = width;
      std::vector<int> idx(p);
      if (params.bootstrap) {
        for (auto& i : idx) i = static_cast<int>(draw_index(b.rng, p));
        std::sort(idx.begin(), idx.end());
      } else {
        std::iota(idx.begin(), idx.end(), 0);
      }
      b.grow(idx, 0);
      forest.trees_.push_back(std::move(b.tree));
    }
  }
  return forest;
}

Vector RandomForest::predict(const Vector& xv) const {
  if (xv.size() != n_features_)
    throw DataError("forest: expected " + std::to_string(n_features_) + " features, got " + std::to_string(xv.size()));
  Vector out = Vector::Zero(n_outputs_);
  std::vector<int> count(static_cast<std::size_t>(n_outputs_), 0);
  for (const auto& tree : trees_) {
    const double* v = tree.evaluate(xv.data());
    if (tree.output < 0) {
      for (int r = 0; r < n_outputs_; ++r) out[r] += v[r];
      for (auto& c : count) ++c;
    } else {
      out[tree.output] += v[0];
      ++count[static_cast<std::size_t>(tree.output)];
    }
  }
  for (int r = 0; r < n_outputs_; ++r) out[r] /= static_cast<double>(count[static_cast<std::size_t>(r)]);
  return out;
}

Matrix RandomForest::predict(const Matrix& x) const {
  Matrix out(x.rows(), n_outputs_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = predict(Vector(x.row(i).transpose())).transpose();
  return out;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    trees.push_back({{"output", t.output},
                     {"width", t.width},
                     {"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"leaf", t.leaf},
                     {"values", t.values}});
  }
  return {{"format", "romforge-forest"},
          {"version", kForestFormatVersion},
          {"params", forest_params_to_json(params_)},
          {"n_features", n_features_},
          {"n_outputs", n_outputs_},
          {"trees", std::move(trees)}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "romforge-forest") throw DataError("forest: not a forest document");
    const int version = j.at("version").get<int>();
    if (version != kForestFormatVersion)
      throw DataError("forest: unsupported format version " + std::to_string(version));
    RandomForest f;
    f.params_ = forest_params_from_json(j.at("params"));
    f.n_features_ = j.at("n_features").get<int>();
    f.n_outputs_ = j.at("n_outputs").get<int>();
    if (f.n_features_ < 1 || f.n_outputs_ < 1) throw DataError("forest: invalid dimensions");
    std::vector<int> count(static_cast<std::size_t>(f.n_outputs_), 0);
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      t.output = jt.at("output").get<int>();
      t.width = jt.at("width").get<int>();
      t.feature = jt.at("feature").get<std::vector<int>>();
      t.threshold = jt.at("threshold").get<std::vector<double>>();
      t.left = jt.at("left").get<std::vector<int>>();
      t.right = jt.at("right").get<std::vector<int>>();
      t.leaf = jt.at("leaf").get<std::vector<int>>();
      t.values = jt.at("values").get<std::vector<double>>();
      const std::size_t nodes = t.feature.size();
      const int expect_width = t.output < 0 ? f.n_outputs_ : 1;
      if (t.output >= f.n_outputs_ || t.width != expect_width || nodes == 0 || t.threshold.size() != nodes ||
          t.left.size() != nodes || t.right.size() != nodes || t.leaf.size() != nodes || t.values.size() % t.width != 0)
        throw DataError("forest: inconsistent tree arrays");
      const int slots = static_cast<int>(t.values.size()) / t.width;
      for (std::size_t n = 0; n < nodes; ++n) {
        if (t.feature[n] < 0) {
          if (t.leaf[n] < 0 || t.leaf[n] >= slots) throw DataError("forest: leaf slot out of range");
        } else if (t.feature[n] >= f.n_features_ || t.left[n] <= static_cast<int>(n) ||
                   t.right[n] <= static_cast<int>(n) || t.left[n] >= static_cast<int>(nodes) ||
                   t.right[n] >= static_cast<int>(nodes)) {
          throw DataError("forest: malformed split node");
        }
      }
      if (t.output < 0)
        for (auto& c : count) ++c;
      else
        ++count[static_cast<std::size_t>(t.output)];
      f.trees_.push_back(std::move(t));
    }
    for (int c : count)
      if (c == 0) throw DataError("forest: an output has no trees");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("forest: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
}

}  // namespace romforge::ml
