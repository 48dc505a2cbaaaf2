#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace romforge::doe {

/// A point in the d-dimensional parameter domain, in physical units.
struct ParameterPoint {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const ParameterPoint&) const = default;
};

/// Axis-aligned box of admissible parameter values.
struct ParameterSpace {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return names.size(); }

  /// Throws DataError unless d >= 1, names are unique and lower < upper componentwise.
  void validate() const;

  bool contains(const ParameterPoint& p, double rel_tol = 0.0) const;
  ParameterPoint midpoint() const;
};

/// Sampling plan entry; corner points are routed to the training split downstream.
struct PlanPoint {
  ParameterPoint point;
  bool corner = false;
};

struct Plan {
  std::string method;
  ParameterSpace space;
  std::vector<PlanPoint> points;
};

/// Zeros of the Chebyshev polynomial T_order on [-1, 1], in descending order.
/// Mirror pairs are exact negations of each other.
std::vector<double> chebyshev_zeros(int order);

/// Full tensor grid of per-dimension Chebyshev zeros mapped onto the box,
/// last dimension varying fastest, optionally followed by the box midpoint (odd orders already hold it).
std::vector<ParameterPoint> chebyshev_grid(const ParameterSpace& space, int order, bool include_center);

/// One sample per stratum and dimension, strata paired by random permutation,
/// jittered uniformly inside each stratum.
std::vector<ParameterPoint> latin_hypercube(const ParameterSpace& space, int count, std::uint64_t seed);

/// All 2^d vertices of the box in lexicographic order (first dimension slowest).
std::vector<ParameterPoint> corner_points(const ParameterSpace& space);

nlohmann::json space_to_json(const ParameterSpace& space);
ParameterSpace space_from_json(const nlohmann::json& j);

nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& j);

}  // namespace romforge::doe
