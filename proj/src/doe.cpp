#include "romforge/doe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "romforge/error.hpp"

namespace romforge::doe {

void ParameterSpace::validate() const {
  if (names.empty()) throw DataError("parameter space must have at least one dimension");
  if (lower.size() != names.size() || upper.size() != names.size())
    throw DataError("parameter space: names, lower and upper must have equal length");
  std::set<std::string> seen;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!seen.insert(names[k]).second) throw DataError("parameter space: duplicate name '" + names[k] + "'");
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] < upper[k]))
      throw DataError("parameter space: degenerate range for '" + names[k] + "'");
  }
}

bool ParameterSpace::contains(const ParameterPoint& p, double rel_tol) const {
  if (p.dim() != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double slack = rel_tol * (upper[k] - lower[k]);
    if (p.values[k] < lower[k] - slack || p.values[k] > upper[k] + slack) return false;
  }
  return true;
}

ParameterPoint ParameterSpace::midpoint() const {
  ParameterPoint p;
  for (std::size_t k = 0; k < dim(); ++k) p.values.push_back(0.5 * (lower[k] + upper[k]));
  return p;
}

std::vector<double> chebyshev_zeros(int order) {
  if (order < 1) throw UsageError("chebyshev order must be >= 1");
  std::vector<double> x(order, 0.0);
  for (int k = 1; k <= order / 2; ++k) {
    const double v = std::cos((2.0 * k - 1.0) * std::numbers::pi / (2.0 * order));
    x[k - 1] = v;
    x[order - k] = -v;
  }
  return x;
}

namespace {

double map_to_box(double x, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  return std::clamp(mid + half * x, lo, hi);
}

}  // namespace

std::vector<ParameterPoint> chebyshev_grid(const ParameterSpace& space, int order, bool include_center) {
  space.validate();
  const auto zeros = chebyshev_zeros(order);
  const std::size_t d = space.dim();

  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= static_cast<std::size_t>(order);

  std::vector<ParameterPoint> grid;
  grid.reserve(total + 1);
  std::vector<int> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    ParameterPoint p;
    p.values.resize(d);
    for (std::size_t k = 0; k < d; ++k) p.values[k] = map_to_box(zeros[idx[k]], space.lower[k], space.upper[k]);
    grid.push_back(std::move(p));
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < order) break;
      idx[k] = 0;
    }
  }

  if (include_center) {
    const ParameterPoint c = space.midpoint();
    if (std::find(grid.begin(), grid.end(), c) == grid.end()) grid.push_back(c);
  }
  return grid;
}

std::vector<ParameterPoint> latin_hypercube(const ParameterSpace& space, int count, std::uint64_t seed) {
  space.validate();
  if (count < 1) throw UsageError("latin hypercube count must be >= 1");
  const std::size_t d = space.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);

  std::vector<ParameterPoint> pts(count);
  for (auto& p : pts) p.values.resize(d);

  std::vector<int> strata(count);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    const double width = (space.upper[k] - space.lower[k]) / count;
    for (int i = 0; i < count; ++i) {
      const double lo = space.lower[k] + width * strata[i];
      const double v = lo + width * jitter(rng);
      // keep the sample inside its own stratum despite rounding at the upper edge
      pts[i].values[k] = std::clamp(v, lo, std::min(lo + width, space.upper[k]));
    }
  }
  return pts;
}

std::vector<ParameterPoint> corner_points(const ParameterSpace& space) {
  space.validate();
  const std::size_t d = space.dim();
  if (d > 20) throw UsageError("corner_points: dimension " + std::to_string(d) + " exceeds 20");
  const std::size_t total = std::size_t{1} << d;
  std::vector<ParameterPoint> pts(total);
  for (std::size_t n = 0; n < total; ++n) {
    pts[n].values.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      const bool high = (n >> (d - 1 - k)) & 1U;
      pts[n].values[k] = high ? space.upper[k] : space.lower[k];
    }
  }
  return pts;
}

nlohmann::json space_to_json(const ParameterSpace& space) {
  return {{"names", space.names}, {"lower", space.lower}, {"upper", space.upper}};
}

ParameterSpace space_from_json(const nlohmann::json& j) {
  ParameterSpace s;
  try {
    s.names = j.at("names").get<std::vector<std::string>>();
    s.lower = j.at("lower").get<std::vector<double>>();
    s.upper = j.at("upper").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("parameter space: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json plan_to_json(const Plan& plan) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    nlohmann::json values = nlohmann::json::object();
    for (std::size_t k = 0; k < plan.space.dim(); ++k) values[plan.space.names[k]] = plan.points[i].point.values[k];
    pts.push_back({{"id", i}, {"values", values}, {"corner", plan.points[i].corner}});
  }
  return {{"version", 1}, {"method", plan.method}, {"space", space_to_json(plan.space)}, {"points", pts}};
}

Plan plan_from_json(const nlohmann::json& j) {
  Plan plan;
  try {
    plan.method = j.value("method", std::string{});
    plan.space = space_from_json(j.at("space"));
    for (const auto& pj : j.at("points")) {
      PlanPoint pp;
      const auto& values = pj.at("values");
      for (const auto& name : plan.space.names) pp.point.values.push_back(values.at(name).get<double>());
      pp.corner = pj.value("corner", false);
      plan.points.push_back(std::move(pp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("plan: ") + e.what());
  }
  return plan;
}

}  // namespace romforge::doe
