#include "romforge/pgd.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "romforge/error.hpp"

namespace romforge::ml {

namespace {

double to_unit(double x, double lo, double hi) { return hi > lo ? 2.0 * (x - lo) / (hi - lo) - 1.0 : 0.0; }

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Basis values of one dimension for every sample (P x (degree + 1)).
Matrix basis_matrix(const Matrix& points, int k, double lo, double hi, int degree) {
  Matrix n(points.rows(), degree + 1);
  for (Eigen::Index j = 0; j < points.rows(); ++j) n.row(j) = legendre(to_unit(points(j, k), lo, hi), degree).transpose();
  return n;
}

}  // namespace

Vector legendre(double s, int degree) {
  Vector p(degree + 1);
  p[0] = 1.0;
  if (degree >= 1) p[1] = s;
  for (int n = 1; n < degree; ++n) p[n + 1] = ((2.0 * n + 1.0) * s * p[n] - n * p[n - 1]) / (n + 1.0);
  return p;
}

nlohmann::json pgd_options_to_json(const PgdOptions& o) {
  return {{"max_modes", o.max_modes}, {"fp_tol", o.fp_tol},           {"max_fp_iters", o.max_fp_iters},
          {"max_degree", o.max_degree}, {"ridge", o.ridge}, {"enrich_tol", o.enrich_tol},
          {"adaptive_degree", o.adaptive_degree}};
}

PgdOptions pgd_options_from_json(const nlohmann::json& j) {
  PgdOptions o;
  for (const auto& [key, value] : j.items()) {
    if (key == "max_modes") o.max_modes = value.get<int>();
    else if (key == "fp_tol") o.fp_tol = value.get<double>();
    else if (key == "max_fp_iters") o.max_fp_iters = value.get<int>();
    else if (key == "max_degree") o.max_degree = value.get<int>();
    else if (key == "ridge") o.ridge = value.get<double>();
    else if (key == "enrich_tol") o.enrich_tol = value.get<double>();
    else if (key == "adaptive_degree") o.adaptive_degree = value.get<bool>();
    else throw DataError("pgd options: unknown key '" + key + "'");
  }
  return o;
}

double PgdModel::eval_mode(std::size_t m, const Vector& x) const {
  double prod = 1.0;
  for (int k = 0; k < dims(); ++k)
    prod *= legendre(to_unit(x[k], lower[k], upper[k]), static_cast<int>(modes[m][k].size()) - 1).dot(modes[m][k]);
  return prod;
}

double PgdModel::eval(const Vector& x) const {
  if (x.size() != dims())
    throw DataError("pgd: expected " + std::to_string(dims()) + " coordinates, got " + std::to_string(x.size()));
  double s = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) s += eval_mode(m, x);
  return s;
}

PgdModel pgd_fit(const Matrix& points, const Vector& values, const PgdOptions& opts) {
  const int d = static_cast<int>(points.cols());
  const Eigen::Index p = points.rows();
  if (d < 2) throw UsageError("pgd: at least two dimensions are required");
  if (p < 1) throw DataError("pgd: no samples");
  if (values.size() != p) throw DataError("pgd: point and value counts differ");
  if (!points.allFinite() || !values.allFinite()) throw DataError("pgd: non-finite training data");
  if (opts.max_modes < 0 || opts.max_fp_iters < 1 || opts.max_degree < 0) throw UsageError("pgd: invalid options");

  PgdModel model;
  std::vector<Matrix> basis;
  for (int k = 0; k < d; ++k) {
    const double lo = points.col(k).minCoeff(), hi = points.col(k).maxCoeff();
    std::set<double> distinct(points.col(k).data(), points.col(k).data() + p);
    const int deg = std::min(opts.max_degree, static_cast<int>(distinct.size()) - 1);
    model.lower.push_back(lo);
    model.upper.push_back(hi);
    model.degree.push_back(deg);
    basis.push_back(basis_matrix(points, k, lo, hi, deg));
  }

  Vector r = values;
  const double ynorm = values.norm();
  model.residual_history.push_back(r.norm());
  if (ynorm == 0.0) return model;

  for (int m = 0; m < opts.max_modes; ++m) {
    std::vector<Vector> a(static_cast<std::size_t>(d));
    std::vector<Matrix> nb(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const int deg = opts.adaptive_degree ? std::min(model.degree[k], m + 1) : model.degree[k];
      a[k] = Vector::Unit(deg + 1, 0);
      nb[k] = basis[k].leftCols(deg + 1);
    }
    std::vector<Vector> best_a;
    Vector best_v;
    double best_res = r.norm();
    Vector prev_v = Vector::Zero(p);

    for (int it = 0; it < opts.max_fp_iters; ++it) {
      bool degenerate = false;
      for (int k = 0; k < d && !degenerate; ++k) {
        Vector g = Vector::Ones(p);
        for (int l = 0; l < d; ++l)
          if (l != k) g.array() *= (nb[l] * a[l]).array();
        const Matrix design = g.asDiagonal() * nb[k];
        Matrix normal = design.transpose() * design;
        const Vector rhs = design.transpose() * r;
        const double tr = normal.trace();
        if (!(tr > 0.0)) {
          degenerate = true;
          break;
        }
        Eigen::LDLT<Matrix> ldlt(normal);
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13)) {
          ++model.ridge_events;
          normal.diagonal().array() += opts.ridge * tr / static_cast<double>(normal.rows());
          ldlt.compute(normal);
        }
        a[k] = ldlt.solve(rhs);
      }
      if (degenerate) break;
      for (int k = 0; k + 1 < d; ++k) {
        const double nrm = a[k].norm();
        if (nrm > 0.0) {
          a[k] /= nrm;
          a[d - 1] *= nrm;
        }
      }
      Vector v = Vector::Ones(p);
      for (int k = 0; k < d; ++k) v.array() *= (nb[k] * a[k]).array();
      const double res = (r - v).norm();
      if (!(res < best_res)) break;  // keep the last improving iterate
      best_res = res;
      best_a = a;
      best_v = v;
      const double vn = v.norm();
      const double change = (v - prev_v).norm();
      prev_v = v;
      if (change <= opts.fp_tol * vn) break;
    }

    if (best_a.empty()) break;
    const double before = r.norm();
    r -= best_v;
    model.modes.push_back(std::move(best_a));
    model.residual_history.push_back(r.norm());
    if (before - r.norm() < opts.enrich_tol * ynorm || r.norm() <= 1e-15 * ynorm) break;
  }
  return model;
}

nlohmann::json pgd_to_json(const PgdModel& m) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& mode : m.modes) {
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& a : mode) jm.push_back(to_std(a));
    modes.push_back(std::move(jm));
  }
  return {{"lower", m.lower},   {"upper", m.upper},
          {"degree", m.degree}, {"modes", std::move(modes)},
          {"residual_history", m.residual_history}, {"ridge_events", m.ridge_events}};
}

PgdModel pgd_from_json(const nlohmann::json& j) {
  try {
    PgdModel m;
    m.lower = j.at("lower").get<std::vector<double>>();
    m.upper = j.at("upper").get<std::vector<double>>();
    m.degree = j.at("degree").get<std::vector<int>>();
    m.residual_history = j.at("residual_history").get<std::vector<double>>();
    m.ridge_events = j.at("ridge_events").get<int>();
    const std::size_t d = m.degree.size();
    if (m.lower.size() != d || m.upper.size() != d) throw DataError("pgd: dimension arrays differ in length");
    for (const auto& jm : j.at("modes")) {
      std::vector<Vector> mode;
      for (const auto& ja : jm) {
        const auto c = ja.get<std::vector<double>>();
        mode.push_back(Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size())));
      }
      if (mode.size() != d) throw DataError("pgd: mode has wrong number of dimensions");
      for (std::size_t k = 0; k < d; ++k)
        if (mode[k].size() < 1 || mode[k].size() > m.degree[k] + 1)
          throw DataError("pgd: coefficient count does not match degree");
      m.modes.push_back(std::move(mode));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("pgd: ") + e.what());
  }
}

PgdRegressor PgdRegressor::train(const Matrix& x, const Matrix& y, const PgdOptions& opts) {
  if (x.rows() != y.rows()) throw DataError("pgd: feature and target row counts differ");
  PgdRegressor reg;
  reg.options = opts;
  for (Eigen::Index c = 0; c < y.cols(); ++c) reg.outputs.push_back(pgd_fit(x, y.col(c), opts));
  return reg;
}

Vector PgdRegressor::predict(const Vector& x) const {
  Vector out(n_outputs());
  for (int c = 0; c < n_outputs(); ++c) out[c] = outputs[static_cast<std::size_t>(c)].eval(x);
  return out;
}

Matrix PgdRegressor::predict(const Matrix& x) const {
  Matrix out(x.rows(), n_outputs());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = predict(Vector(x.row(i).transpose())).transpose();
  return out;
}

nlohmann::json PgdRegressor::to_json() const {
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& m : outputs) outs.push_back(pgd_to_json(m));
  return {{"format", "romforge-pgd"},
          {"version", kPgdFormatVersion},
          {"options", pgd_options_to_json(options)},
          {"outputs", std::move(outs)}};
}

PgdRegressor PgdRegressor::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "romforge-pgd") throw DataError("pgd: not a pgd document");
    if (j.at("version").get<int>() != kPgdFormatVersion) throw DataError("pgd: unsupported format version");
    PgdRegressor reg;
    reg.options = pgd_options_from_json(j.at("options"));
    for (const auto& jo : j.at("outputs")) reg.outputs.push_back(pgd_from_json(jo));
    if (reg.outputs.empty()) throw DataError("pgd: no outputs");
    for (const auto& m : reg.outputs)
      if (m.dims() != reg.outputs.front().dims()) throw DataError("pgd: outputs disagree on dimension");
    return reg;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("pgd: ") + e.what());
  }
}

}  // namespace romforge::ml
