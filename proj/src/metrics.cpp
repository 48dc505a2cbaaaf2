#include "romforge/metrics.hpp"

#include <cmath>
#include <limits>

#include "romforge/error.hpp"

namespace romforge::metrics {

double frobenius_rel_error(const Vector& ref, const Vector& pred) {
  if (ref.size() != pred.size()) throw DataError("frobenius_rel_error: length mismatch");
  const double d = (ref - pred).norm();
  const double r = ref.norm();
  if (r == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * d / r;
}

double relative_error_pct(const Vector& ref, const Vector& pred) { return frobenius_rel_error(ref, pred); }

namespace {

void accumulate(ErrorStats& s, double v) {
  s.max_pct = std::max(s.max_pct, v);
  s.mean_pct += v;
  ++s.samples;
}

void finish(ErrorStats& s) {
  if (s.samples > 0) s.mean_pct /= s.samples;
}

}  // namespace

DisplacementErrors displacement_errors(const Vector& ref, const Vector& pred, const std::vector<std::string>& classes,
                                       ErrorMode mode) {
  if (ref.size() != pred.size()) throw DataError("displacement_errors: length mismatch");
  if (!classes.empty() && static_cast<Eigen::Index>(classes.size()) != ref.size())
    throw DataError("displacement_errors: one DOF class per entry required");
  auto cls = [&](Eigen::Index j) -> const std::string& {
    static const std::string all = "all";
    return classes.empty() ? all : classes[static_cast<std::size_t>(j)];
  };

  std::map<std::string, double> denom;
  if (mode == ErrorMode::kMeanDeflection) {
    std::map<std::string, int> count;
    for (Eigen::Index j = 0; j < ref.size(); ++j) {
      denom[cls(j)] += std::abs(ref[j]);
      ++count[cls(j)];
    }
    for (auto& [k, v] : denom) v /= count[k];
  }

  DisplacementErrors out;
  for (Eigen::Index j = 0; j < ref.size(); ++j) {
    const double err = std::abs(pred[j] - ref[j]);
    double scale = 0.0;
    if (mode == ErrorMode::kMeanDeflection) {
      scale = denom[cls(j)];
    } else {
      scale = std::abs(ref[j]);
    }
    if (scale == 0.0) {
      if (mode == ErrorMode::kPerDof) continue;
      if (err == 0.0) {
        accumulate(out.all, 0.0);
        accumulate(out.by_class[cls(j)], 0.0);
        continue;
      }
    }
    const double pct = scale == 0.0 ? std::numeric_limits<double>::infinity() : 100.0 * err / scale;
    accumulate(out.all, pct);
    accumulate(out.by_class[cls(j)], pct);
  }
  finish(out.all);
  for (auto& [_, s] : out.by_class) finish(s);
  return out;
}

double elastic_energy(const Vector& u, const Vector& f) {
  if (u.size() != f.size()) throw DataError("elastic_energy: length mismatch");
  return 0.5 * u.dot(f);
}

double external_work(const Matrix& u, const Matrix& f) {
  if (u.rows() != f.rows() || u.cols() != f.cols()) throw DataError("external_work: shape mismatch");
  double w = 0.0;
  for (Eigen::Index i = 1; i < u.cols(); ++i) w += 0.5 * (f.col(i) + f.col(i - 1)).dot(u.col(i) - u.col(i - 1));
  return w;
}

std::vector<double> r2_scores(const Matrix& ref, const Matrix& pred) {
  if (ref.rows() != pred.rows() || ref.cols() != pred.cols()) throw DataError("r2_scores: shape mismatch");
  std::vector<double> out;
  for (Eigen::Index k = 0; k < ref.rows(); ++k) {
    const double mean = ref.row(k).mean();
    const double ss_tot = (ref.row(k).array() - mean).square().sum();
    const double ss_res = (ref.row(k) - pred.row(k)).squaredNorm();
    if (ss_tot == 0.0)
      out.push_back(ss_res == 0.0 ? 1.0 : 0.0);
    else
      out.push_back(1.0 - ss_res / ss_tot);
  }
  return out;
}

}  // namespace romforge::metrics
