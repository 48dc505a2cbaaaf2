#include "romforge/online.hpp"

#include <cmath>
#include <sstream>

#include "romforge/error.hpp"
#include "romforge/matrix_market.hpp"

namespace romforge::rom {

Vector predict_theta(const RomModel& model, const Vector& raw, const OnlineOptions& opts, Diagnostics* diag) {
  if (raw.size() != model.features.size())
    throw DataError("predict: " + std::to_string(raw.size()) + " features given, model expects " +
                    std::to_string(model.features.size()));
  Vector x = raw;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double lo = model.feature_lower[k], hi = model.feature_upper[k];
    const double slack = 1e-9 * std::max({std::abs(lo), std::abs(hi), hi - lo});
    if (x[k] < lo - slack || x[k] > hi + slack) {
      if (diag) {
        diag->out_of_range = true;
        const auto names = model.features.names(model.space);
        diag->warnings.push_back("feature '" + names[static_cast<std::size_t>(k)] + "' = " + io::format_double(x[k]) +
                                 " outside training support [" + io::format_double(lo) + ", " + io::format_double(hi) +
                                 "]");
      }
      if (opts.clamp_features) x[k] = std::clamp(x[k], lo, hi);
    }
  }
  const Vector z = model.feature_scaler.apply(x);
  return model.target_scaler.invert(Vector(model.regressor.predict(z)));
}

Matrix reconstruct_checked(const RomModel& model, const Vector& theta, Diagnostics* diag) {
  const int n = model.n();
  const Matrix m = pod::reconstruct_inverse(theta, model.matrix_basis.modes, n);
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  const double cond = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
  if (diag) {
    diag->theta = theta;
    diag->condition = cond;
    diag->symmetry_defect = pod::reconstruction_symmetry_defect(theta, model.matrix_basis.modes, n);
  }
  if (!(cond <= 1e14))
    throw NumericalError("reconstructed reduced inverse is numerically singular (condition " + io::format_double(cond) + ")");
  return m;
}

LinearPrediction predict_linear(const RomModel& model, const doe::ParameterPoint& mu, const Vector& f,
                                const Vector* theta_override, const OnlineOptions& opts) {
  if (model.kind != io::ProblemKind::kLinear) throw UsageError("predict_linear called with a nonlinear model");
  if (f.size() != model.dofs)
    throw DataError("predict: load has " + std::to_string(f.size()) + " entries, model has " + std::to_string(model.dofs) + " DOFs");
  LinearPrediction out;
  if (!model.space.contains(mu, 1e-9)) {
    out.diagnostics.out_of_range = true;
    out.diagnostics.warnings.push_back("parameter point outside the trained space");
  }
  Vector theta;
  if (theta_override) {
    if (theta_override->size() != model.r()) throw DataError("predict: theta override has the wrong length");
    theta = *theta_override;
  } else {
    theta = predict_theta(model, model.features.assemble(mu, 0.0, 0.0, Vector::Zero(model.n())), opts, &out.diagnostics);
  }
  const Matrix inv = reconstruct_checked(model, theta, &out.diagnostics);
  out.xi = inv * (model.basis.modes.transpose() * f);
  out.u = model.basis.modes * out.xi;
  return out;
}

ReducedState initial_state(const RomModel& model) { return {Vector::Zero(model.n()), 0, 0.0}; }

ReducedState step_nonlinear_reduced(const RomModel& model, const ReducedState& state, const doe::ParameterPoint& mu,
                                    const Vector& reduced_increment, double dt, const Vector* theta_override,
                                    const OnlineOptions& opts, Diagnostics* diag) {
  if (reduced_increment.size() != model.n()) throw DataError("step: reduced load increment has the wrong size");
  Diagnostics local;
  Diagnostics& d = diag ? *diag : local;
  const double t = state.time + dt;
  Vector theta;
  if (theta_override) {
    if (theta_override->size() != model.r()) throw DataError("step: theta override has the wrong length");
    theta = *theta_override;
  } else {
    theta = predict_theta(model, model.features.assemble(mu, t, dt, state.xi), opts, &d);
  }
  const Matrix inv = reconstruct_checked(model, theta, &d);
  ReducedState next;
  next.xi = state.xi + inv * reduced_increment;
  next.step = state.step + 1;
  next.time = t;
  return next;
}

ReducedState step_nonlinear(const RomModel& model, const ReducedState& state, const doe::ParameterPoint& mu,
                            const Vector& f_i, const Vector& f_prev, double dt, const Vector* theta_override,
                            const OnlineOptions& opts, Diagnostics* diag) {
  if (f_i.size() != model.dofs || f_prev.size() != model.dofs) throw DataError("step: load vectors have the wrong size");
  return step_nonlinear_reduced(model, state, mu, model.basis.modes.transpose() * (f_i - f_prev), dt, theta_override,
                                opts, diag);
}

fom::LoadRamp model_ramp(const RomModel& model) {
  if (model.ramp_times.size() < 2) throw UsageError("model carries no load ramp");
  fom::LoadRamp r;
  r.times = model.ramp_times;
  r.knots_t = model.ramp_times;
  r.knots_lambda = model.ramp_factors;
  return r;
}

namespace {

/// Core replay over reduced loads fr (n x (m + 1), column 0 = reduced load at t_0).
OnlineTrajectory replay(const RomModel& model, const doe::ParameterPoint& mu, const Vector& times, const Matrix& fr,
                        const std::vector<Vector>* theta_overrides, const OnlineOptions& opts) {
  const int steps = static_cast<int>(times.size()) - 1;
  if (steps < 1) throw UsageError("run_online: at least one step is required");
  if (theta_overrides && static_cast<int>(theta_overrides->size()) != steps)
    throw DataError("run_online: " + std::to_string(theta_overrides->size()) + " theta overrides for " +
                    std::to_string(steps) + " steps");
  OnlineTrajectory out;
  out.times = times;
  out.xi = Matrix::Zero(model.n(), steps + 1);
  out.diagnostics.resize(static_cast<std::size_t>(steps));
  const bool outside = !model.space.contains(mu, 1e-9);
  ReducedState state = initial_state(model);
  for (int i = 1; i <= steps; ++i) {
    const double dt = times[i] - times[i - 1];
    auto& d = out.diagnostics[static_cast<std::size_t>(i - 1)];
    if (outside) {
      d.out_of_range = true;
      d.warnings.push_back("parameter point outside the trained space");
    }
    state = step_nonlinear_reduced(model, state, mu, fr.col(i) - fr.col(i - 1), dt,
                                   theta_overrides ? &(*theta_overrides)[static_cast<std::size_t>(i - 1)] : nullptr,
                                   opts, &d);
    state.time = times[i];
    out.xi.col(i) = state.xi;
  }
  out.displacements = model.basis.modes * out.xi;
  return out;
}

}  // namespace

OnlineTrajectory run_online(const RomModel& model, const doe::ParameterPoint& mu, const fom::LoadRamp& ramp,
                            const Vector* full_load, const std::vector<Vector>* theta_overrides,
                            const OnlineOptions& opts) {
  Vector fr;
  if (full_load) {
    if (full_load->size() != model.dofs) throw DataError("run_online: load vector has the wrong size");
    fr = model.basis.modes.transpose() * *full_load;
  } else if (model.reduced_reference_load.size() == model.n()) {
    fr = model.reduced_reference_load;
  } else {
    throw UsageError("run_online: model stores no reference load; pass one explicitly");
  }
  const Vector times = Eigen::Map<const Vector>(ramp.times.data(), static_cast<Eigen::Index>(ramp.times.size()));
  Matrix loads(model.n(), times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) loads.col(i) = ramp.factor(times[i]) * fr;
  return replay(model, mu, times, loads, theta_overrides, opts);
}

OnlineTrajectory run_online_loads(const RomModel& model, const doe::ParameterPoint& mu, const Vector& times,
                                  const Matrix& loads, const std::vector<Vector>* theta_overrides,
                                  const OnlineOptions& opts) {
  if (loads.rows() != model.dofs || loads.cols() + 1 != times.size())
    throw DataError("run_online: loads must be N x m with m + 1 step times");
  Matrix fr = Matrix::Zero(model.n(), times.size());
  fr.rightCols(loads.cols()) = model.basis.modes.transpose() * loads;
  return replay(model, mu, times, fr, theta_overrides, opts);
}

Vector pod_rom_linear(const Matrix& v, const SparseMatrix& a, const Vector& f) {
  const Matrix ar = pod::reduce_system(a, v);
  return v * ar.ldlt().solve(v.transpose() * f);
}

Matrix pod_rom_trajectory(const Matrix& v, const io::SnapshotBundle& b) {
  const int m = b.columns();
  Matrix u = Matrix::Zero(v.rows(), m + 1);
  Vector xi = Vector::Zero(v.cols());
  Vector f_prev = Vector::Zero(v.rows());
  for (int i = 0; i < m; ++i) {
    const Matrix ar = pod::reduce_system(b.stiffness[static_cast<std::size_t>(i)], v);
    xi += ar.ldlt().solve(v.transpose() * (b.loads.col(i) - f_prev));
    f_prev = b.loads.col(i);
    u.col(i + 1) = v * xi;
  }
  return u;
}

Matrix pod_rom_reference(const Matrix& v, const io::SnapshotBundle& b, io::ProblemKind kind) {
  if (kind == io::ProblemKind::kLinear) {
    Matrix u(v.rows(), b.columns());
    for (int c = 0; c < b.columns(); ++c) u.col(c) = pod_rom_linear(v, b.stiffness[static_cast<std::size_t>(c)], b.loads.col(c));
    return u;
  }
  return pod_rom_trajectory(v, b);
}

std::string diagnostics_csv(const std::vector<Diagnostics>& d, const Vector& times) {
  std::ostringstream out;
  const Eigen::Index r = d.empty() ? 0 : d.front().theta.size();
  out << "step,t,condition,symmetry_defect,out_of_range";
  for (Eigen::Index k = 0; k < r; ++k) out << ",theta_" << k + 1;
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << i + 1 << ',' << io::format_double(times.size() > static_cast<Eigen::Index>(i + 1) ? times[static_cast<Eigen::Index>(i + 1)] : 0.0)
        << ',' << io::format_double(d[i].condition) << ',' << io::format_double(d[i].symmetry_defect) << ','
        << (d[i].out_of_range ? 1 : 0);
    for (Eigen::Index k = 0; k < d[i].theta.size(); ++k) out << ',' << io::format_double(d[i].theta[k]);
    out << '\n';
  }
  return out.str();
}

}  // namespace romforge::rom
