#pragma once

#include <optional>
#include <string>
#include <vector>

#include "romforge/rom_model.hpp"

namespace romforge::rom {

struct Diagnostics {
  Vector theta;
  double condition = 0.0;        ///< 2-norm condition number of the reconstructed inverse
  double symmetry_defect = 0.0;  ///< before symmetrisation
  bool out_of_range = false;
  std::vector<std::string> warnings;
};

struct OnlineOptions {
  bool clamp_features = false;  ///< clamp raw features into the training support
};

/// theta from the regressor for one raw feature vector (scaling applied and undone here).
Vector predict_theta(const RomModel& model, const Vector& raw_features, const OnlineOptions& opts = {},
                     Diagnostics* diag = nullptr);

/// Reconstructs A_r^{-1} from theta, recording condition and symmetry defect.
/// Throws NumericalError when the reconstruction is numerically singular.
Matrix reconstruct_checked(const RomModel& model, const Vector& theta, Diagnostics* diag = nullptr);

struct LinearPrediction {
  Vector u;
  Vector xi;
  Diagnostics diagnostics;
};

/// u = V A_r^{-1}(theta(mu)) V^T f. `theta_override` bypasses the regressor (oracle mode).
LinearPrediction predict_linear(const RomModel& model, const doe::ParameterPoint& mu, const Vector& f,
                                const Vector* theta_override = nullptr, const OnlineOptions& opts = {});

struct ReducedState {
  Vector xi;
  int step = 0;
  double time = 0.0;
};

ReducedState initial_state(const RomModel& model);

/// xi_i = xi_{i-1} + A_r^{-1}(theta_i) V^T (f_i - f_{i-1}), theta_i from features (mu, t_i, dt_i, xi_{i-1}).
/// `reduced_increment` is V^T (f_i - f_{i-1}).
ReducedState step_nonlinear_reduced(const RomModel& model, const ReducedState& state, const doe::ParameterPoint& mu,
                                    const Vector& reduced_increment, double dt, const Vector* theta_override = nullptr,
                                    const OnlineOptions& opts = {}, Diagnostics* diag = nullptr);

/// Full-space load variant of step_nonlinear_reduced.
ReducedState step_nonlinear(const RomModel& model, const ReducedState& state, const doe::ParameterPoint& mu,
                            const Vector& f_i, const Vector& f_prev, double dt, const Vector* theta_override = nullptr,
                            const OnlineOptions& opts = {}, Diagnostics* diag = nullptr);

struct OnlineTrajectory {
  Vector times;          ///< N_t + 1
  Matrix xi;             ///< n x (N_t + 1)
  Matrix displacements;  ///< N x (N_t + 1), column 0 is zero
  std::vector<Diagnostics> diagnostics;  ///< one per step
};

/// Algorithm-1 replay from xi_0 = 0. Load f(t) = factor(t) * f_ref with f_ref = `full_load`
/// when given, otherwise the reference load stored with the model. `theta_overrides`, when
/// given, supplies theta for every step (oracle mode).
OnlineTrajectory run_online(const RomModel& model, const doe::ParameterPoint& mu, const fom::LoadRamp& ramp,
                            const Vector* full_load = nullptr, const std::vector<Vector>* theta_overrides = nullptr,
                            const OnlineOptions& opts = {});

/// Replay driven by explicit loads: `times` has m + 1 entries, `loads` holds f_1..f_m (f_0 = 0).
OnlineTrajectory run_online_loads(const RomModel& model, const doe::ParameterPoint& mu, const Vector& times,
                                  const Matrix& loads, const std::vector<Vector>* theta_overrides = nullptr,
                                  const OnlineOptions& opts = {});

/// Ramp as used in training (times and piecewise-linear factors stored with the model).
fom::LoadRamp model_ramp(const RomModel& model);

/// POD-ROM baselines with the exact reduced matrices (no regression).
Vector pod_rom_linear(const Matrix& v, const SparseMatrix& a, const Vector& f);
/// Reduced trapezoid replay xi_i = xi_{i-1} + (V^T A_i V)^{-1} V^T (f_i - f_{i-1}) over stored matrices;
/// returns N x (m + 1) with a zero first column.
Matrix pod_rom_trajectory(const Matrix& v, const io::SnapshotBundle& bundle);
/// Dispatches on the bundle: one column for linear, the full trajectory otherwise.
Matrix pod_rom_reference(const Matrix& v, const io::SnapshotBundle& bundle, io::ProblemKind kind);

/// Diagnostics as CSV: step,t,condition,symmetry_defect,out_of_range,theta_1..theta_R.
std::string diagnostics_csv(const std::vector<Diagnostics>& d, const Vector& times);

}  // namespace romforge::rom
