#pragma once

#include <memory>
#include <string>
#include <vector>

#include "romforge/doe.hpp"
#include "romforge/types.hpp"

namespace romforge::fom {

/// A geometrically (or materially) nonlinear structure reduced to its free DOFs.
class NonlinearModel {
 public:
  virtual ~NonlinearModel() = default;

  virtual int dofs() const = 0;
  virtual Vector internal_force(const Vector& u) const = 0;
  virtual SparseMatrix tangent(const Vector& u) const = 0;
  /// Load vector at full ramp factor 1.
  virtual Vector reference_load() const = 0;
  /// DOF class per free DOF (all translations for the built-in models).
  virtual std::vector<std::string> dof_classes() const;
};

// --- spring chain --------------------------------------------------------------

/// Internal force of a chain of M = u.size() + 1 nodes with node 0 fixed and
/// per-spring law F(d) = k d + k3 d^3.
Vector spring_chain_internal_force(const Vector& u, double k, double k3);

/// Tridiagonal tangent with per-spring stiffness k + 3 k3 d^2.
SparseMatrix spring_chain_tangent(const Vector& u, double k, double k3);

class SpringChain final : public NonlinearModel {
 public:
  /// `springs` springs in series, tip load `tip_load` on the free end.
  SpringChain(int springs, double k, double k3, double tip_load);

  int dofs() const override { return springs_; }
  Vector internal_force(const Vector& u) const override;
  SparseMatrix tangent(const Vector& u) const override;
  Vector reference_load() const override;

 private:
  int springs_;
  double k_;
  double k3_;
  double tip_load_;
};

// --- total-Lagrangian truss ----------------------------------------------------

struct TrussElementResponse {
  Eigen::Matrix4d tangent;
  Eigen::Vector4d internal_force;
  double axial_force = 0.0;
  double green_strain = 0.0;
};

/// Two-node 2-D truss bar, displacements ordered (u1x, u1y, u2x, u2y).
/// Throws NumericalError for a collapsed current length.
TrussElementResponse truss_tangent(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Vector4d& disp,
                                   double youngs, double area);

struct TrussBar {
  int n1 = 0;
  int n2 = 0;
  double youngs = 0.0;
  double area = 0.0;
};

class TrussNetwork final : public NonlinearModel {
 public:
  TrussNetwork(std::vector<Eigen::Vector2d> nodes, std::vector<TrussBar> bars, std::vector<int> constrained,
               Vector full_load);

  int dofs() const override { return static_cast<int>(free_.size()); }
  Vector internal_force(const Vector& u) const override;
  SparseMatrix tangent(const Vector& u) const override;
  Vector reference_load() const override;

  int full_dofs() const { return 2 * static_cast<int>(nodes_.size()); }
  const std::vector<int>& constrained() const { return constrained_; }
  const std::vector<int>& free_dofs() const { return free_; }
  const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
  const std::vector<TrussBar>& bars() const { return bars_; }

 private:
  Eigen::Vector4d element_disp(const Vector& full, const TrussBar& bar) const;

  std::vector<Eigen::Vector2d> nodes_;
  std::vector<TrussBar> bars_;
  std::vector<int> constrained_;
  std::vector<int> free_;
  Vector full_load_;
};

/// Flat two-chord lattice (bottom/top chords, verticals, one diagonal per bay), both
/// chord ends pinned, downward load on the mid-span nodes. Membrane action makes it
/// harden under load, standing in for a plate with immovable edges.
struct LatticeConfig {
  double span = 1.0;       ///< [m]
  double depth = 0.05;     ///< [m]
  int bays = 10;           ///< must be even
  double chord_width = 0.1;     ///< chord area = t * chord_width
  double diagonal_width = 0.1;  ///< diagonal area = t * diagonal_width
  double total_load = 3.0e6;    ///< [N], split over the two mid-span nodes
};

/// Builds the lattice for a parameter point (E [Pa], nu, t [m]). Chords and verticals use E;
/// diagonals carry the shear-like stiffness E / (2 (1 + nu)).
TrussNetwork build_lattice(const doe::ParameterPoint& params, const LatticeConfig& cfg);

// --- incremental trapezoidal solver --------------------------------------------

/// Piecewise-linear load factor lambda(t) on fictitious time [0, 1] plus the step times.
struct LoadRamp {
  std::vector<double> times;    ///< t_0 = 0 < t_1 < ... < t_N = 1
  std::vector<double> knots_t;  ///< breakpoints of lambda, first 0, last 1
  std::vector<double> knots_lambda;

  double factor(double t) const;
  int steps() const { return static_cast<int>(times.size()) - 1; }

  /// Linear ramp lambda(t) = t with N uniform steps.
  static LoadRamp uniform(int steps);
  /// Linear ramp with step sizes growing geometrically by `ratio` from one step to the next.
  static LoadRamp geometric(int steps, double ratio);
};

struct FixedPointOptions {
  double rel_tol = 1e-10;
  int max_iterations = 50;
  int max_bisections = 5;
};

struct NonlinearTrajectory {
  Vector times;                            ///< N_t + 1
  Matrix displacements;                    ///< N x (N_t + 1), column 0 is zero
  std::vector<SparseMatrix> avg_stiffness; ///< N_t matrices (step i stored at i - 1)
  Matrix loads;                            ///< N x (N_t + 1)
  doe::ParameterPoint params;

  int steps() const { return static_cast<int>(avg_stiffness.size()); }
};

/// Solves (K(u_i) + K(u_{i-1}))/2 (u_i - u_{i-1}) = f_i - f_{i-1} step by step with a
/// fixed-point iteration on the averaged matrix. A step that fails to converge is
/// bisected (recorded as extra steps); more than `max_bisections` levels is an error.
NonlinearTrajectory run_nonlinear_fom(const NonlinearModel& model, const doe::ParameterPoint& params,
                                      const LoadRamp& ramp, const FixedPointOptions& opts = {});

/// Largest relative incremental residual ||A_i du_i - df_i|| / ||df_i|| over all recorded steps.
double max_incremental_residual(const NonlinearTrajectory& traj);

}  // namespace romforge::fom
