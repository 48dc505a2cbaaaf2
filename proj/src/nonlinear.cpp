#include "romforge/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "romforge/dirichlet.hpp"
#include "romforge/error.hpp"
#include "romforge/fom.hpp"

namespace romforge::fom {

std::vector<std::string> NonlinearModel::dof_classes() const {
  return std::vector<std::string>(static_cast<std::size_t>(dofs()), "translation");
}

// --- spring chain --------------------------------------------------------------

namespace {

double spring_elongation(const Vector& u, int s) { return s == 0 ? u[0] : u[s] - u[s - 1]; }

}  // namespace

Vector spring_chain_internal_force(const Vector& u, double k, double k3) {
  const int n = static_cast<int>(u.size());
  Vector f = Vector::Zero(n);
  for (int s = 0; s < n; ++s) {
    const double d = spring_elongation(u, s);
    const double force = k * d + k3 * d * d * d;
    f[s] += force;
    if (s > 0) f[s - 1] -= force;
  }
  return f;
}

SparseMatrix spring_chain_tangent(const Vector& u, double k, double k3) {
  const int n = static_cast<int>(u.size());
  std::vector<Triplet> trip;
  trip.reserve(4 * static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const double d = spring_elongation(u, s);
    const double ks = k + 3.0 * k3 * d * d;
    trip.emplace_back(s, s, ks);
    if (s > 0) {
      trip.emplace_back(s - 1, s - 1, ks);
      trip.emplace_back(s - 1, s, -ks);
      trip.emplace_back(s, s - 1, -ks);
    }
  }
  SparseMatrix kt(n, n);
  kt.setFromTriplets(trip.begin(), trip.end());
  return kt;
}

SpringChain::SpringChain(int springs, double k, double k3, double tip_load)
    : springs_(springs), k_(k), k3_(k3), tip_load_(tip_load) {
  if (springs < 1) throw UsageError("spring chain needs at least one spring");
  if (!(k > 0.0) || k3 < 0.0) throw UsageError("spring chain requires k > 0 and k3 >= 0");
}

Vector SpringChain::internal_force(const Vector& u) const { return spring_chain_internal_force(u, k_, k3_); }
SparseMatrix SpringChain::tangent(const Vector& u) const { return spring_chain_tangent(u, k_, k3_); }

Vector SpringChain::reference_load() const {
  Vector f = Vector::Zero(springs_);
  f[springs_ - 1] = tip_load_;
  return f;
}

// --- truss -----------------------------------------------------------------------

TrussElementResponse truss_tangent(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Vector4d& disp,
                                   double youngs, double area) {
  const Eigen::Vector2d ref = x2 - x1;
  const double l0_sq = ref.squaredNorm();
  if (!(l0_sq > 0.0)) throw UsageError("truss element with zero reference length");
  const double l0 = std::sqrt(l0_sq);

  const Eigen::Vector2d chord = ref + disp.tail<2>() - disp.head<2>();
  const double l_sq = chord.squaredNorm();
  if (!(l_sq > 0.0)) throw NumericalError("truss element collapsed to zero length");

  TrussElementResponse r;
  r.green_strain = (l_sq - l0_sq) / (2.0 * l0_sq);
  const double ea = youngs * area;
  r.axial_force = ea * r.green_strain;

  Eigen::Vector4d a;
  a << -chord, chord;
  r.internal_force = (r.axial_force / l0) * a;

  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h.topLeftCorner<2, 2>().setIdentity();
  h.bottomRightCorner<2, 2>().setIdentity();
  h.topRightCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  h.bottomLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();

  r.tangent = (ea / (l0_sq * l0)) * (a * a.transpose()) + (r.axial_force / l0) * h;
  return r;
}

TrussNetwork::TrussNetwork(std::vector<Eigen::Vector2d> nodes, std::vector<TrussBar> bars,
                           std::vector<int> constrained, Vector full_load)
    : nodes_(std::move(nodes)), bars_(std::move(bars)), constrained_(std::move(constrained)),
      full_load_(std::move(full_load)) {
  std::sort(constrained_.begin(), constrained_.end());
  if (full_load_.size() != full_dofs()) throw UsageError("truss: load vector length must be 2 x node count");
  for (const auto& b : bars_)
    if (b.n1 < 0 || b.n2 < 0 || b.n1 >= static_cast<int>(nodes_.size()) || b.n2 >= static_cast<int>(nodes_.size()))
      throw UsageError("truss: bar references a missing node");
  free_ = retained_dofs(full_dofs(), constrained_);
}

Eigen::Vector4d TrussNetwork::element_disp(const Vector& full, const TrussBar& bar) const {
  Eigen::Vector4d d;
  d << full[2 * bar.n1], full[2 * bar.n1 + 1], full[2 * bar.n2], full[2 * bar.n2 + 1];
  return d;
}

Vector TrussNetwork::internal_force(const Vector& u) const {
  const Vector full = expand_vector(u, free_, full_dofs());
  Vector f = Vector::Zero(full_dofs());
  for (const auto& bar : bars_) {
    const auto r = truss_tangent(nodes_[bar.n1], nodes_[bar.n2], element_disp(full, bar), bar.youngs, bar.area);
    f.segment<2>(2 * bar.n1) += r.internal_force.head<2>();
    f.segment<2>(2 * bar.n2) += r.internal_force.tail<2>();
  }
  return restrict_vector(f, free_);
}

SparseMatrix TrussNetwork::tangent(const Vector& u) const {
  const Vector full = expand_vector(u, free_, full_dofs());
  std::vector<int> index(full_dofs(), -1);
  for (std::size_t i = 0; i < free_.size(); ++i) index[free_[i]] = static_cast<int>(i);

  std::vector<Triplet> trip;
  trip.reserve(bars_.size() * 16);
  for (const auto& bar : bars_) {
    const auto r = truss_tangent(nodes_[bar.n1], nodes_[bar.n2], element_disp(full, bar), bar.youngs, bar.area);
    const int g[4] = {2 * bar.n1, 2 * bar.n1 + 1, 2 * bar.n2, 2 * bar.n2 + 1};
    for (int p = 0; p < 4; ++p) {
      if (index[g[p]] < 0) continue;
      for (int q = 0; q < 4; ++q)
        if (index[g[q]] >= 0) trip.emplace_back(index[g[p]], index[g[q]], r.tangent(p, q));
    }
  }
  SparseMatrix k(dofs(), dofs());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Vector TrussNetwork::reference_load() const { return restrict_vector(full_load_, free_); }

TrussNetwork build_lattice(const doe::ParameterPoint& params, const LatticeConfig& cfg) {
  if (params.dim() != 3) throw UsageError("lattice parameters must be (E, nu, t)");
  if (cfg.bays < 2 || cfg.bays % 2 != 0) throw UsageError("lattice needs an even number of bays >= 2");
  const double e = params.values[0];
  const double nu = params.values[1];
  const double t = params.values[2];
  if (!(e > 0.0) || !(nu > -1.0 && nu < 0.5) || !(t > 0.0)) throw UsageError("lattice: require E > 0, -1 < nu < 0.5, t > 0");

  const int nb = cfg.bays;
  const int per_chord = nb + 1;
  std::vector<Eigen::Vector2d> nodes;
  // bottom chord 0..nb, top chord nb+1..2nb+1
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i <= nb; ++i) nodes.emplace_back(cfg.span * i / nb, c * cfg.depth);

  const double chord_area = t * cfg.chord_width;
  const double diag_area = t * cfg.diagonal_width;
  const double diag_modulus = e / (2.0 * (1.0 + nu));
  auto top = [&](int i) { return per_chord + i; };

  std::vector<TrussBar> bars;
  for (int i = 0; i < nb; ++i) {
    bars.push_back({i, i + 1, e, chord_area});
    bars.push_back({top(i), top(i + 1), e, chord_area});
    // diagonals slope towards mid-span
    if (i < nb / 2)
      bars.push_back({i, top(i + 1), diag_modulus, diag_area});
    else
      bars.push_back({i + 1, top(i), diag_modulus, diag_area});
  }
  for (int i = 0; i <= nb; ++i) bars.push_back({i, top(i), e, chord_area});

  std::vector<int> constrained;
  for (int node : {0, nb, top(0), top(nb)}) {
    constrained.push_back(2 * node);
    constrained.push_back(2 * node + 1);
  }

  Vector load = Vector::Zero(2 * static_cast<int>(nodes.size()));
  load[2 * (nb / 2) + 1] = -0.5 * cfg.total_load;
  load[2 * top(nb / 2) + 1] = -0.5 * cfg.total_load;
  return TrussNetwork(std::move(nodes), std::move(bars), std::move(constrained), std::move(load));
}

// --- load ramp -----------------------------------------------------------------

double LoadRamp::factor(double t) const {
  if (knots_t.empty()) return t;
  if (t <= knots_t.front()) return knots_lambda.front();
  if (t >= knots_t.back()) return knots_lambda.back();
  const auto it = std::upper_bound(knots_t.begin(), knots_t.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - knots_t.begin());
  const double w = (t - knots_t[k - 1]) / (knots_t[k] - knots_t[k - 1]);
  return (1.0 - w) * knots_lambda[k - 1] + w * knots_lambda[k];
}

LoadRamp LoadRamp::uniform(int steps) { return geometric(steps, 1.0); }

LoadRamp LoadRamp::geometric(int steps, double ratio) {
  if (steps < 1) throw UsageError("load ramp needs at least one step");
  if (!(ratio > 0.0)) throw UsageError("geometric ramp ratio must be positive");
  LoadRamp r;
  r.knots_t = {0.0, 1.0};
  r.knots_lambda = {0.0, 1.0};
  std::vector<double> widths(steps);
  double w = 1.0;
  double total = 0.0;
  for (int i = 0; i < steps; ++i) {
    widths[i] = w;
    total += w;
    w *= ratio;
  }
  r.times.resize(steps + 1);
  r.times[0] = 0.0;
  double acc = 0.0;
  for (int i = 0; i < steps; ++i) {
    acc += widths[i];
    r.times[i + 1] = (ratio == 1.0) ? static_cast<double>(i + 1) / steps : acc / total;
  }
  r.times[steps] = 1.0;
  return r;
}

// --- incremental solver --------------------------------------------------------

namespace {

struct StepResult {
  Vector u;
  SparseMatrix avg;
};

std::optional<StepResult> trapezoidal_step(const NonlinearModel& model, const Vector& u_prev,
                                           const SparseMatrix& k_prev, const Vector& df,
                                           const FixedPointOptions& opts) {
  if (df.norm() == 0.0) return StepResult{u_prev, k_prev};
  try {
    Vector u = u_prev + solve_linear(k_prev, df);
    for (int it = 0; it < opts.max_iterations; ++it) {
      const SparseMatrix avg = 0.5 * (k_prev + model.tangent(u));
      const Vector u_next = u_prev + solve_linear(avg, df);
      const double incr = (u_next - u_prev).norm();
      const double change = (u_next - u).norm() / (incr > 0.0 ? incr : 1.0);
      u = u_next;
      if (!u.allFinite()) return std::nullopt;
      if (change < opts.rel_tol) {
        SparseMatrix final_avg = 0.5 * (k_prev + model.tangent(u));
        return StepResult{std::move(u), std::move(final_avg)};
      }
    }
  } catch (const NumericalError&) {
    // non-SPD averaged matrix or collapsed element: let the caller bisect
  }
  return std::nullopt;
}

struct Recorder {
  const NonlinearModel& model;
  const LoadRamp& ramp;
  const FixedPointOptions& opts;
  Vector f_ref;
  std::vector<double> times;
  std::vector<Vector> us;
  std::vector<Vector> fs;
  std::vector<SparseMatrix> avgs;
  SparseMatrix k_current;

  void advance(double t1, int depth) {
    const double t0 = times.back();
    const Vector f1 = ramp.factor(t1) * f_ref;
    const Vector df = f1 - fs.back();
    auto step = trapezoidal_step(model, us.back(), k_current, df, opts);
    if (!step) {
      if (depth >= opts.max_bisections)
        throw NumericalError("nonlinear FOM: fixed point did not converge on [" + std::to_string(t0) + ", " +
                             std::to_string(t1) + "] after " + std::to_string(depth) + " bisections");
      const double mid = 0.5 * (t0 + t1);
      advance(mid, depth + 1);
      advance(t1, depth + 1);
      return;
    }
    times.push_back(t1);
    us.push_back(step->u);
    fs.push_back(f1);
    avgs.push_back(std::move(step->avg));
    k_current = model.tangent(us.back());
  }
};

}  // namespace

NonlinearTrajectory run_nonlinear_fom(const NonlinearModel& model, const doe::ParameterPoint& params,
                                      const LoadRamp& ramp, const FixedPointOptions& opts) {
  if (ramp.steps() < 1) throw UsageError("nonlinear FOM needs at least one load step");
  if (ramp.times.front() != 0.0 || ramp.times.back() != 1.0)
    throw UsageError("load ramp times must run from 0 to 1");
  for (int i = 1; i <= ramp.steps(); ++i)
    if (!(ramp.times[i] > ramp.times[i - 1])) throw UsageError("load ramp times must be strictly increasing");
  if (ramp.factor(0.0) != 0.0) throw UsageError("load ramp must start from zero load");

  const int n = model.dofs();
  Recorder rec{model, ramp, opts, model.reference_load(), {0.0}, {Vector::Zero(n)}, {Vector::Zero(n)}, {}, {}};
  rec.k_current = model.tangent(rec.us.front());
  for (int i = 1; i <= ramp.steps(); ++i) rec.advance(ramp.times[i], 0);

  NonlinearTrajectory traj;
  const int cols = static_cast<int>(rec.times.size());
  traj.times = Eigen::Map<const Vector>(rec.times.data(), cols);
  traj.displacements.resize(n, cols);
  traj.loads.resize(n, cols);
  for (int c = 0; c < cols; ++c) {
    traj.displacements.col(c) = rec.us[c];
    traj.loads.col(c) = rec.fs[c];
  }
  traj.avg_stiffness = std::move(rec.avgs);
  traj.params = params;
  return traj;
}

double max_incremental_residual(const NonlinearTrajectory& traj) {
  double worst = 0.0;
  for (int i = 1; i <= traj.steps(); ++i) {
    const Vector du = traj.displacements.col(i) - traj.displacements.col(i - 1);
    const Vector df = traj.loads.col(i) - traj.loads.col(i - 1);
    const double dn = df.norm();
    if (dn == 0.0) continue;
    worst = std::max(worst, (traj.avg_stiffness[i - 1] * du - df).norm() / dn);
  }
  return worst;
}

}  // namespace romforge::fom
