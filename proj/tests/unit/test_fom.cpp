#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "romforge/dirichlet.hpp"
#include "romforge/error.hpp"
#include "romforge/fom.hpp"
#include "romforge/lab.hpp"
#include "romforge/metrics.hpp"
#include "romforge/nonlinear.hpp"

using namespace romforge;
using namespace romforge::fom;

namespace {

const doe::ParameterPoint kMid{{200e9, 0.395, 5.5e-3}};

Vector random_vector(int n, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Kirchhoff plate, simply supported square, centre point load
double navier_center(double p, double side, double d_flex, int terms) {
  const double pi = std::numbers::pi;
  double sum = 0.0;
  for (int m = 1; m <= terms; m += 2)
    for (int n = 1; n <= terms; n += 2) {
      const double q = static_cast<double>(m * m + n * n) / (side * side);
      sum += 1.0 / (q * q);
    }
  return 4.0 * p / (std::pow(pi, 4) * side * side * d_flex) * sum;
}

int center_w(const LinearSystem& sys, int nx) {
  const int node = (nx / 2) * nx + nx / 2;
  for (std::size_t i = 0; i < sys.dof_map.size(); ++i)
    if (sys.dof_map[i].node == node && sys.dof_map[i].local == kW) return static_cast<int>(i);
  return -1;
}

double bisect_cubic(double k, double k3, double f) {
  double lo = 0.0, hi = f / k;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (k * mid + k3 * mid * mid * mid < f ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("plate assembly") {
  const PlateGrid grid;
  const auto sys = assemble_plate(kMid, grid, 1000.0);
  CHECK(sys.full_dofs == 363);
  CHECK(sys.eliminated.size() == 40);
  CHECK(sys.load.size() == 323);
  CHECK(symmetry_defect(sys.stiffness) < 1e-14);
  const Vector u = solve_linear(sys.stiffness, sys.load);
  CHECK(relative_residual(sys.stiffness, u, sys.load) <= 1e-10);
  CHECK(metrics::elastic_energy(u, sys.load) > 0.0);
  const double quad = 0.5 * u.dot(sys.stiffness * u);
  CHECK(std::abs(quad - metrics::elastic_energy(u, sys.load)) <= 1e-8 * quad);

  const auto zero = assemble_plate(kMid, grid, 0.0);
  CHECK(solve_linear(zero.stiffness, zero.load).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(assemble_plate(doe::ParameterPoint{{200e9, 0.6, 1e-3}}, grid, 1.0), UsageError);
  CHECK_THROWS_AS(assemble_plate(doe::ParameterPoint{{200e9, 0.3}}, grid, 1.0), UsageError);
}

TEST_CASE("plate against the Navier series") {
  const double side = 1.0, t = 0.01, e = 200e9, nu = 0.3, p = 1000.0;
  const double d_flex = e * t * t * t / (12.0 * (1.0 - nu * nu));
  const double ref = navier_center(p, side, d_flex, 200);
  for (int nx : {11, 21}) {
    const PlateGrid grid{nx, nx, side};
    const auto sys = assemble_plate(doe::ParameterPoint{{e, nu, t}}, grid, p);
    const Vector u = solve_linear(sys.stiffness, sys.load);
    const int c = center_w(sys, nx);
    REQUIRE(c >= 0);
    const double w = std::abs(u[c]);
    MESSAGE("grid " << nx << ": w " << w << " navier " << ref);
    CHECK(std::abs(w - ref) <= 0.05 * ref);
  }
}

TEST_CASE("linear solver") {
  SparseMatrix id(3, 3);
  id.setIdentity();
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  CHECK((solve_linear(id, e1) - e1).norm() == 0.0);

  const int n = 20;
  Matrix r(n, n);
  for (int j = 0; j < n; ++j) r.col(j) = random_vector(n, 100 + j);
  const Matrix spd = r * r.transpose() + n * Matrix::Identity(n, n);
  const Vector f = random_vector(n, 9);
  const Vector u = solve_linear(spd.sparseView(), f);
  const Vector oracle = spd.inverse() * f;
  CHECK((u - oracle).norm() <= 1e-10 * oracle.norm());

  Matrix indef = Matrix::Identity(2, 2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(solve_linear(indef.sparseView(), Vector::Ones(2)), NumericalError);
  CHECK_THROWS_AS(solve_linear(id, Vector::Ones(2)), DataError);
}

TEST_CASE("spring chain") {
  SUBCASE("single spring") {
    Vector u(1);
    u << 1.0;
    CHECK(Matrix(spring_chain_tangent(u, 1.0, 1.0))(0, 0) == doctest::Approx(4.0));
    CHECK(spring_chain_internal_force(u, 1.0, 1.0)[0] == doctest::Approx(2.0));
  }
  SUBCASE("linear chain") {
    const Vector u = random_vector(4, 3);
    const Matrix k0 = Matrix(spring_chain_tangent(Vector::Zero(4), 2.0, 0.0));
    CHECK((Matrix(spring_chain_tangent(u, 2.0, 0.0)) - k0).norm() == 0.0);
    CHECK(k0(0, 0) == 4.0);
    CHECK(k0(0, 1) == -2.0);
    CHECK(k0(3, 3) == 2.0);
  }
  SUBCASE("endpoint of a hardening spring") {
    const double k = 1.0, k3 = 0.01, f = 1.01;
    const SpringChain chain(1, k, k3, f);
    const auto traj = run_nonlinear_fom(chain, doe::ParameterPoint{{k, k3}}, LoadRamp::uniform(200));
    const double x = traj.displacements(0, traj.displacements.cols() - 1);
    const double root = bisect_cubic(k, k3, f);
    MESSAGE("endpoint " << x << " root " << root);
    CHECK(std::abs(x - root) <= 1e-6 * root);
  }
  SUBCASE("linear model is solved exactly") {
    const SpringChain chain(3, 5.0, 0.0, 2.0);
    const auto traj = run_nonlinear_fom(chain, doe::ParameterPoint{{5.0, 0.0}}, LoadRamp::uniform(7));
    const Vector lin = solve_linear(chain.tangent(Vector::Zero(3)), chain.reference_load());
    const Vector end = traj.displacements.col(traj.displacements.cols() - 1);
    CHECK((end - lin).norm() <= 1e-10 * lin.norm());
  }
  CHECK_THROWS_AS(SpringChain(0, 1.0, 1.0, 1.0), UsageError);
  CHECK_THROWS_AS(SpringChain(1, 0.0, 1.0, 1.0), UsageError);
}

TEST_CASE("truss element") {
  const Eigen::Vector2d x1(0.0, 0.0), x2(2.0, 0.0);
  const double ea = 3.0;
  SUBCASE("reference state is the linear bar") {
    const auto r = truss_tangent(x1, x2, Eigen::Vector4d::Zero(), ea, 1.0);
    Eigen::Matrix4d lin = Eigen::Matrix4d::Zero();
    lin(0, 0) = lin(2, 2) = ea / 2.0;
    lin(0, 2) = lin(2, 0) = -ea / 2.0;
    CHECK((r.tangent - lin).norm() <= 1e-14);
    CHECK(r.internal_force.norm() == 0.0);
  }
  SUBCASE("rigid rotation is stress free") {
    const double a = 0.7;
    const Eigen::Vector2d y2 = Eigen::Vector2d(std::cos(a), std::sin(a)) * 2.0;
    Eigen::Vector4d disp;
    disp << 0.0, 0.0, y2.x() - x2.x(), y2.y() - x2.y();
    const auto r = truss_tangent(x1, x2, disp, ea, 1.0);
    CHECK(r.internal_force.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(r.green_strain) <= 1e-15);
  }
  SUBCASE("collapsed bar") {
    Eigen::Vector4d disp;
    disp << 0.0, 0.0, -2.0, 0.0;
    CHECK_THROWS_AS(truss_tangent(x1, x2, disp, ea, 1.0), NumericalError);
  }
}

TEST_CASE("lattice") {
  const LatticeConfig cfg;
  const auto net = build_lattice(kMid, cfg);
  CHECK(net.full_dofs() == 2 * 2 * (cfg.bays + 1));
  CHECK(net.constrained().size() == 8);
  CHECK(net.dofs() == 36);
  CHECK(net.reference_load().sum() == doctest::Approx(-cfg.total_load));
  CHECK_THROWS_AS(build_lattice(kMid, LatticeConfig{1.0, 0.05, 3}), UsageError);

  SUBCASE("118-step run") {
    const auto traj = run_nonlinear_fom(net, kMid, LoadRamp::uniform(118));
    CHECK(traj.steps() == 118);
    CHECK(traj.displacements.cols() == 119);
    CHECK(traj.times.size() == 119);
    CHECK(traj.displacements.col(0).norm() == 0.0);
    CHECK(max_incremental_residual(traj) <= 1e-8);
    // membrane hardening: less deflection than the linear response
    const Vector lin = solve_linear(net.tangent(Vector::Zero(net.dofs())), net.reference_load());
    const Vector end = traj.displacements.col(118);
    CHECK(end.cwiseAbs().maxCoeff() < 0.9 * lin.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("load ramps") {
  const auto u = LoadRamp::uniform(4);
  REQUIRE(u.times.size() == 5);
  CHECK(u.times[2] == doctest::Approx(0.5));
  CHECK(u.factor(0.25) == doctest::Approx(0.25));
  const auto g = LoadRamp::geometric(3, 2.0);
  CHECK(g.times[1] == doctest::Approx(1.0 / 7.0));
  CHECK(g.times[3] == 1.0);
  CHECK_THROWS_AS(LoadRamp::uniform(0), UsageError);
  CHECK_THROWS_AS(LoadRamp::geometric(3, -1.0), UsageError);
}

TEST_CASE("bisection on a hard step") {
  // one step to a large load cannot converge by plain fixed point; the solver subdivides
  const SpringChain chain(1, 1.0, 1.0, 5.0);
  FixedPointOptions opts;
  const auto traj = run_nonlinear_fom(chain, doe::ParameterPoint{{1.0, 1.0}}, LoadRamp::uniform(1), opts);
  CHECK(traj.steps() > 1);
  CHECK(traj.times[traj.times.size() - 1] == 1.0);
  CHECK(max_incremental_residual(traj) <= 1e-8);
  opts.max_bisections = 0;
  CHECK_THROWS_AS(run_nonlinear_fom(chain, doe::ParameterPoint{{1.0, 1.0}}, LoadRamp::uniform(1), opts),
                  NumericalError);
}

TEST_CASE("campaign is independent of the worker count") {
  const doe::ParameterSpace sp{{"E", "nu", "t"}, {100e9, 0.3, 1e-3}, {300e9, 0.49, 10e-3}};
  std::vector<doe::PlanPoint> pts;
  for (const auto& p : doe::latin_hypercube(sp, 5, 11)) pts.push_back({p, false});
  lab::LabConfig cfg;
  cfg.model = lab::ModelKind::kTruss;
  cfg.steps = 20;
  const auto a = lab::run_campaign(sp, pts, cfg, 1);
  const auto b = lab::run_campaign(sp, pts, cfg, 3);
  REQUIRE(a.bundles.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK((a.bundles[i].displacements.array() == b.bundles[i].displacements.array()).all());
  CHECK(a.manifest.entries[4].id == "004");
  CHECK(a.manifest.kind == io::ProblemKind::kNonlinear);

  const doe::ParameterSpace wrong{{"k", "k3"}, {1.0, 0.0}, {2.0, 1.0}};
  std::vector<doe::PlanPoint> wp{{wrong.midpoint(), false}};
  CHECK_THROWS_AS(lab::run_campaign(wrong, wp, cfg, 1), DataError);
  cfg.model = lab::ModelKind::kSpring;
  CHECK(lab::run_campaign(wrong, wp, cfg, 1).manifest.dofs == 1);
}
