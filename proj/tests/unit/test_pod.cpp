#include <doctest.h>

#include <random>

#include "romforge/doe.hpp"
#include "romforge/error.hpp"
#include "romforge/fom.hpp"
#include "romforge/pod.hpp"

using namespace romforge;
using namespace romforge::pod;

namespace {

Matrix random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

Matrix random_spd(int n, unsigned seed) {
  const Matrix r = random_matrix(n, n, seed);
  return r * r.transpose() + n * Matrix::Identity(n, n);
}

Matrix orthonormal(int rows, int cols, unsigned seed) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, seed));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

struct PlateSet {
  Matrix u;
  std::vector<SparseMatrix> a;
};

PlateSet plate_set() {
  const doe::ParameterSpace sp{{"E", "nu", "t"}, {100e9, 0.3, 1e-3}, {300e9, 0.49, 10e-3}};
  const auto pts = doe::chebyshev_grid(sp, 4, true);
  PlateSet s;
  s.u.resize(323, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto sys = fom::assemble_plate(pts[i], fom::PlateGrid{}, 1000.0);
    s.u.col(static_cast<Eigen::Index>(i)) = fom::solve_linear(sys.stiffness, sys.load);
    s.a.push_back(sys.stiffness);
  }
  return s;
}

}  // namespace

TEST_CASE("solution basis") {
  SUBCASE("identical columns") {
    const Vector c = Vector::LinSpaced(6, 1.0, 6.0);
    const Matrix s = c.replicate(1, 4);
    const auto b = pod_basis(s, 1000.0);
    REQUIRE(b.size() == 1);
    const Vector mode = b.modes.col(0) * (b.modes(0, 0) > 0 ? 1.0 : -1.0);
    CHECK((mode - c.normalized()).norm() <= 1e-12);
  }
  SUBCASE("rank 3") {
    const Matrix s = random_matrix(40, 3, 1) * random_matrix(3, 12, 2);
    const auto b = pod_basis(s, 1e12);
    CHECK(b.size() == 3);
    CHECK((s - b.modes * (b.modes.transpose() * s)).norm() <= 1e-8 * s.norm());
    CHECK(orthonormality_defect(b.modes) <= 1e-10);
    CHECK(b.full_spectrum.size() == 12);
  }
  SUBCASE("tall and wide give the same spectrum") {
    const Matrix s = random_matrix(8, 30, 4);
    const auto wide = pod_basis(s, 1e3);
    const auto tall = pod_basis(s.leftCols(6), 1e3);
    CHECK(wide.full_spectrum.size() == 8);
    CHECK(tall.full_spectrum.size() == 6);
    CHECK(orthonormality_defect(wide.modes) <= 1e-10);
  }
  SUBCASE("ratio kinds") {
    Matrix s = Matrix::Zero(3, 3);
    s.diagonal() << 100.0, 10.0, 1.0;
    // eigenvalues 1e4, 1e2, 1
    CHECK(pod_basis(s, 100.0, RatioKind::kEigenvalue).size() == 2);
    CHECK(pod_basis(s, 100.0, RatioKind::kSingularValue).size() == 3);
    CHECK(pod_basis(s, 10.0, RatioKind::kSingularValue).size() == 2);
  }
  CHECK_THROWS(pod_basis(Matrix::Zero(4, 2), 10.0));
  CHECK_THROWS(pod_basis(random_matrix(4, 2, 1), 0.5));
}

TEST_CASE("plate snapshots") {
  const auto set = plate_set();
  const auto b = pod_basis(set.u, 1000.0);
  // the reference mesh keeps 2 modes here; the 11x11 Mindlin grid keeps one
  CHECK(b.size() == 1);
  CHECK(pod_basis(set.u, 1e7).size() >= 2);
  for (int j = 0; j < set.u.cols(); ++j) {
    const Vector pod = b.modes * reduce_system(set.a[j], b.modes).ldlt().solve(b.modes.transpose() * (set.a[j] * set.u.col(j)));
    CHECK((pod - set.u.col(j)).norm() <= 0.005 * set.u.col(j).norm());
  }
}

TEST_CASE("reduced system") {
  const Matrix a = random_spd(10, 3);
  SUBCASE("unit vector") {
    Matrix e1 = Matrix::Zero(10, 1);
    e1(0, 0) = 1.0;
    CHECK(reduce_system(a.sparseView(), e1)(0, 0) == a(0, 0));
  }
  SUBCASE("dense oracle") {
    const Matrix v = orthonormal(10, 4, 5);
    const Matrix ar = reduce_system(a.sparseView(), v);
    const Matrix oracle = v.transpose() * a * v;
    CHECK((ar - oracle).norm() <= 1e-12 * oracle.norm());
    CHECK(ar == ar.transpose());
    CHECK(Eigen::LLT<Matrix>(ar).info() == Eigen::Success);
  }
}

TEST_CASE("invert and vectorize") {
  const auto id = invert_and_vectorize(Matrix::Identity(2, 2));
  CHECK(id.values == Vector((Vector(4) << 1, 0, 0, 1).finished()));
  CHECK(id.condition == doctest::Approx(1.0));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 4.0;
  CHECK(invert_and_vectorize(d).values == Vector((Vector(4) << 0.5, 0, 0, 0.25).finished()));
  const Matrix a = random_spd(5, 8);
  const Matrix inv = unvectorize(invert_and_vectorize(a).values, 5);
  CHECK((inv * a - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(vectorize(unvectorize(Vector::LinSpaced(9, 0, 8), 3)) == Vector::LinSpaced(9, 0, 8));
  Matrix sing = Matrix::Identity(2, 2);
  sing(1, 1) = 1e-16;
  CHECK_THROWS_AS(invert_and_vectorize(sing), NumericalError);
}

TEST_CASE("matrix modes") {
  SUBCASE("single snapshot") {
    const Vector b = Vector::LinSpaced(4, 1.0, 4.0);
    const auto mb = matrix_mode_basis(b, 1e6);
    REQUIRE(mb.size() == 1);
    CHECK(std::abs(mb.theta(0, 0)) == doctest::Approx(b.norm()));
  }
  SUBCASE("projection") {
    const Matrix phi = orthonormal(9, 3, 2);
    const Matrix b = phi * random_matrix(3, 7, 3);
    const Matrix theta = project_theta(b, phi);
    CHECK((theta - phi.transpose() * b).norm() <= 1e-12 * b.norm());
    CHECK((phi * theta - b).norm() <= 1e-10 * b.norm());
    // non-orthogonal Phi: normal-equation oracle
    const Matrix raw = random_matrix(9, 3, 9);
    const Matrix t2 = project_theta(b, raw);
    const Matrix oracle = (raw.transpose() * raw).ldlt().solve(raw.transpose() * b);
    CHECK((t2 - oracle).norm() <= 1e-10 * oracle.norm());
  }
  SUBCASE("reconstruction") {
    Matrix b(9, 5);
    for (int j = 0; j < 5; ++j) {
      const auto iv = invert_and_vectorize(random_spd(3, 20 + j));
      b.col(j) = iv.values;
    }
    const auto full = complete_matrix_basis(b);
    CHECK(full.size() == 9);
    CHECK(orthonormality_defect(full.modes) <= 1e-10);
    for (int j = 0; j < 5; ++j) {
      const Matrix rec = reconstruct_inverse(full.theta.col(j), full.modes, 3);
      CHECK((vectorize(rec) - b.col(j)).norm() <= 1e-10 * b.col(j).norm());
      CHECK(reconstruction_symmetry_defect(full.theta.col(j), full.modes, 3) <= 1e-12);
    }
    const auto trunc = matrix_mode_basis(b, 1e12);
    CHECK(trunc.size() == 5);
    CHECK(orthonormality_defect(trunc.modes) <= 1e-10);
    CHECK((reconstruct_inverse(trunc.theta.col(2), trunc.modes, 3) - unvectorize(b.col(2), 3)).norm() <=
          1e-10 * b.col(2).norm());
    CHECK(reconstruct_inverse(Vector::Zero(5), trunc.modes, 3).norm() == 0.0);
  }
  SUBCASE("plate inverses have a compact basis") {
    const auto set = plate_set();
    const auto v = pod_basis(set.u, 1e8);
    Matrix b(v.size() * v.size(), set.u.cols());
    for (int j = 0; j < set.u.cols(); ++j) b.col(j) = invert_and_vectorize(reduce_system(set.a[j], v.modes)).values;
    const auto mb = matrix_mode_basis(b, 1e6);
    CHECK(mb.size() <= v.size() * (v.size() + 1) / 2);
    CHECK(orthonormality_defect(mb.modes) <= 1e-10);
  }
}
