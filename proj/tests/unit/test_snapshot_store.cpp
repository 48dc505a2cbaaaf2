#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include "romforge/dirichlet.hpp"
#include "romforge/error.hpp"
#include "romforge/fom.hpp"
#include "romforge/lab.hpp"
#include "romforge/matrix_market.hpp"
#include "romforge/snapshot_store.hpp"

using namespace romforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("romforge_test_store_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

bool same_bits(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const Matrix da(a), db(b);
  return std::memcmp(da.data(), db.data(), sizeof(double) * da.size()) == 0;
}

const doe::ParameterSpace kSpace{{"E", "nu", "t"}, {100e9, 0.3, 1e-3}, {300e9, 0.49, 10e-3}};

lab::Campaign small_campaign(lab::ModelKind kind) {
  std::vector<doe::PlanPoint> pts;
  for (const auto& p : doe::latin_hypercube(kSpace, 3, 4)) pts.push_back({p, false});
  lab::LabConfig cfg;
  cfg.model = kind;
  cfg.steps = 5;
  return lab::run_campaign(kSpace, pts, cfg);
}

}  // namespace

TEST_CASE("sparse exchange files") {
  SUBCASE("identity body") {
    SparseMatrix id(2, 2);
    id.setIdentity();
    std::ostringstream out;
    io::write_sparse(out, id);
    std::istringstream in(out.str());
    std::string line;
    int body = 0;
    bool size_seen = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '%') continue;
      if (!size_seen) {
        size_seen = true;
        continue;
      }
      ++body;
    }
    CHECK(body == 2);
  }
  SUBCASE("plate stiffness round trip") {
    const auto sys = fom::assemble_plate(doe::ParameterPoint{{187e9, 0.41, 3.3e-3}}, fom::PlateGrid{}, 1000.0);
    std::stringstream s;
    io::write_sparse(s, sys.stiffness);
    CHECK(same_bits(io::read_sparse(s), sys.stiffness));
  }
  SUBCASE("unsymmetric matrix keeps both triangles") {
    Matrix m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    std::stringstream s;
    io::write_sparse(s, m.sparseView());
    CHECK(Matrix(io::read_sparse(s)) == m);
  }
  SUBCASE("zero index names the line") {
    std::istringstream in("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n");
    const std::string msg = error_of([&] { io::read_sparse(in, "bad.mtx"); });
    CHECK(msg.find("bad.mtx:3") != std::string::npos);
  }
  SUBCASE("truncated") {
    std::istringstream in("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
    CHECK(error_of([&] { io::read_sparse(in); }).find("expected 2") != std::string::npos);
  }
}

TEST_CASE("dense exchange files") {
  SUBCASE("1x1") {
    Matrix m(1, 1);
    m(0, 0) = 3.5;
    std::stringstream s;
    io::write_dense(s, m);
    CHECK(io::read_dense(s)(0, 0) == 3.5);
  }
  SUBCASE("363 x 65 round trip") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    Matrix m(363, 65);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng) * std::pow(10.0, static_cast<int>(i % 40) - 20);
    std::stringstream s;
    io::write_dense(s, m);
    const Matrix back = io::read_dense(s);
    REQUIRE(back.size() == m.size());
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * m.size()) == 0);
  }
  SUBCASE("truncated counts") {
    std::istringstream in("%%MatrixMarket matrix array real general\n2 2\n1.0\n2.0\n3.0\n");
    const std::string msg = error_of([&] { io::read_dense(in); });
    CHECK(msg.find("expected 4") != std::string::npos);
    CHECK(msg.find("found 3") != std::string::npos);
  }
  CHECK(io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("dirichlet elimination") {
  Matrix a(3, 3);
  a << 4, 1, 2, 1, 5, 3, 2, 3, 6;
  const Vector f = Vector::LinSpaced(3, 1.0, 3.0);
  SUBCASE("nothing eliminated") {
    const auto sys = apply_dirichlet(a.sparseView(), f, {});
    CHECK(Matrix(sys.stiffness) == a);
    CHECK(sys.load == f);
    CHECK(sys.dof_map == std::vector<int>{0, 1, 2});
  }
  SUBCASE("middle DOF") {
    const std::vector<int> bc{1};
    const auto sys = apply_dirichlet(a.sparseView(), f, bc);
    Matrix expect(2, 2);
    expect << 4, 2, 2, 6;
    CHECK(Matrix(sys.stiffness) == expect);
    CHECK(sys.load[1] == 3.0);
    CHECK(expand_vector(restrict_vector(f, sys.dof_map), sys.dof_map, 3) == Vector((Vector(3) << 1, 0, 3).finished()));
  }
  SUBCASE("bad lists") {
    const std::vector<int> unsorted{2, 1};
    const std::vector<int> out_of_range{3};
    CHECK_THROWS(apply_dirichlet(a.sparseView(), f, unsorted));
    CHECK_THROWS(apply_dirichlet(a.sparseView(), f, out_of_range));
  }
  SUBCASE("plate boundary count") {
    const auto full = fom::assemble_plate_full({200e9, 0.3, 5e-3}, fom::PlateGrid{}, 1000.0);
    CHECK(full.constrained.size() == 40);
    const auto sys = apply_dirichlet(full.stiffness, full.load, full.constrained);
    CHECK(sys.stiffness.rows() == 323);
    CHECK(retained_dofs(363, full.constrained) == sys.dof_map);
  }
}

TEST_CASE("manifest round trip") {
  const fs::path dir = scratch("linear");
  const auto c = small_campaign(lab::ModelKind::kPlate);
  lab::write_campaign(dir, c);
  const auto m = io::load_manifest(dir / "manifest.json");
  CHECK(m.kind == io::ProblemKind::kLinear);
  CHECK(m.dofs == 323);
  REQUIRE(m.entries.size() == 3);
  CHECK(m.retained_classes().size() == 323);
  CHECK(m.retained_classes()[0] == "rotation");
  const auto b = io::read_bundle(m, m.entries[1]);
  CHECK(b.displacements == c.bundles[1].displacements);
  CHECK(same_bits(b.stiffness[0], c.bundles[1].stiffness[0]));
  CHECK_FALSE(b.times.has_value());

  SUBCASE("directory path accepted") { CHECK(io::load_manifest(dir).entries.size() == 3); }
  SUBCASE("mixed N rejected") {
    io::write_dense(dir / m.entries[2].path / "u.mm", Matrix::Zero(10, 1));
    CHECK_THROWS_AS(io::load_manifest(dir / "manifest.json"), DataError);
  }
  SUBCASE("unknown key rejected") {
    auto j = io::read_json_file(dir / "manifest.json");
    j["extra"] = 1;
    io::write_json_file(dir / "manifest.json", j);
    CHECK_THROWS_AS(io::load_manifest(dir / "manifest.json"), DataError);
  }
  SUBCASE("missing manifest names the path") {
    const std::string msg = error_of([&] { io::load_manifest(dir / "nope.json"); });
    CHECK(msg.find("nope.json") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("nonlinear bundles") {
  const fs::path dir = scratch("nonlinear");
  const auto c = small_campaign(lab::ModelKind::kTruss);
  lab::write_campaign(dir, c);
  const auto m = io::load_manifest(dir);
  CHECK(m.kind == io::ProblemKind::kNonlinear);
  // five ramp steps, plus any bisections the solver recorded
  const int steps = m.entries[0].steps;
  CHECK(steps >= 5);
  const auto b = io::read_bundle(m, m.entries[0]);
  REQUIRE(b.times.has_value());
  CHECK(b.times->size() == steps + 1);
  CHECK(static_cast<int>(b.stiffness.size()) == steps);
  CHECK(b.displacements == c.bundles[0].displacements);
  fs::remove(dir / m.entries[0].path / "times.csv");
  const std::string msg = error_of([&] { io::load_manifest(dir); });
  CHECK(msg.find("times") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("snapshot writer") {
  const fs::path dir = scratch("writer");
  const auto sys = fom::assemble_plate(doe::ParameterPoint{{200e9, 0.3, 5e-3}}, fom::PlateGrid{5, 5, 1.0}, 10.0);
  io::SnapshotWriter w(dir, io::ProblemKind::kLinear, kSpace, {75, 3, {"translation", "rotation", "rotation"}},
                       sys.eliminated, static_cast<int>(sys.load.size()));
  w.add("a", doe::ParameterPoint{{200e9, 0.3, 5e-3}}, io::bundle_from_linear(sys, fom::solve_linear(sys.stiffness, sys.load)));
  CHECK_THROWS_AS(w.add("b", doe::ParameterPoint{{200e9, 0.3, 5e-3}}, io::SnapshotBundle{Matrix::Zero(3, 1), {}, Matrix::Zero(3, 1), {}}),
                  DataError);
  const auto m = w.finish();
  CHECK(io::load_manifest(dir).entries.size() == 1);
  CHECK(m.entries[0].id == "a");
  fs::remove_all(dir);
}
