#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "romforge/snapshot_store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using romforge::io::read_json_file;
using romforge::io::read_text_file;
using romforge::io::write_json_file;

namespace {

const fs::path kWork = fs::temp_directory_path() / "romforge_test_cli";

struct Run {
  int code = -1;
  std::string err;
};

Run run(const std::string& args) {
  const fs::path err = kWork / "stderr.txt";
  const std::string cmd = std::string(ROMFORGE_CLI_PATH) + " " + args + " >" + (kWork / "stdout.txt").string() + " 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text_file(err);
  return r;
}

std::string p(const std::string& name) { return (kWork / name).string(); }

// one-time setup: plan, plate snapshots and a trained model shared by the cases below
struct Fixture {
  Fixture() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    write_json_file(kWork / "space.json",
                    json{{"names", {"E", "nu", "t"}}, {"lower", {100e9, 0.3, 1e-3}}, {"upper", {300e9, 0.49, 10e-3}}});
    write_json_file(kWork / "spring_space.json", json{{"names", {"k", "k3"}}, {"lower", {1.0, 0.1}}, {"upper", {2.0, 1.0}}});
    write_json_file(kWork / "point.json", json{{"E", 2e11}, {"nu", 0.35}, {"t", 4e-3}});
    write_json_file(kWork / "spring_point.json", json{{"k", 1.0}, {"k3", 1.0}});
    doe = run("doe --method chebyshev --order 3 --center --space " + p("space.json") + " --out " + p("plan.json"));
    fom = run("fom plate --params " + p("plan.json") + " --grid 7 --out " + p("snap"));
    train = run("train --snapshots " + p("snap") + " --out " + p("model") + " --report " + p("report") +
                " --seed 9 --regressor pgd");
  }
  Run doe, fom, train;
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("linear workflow") {
  const auto& f = fixture();
  REQUIRE(f.doe.code == 0);
  CHECK(read_json_file(kWork / "plan.json").at("points").size() == 27);  // odd order: centre already on the grid
  REQUIRE(f.fom.code == 0);
  CHECK(fs::exists(kWork / "snap" / "manifest.json"));
  REQUIRE(f.train.code == 0);
  for (const char* file : {"meta.json", "V.mm", "Phi.mm", "scaler.json", "pgd.json"}) CHECK(fs::exists(kWork / "model" / file));
  CHECK(fs::exists(kWork / "report" / "summary.json"));

  SUBCASE("validate reproduces the training report") {
    const auto r = run("validate --model " + p("model") + " --snapshots " + p("snap") + " --out " + p("val"));
    CHECK(r.code == 0);
    CHECK(read_text_file(kWork / "val" / "report.csv") == read_text_file(kWork / "report" / "report.csv"));
  }
  SUBCASE("predict") {
    const auto r = run("predict --model " + p("model") + " --params " + p("point.json") + " --out " + p("pred"));
    CHECK(r.code == 0);
    CHECK(fs::exists(kWork / "pred" / "u.mm"));
    CHECK(fs::exists(kWork / "pred" / "diagnostics.csv"));
  }
  SUBCASE("predict with a mismatched kind") {
    const auto r = run("predict --kind nonlinear --model " + p("model") + " --params " + p("point.json") + " --out " +
                       p("pred2"));
    CHECK(r.code == 2);
  }
}

TEST_CASE("data errors") {
  fixture();
  const auto r = run("train --snapshots " + p("missing_dir") + " --out " + p("m2") + " --seed 1");
  CHECK(r.code == 3);
  CHECK(r.err.find("missing_dir") != std::string::npos);
  const auto bad_model = run("validate --model " + p("snap") + " --snapshots " + p("snap") + " --out " + p("v2"));
  CHECK(bad_model.code == 3);
}

TEST_CASE("usage errors") {
  fixture();
  CHECK(run("train --snapshots " + p("snap") + " --out " + p("m3")).code == 2);  // no seed
  CHECK(run("train --snapshots " + p("snap") + " --out " + p("snap") + " --seed 1").code == 2);
  CHECK(run("train --snapshots " + p("snap") + " --out " + p("snap/inner") + " --seed 1").code == 2);
  CHECK(run("fom beam --params " + p("point.json") + " --space " + p("space.json") + " --out " + p("s2")).code == 2);
  CHECK(run("train --bogus-flag").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("--help").code == 0);
  const auto v = run("--version");
  CHECK(v.code == 0);
  CHECK(read_text_file(kWork / "stdout.txt").find("model bundle format") != std::string::npos);
}

TEST_CASE("config files") {
  fixture();
  SUBCASE("values taken from the file") {
    write_json_file(kWork / "train.json", json{{"seed", 9}, {"regressor", "pgd"}, {"snapshots", p("snap")}});
    const auto r = run("train --config " + p("train.json") + " --out " + p("model_cfg"));
    REQUIRE(r.code == 0);
    CHECK(read_text_file(kWork / "model_cfg" / "V.mm") == read_text_file(kWork / "model" / "V.mm"));
    CHECK(read_text_file(kWork / "model_cfg" / "pgd.json") == read_text_file(kWork / "model" / "pgd.json"));
  }
  SUBCASE("command line wins") {
    write_json_file(kWork / "train2.json", json{{"seed", 9}, {"regressor", "forest"}, {"snapshots", p("snap")}});
    const auto r = run("train --config " + p("train2.json") + " --regressor pgd --out " + p("model_cfg2"));
    REQUIRE(r.code == 0);
    CHECK(fs::exists(kWork / "model_cfg2" / "pgd.json"));
  }
  SUBCASE("unknown key") {
    write_json_file(kWork / "train3.json", json{{"seed", 9}, {"colour", "red"}});
    const auto r = run("train --config " + p("train3.json") + " --snapshots " + p("snap") + " --out " + p("m4"));
    CHECK(r.code == 2);
    CHECK(r.err.find("colour") != std::string::npos);
  }
}

TEST_CASE("nonlinear commands") {
  fixture();
  SUBCASE("spring run and nonlinear predict") {
    REQUIRE(run("doe --method lhs --count 6 --seed 2 --space " + p("spring_space.json") + " --out " + p("splan.json")).code == 0);
    REQUIRE(run("fom spring --params " + p("splan.json") + " --steps 20 --jobs 2 --out " + p("ssnap")).code == 0);
    REQUIRE(run("train --snapshots " + p("ssnap") + " --out " + p("smodel") + " --seed 3 --train-count 5").code == 0);
    const auto r = run("predict --kind nonlinear --model " + p("smodel") + " --params " + p("spring_point.json") +
                       " --out " + p("spred"));
    CHECK(r.code == 0);
    CHECK(fs::exists(kWork / "spred" / "times.csv"));
    CHECK(fs::exists(kWork / "spred" / "xi.mm"));
    CHECK(run("predict --kind linear --model " + p("smodel") + " --params " + p("spring_point.json") + " --out " +
              p("spred2"))
              .code == 2);
  }
  SUBCASE("solver failure is a numerical error") {
    const auto r = run("fom spring --params " + p("spring_point.json") + " --space " + p("spring_space.json") +
                       " --load 1e6 --steps 1 --out " + p("sfail"));
    CHECK(r.code == 4);
    CHECK_FALSE(fs::exists(kWork / "sfail"));
  }
  SUBCASE("json logs") {
    const auto r = run("--json-logs train --snapshots " + p("nowhere") + " --out " + p("m5") + " --seed 1");
    CHECK(r.code == 3);
    const auto line = r.err.substr(0, r.err.find('\n'));
    const auto j = json::parse(line);
    CHECK(j.at("level") == "error");
  }
}
