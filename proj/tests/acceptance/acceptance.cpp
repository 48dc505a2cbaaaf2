// End-to-end acceptance run: one PASS/FAIL line per criterion, INFO lines for reference configurations.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "romforge/lab.hpp"
#include "romforge/metrics.hpp"
#include "romforge/offline.hpp"
#include "romforge/online.hpp"
#include "romforge/report.hpp"
#include "romforge/rom_model.hpp"

using namespace romforge;
namespace fs = std::filesystem;

namespace {

const doe::ParameterSpace kSpace{{"E", "nu", "t"}, {100e9, 0.3, 1e-3}, {300e9, 0.49, 10e-3}};
constexpr std::uint64_t kSeed = 42;

int g_failures = 0;

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void verdict(bool ok, const std::string& criterion, const std::string& detail) {
  if (!ok) ++g_failures;
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", criterion.c_str(), detail.c_str());
  std::fflush(stdout);
}

void info(const std::string& what, const std::string& detail) {
  std::printf("[INFO] %s: %s\n", what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::vector<doe::PlanPoint> chebyshev_plan() {
  std::vector<doe::PlanPoint> pts;
  for (const auto& p : doe::chebyshev_grid(kSpace, 4, true)) pts.push_back({p, false});
  return pts;
}

rom::TrainConfig linear_config() {
  rom::TrainConfig cfg;
  cfg.split.train_count = 54;
  cfg.split.seed = kSeed;
  cfg.forest.seed = kSeed;
  cfg.regressor = rom::RegressorKind::kPgd;
  return cfg;
}

rom::TrainConfig parametric_config() {
  rom::TrainConfig cfg;
  cfg.ratio_v = 1e6;
  cfg.split.train_count = 59;
  cfg.split.seed = kSeed;
  cfg.forest.seed = kSeed;
  cfg.regressor = rom::RegressorKind::kPgd;
  cfg.pgd.max_degree = 3;
  cfg.use_time = true;
  cfg.use_dt = true;
  cfg.use_xi = false;
  return cfg;
}

// max over steps of the relative difference between two trajectories (column 0 is the zero state)
double trajectory_gap(const Matrix& ref, const Matrix& got) {
  double worst = 0.0;
  for (Eigen::Index c = 1; c < ref.cols(); ++c)
    worst = std::max(worst, (ref.col(c) - got.col(c)).norm() / ref.col(c).norm());
  return worst;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_text_file(e.path());
  return files;
}

struct LinearRun {
  lab::Campaign campaign;
  rom::TrainResult trained;
  report::ValidationReport report;
};

LinearRun linear_pipeline(const rom::TrainConfig& cfg) {
  LinearRun r;
  r.campaign = lab::run_campaign(kSpace, chebyshev_plan(), {});
  r.trained = rom::train_offline(r.campaign.manifest, r.campaign.bundles, cfg);
  r.report = report::build_report(r.campaign.manifest, r.campaign.bundles, r.trained.model);
  return r;
}

void criterion_1() {
  const Stopwatch sw;
  const auto run = linear_pipeline(linear_config());
  const double secs = sw.seconds();
  const auto& rep = run.report;
  const bool ok = run.campaign.manifest.layout.full_dofs == 363 && rep.validation.cases == 11 &&
                  rep.all.pod_rel_max <= 0.5 && rep.validation.delta_b_max <= 2.0 && rep.all.energy_err_max <= 2.0 &&
                  rep.validation.ml_mean_deflection_max <= 1.0 && secs <= 120.0;
  verdict(ok, "1 linear parametric pipeline",
          fmt("sPGD, n=%d R=%d, 54/%d split; POD-ROM max %.3g%% (<=0.5), validation dB max %.3g%% (<=2), "
              "energy max %.3g%% (<=2), validation mean-deflection max %.3g%% (<=1); %.1f s (<=120)",
              run.trained.model.n(), run.trained.model.r(), rep.validation.cases, rep.all.pod_rel_max,
              rep.validation.delta_b_max, rep.all.energy_err_max, rep.validation.ml_mean_deflection_max, secs));

  auto rf_cfg = linear_config();
  rf_cfg.regressor = rom::RegressorKind::kForest;
  const auto rf = rom::train_offline(run.campaign.manifest, run.campaign.bundles, rf_cfg);
  const auto rf_rep = report::build_report(run.campaign.manifest, run.campaign.bundles, rf.model);
  info("1 with the random forest",
       fmt("validation dB max %.3g%%, energy max %.3g%%, validation mean-deflection max %.3g%%, R2(theta_1) %.3f",
           rf_rep.validation.delta_b_max, rf_rep.all.energy_err_max, rf_rep.validation.ml_mean_deflection_max,
           rf_rep.validation.r2.empty() ? 0.0 : rf_rep.validation.r2[0]));
}

void criterion_2() {
  const Stopwatch sw;
  const auto mu = kSpace.midpoint();
  lab::LabConfig lc;
  lc.model = lab::ModelKind::kTruss;
  lc.steps = 118;
  const auto campaign = lab::run_campaign(kSpace, {{mu, false}}, lc);
  rom::TrainConfig cfg;
  cfg.split.mode = rom::SplitMode::kStep;
  cfg.split.train_fraction = 0.85;
  cfg.split.seed = kSeed;
  cfg.forest.seed = kSeed;
  const auto trained = rom::train_offline(campaign.manifest, campaign.bundles, cfg);
  const auto rep = report::build_report(campaign.manifest, campaign.bundles, trained.model);
  const double secs = sw.seconds();
  const auto& row = rep.rows.front();
  const bool ok = row.steps >= 118 && row.ml_rel <= 7.5 && secs <= 120.0;
  verdict(ok, "2 nonlinear fixed-parameter run",
          fmt("truss N=%d, %d steps, forest on (mu, t, dt, xi), %d/%d step split, n=%d R=%d; terminal error %.3g%% "
              "(<=7.5), POD-ROM %.3g%%; %.1f s (<=120)",
              campaign.manifest.dofs, row.steps, rep.train.samples, rep.validation.samples, trained.model.n(),
              trained.model.r(), row.ml_rel, row.pod_rel, secs));
}

struct ParametricRun {
  lab::Campaign campaign;
  double fom_seconds = 0.0;
};

ParametricRun parametric_campaign() {
  const Stopwatch sw;
  lab::LabConfig lc;
  lc.model = lab::ModelKind::kTruss;
  lc.steps = 118;
  ParametricRun p{lab::run_campaign(kSpace, chebyshev_plan(), lc), 0.0};
  p.fom_seconds = sw.seconds();
  return p;
}

void criterion_3(const ParametricRun& p) {
  const Stopwatch sw;
  const auto trained = rom::train_offline(p.campaign.manifest, p.campaign.bundles, parametric_config());
  const auto rep = report::build_report(p.campaign.manifest, p.campaign.bundles, trained.model);
  const double secs = p.fom_seconds + sw.seconds();
  const double max_err = rep.validation.ml_mean_deflection_max;
  const double mean_err = rep.validation.ml_mean_deflection_mean;
  const bool ok = rep.validation.cases == 6 && max_err <= 8.7 && mean_err <= 5.0 && secs <= 600.0;
  verdict(ok, "3 nonlinear parametric run",
          fmt("65 truss trajectories, 59/%d case split, sPGD on (mu, t, dt), n=%d R=%d; validation max DOF error "
              "%.3g%% (<=8.7), mean %.3g%% (<=5); %.1f s (<=600)",
              rep.validation.cases, trained.model.n(), trained.model.r(), max_err, mean_err, secs));

  // reference configuration: forest on (mu, t, dt, xi) at the default truncation
  rom::TrainConfig rf;
  rf.split.train_count = 59;
  rf.split.seed = kSeed;
  rf.forest.seed = kSeed;
  try {
    const auto t = rom::train_offline(p.campaign.manifest, p.campaign.bundles, rf);
    const auto r = report::build_report(p.campaign.manifest, p.campaign.bundles, t.model);
    info("3 with the forest on (mu, t, dt, xi)",
         fmt("n=%d R=%d; validation max DOF error %.3g%%, mean %.3g%%", t.model.n(), t.model.r(),
             r.validation.ml_mean_deflection_max, r.validation.ml_mean_deflection_mean));
  } catch (const std::exception& e) {
    info("3 with the forest on (mu, t, dt, xi)", std::string("failed: ") + e.what());
  }
}

void criterion_4(const ParametricRun& p) {
  double linear_gap = 0.0, traj_gap = 0.0;
  int linear_n = 0, traj_n = 0;
  {
    const auto campaign = lab::run_campaign(kSpace, chebyshev_plan(), {});
    auto cfg = linear_config();
    cfg.ratio_v = 1e8;
    cfg.complete_phi = true;
    const auto t = rom::train_offline(campaign.manifest, campaign.bundles, cfg);
    linear_n = t.model.n();
    for (std::size_t s = 0; s < t.data.samples.size(); ++s) {
      const auto e = static_cast<std::size_t>(t.data.samples[s].entry);
      const auto& b = campaign.bundles[e];
      const Vector theta = t.data.theta.col(static_cast<Eigen::Index>(s));
      const auto ml = rom::predict_linear(t.model, campaign.manifest.entries[e].params, b.loads.col(0), &theta);
      const Vector pod = rom::pod_rom_reference(t.model.basis.modes, b, io::ProblemKind::kLinear).col(0);
      linear_gap = std::max(linear_gap, (ml.u - pod).norm() / pod.norm());
    }
  }
  {
    auto cfg = parametric_config();
    cfg.complete_phi = true;
    const auto t = rom::train_offline(p.campaign.manifest, p.campaign.bundles, cfg);
    traj_n = t.model.n();
    std::vector<std::vector<Vector>> thetas(p.campaign.bundles.size());
    for (std::size_t s = 0; s < t.data.samples.size(); ++s)
      thetas[static_cast<std::size_t>(t.data.samples[s].entry)].push_back(t.data.theta.col(static_cast<Eigen::Index>(s)));
    for (std::size_t e = 0; e < p.campaign.bundles.size(); ++e) {
      const auto& b = p.campaign.bundles[e];
      const auto ml = rom::run_online_loads(t.model, p.campaign.manifest.entries[e].params, *b.times, b.loads, &thetas[e]);
      traj_gap = std::max(traj_gap, trajectory_gap(rom::pod_rom_trajectory(t.model.basis.modes, b), ml.displacements));
    }
  }
  verdict(linear_gap <= 1e-8 && traj_gap <= 1e-8, "4 oracle equivalence",
          fmt("R = n^2, theta from the reference coefficients; 65 linear snapshots (n=%d) max gap %.2e, "
              "65 trajectories (n=%d, every step) max gap %.2e (<=1e-8)",
              linear_n, linear_gap, traj_n, traj_gap));
}

void criterion_5() {
  const Stopwatch sw;
  const std::string cmd = std::string(ROMFORGE_KERNEL_TESTS) + " --no-version --minimal > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  const double secs = sw.seconds();
  const bool passed = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  verdict(passed && secs < 10.0, "5 kernel property suites",
          fmt("11 suites (also registered one by one with ctest) %s; %.2f s (<10)", passed ? "passed" : "FAILED", secs));
}

void criterion_6() {
  const fs::path root = fs::temp_directory_path() / "romforge_acceptance_determinism";
  fs::remove_all(root);
  auto one_run = [&](const std::string& tag) {
    const auto run = linear_pipeline(linear_config());
    lab::write_campaign(root / tag / "snapshots", run.campaign);
    rom::save_model(root / tag / "model", run.trained.model);
    report::write_report(root / tag / "report", run.report);
    return tree_contents(root / tag);
  };
  const auto a = one_run("a");
  const auto b = one_run("b");
  int differing = 0;
  for (const auto& [name, content] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != content) ++differing;
  }
  const bool ok = a.size() == b.size() && differing == 0 && !a.empty();
  verdict(ok, "6 full-pipeline determinism",
          fmt("two seeded runs of criterion 1: %zu files each, %d differing (snapshots, model bundle, report)", a.size(),
              differing));
  fs::remove_all(root);
}

void guarded(const std::string& name, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    verdict(false, name, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  const Stopwatch total;
  guarded("1 linear parametric pipeline", criterion_1);
  guarded("2 nonlinear fixed-parameter run", criterion_2);
  ParametricRun p;
  bool have_campaign = false;
  guarded("3 nonlinear parametric run", [&] {
    p = parametric_campaign();
    have_campaign = true;
    criterion_3(p);
  });
  if (have_campaign) {
    guarded("4 oracle equivalence", [&] { criterion_4(p); });
  } else {
    verdict(false, "4 oracle equivalence", "no trajectories");
  }
  guarded("5 kernel property suites", criterion_5);
  guarded("6 full-pipeline determinism", criterion_6);
  std::printf("acceptance: %d failing, %.1f s total\n", g_failures, total.seconds());
  return g_failures == 0 ? 0 : 1;
}
