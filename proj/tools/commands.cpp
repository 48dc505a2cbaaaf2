#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "romforge/doe.hpp"
#include "romforge/error.hpp"
#include "romforge/forest.hpp"
#include "romforge/lab.hpp"
#include "romforge/matrix_market.hpp"
#include "romforge/offline.hpp"
#include "romforge/online.hpp"
#include "romforge/pgd.hpp"
#include "romforge/report.hpp"
#include "romforge/rom_model.hpp"
#include "romforge/snapshot_store.hpp"

namespace romforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool g_json_logs = false;

void emit(const char* level, const std::string& msg, int code = 0) {
  if (g_json_logs) {
    json j = {{"level", level}, {"msg", msg}};
    if (code != 0) j["code"] = code;
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "romforge: " << (std::string(level) == "info" ? "" : std::string(level) + ": ") << msg << '\n';
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

/// Refuses to write an output inside (or over) an input tree.
void guard_output(const fs::path& out, const fs::path& input) {
  const fs::path o = fs::weakly_canonical(out), i = fs::weakly_canonical(input);
  auto inside = [](const fs::path& a, const fs::path& b) {
    auto ai = a.begin(), bi = b.begin();
    for (; bi != b.end(); ++ai, ++bi)
      if (ai == a.end() || *ai != *bi) return false;
    return true;
  };
  if (o == i || inside(i, o) || (fs::is_directory(i) && inside(o, i)))
    throw UsageError("output '" + out.string() + "' would overwrite the input '" + input.string() + "'");
}

fs::path manifest_path(const std::string& p) {
  fs::path path(p);
  if (fs::is_directory(path)) path /= "manifest.json";
  if (!fs::exists(path)) throw DataError("snapshot manifest '" + path.string() + "' does not exist");
  return path;
}

/// A single point: {"E": .., "nu": ..} or a plan entry {"values": {...}}.
doe::ParameterPoint read_point(const fs::path& path, const doe::ParameterSpace& space) {
  const json j = io::read_json_file(path);
  const json& values = j.contains("values") ? j.at("values") : j;
  if (!values.is_object()) throw DataError(path.string() + ": expected an object of parameter values");
  for (const auto& [key, _] : values.items())
    if (std::find(space.names.begin(), space.names.end(), key) == space.names.end())
      throw DataError(path.string() + ": unknown parameter '" + key + "'");
  doe::ParameterPoint p;
  for (const auto& name : space.names) {
    if (!values.contains(name)) throw DataError(path.string() + ": parameter '" + name + "' is missing");
    if (!values.at(name).is_number()) throw DataError(path.string() + ": parameter '" + name + "' is not a number");
    p.values.push_back(values.at(name).get<double>());
  }
  return p;
}

Vector read_times_csv(const fs::path& path) {
  std::istringstream in(io::read_text_file(path));
  std::string line;
  std::vector<double> t;
  std::getline(in, line);
  if (line.rfind("step,t", 0) != 0) throw DataError(path.string() + ": expected header 'step,t'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path.string() + ": malformed line '" + line + "'");
    t.push_back(std::stod(line.substr(comma + 1)));
  }
  return Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
}

std::string times_csv(const Vector& t) {
  std::string csv = "step,t\n";
  for (Eigen::Index i = 0; i < t.size(); ++i) csv += std::to_string(i) + "," + io::format_double(t[i]) + "\n";
  return csv;
}

void log_report(const report::ValidationReport& r) {
  char buf[256];
  if (r.validation.cases > 0)
    std::snprintf(buf, sizeof buf, "validation: %d cases, dB mean %.4g%% max %.4g%%, mean-deflection error max %.4g%%",
                  r.validation.cases, r.validation.delta_b_mean, r.validation.delta_b_max,
                  r.validation.ml_mean_deflection_max);
  else
    std::snprintf(buf, sizeof buf, "validation: %d samples, dB mean %.4g%% max %.4g%%, final-state error %.4g%%",
                  r.validation.samples, r.validation.delta_b_mean, r.validation.delta_b_max, r.all.ml_rel_max);
  log_info(buf);
}

}  // namespace

void set_json_logs(bool on) { g_json_logs = on; }
void log_info(const std::string& msg) { emit("info", msg); }
void log_warn(const std::string& msg) { emit("warning", msg); }
void log_error(const std::string& msg, int code) { emit("error", msg, code); }

std::string version_text() {
  return "romforge 1.0.0\nsnapshot manifest format " + std::to_string(io::kManifestVersion) + "\nmodel bundle format " +
         std::to_string(rom::kModelFormatVersion) + "\nforest format " + std::to_string(ml::kForestFormatVersion) +
         "\npgd format " + std::to_string(ml::kPgdFormatVersion) + "\n";
}

int cmd_doe(const DoeArgs& a) {
  require(a.space, "--space");
  require(a.out, "--out");
  doe::Plan plan;
  plan.method = a.method;
  plan.space = doe::space_from_json(io::read_json_file(a.space));
  plan.space.validate();
  if (a.method == "chebyshev") {
    if (a.order < 1) throw UsageError("--order must be >= 1");
    for (auto& p : doe::chebyshev_grid(plan.space, a.order, a.center)) plan.points.push_back({std::move(p), false});
  } else if (a.method == "lhs" || a.method == "corners+lhs") {
    if (a.count < 1) throw UsageError("--count must be >= 1 for " + a.method);
    if (a.method == "corners+lhs")
      for (auto& p : doe::corner_points(plan.space)) plan.points.push_back({std::move(p), true});
    for (auto& p : doe::latin_hypercube(plan.space, a.count, a.seed)) plan.points.push_back({std::move(p), false});
  } else {
    throw UsageError("unknown --method '" + a.method + "' (expected chebyshev, lhs or corners+lhs)");
  }
  rom::write_file_atomically(a.out, doe::plan_to_json(plan).dump(2) + "\n");
  log_info("wrote " + std::to_string(plan.points.size()) + " points to " + a.out);
  return 0;
}

int cmd_fom(const FomArgs& a) {
  require(a.params, "--params");
  require(a.out, "--out");
  lab::LabConfig cfg;
  cfg.model = lab::model_kind_from_string(a.model);
  cfg.steps = a.steps;
  cfg.ramp_ratio = a.ramp_ratio;
  if (a.grid < 2) throw UsageError("--grid must be >= 2");
  cfg.grid.nx = cfg.grid.ny = a.grid;
  cfg.spring.springs = a.springs;
  if (a.springs < 1) throw UsageError("--springs must be >= 1");
  cfg.lattice.depth = a.lattice_depth;
  cfg.lattice.bays = a.lattice_bays;
  if (a.load) {
    cfg.plate_load = *a.load;
    cfg.lattice.total_load = *a.load;
    cfg.spring.tip_load = *a.load;
  }
  guard_output(a.out, a.params);

  const json pj = io::read_json_file(a.params);
  doe::ParameterSpace space;
  std::vector<doe::PlanPoint> points;
  if (pj.contains("points")) {
    doe::Plan plan = doe::plan_from_json(pj);
    space = plan.space;
    points = plan.points;
  } else {
    if (a.space.empty()) throw UsageError("--space is required when --params holds a single point");
    space = doe::space_from_json(io::read_json_file(a.space));
    space.validate();
    points.push_back({read_point(a.params, space), false});
  }
  for (const auto& p : points)
    if (!space.contains(p.point, 1e-12)) throw DataError("parameter point outside the declared space");

  const auto campaign = lab::run_campaign(space, points, cfg, a.jobs);
  lab::write_campaign(a.out, campaign);
  log_info("wrote " + std::to_string(points.size()) + " " + lab::to_string(cfg.model) + " snapshot(s), N = " +
           std::to_string(campaign.manifest.dofs) + ", to " + a.out);
  return 0;
}

int cmd_train(const TrainArgs& a) {
  require(a.snapshots, "--snapshots");
  require(a.out, "--out");
  if (!a.seed) throw UsageError("train requires --seed (all randomness is explicit)");
  const fs::path mpath = manifest_path(a.snapshots);
  guard_output(a.out, mpath.parent_path());
  if (!a.report.empty()) guard_output(a.report, mpath.parent_path());

  rom::TrainConfig cfg;
  cfg.ratio_v = a.ratio;
  cfg.ratio_phi = a.ratio_phi;
  if (a.ratio_kind == "eigenvalue") cfg.ratio_kind = pod::RatioKind::kEigenvalue;
  else if (a.ratio_kind == "singular") cfg.ratio_kind = pod::RatioKind::kSingularValue;
  else throw UsageError("unknown --ratio-kind '" + a.ratio_kind + "' (expected eigenvalue or singular)");
  cfg.complete_phi = a.complete_phi;
  cfg.split.mode = rom::split_mode_from_string(a.split);
  cfg.split.train_count = a.train_count;
  cfg.split.train_fraction = a.train_fraction;
  cfg.split.seed = *a.seed;
  cfg.regressor = rom::regressor_kind_from_string(a.regressor);
  cfg.forest.n_estimators = a.trees;
  cfg.forest.min_samples_leaf = a.min_leaf;
  cfg.forest.max_depth = a.max_depth;
  cfg.forest.max_features = a.max_features;
  cfg.forest.bootstrap = !a.no_bootstrap;
  cfg.forest.seed = *a.seed;
  if (!a.grid_trees.empty() || !a.grid_min_leaf.empty() || !a.grid_max_depth.empty()) {
    ml::ForestGrid g;
    if (!a.grid_trees.empty()) g.n_estimators = a.grid_trees;
    else g.n_estimators = {a.trees};
    if (!a.grid_min_leaf.empty()) g.min_samples_leaf = a.grid_min_leaf;
    else g.min_samples_leaf = {a.min_leaf};
    if (!a.grid_max_depth.empty()) g.max_depth = a.grid_max_depth;
    else g.max_depth = {a.max_depth};
    cfg.grid = g;
  }
  cfg.cv_folds = a.cv_folds;
  cfg.pgd.max_modes = a.pgd_modes;
  cfg.pgd.max_degree = a.pgd_degree;
  cfg.pgd.adaptive_degree = a.pgd_adaptive;
  cfg.feature_scaling = ml::scaling_from_string(a.feature_scaling);
  if (!a.target_scaling.empty()) cfg.target_scaling = ml::scaling_from_string(a.target_scaling);
  if (!a.features.empty()) {
    cfg.use_mu = cfg.use_time = cfg.use_dt = cfg.use_xi = false;
    for (const auto& f : a.features) {
      if (f == "mu") cfg.use_mu = true;
      else if (f == "t") cfg.use_time = true;
      else if (f == "dt") cfg.use_dt = true;
      else if (f == "xi") cfg.use_xi = true;
      else throw UsageError("unknown feature block '" + f + "' (expected mu, t, dt or xi)");
    }
  }

  const auto manifest = io::load_manifest(mpath);
  const auto bundles = rom::read_all_bundles(manifest);
  const auto res = rom::train_offline(manifest, bundles, cfg);
  rom::save_model(a.out, res.model);
  if (res.cv) rom::write_file_atomically(fs::path(a.out) / "cv.csv", ml::cv_table_csv(*res.cv));
  log_info("model: n = " + std::to_string(res.model.n()) + ", R = " + std::to_string(res.model.r()) + ", written to " +
           a.out);
  if (!a.report.empty()) {
    const auto rep = report::build_report(manifest, bundles, res.model);
    report::write_report(a.report, rep);
    log_report(rep);
  }
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  require(a.model, "--model");
  require(a.params, "--params");
  require(a.out, "--out");
  const rom::RomModel model = rom::load_model(a.model);
  if (!a.kind.empty()) {
    const io::ProblemKind want = io::problem_kind_from_string(a.kind);
    if (want != model.kind)
      throw UsageError("--kind " + a.kind + " does not match the model, which is " + io::to_string(model.kind));
  }
  guard_output(a.out, a.model);
  const doe::ParameterPoint mu = read_point(a.params, model.space);
  rom::OnlineOptions opts;
  opts.clamp_features = a.clamp;

  Matrix u, xi;
  Vector times;
  std::vector<rom::Diagnostics> diags;
  if (model.kind == io::ProblemKind::kLinear) {
    Vector f;
    if (!a.load.empty()) {
      const Matrix fl = io::read_dense(a.load);
      if (fl.cols() != 1) throw DataError(a.load + ": a linear prediction takes a single load column");
      f = fl.col(0);
    } else {
      f = model.basis.modes * model.reduced_reference_load;
    }
    auto pred = rom::predict_linear(model, mu, f, nullptr, opts);
    u = pred.u;
    xi = pred.xi;
    times = Vector::Zero(1);
    diags.push_back(std::move(pred.diagnostics));
  } else {
    rom::OnlineTrajectory traj;
    if (!a.load.empty()) {
      const Matrix loads = io::read_dense(a.load);
      if (a.times.empty()) throw UsageError("--times is required with a nonlinear --load");
      traj = rom::run_online_loads(model, mu, read_times_csv(a.times), loads, nullptr, opts);
    } else {
      traj = rom::run_online(model, mu, rom::model_ramp(model), nullptr, nullptr, opts);
    }
    u = traj.displacements;
    xi = traj.xi;
    times = traj.times;
    diags = std::move(traj.diagnostics);
  }
  int flagged = 0;
  for (const auto& d : diags) {
    flagged += d.out_of_range ? 1 : 0;
    for (const auto& w : d.warnings) log_warn(w);
  }
  rom::write_directory_atomically(a.out, [&](const fs::path& tmp) {
    io::write_dense(tmp / "u.mm", u);
    io::write_dense(tmp / "xi.mm", xi);
    io::write_text_file(tmp / "diagnostics.csv", rom::diagnostics_csv(diags, times));
    if (model.kind == io::ProblemKind::kNonlinear) io::write_text_file(tmp / "times.csv", times_csv(times));
  });
  log_info("prediction written to " + a.out + (flagged ? " (" + std::to_string(flagged) + " step(s) outside the training support)" : ""));
  return 0;
}

int cmd_validate(const ValidateArgs& a) {
  require(a.model, "--model");
  require(a.snapshots, "--snapshots");
  require(a.out, "--out");
  const fs::path mpath = manifest_path(a.snapshots);
  guard_output(a.out, mpath.parent_path());
  guard_output(a.out, a.model);
  const rom::RomModel model = rom::load_model(a.model);
  const auto manifest = io::load_manifest(mpath);
  if (manifest.kind != model.kind)
    throw UsageError("snapshot set is " + io::to_string(manifest.kind) + " but the model is " + io::to_string(model.kind));
  const auto bundles = rom::read_all_bundles(manifest);
  const auto rep = report::build_report(manifest, bundles, model);
  report::write_report(a.out, rep);
  log_report(rep);
  return 0;
}

}  // namespace romforge::cli
