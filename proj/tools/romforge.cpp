#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "romforge/error.hpp"
#include "romforge/snapshot_store.hpp"

using namespace romforge;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw UsageError("config: value of '" + key + "' must be a string, number or boolean");
}

// Options missing on the command line are filled from the JSON object; keys are the long
// option names without the leading dashes.
void merge_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  const json cfg = io::read_json_file(path);
  if (!cfg.is_object()) throw UsageError("config '" + path + "' must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") throw UsageError("config: 'config' cannot be nested");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) opt = sub->get_option_no_throw(key);
    if (!opt) throw UsageError("config: unknown key '" + key + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(scalar_text(v, key));
    } else {
      opt->add_result(scalar_text(value, key));
    }
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"romforge: lightly intrusive reduced order models from exported FE matrices"};
  app.require_subcommand(0, 1);
  bool json_logs = false;
  bool version = false;
  app.add_flag("--json-logs", json_logs, "Log one JSON object per line on stderr");
  app.add_flag("--version", version, "Print format versions and exit");

  std::string config;
  auto add_config = [&config](CLI::App* s) { s->add_option("--config", config, "JSON file with option defaults"); };

  cli::DoeArgs doe;
  auto* s_doe = app.add_subcommand("doe", "Write a sampling plan");
  s_doe->add_option("--method", doe.method, "chebyshev | lhs | corners+lhs")->capture_default_str();
  s_doe->add_option("--order", doe.order, "Chebyshev zeros per dimension")->capture_default_str();
  s_doe->add_option("--count", doe.count, "Latin hypercube sample count");
  s_doe->add_option("--seed", doe.seed, "Latin hypercube seed");
  s_doe->add_flag("--center", doe.center, "Append the box midpoint to a Chebyshev grid");
  s_doe->add_option("--space", doe.space, "Parameter space JSON");
  s_doe->add_option("--out", doe.out, "Output plan.json");
  add_config(s_doe);

  cli::FomArgs fom;
  double fom_load = 0.0;
  auto* s_fom = app.add_subcommand("fom", "Run a built-in full-order model and write snapshots");
  s_fom->add_option("model", fom.model, "plate | spring | truss");
  s_fom->add_option("--params", fom.params, "plan.json or a single-point JSON");
  s_fom->add_option("--space", fom.space, "Parameter space JSON (single-point --params only)");
  s_fom->add_option("--out", fom.out, "Snapshot directory");
  s_fom->add_option("--steps", fom.steps, "Load increments (nonlinear models)")->capture_default_str();
  s_fom->add_option("--ramp-ratio", fom.ramp_ratio, "Geometric step growth; 1 = uniform")->capture_default_str();
  s_fom->add_option("--jobs", fom.jobs, "Parallel FOM workers")->capture_default_str();
  auto* load_opt = s_fom->add_option("--load", fom_load, "Plate centre load, truss total load or spring tip load [N]");
  s_fom->add_option("--grid", fom.grid, "Plate nodes per side")->capture_default_str();
  s_fom->add_option("--springs", fom.springs, "Springs in the chain")->capture_default_str();
  s_fom->add_option("--lattice-depth", fom.lattice_depth, "Truss lattice depth [m]")->capture_default_str();
  s_fom->add_option("--lattice-bays", fom.lattice_bays, "Truss lattice bays (even)")->capture_default_str();
  add_config(s_fom);

  cli::TrainArgs tr;
  std::uint64_t train_seed = 0;
  auto* s_train = app.add_subcommand("train", "Offline phase: bases, regression, model bundle");
  s_train->add_option("--snapshots", tr.snapshots, "Snapshot directory or manifest.json");
  s_train->add_option("--out", tr.out, "Model bundle directory");
  s_train->add_option("--report", tr.report, "Also write a validation report here");
  auto* seed_opt = s_train->add_option("--seed", train_seed, "Seed for the split and the regressor (required)");
  s_train->add_option("--regressor", tr.regressor, "forest | pgd")->capture_default_str();
  s_train->add_option("--ratio", tr.ratio, "Truncation ratio for V")->capture_default_str();
  s_train->add_option("--ratio-phi", tr.ratio_phi, "Truncation ratio for Phi")->capture_default_str();
  s_train->add_option("--ratio-kind", tr.ratio_kind, "eigenvalue | singular")->capture_default_str();
  s_train->add_flag("--complete-phi", tr.complete_phi, "Keep R = n^2 matrix modes");
  s_train->add_option("--split", tr.split, "case | step")->capture_default_str();
  s_train->add_option("--train-count", tr.train_count, "Training units (cases or steps); overrides the fraction");
  s_train->add_option("--train-fraction", tr.train_fraction, "Training fraction")->capture_default_str();
  s_train->add_option("--features", tr.features, "Feature blocks: mu t dt xi")->delimiter(',');
  s_train->add_option("--feature-scaling", tr.feature_scaling, "none | zscore | minmax, optional log- prefix")
      ->capture_default_str();
  s_train->add_option("--target-scaling", tr.target_scaling, "As --feature-scaling; default per regressor");
  s_train->add_option("--trees", tr.trees, "Forest size")->capture_default_str();
  s_train->add_option("--min-leaf", tr.min_leaf, "Minimum samples per leaf")->capture_default_str();
  s_train->add_option("--max-depth", tr.max_depth, "Tree depth limit, 0 = none")->capture_default_str();
  s_train->add_option("--max-features", tr.max_features, "Fraction of features tried per split")->capture_default_str();
  s_train->add_flag("--no-bootstrap", tr.no_bootstrap, "Grow every tree on the full training set");
  s_train->add_option("--grid-trees", tr.grid_trees, "Grid-search values of --trees")->delimiter(',');
  s_train->add_option("--grid-min-leaf", tr.grid_min_leaf, "Grid-search values of --min-leaf")->delimiter(',');
  s_train->add_option("--grid-max-depth", tr.grid_max_depth, "Grid-search values of --max-depth")->delimiter(',');
  s_train->add_option("--cv-folds", tr.cv_folds, "Cross-validation folds")->capture_default_str();
  s_train->add_option("--pgd-modes", tr.pgd_modes, "sPGD mode limit")->capture_default_str();
  s_train->add_option("--pgd-degree", tr.pgd_degree, "sPGD Legendre degree limit")->capture_default_str();
  s_train->add_flag("--pgd-adaptive", tr.pgd_adaptive, "Raise the sPGD degree with the mode index");
  add_config(s_train);

  cli::PredictArgs pr;
  auto* s_predict = app.add_subcommand("predict", "Online phase for one parameter point");
  s_predict->add_option("--model", pr.model, "Model bundle directory");
  s_predict->add_option("--kind", pr.kind, "Expected model kind: linear | nonlinear");
  s_predict->add_option("--params", pr.params, "Single-point JSON");
  s_predict->add_option("--load", pr.load, "Load vector(s) as a dense exchange file");
  s_predict->add_option("--times", pr.times, "times.csv for a multi-column --load");
  s_predict->add_option("--out", pr.out, "Output directory");
  s_predict->add_flag("--clamp", pr.clamp, "Clamp features into the training support");
  add_config(s_predict);

  cli::ValidateArgs va;
  auto* s_validate = app.add_subcommand("validate", "Compare a model with FOM snapshots");
  s_validate->add_option("--model", va.model, "Model bundle directory");
  s_validate->add_option("--snapshots", va.snapshots, "Snapshot directory or manifest.json");
  s_validate->add_option("--out", va.out, "Report directory");
  add_config(s_validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  cli::set_json_logs(json_logs);

  if (version) {
    std::cout << cli::version_text();
    return 0;
  }
  try {
    CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (!sub) throw UsageError("no subcommand given (doe, fom, train, predict, validate); see --help");
    merge_config(sub, config);
    if (sub == s_doe) return cli::cmd_doe(doe);
    if (sub == s_fom) {
      if (load_opt->count() > 0) fom.load = fom_load;
      return cli::cmd_fom(fom);
    }
    if (sub == s_train) {
      if (seed_opt->count() > 0) tr.seed = train_seed;
      return cli::cmd_train(tr);
    }
    if (sub == s_predict) return cli::cmd_predict(pr);
    return cli::cmd_validate(va);
  } catch (const UsageError& e) {
    cli::log_error(e.what(), kExitUsage);
    return kExitUsage;
  } catch (const DataError& e) {
    cli::log_error(e.what(), kExitData);
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    cli::log_error(e.what(), kExitData);
    return kExitData;
  } catch (const NumericalError& e) {
    cli::log_error(e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const std::exception& e) {
    cli::log_error(e.what(), 1);
    return 1;
  }
}
