#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace romforge::cli {

/// stderr logger; one JSON object per line with --json-logs.
void set_json_logs(bool on);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);
void log_error(const std::string& msg, int code);

struct DoeArgs {
  std::string method = "chebyshev";
  int order = 4;
  int count = 0;
  std::uint64_t seed = 0;
  bool center = false;
  std::string space;
  std::string out;
};

struct FomArgs {
  std::string model;
  std::string params;
  std::string space;  ///< required when params holds a single point
  std::string out;
  int steps = 118;
  double ramp_ratio = 1.0;
  int jobs = 1;
  std::optional<double> load;  ///< plate centre load, truss total load or spring tip load
  int grid = 11;
  int springs = 1;
  double lattice_depth = 0.05;
  int lattice_bays = 10;
};

struct TrainArgs {
  std::string snapshots;
  std::string out;
  std::string report;
  std::optional<std::uint64_t> seed;
  std::string regressor = "forest";
  double ratio = 1000.0;
  double ratio_phi = 1e6;
  std::string ratio_kind = "eigenvalue";
  bool complete_phi = false;
  std::string split = "case";
  int train_count = -1;
  double train_fraction = 0.85;
  std::vector<std::string> features;  ///< subset of mu, t, dt, xi; empty = default for the kind
  std::string feature_scaling = "zscore";
  std::string target_scaling;  ///< empty = default for the regressor
  int trees = 50;
  int min_leaf = 4;
  int max_depth = 0;
  double max_features = 1.0 / 3.0;
  bool no_bootstrap = false;
  std::vector<int> grid_trees;
  std::vector<int> grid_min_leaf;
  std::vector<int> grid_max_depth;
  int cv_folds = 5;
  int pgd_modes = 10;
  int pgd_degree = 4;
  bool pgd_adaptive = false;
};

struct PredictArgs {
  std::string model;
  std::string kind;
  std::string params;
  std::string load;  ///< dense exchange file, N x 1 (linear) or N x m (nonlinear)
  std::string times;  ///< times.csv matching a multi-column load
  std::string out;
  bool clamp = false;
};

struct ValidateArgs {
  std::string model;
  std::string snapshots;
  std::string out;
};

int cmd_doe(const DoeArgs& a);
int cmd_fom(const FomArgs& a);
int cmd_train(const TrainArgs& a);
int cmd_predict(const PredictArgs& a);
int cmd_validate(const ValidateArgs& a);

/// Text printed by --version.
std::string version_text();

}  // namespace romforge::cli
