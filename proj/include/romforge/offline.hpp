#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "romforge/grid_search.hpp"
#include "romforge/rom_model.hpp"

namespace romforge::rom {

enum class SplitMode { kCase, kStep };

std::string to_string(SplitMode m);
SplitMode split_mode_from_string(const std::string& s);

struct SplitConfig {
  SplitMode mode = SplitMode::kCase;
  int train_count = -1;         ///< takes precedence over the fraction when >= 0
  double train_fraction = 0.85;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  double ratio_v = 1000.0;
  double ratio_phi = 1e6;
  pod::RatioKind ratio_kind = pod::RatioKind::kEigenvalue;
  bool complete_phi = false;  ///< R = n^2, no second truncation

  SplitConfig split;

  RegressorKind regressor = RegressorKind::kForest;
  ml::ForestParams forest;
  std::optional<ml::ForestGrid> grid;  ///< run grid-search CV on the training split first
  int cv_folds = 5;
  ml::PgdOptions pgd;

  ml::ScalingSpec feature_scaling;
  /// nullopt: Z-score for the forest, none for sPGD (an affine shift of the targets
  /// destroys the separable structure the rank-1 modes rely on)
  std::optional<ml::ScalingSpec> target_scaling;

  ml::ScalingSpec effective_target_scaling() const;

  /// Feature blocks; nullopt picks the default for the problem kind
  /// (linear: mu; nonlinear: mu, t, dt, xi).
  std::optional<bool> use_mu, use_time, use_dt, use_xi;
};

nlohmann::json train_config_to_json(const TrainConfig& c);

/// One regression sample: an entry and, for trajectories, the step index (1-based).
struct SampleRef {
  int entry = 0;
  int step = 1;
};

struct TrainingData {
  std::vector<SampleRef> samples;
  Matrix features;       ///< S x F raw features
  Matrix b;              ///< n^2 x S vectorised reduced inverses
  Matrix theta;          ///< R x S reference coefficients Phi^T B
  std::vector<double> conditions;  ///< cond(A_r) per sample
  std::vector<bool> train;         ///< split membership per sample
};

struct TrainResult {
  RomModel model;
  TrainingData data;
  std::optional<ml::GridSearchResult> cv;
  Matrix theta_pred;  ///< R x S regressor output for every sample
};

/// Offline phase over bundles already in memory (one per manifest entry, same order).
TrainResult train_offline(const io::SnapshotManifest& manifest, const std::vector<io::SnapshotBundle>& bundles,
                          const TrainConfig& config);
/// Reads every bundle of the manifest, then trains.
TrainResult train_offline(const io::SnapshotManifest& manifest, const TrainConfig& config);

std::vector<io::SnapshotBundle> read_all_bundles(const io::SnapshotManifest& manifest);

/// Split membership per sample; corner entries are always in the training set.
std::vector<bool> split_samples(const io::SnapshotManifest& manifest, const std::vector<SampleRef>& samples,
                                const SplitConfig& cfg);

}  // namespace romforge::rom
