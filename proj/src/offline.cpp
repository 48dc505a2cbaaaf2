#include "romforge/offline.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "romforge/error.hpp"

namespace romforge::rom {

using nlohmann::json;

std::string to_string(SplitMode m) { return m == SplitMode::kCase ? "case" : "step"; }

SplitMode split_mode_from_string(const std::string& s) {
  if (s == "case") return SplitMode::kCase;
  if (s == "step") return SplitMode::kStep;
  throw UsageError("unknown split mode '" + s + "' (expected case or step)");
}

ml::ScalingSpec TrainConfig::effective_target_scaling() const {
  if (target_scaling) return *target_scaling;
  if (regressor == RegressorKind::kPgd) return {ml::ScalerKind::kNone, false};
  return {};
}

json train_config_to_json(const TrainConfig& c) {
  json j = {{"ratio_v", c.ratio_v},
            {"ratio_phi", c.ratio_phi},
            {"ratio_kind", c.ratio_kind == pod::RatioKind::kEigenvalue ? "eigenvalue" : "singular"},
            {"complete_phi", c.complete_phi},
            {"split",
             {{"mode", to_string(c.split.mode)},
              {"train_count", c.split.train_count},
              {"train_fraction", c.split.train_fraction},
              {"seed", c.split.seed}}},
            {"regressor", to_string(c.regressor)},
            {"feature_scaling", ml::to_string(c.feature_scaling)},
            {"target_scaling", ml::to_string(c.effective_target_scaling())},
            {"cv_folds", c.cv_folds}};
  if (c.regressor == RegressorKind::kForest)
    j["forest"] = ml::forest_params_to_json(c.forest);
  else
    j["pgd"] = ml::pgd_options_to_json(c.pgd);
  if (c.grid)
    j["grid"] = {{"n_estimators", c.grid->n_estimators},
                 {"min_samples_leaf", c.grid->min_samples_leaf},
                 {"max_depth", c.grid->max_depth}};
  return j;
}

std::vector<io::SnapshotBundle> read_all_bundles(const io::SnapshotManifest& manifest) {
  std::vector<io::SnapshotBundle> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) out.push_back(io::read_bundle(manifest, e));
  return out;
}

namespace {

std::vector<int> permutation(int n, std::uint64_t seed) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(ml::tree_seed(seed, 0x5B117));
  for (std::size_t k = p.size(); k > 1; --k) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % k;
    std::uint64_t r = rng();
    while (r >= limit) r = rng();
    std::swap(p[k - 1], p[r % k]);
  }
  return p;
}

int train_size(int total, const SplitConfig& cfg) {
  int n = cfg.train_count >= 0 ? cfg.train_count : static_cast<int>(std::lround(cfg.train_fraction * total));
  return std::clamp(n, 0, total);
}

Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

std::vector<bool> split_samples(const io::SnapshotManifest& manifest, const std::vector<SampleRef>& samples,
                                const SplitConfig& cfg) {
  if (!(cfg.train_fraction >= 0.0 && cfg.train_fraction <= 1.0)) throw UsageError("train fraction must lie in [0, 1]");
  std::vector<bool> train(samples.size(), false);
  if (cfg.mode == SplitMode::kCase) {
    const int cases = static_cast<int>(manifest.entries.size());
    std::vector<bool> case_train(static_cast<std::size_t>(cases), false);
    int need = train_size(cases, cfg);
    for (int e = 0; e < cases; ++e)
      if (manifest.entries[static_cast<std::size_t>(e)].corner) {
        case_train[static_cast<std::size_t>(e)] = true;
        --need;
      }
    for (int e : permutation(cases, cfg.seed)) {
      if (need <= 0) break;
      if (case_train[static_cast<std::size_t>(e)]) continue;
      case_train[static_cast<std::size_t>(e)] = true;
      --need;
    }
    for (std::size_t s = 0; s < samples.size(); ++s) train[s] = case_train[static_cast<std::size_t>(samples[s].entry)];
  } else {
    const int total = static_cast<int>(samples.size());
    int need = train_size(total, cfg);
    for (int s = 0; s < total; ++s)
      if (manifest.entries[static_cast<std::size_t>(samples[static_cast<std::size_t>(s)].entry)].corner) {
        train[static_cast<std::size_t>(s)] = true;
        --need;
      }
    for (int s : permutation(total, cfg.seed)) {
      if (need <= 0) break;
      if (train[static_cast<std::size_t>(s)]) continue;
      train[static_cast<std::size_t>(s)] = true;
      --need;
    }
  }
  return train;
}

TrainResult train_offline(const io::SnapshotManifest& manifest, const TrainConfig& config) {
  return train_offline(manifest, read_all_bundles(manifest), config);
}

TrainResult train_offline(const io::SnapshotManifest& manifest, const std::vector<io::SnapshotBundle>& bundles,
                          const TrainConfig& cfg) {
  io::validate_manifest(manifest);
  if (bundles.size() != manifest.entries.size())
    throw DataError("train: " + std::to_string(bundles.size()) + " bundles for " +
                    std::to_string(manifest.entries.size()) + " manifest entries");
  const bool nonlinear = manifest.kind == io::ProblemKind::kNonlinear;
  const int big_n = manifest.dofs;

  // (1) solution basis over every displacement column
  int columns = 0;
  for (std::size_t e = 0; e < bundles.size(); ++e) {
    const auto& b = bundles[e];
    if (b.displacements.rows() != big_n || b.loads.rows() != big_n || b.columns() != manifest.entries[e].steps ||
        static_cast<int>(b.stiffness.size()) != b.columns())
      throw DataError("train: bundle '" + manifest.entries[e].id + "' does not match the manifest dimensions");
    if (nonlinear && (!b.times || b.times->size() != b.columns() + 1))
      throw DataError("train: trajectory '" + manifest.entries[e].id + "' lacks step times");
    columns += b.columns();
  }
  if (columns < 1) throw DataError("train: no snapshots");
  Matrix snaps(big_n, columns);
  {
    int c = 0;
    for (const auto& b : bundles) {
      snaps.middleCols(c, b.columns()) = b.displacements;
      c += b.columns();
    }
  }

  TrainResult res;
  RomModel& model = res.model;
  model.kind = manifest.kind;
  model.space = manifest.space;
  model.dof_layout = manifest.layout;
  model.bc = manifest.bc;
  model.dofs = big_n;
  model.basis = pod::pod_basis(snaps, cfg.ratio_v, cfg.ratio_kind);
  const Matrix& v = model.basis.modes;
  const int n = model.n();

  // (2) reduced, inverted, vectorised stiffness of every sample, plus raw features
  FeatureLayout& fl = model.features;
  fl.param_dims = static_cast<int>(manifest.space.dim());
  fl.reduced_dims = n;
  fl.mu = cfg.use_mu.value_or(true);
  fl.time = cfg.use_time.value_or(nonlinear);
  fl.dt = cfg.use_dt.value_or(nonlinear);
  fl.xi = cfg.use_xi.value_or(nonlinear);
  if (fl.size() < 1) throw UsageError("train: the feature layout selects no features");

  TrainingData& data = res.data;
  data.b.resize(static_cast<Eigen::Index>(n) * n, columns);
  data.features.resize(columns, fl.size());
  int s = 0;
  for (std::size_t e = 0; e < bundles.size(); ++e) {
    const auto& b = bundles[e];
    const auto& params = manifest.entries[e].params;
    for (int c = 0; c < b.columns(); ++c, ++s) {
      data.samples.push_back({static_cast<int>(e), c + 1});
      pod::VectorizedInverse vi;
      try {
        vi = pod::invert_and_vectorize(pod::reduce_system(b.stiffness[static_cast<std::size_t>(c)], v));
      } catch (const NumericalError& err) {
        throw NumericalError("train: entry '" + manifest.entries[e].id + "' step " + std::to_string(c + 1) + ": " +
                             err.what());
      }
      data.b.col(s) = vi.values;
      data.conditions.push_back(vi.condition);
      double t = 0.0, dt = 0.0;
      Vector xi_prev = Vector::Zero(n);
      if (nonlinear) {
        t = (*b.times)[c + 1];
        dt = t - (*b.times)[c];
        if (c > 0) xi_prev = v.transpose() * b.displacements.col(c - 1);
      }
      data.features.row(s) = fl.assemble(params, t, dt, xi_prev).transpose();
    }
  }

  // (3) second POD over the inverses
  model.complete_matrix_basis = cfg.complete_phi;
  model.matrix_basis = cfg.complete_phi ? pod::complete_matrix_basis(data.b)
                                        : pod::matrix_mode_basis(data.b, cfg.ratio_phi, cfg.ratio_kind);
  data.theta = model.matrix_basis.theta;
  model.matrix_basis.theta.resize(0, 0);
  const int r = model.r();

  // (4) split, scale, regress
  data.train = split_samples(manifest, data.samples, cfg.split);
  std::vector<int> train_rows;
  for (int i = 0; i < columns; ++i)
    if (data.train[static_cast<std::size_t>(i)]) train_rows.push_back(i);
  if (train_rows.empty()) throw DataError("train: the split leaves no training samples");

  const Matrix xt = take_rows(data.features, train_rows);
  const Matrix yt = take_rows(Matrix(data.theta.transpose()), train_rows);
  model.feature_scaler = ml::Scaler::fit(xt, cfg.feature_scaling.kind, cfg.feature_scaling.log);
  const ml::ScalingSpec target = cfg.effective_target_scaling();
  model.target_scaler = ml::Scaler::fit(yt, target.kind, target.log);
  model.feature_lower = xt.colwise().minCoeff().transpose();
  model.feature_upper = xt.colwise().maxCoeff().transpose();
  const Matrix zx = model.feature_scaler.apply(xt);
  const Matrix zy = model.target_scaler.apply(yt);

  if (cfg.regressor == RegressorKind::kForest) {
    ml::ForestParams fp = cfg.forest;
    if (cfg.grid) {
      res.cv = ml::grid_search_cv(*cfg.grid, cfg.cv_folds, zx, zy, fp, cfg.split.seed);
      fp = res.cv->best;
    }
    model.regressor = Regressor(ml::RandomForest::train(zx, zy, fp));
  } else {
    model.regressor = Regressor(ml::PgdRegressor::train(zx, zy, cfg.pgd));
  }

  res.theta_pred.resize(r, columns);
  const Matrix all_pred = model.target_scaler.invert(model.regressor.predict(model.feature_scaler.apply(data.features)));
  res.theta_pred = all_pred.transpose();

  // reduced reference load of the first entry; nonlinear models also keep its ramp (lambda = 1 at t = 1)
  {
    const auto& b0 = bundles.front();
    const Vector f_ref = b0.loads.col(b0.columns() - 1);
    model.reduced_reference_load = v.transpose() * f_ref;
    if (nonlinear) {
      const double ff = f_ref.squaredNorm();
      if (!(ff > 0.0)) throw DataError("train: reference trajectory has zero terminal load");
      model.ramp_times.assign(b0.times->data(), b0.times->data() + b0.times->size());
      model.ramp_factors = {0.0};
      for (int c = 0; c < b0.columns(); ++c) model.ramp_factors.push_back(b0.loads.col(c).dot(f_ref) / ff);
    }
  }

  json prov = {{"config", train_config_to_json(cfg)},
               {"entries", static_cast<int>(manifest.entries.size())},
               {"samples", columns},
               {"n", n},
               {"R", r}};
  if (cfg.regressor == RegressorKind::kForest) {
    prov["forest"] = ml::forest_params_to_json(model.regressor.forest()->params());
    prov["max_features_per_split"] =
        std::max(1, static_cast<int>(std::ceil(model.regressor.forest()->params().max_features * fl.size() - 1e-12)));
  }
  json train_ids = json::array(), val_ids = json::array(), val_samples = json::array();
  if (cfg.split.mode == SplitMode::kCase) {
    std::vector<int> state(manifest.entries.size(), -1);
    for (std::size_t i = 0; i < data.samples.size(); ++i) state[static_cast<std::size_t>(data.samples[i].entry)] = data.train[i];
    for (std::size_t e = 0; e < state.size(); ++e) (state[e] == 1 ? train_ids : val_ids).push_back(manifest.entries[e].id);
    prov["train_cases"] = train_ids;
    prov["validation_cases"] = val_ids;
  } else {
    for (std::size_t i = 0; i < data.samples.size(); ++i)
      if (!data.train[i]) val_samples.push_back({manifest.entries[static_cast<std::size_t>(data.samples[i].entry)].id, data.samples[i].step});
    prov["validation_samples"] = val_samples;
  }
  prov["train_samples"] = static_cast<int>(train_rows.size());
  model.provenance = std::move(prov);
  model.validate();
  return res;
}

}  // namespace romforge::rom
