#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "romforge/doe.hpp"
#include "romforge/forest.hpp"
#include "romforge/pgd.hpp"
#include "romforge/pod.hpp"
#include "romforge/scaler.hpp"
#include "romforge/snapshot_store.hpp"

namespace romforge::rom {

inline constexpr int kModelFormatVersion = 1;

enum class RegressorKind { kForest, kPgd };

std::string to_string(RegressorKind kind);
RegressorKind regressor_kind_from_string(const std::string& s);

/// Regressor input [mu (d); t_i; dt_i; xi_{i-1} (n)], each block switchable.
struct FeatureLayout {
  bool mu = true;
  bool time = false;
  bool dt = false;
  bool xi = false;
  int param_dims = 0;
  int reduced_dims = 0;

  int size() const;
  std::vector<std::string> names(const doe::ParameterSpace& space) const;
  /// Assembles one raw (unscaled) feature vector.
  Vector assemble(const doe::ParameterPoint& mu, double t, double dt, const Vector& xi_prev) const;
};

nlohmann::json layout_to_json(const FeatureLayout& l);
FeatureLayout layout_from_json(const nlohmann::json& j);

/// Either regressor behind one predict call.
class Regressor {
 public:
  Regressor() = default;
  explicit Regressor(ml::RandomForest f) : impl_(std::move(f)) {}
  explicit Regressor(ml::PgdRegressor p) : impl_(std::move(p)) {}

  RegressorKind kind() const { return impl_.index() == 0 ? RegressorKind::kForest : RegressorKind::kPgd; }
  Vector predict(const Vector& z) const;
  Matrix predict(const Matrix& z) const;
  int n_features() const;
  int n_outputs() const;
  nlohmann::json to_json() const;
  const ml::RandomForest* forest() const { return std::get_if<ml::RandomForest>(&impl_); }
  const ml::PgdRegressor* pgd() const { return std::get_if<ml::PgdRegressor>(&impl_); }

 private:
  std::variant<ml::RandomForest, ml::PgdRegressor> impl_;
};

/// Everything the online phase needs; carries no handle to a full-order model.
struct RomModel {
  io::ProblemKind kind = io::ProblemKind::kLinear;
  doe::ParameterSpace space;
  io::DofLayout dof_layout;
  std::vector<int> bc;
  int dofs = 0;

  pod::ReducedBasis basis;          // V
  pod::MatrixModeBasis matrix_basis;  // Phi (theta not persisted)
  bool complete_matrix_basis = false;

  FeatureLayout features;
  ml::Scaler feature_scaler;
  ml::Scaler target_scaler;
  Regressor regressor;
  Vector feature_lower;  ///< training feature support, for out-of-range warnings
  Vector feature_upper;

  // nonlinear: training ramp and V^T f_ref so online runs need no load input
  std::vector<double> ramp_times;
  std::vector<double> ramp_factors;
  Vector reduced_reference_load;

  nlohmann::json provenance = nlohmann::json::object();

  int n() const { return basis.size(); }
  int r() const { return matrix_basis.size(); }
  /// Throws DataError unless the pieces agree on n, R and feature arity.
  void validate() const;
};

/// Writes meta.json, V.mm, Phi.mm, scaler.json and forest.json or pgd.json into `dir`.
/// The bundle is staged in a sibling temporary directory and renamed into place.
void save_model(const std::filesystem::path& dir, const RomModel& model);
RomModel load_model(const std::filesystem::path& dir);

/// Atomically replaces `dir` by the contents produced by `fill(tmp_dir)`.
void write_directory_atomically(const std::filesystem::path& dir,
                                const std::function<void(const std::filesystem::path&)>& fill);
/// Writes a file through a temp file in the same directory followed by rename.
void write_file_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace romforge::rom
