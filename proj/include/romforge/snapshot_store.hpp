#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "romforge/doe.hpp"
#include "romforge/fom.hpp"
#include "romforge/nonlinear.hpp"
#include "romforge/types.hpp"

namespace romforge::io {

inline constexpr int kManifestVersion = 1;

enum class ProblemKind { kLinear, kNonlinear };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

/// How global DOFs map to nodes, and the class (translation/rotation) of each local slot.
struct DofLayout {
  int full_dofs = 0;
  int dofs_per_node = 1;
  std::vector<std::string> local_classes{"translation"};
};

struct ManifestEntry {
  std::string id;
  doe::ParameterPoint params;
  std::string path;  ///< relative to the manifest directory
  int steps = 1;
  bool corner = false;
};

struct SnapshotManifest {
  int version = kManifestVersion;
  ProblemKind kind = ProblemKind::kLinear;
  doe::ParameterSpace space;
  DofLayout layout;
  std::vector<int> bc;  ///< eliminated global DOFs, sorted
  int dofs = 0;         ///< retained DOF count N
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  ///< directory holding manifest.json (not serialised)

  /// DOF class of every retained DOF, in retained order.
  std::vector<std::string> retained_classes() const;
  std::filesystem::path entry_dir(const ManifestEntry& e) const { return root / e.path; }
};

/// One experiment: m = 1 column for linear problems, m = N_t columns (steps 1..N_t) otherwise.
struct SnapshotBundle {
  Matrix displacements;                ///< N x m
  std::vector<SparseMatrix> stiffness; ///< m matrices, step order
  Matrix loads;                        ///< N x m
  std::optional<Vector> times;         ///< m + 1 values including t_0 = 0 (nonlinear only)

  int columns() const { return static_cast<int>(displacements.cols()); }
};

SnapshotBundle bundle_from_linear(const fom::LinearSystem& sys, const Vector& u);
SnapshotBundle bundle_from_trajectory(const fom::NonlinearTrajectory& traj);

/// Parses and validates manifest.json (or the one inside a directory) against its entry directories.
/// Any defect is a DataError.
SnapshotManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const SnapshotManifest& m);
SnapshotManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root);
/// Structural checks shared by load_manifest and writers (no file access).
void validate_manifest(const SnapshotManifest& m);

SnapshotBundle read_bundle(const SnapshotManifest& m, const ManifestEntry& e);
void write_bundle(const std::filesystem::path& dir, const doe::ParameterSpace& space, const ManifestEntry& e,
                  const SnapshotBundle& b);

/// Accumulates entries below a root directory and writes manifest.json on finish().
/// add() may be called concurrently from several workers.
class SnapshotWriter {
 public:
  SnapshotWriter(std::filesystem::path root, ProblemKind kind, doe::ParameterSpace space, DofLayout layout,
                 std::vector<int> bc, int dofs);

  void add(const std::string& id, const doe::ParameterPoint& params, const SnapshotBundle& bundle, bool corner = false);
  SnapshotManifest finish();

 private:
  SnapshotManifest manifest_;
  std::mutex mutex_;
};

/// Plain text helpers shared by the writers.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace romforge::io
