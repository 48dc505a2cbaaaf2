#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "romforge/doe.hpp"
#include "romforge/fom.hpp"
#include "romforge/nonlinear.hpp"
#include "romforge/snapshot_store.hpp"

namespace romforge::lab {

enum class ModelKind { kPlate, kSpring, kTruss };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Parameter names each built-in model reads from a point, in order.
std::vector<std::string> parameter_names(ModelKind k);

struct SpringConfig {
  int springs = 1;
  double tip_load = 10.0;  ///< [N]
};

/// Settings of one snapshot campaign over a list of parameter points.
struct LabConfig {
  ModelKind model = ModelKind::kPlate;
  fom::PlateGrid grid;
  double plate_load = 1000.0;  ///< centre point force [N]
  fom::LatticeConfig lattice;
  SpringConfig spring;
  int steps = 118;
  double ramp_ratio = 1.0;  ///< 1 = uniform steps, otherwise geometric growth
  fom::FixedPointOptions fixed_point;
};

fom::LoadRamp make_ramp(const LabConfig& cfg);

struct Campaign {
  io::SnapshotManifest manifest;  ///< root left empty for in-memory runs
  std::vector<io::SnapshotBundle> bundles;
};

/// Runs the FOM at every point (worker count `jobs`, results independent of it).
/// Point ids are zero-padded indices; corner flags are carried into the manifest.
Campaign run_campaign(const doe::ParameterSpace& space, const std::vector<doe::PlanPoint>& points,
                      const LabConfig& cfg, int jobs = 1);

/// Writes a campaign as a snapshot directory (manifest.json + snap_<id>/), staged and renamed.
io::SnapshotManifest write_campaign(const std::filesystem::path& dir, const Campaign& c);

}  // namespace romforge::lab
