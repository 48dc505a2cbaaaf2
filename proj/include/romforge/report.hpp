#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "romforge/metrics.hpp"
#include "romforge/offline.hpp"
#include "romforge/online.hpp"
#include "romforge/snapshot_store.hpp"

namespace romforge::report {

/// One manifest case. Displacement figures compare the final state (the single solution
/// for linear cases, the last step of a trajectory otherwise) with the FOM.
struct CaseRow {
  std::string id;
  std::string split;  ///< train | validation | mixed
  int steps = 1;
  double delta_b_mean = 0.0;  ///< Frobenius relative error of the reconstructed inverse [%]
  double delta_b_max = 0.0;
  double pod_rel = 0.0;       ///< ||u_pod - u_fom|| / ||u_fom|| [%]
  double ml_rel = 0.0;        ///< ||u_ml - u_fom|| / ||u_fom|| [%]
  metrics::DisplacementErrors ml_mean_deflection;
  metrics::DisplacementErrors ml_per_dof;
  double energy_fom = 0.0;    ///< strain energy (linear) or external work (nonlinear)
  double energy_pod = 0.0;
  double energy_ml = 0.0;
  bool out_of_range = false;
};

struct SplitSummary {
  int cases = 0;
  double delta_b_mean = 0.0;  ///< over samples of this split
  double delta_b_max = 0.0;
  double ml_rel_mean = 0.0;
  double ml_rel_max = 0.0;
  double ml_mean_deflection_max = 0.0;   ///< max over cases of the per-case DOF maximum
  double ml_mean_deflection_mean = 0.0;  ///< mean over cases of the per-case DOF mean
  double energy_err_max = 0.0;
  double pod_rel_max = 0.0;
  std::vector<double> r2;  ///< per theta component
  int samples = 0;
};

struct ValidationReport {
  std::string energy_kind;  ///< strain_energy | external_work
  std::vector<CaseRow> rows;
  SplitSummary train;
  SplitSummary validation;
  SplitSummary all;
  // per-sample detail for theta_compare.csv
  std::vector<rom::SampleRef> samples;
  std::vector<bool> sample_train;
  Matrix theta_ref;
  Matrix theta_pred;
};

/// Recomputes reference quantities for every manifest case with the model's bases and
/// compares FOM, POD-ROM and ML-ROM. Split membership comes from the model provenance.
ValidationReport build_report(const io::SnapshotManifest& manifest, const std::vector<io::SnapshotBundle>& bundles,
                              const rom::RomModel& model);

std::string report_csv(const ValidationReport& r);
std::string theta_compare_csv(const ValidationReport& r);
std::string energy_csv(const ValidationReport& r);
nlohmann::json summary_json(const ValidationReport& r);

/// report.csv, theta_compare.csv, energy.csv and summary.json written atomically into `dir`.
void write_report(const std::filesystem::path& dir, const ValidationReport& r);

}  // namespace romforge::report
