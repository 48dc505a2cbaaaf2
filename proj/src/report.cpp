#include "romforge/report.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "romforge/error.hpp"
#include "romforge/matrix_market.hpp"

namespace romforge::report {

using io::format_double;
using nlohmann::json;

namespace {

double pct_diff(double ref, double val) {
  if (ref == 0.0) return val == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * std::abs(val - ref) / std::abs(ref);
}

std::vector<bool> membership(const io::SnapshotManifest& manifest, const rom::RomModel& model,
                             const std::vector<rom::SampleRef>& samples) {
  std::vector<bool> train(samples.size(), true);
  const json& p = model.provenance;
  if (p.contains("validation_cases")) {
    std::set<std::string> val;
    for (const auto& id : p.at("validation_cases")) val.insert(id.get<std::string>());
    for (std::size_t i = 0; i < samples.size(); ++i)
      train[i] = !val.count(manifest.entries[static_cast<std::size_t>(samples[i].entry)].id);
  } else if (p.contains("validation_samples")) {
    std::set<std::pair<std::string, int>> val;
    for (const auto& s : p.at("validation_samples")) val.insert({s.at(0).get<std::string>(), s.at(1).get<int>()});
    for (std::size_t i = 0; i < samples.size(); ++i)
      train[i] = !val.count({manifest.entries[static_cast<std::size_t>(samples[i].entry)].id, samples[i].step});
  }
  return train;
}

void summarise_cases(SplitSummary& s, const CaseRow& row) {
  const double n = static_cast<double>(++s.cases);
  s.ml_rel_max = std::max(s.ml_rel_max, row.ml_rel);
  s.ml_rel_mean += (row.ml_rel - s.ml_rel_mean) / n;
  s.ml_mean_deflection_max = std::max(s.ml_mean_deflection_max, row.ml_mean_deflection.all.max_pct);
  s.ml_mean_deflection_mean += (row.ml_mean_deflection.all.mean_pct - s.ml_mean_deflection_mean) / n;
  s.energy_err_max = std::max(s.energy_err_max, pct_diff(row.energy_fom, row.energy_ml));
  s.pod_rel_max = std::max(s.pod_rel_max, row.pod_rel);
}

void summarise_samples(SplitSummary& s, const ValidationReport& r, const std::vector<double>& db, int which) {
  std::vector<int> cols;
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    if (which < 0 || static_cast<int>(r.sample_train[i]) == which) cols.push_back(static_cast<int>(i));
  s.samples = static_cast<int>(cols.size());
  if (cols.empty()) return;
  Matrix ref(r.theta_ref.rows(), static_cast<Eigen::Index>(cols.size()));
  Matrix pred(ref.rows(), ref.cols());
  double sum = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    ref.col(static_cast<Eigen::Index>(k)) = r.theta_ref.col(cols[k]);
    pred.col(static_cast<Eigen::Index>(k)) = r.theta_pred.col(cols[k]);
    sum += db[static_cast<std::size_t>(cols[k])];
    s.delta_b_max = std::max(s.delta_b_max, db[static_cast<std::size_t>(cols[k])]);
  }
  s.delta_b_mean = sum / static_cast<double>(cols.size());
  s.r2 = metrics::r2_scores(ref, pred);
}

}  // namespace

ValidationReport build_report(const io::SnapshotManifest& manifest, const std::vector<io::SnapshotBundle>& bundles,
                              const rom::RomModel& model) {
  if (bundles.size() != manifest.entries.size()) throw DataError("report: bundle count differs from manifest");
  if (manifest.kind != model.kind) throw UsageError("report: model kind does not match the snapshot manifest");
  if (manifest.dofs != model.dofs) throw DataError("report: model and manifest disagree on the DOF count");
  const bool nonlinear = model.kind == io::ProblemKind::kNonlinear;
  const Matrix& v = model.basis.modes;
  const Matrix& phi = model.matrix_basis.modes;
  const int n = model.n();
  const auto classes = manifest.retained_classes();

  ValidationReport rep;
  rep.energy_kind = nonlinear ? "external_work" : "strain_energy";
  for (std::size_t e = 0; e < bundles.size(); ++e)
    for (int c = 0; c < bundles[e].columns(); ++c) rep.samples.push_back({static_cast<int>(e), c + 1});
  rep.sample_train = membership(manifest, model, rep.samples);
  rep.theta_ref.resize(model.r(), static_cast<Eigen::Index>(rep.samples.size()));
  rep.theta_pred.resize(model.r(), static_cast<Eigen::Index>(rep.samples.size()));
  std::vector<double> db(rep.samples.size());

  std::size_t s = 0;
  for (std::size_t e = 0; e < bundles.size(); ++e) {
    const auto& b = bundles[e];
    const auto& entry = manifest.entries[e];
    CaseRow row;
    row.id = entry.id;
    row.steps = b.columns();
    bool any_train = false, any_val = false;
    Matrix bcols(static_cast<Eigen::Index>(n) * n, b.columns());
    for (int c = 0; c < b.columns(); ++c, ++s) {
      const Vector bref = pod::invert_and_vectorize(pod::reduce_system(b.stiffness[static_cast<std::size_t>(c)], v)).values;
      double t = 0.0, dt = 0.0;
      Vector xi_prev = Vector::Zero(n);
      if (nonlinear) {
        t = (*b.times)[c + 1];
        dt = t - (*b.times)[c];
        if (c > 0) xi_prev = v.transpose() * b.displacements.col(c - 1);
      }
      rep.theta_ref.col(static_cast<Eigen::Index>(s)) = pod::project_theta(bref, phi);
      const Vector th = rom::predict_theta(model, model.features.assemble(entry.params, t, dt, xi_prev));
      rep.theta_pred.col(static_cast<Eigen::Index>(s)) = th;
      db[s] = metrics::frobenius_rel_error(bref, pod::vectorize(pod::reconstruct_inverse(th, phi, n)));
      row.delta_b_max = std::max(row.delta_b_max, db[s]);
      row.delta_b_mean += db[s] / b.columns();
      (rep.sample_train[s] ? any_train : any_val) = true;
    }
    row.split = any_train && any_val ? "mixed" : (any_train ? "train" : "validation");

    const Matrix upod = rom::pod_rom_reference(v, b, model.kind);
    const Vector u_fom = b.displacements.col(b.columns() - 1);
    const Vector u_pod = upod.col(upod.cols() - 1);
    Vector u_ml;
    if (nonlinear) {
      const auto traj = rom::run_online_loads(model, entry.params, *b.times, b.loads);
      u_ml = traj.displacements.col(traj.displacements.cols() - 1);
      for (const auto& d : traj.diagnostics) row.out_of_range = row.out_of_range || d.out_of_range;
      Matrix uf = Matrix::Zero(b.displacements.rows(), b.columns() + 1), ff = uf;
      uf.rightCols(b.columns()) = b.displacements;
      ff.rightCols(b.columns()) = b.loads;
      row.energy_fom = metrics::external_work(uf, ff);
      row.energy_pod = metrics::external_work(upod, ff);
      row.energy_ml = metrics::external_work(traj.displacements, ff);
    } else {
      const auto pred = rom::predict_linear(model, entry.params, b.loads.col(0));
      u_ml = pred.u;
      row.out_of_range = pred.diagnostics.out_of_range;
      row.energy_fom = metrics::elastic_energy(u_fom, b.loads.col(0));
      row.energy_pod = metrics::elastic_energy(u_pod, b.loads.col(0));
      row.energy_ml = metrics::elastic_energy(u_ml, b.loads.col(0));
    }
    row.pod_rel = metrics::relative_error_pct(u_fom, u_pod);
    row.ml_rel = metrics::relative_error_pct(u_fom, u_ml);
    row.ml_mean_deflection = metrics::displacement_errors(u_fom, u_ml, classes, metrics::ErrorMode::kMeanDeflection);
    row.ml_per_dof = metrics::displacement_errors(u_fom, u_ml, classes, metrics::ErrorMode::kPerDof);

    summarise_cases(rep.all, row);
    if (row.split == "train") summarise_cases(rep.train, row);
    if (row.split == "validation") summarise_cases(rep.validation, row);
    rep.rows.push_back(std::move(row));
  }
  summarise_samples(rep.all, rep, db, -1);
  summarise_samples(rep.train, rep, db, 1);
  summarise_samples(rep.validation, rep, db, 0);
  return rep;
}

std::string report_csv(const ValidationReport& r) {
  std::set<std::string> classes;
  for (const auto& row : r.rows)
    for (const auto& [k, _] : row.ml_mean_deflection.by_class) classes.insert(k);
  std::ostringstream out;
  out << "case_id,split,steps,delta_b_mean_pct,delta_b_max_pct,pod_rel_pct,ml_rel_pct,ml_md_max_pct,ml_md_mean_pct";
  for (const auto& c : classes) out << ",ml_md_max_pct_" << c << ",ml_md_mean_pct_" << c;
  out << ",ml_perdof_max_pct,ml_perdof_mean_pct,energy_fom,energy_pod,energy_ml,energy_ml_err_pct,out_of_range\n";
  for (const auto& row : r.rows) {
    out << row.id << ',' << row.split << ',' << row.steps << ',' << format_double(row.delta_b_mean) << ','
        << format_double(row.delta_b_max) << ',' << format_double(row.pod_rel) << ',' << format_double(row.ml_rel) << ','
        << format_double(row.ml_mean_deflection.all.max_pct) << ',' << format_double(row.ml_mean_deflection.all.mean_pct);
    for (const auto& c : classes) {
      const auto it = row.ml_mean_deflection.by_class.find(c);
      const metrics::ErrorStats st = it == row.ml_mean_deflection.by_class.end() ? metrics::ErrorStats{} : it->second;
      out << ',' << format_double(st.max_pct) << ',' << format_double(st.mean_pct);
    }
    out << ',' << format_double(row.ml_per_dof.all.max_pct) << ',' << format_double(row.ml_per_dof.all.mean_pct) << ','
        << format_double(row.energy_fom) << ',' << format_double(row.energy_pod) << ',' << format_double(row.energy_ml)
        << ',' << format_double(pct_diff(row.energy_fom, row.energy_ml)) << ',' << (row.out_of_range ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string theta_compare_csv(const ValidationReport& r) {
  std::ostringstream out;
  out << "case_id,step,split,component,theta_ref,theta_pred\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const std::string& id = r.rows[static_cast<std::size_t>(r.samples[i].entry)].id;
    for (Eigen::Index k = 0; k < r.theta_ref.rows(); ++k)
      out << id << ',' << r.samples[i].step << ',' << (r.sample_train[i] ? "train" : "validation") << ',' << k + 1
          << ',' << format_double(r.theta_ref(k, static_cast<Eigen::Index>(i))) << ','
          << format_double(r.theta_pred(k, static_cast<Eigen::Index>(i))) << '\n';
  }
  return out.str();
}

std::string energy_csv(const ValidationReport& r) {
  std::ostringstream out;
  out << "case_id,split,kind,fom,pod_rom,ml_rom,pod_err_pct,ml_err_pct\n";
  for (const auto& row : r.rows)
    out << row.id << ',' << row.split << ',' << r.energy_kind << ',' << format_double(row.energy_fom) << ','
        << format_double(row.energy_pod) << ',' << format_double(row.energy_ml) << ','
        << format_double(pct_diff(row.energy_fom, row.energy_pod)) << ','
        << format_double(pct_diff(row.energy_fom, row.energy_ml)) << '\n';
  return out.str();
}

namespace {

json summary_of(const SplitSummary& s) {
  return {{"cases", s.cases},
          {"samples", s.samples},
          {"delta_b_mean_pct", s.delta_b_mean},
          {"delta_b_max_pct", s.delta_b_max},
          {"ml_rel_mean_pct", s.ml_rel_mean},
          {"ml_rel_max_pct", s.ml_rel_max},
          {"ml_mean_deflection_max_pct", s.ml_mean_deflection_max},
          {"ml_mean_deflection_mean_pct", s.ml_mean_deflection_mean},
          {"energy_err_max_pct", s.energy_err_max},
          {"pod_rel_max_pct", s.pod_rel_max},
          {"theta_r2", s.r2}};
}

}  // namespace

json summary_json(const ValidationReport& r) {
  return {{"energy_kind", r.energy_kind},
          {"all", summary_of(r.all)},
          {"train", summary_of(r.train)},
          {"validation", summary_of(r.validation)}};
}

void write_report(const std::filesystem::path& dir, const ValidationReport& r) {
  rom::write_directory_atomically(dir, [&](const std::filesystem::path& tmp) {
    io::write_text_file(tmp / "report.csv", report_csv(r));
    io::write_text_file(tmp / "theta_compare.csv", theta_compare_csv(r));
    io::write_text_file(tmp / "energy.csv", energy_csv(r));
    io::write_json_file(tmp / "summary.json", summary_json(r));
  });
}

}  // namespace romforge::report
