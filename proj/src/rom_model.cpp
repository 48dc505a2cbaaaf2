#include "romforge/rom_model.hpp"

#include <unistd.h>

#include <fstream>

#include "romforge/error.hpp"
#include "romforge/matrix_market.hpp"

namespace romforge::rom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string tmp_suffix() { return ".tmp-" + std::to_string(::getpid()); }

}  // namespace

std::string to_string(RegressorKind kind) { return kind == RegressorKind::kForest ? "forest" : "pgd"; }

RegressorKind regressor_kind_from_string(const std::string& s) {
  if (s == "forest" || s == "rf") return RegressorKind::kForest;
  if (s == "pgd" || s == "spgd") return RegressorKind::kPgd;
  throw UsageError("unknown regressor '" + s + "' (expected forest or pgd)");
}

int FeatureLayout::size() const {
  return (mu ? param_dims : 0) + (time ? 1 : 0) + (dt ? 1 : 0) + (xi ? reduced_dims : 0);
}

std::vector<std::string> FeatureLayout::names(const doe::ParameterSpace& space) const {
  std::vector<std::string> out;
  if (mu)
    for (int k = 0; k < param_dims; ++k)
      out.push_back(k < static_cast<int>(space.names.size()) ? space.names[k] : "mu" + std::to_string(k));
  if (time) out.push_back("t");
  if (dt) out.push_back("dt");
  if (xi)
    for (int k = 0; k < reduced_dims; ++k) out.push_back("xi" + std::to_string(k + 1));
  return out;
}

Vector FeatureLayout::assemble(const doe::ParameterPoint& p, double t, double dt_i, const Vector& xi_prev) const {
  Vector f(size());
  Eigen::Index k = 0;
  if (mu) {
    if (static_cast<int>(p.dim()) != param_dims)
      throw DataError("features: parameter point has " + std::to_string(p.dim()) + " values, model expects " +
                      std::to_string(param_dims));
    for (double v : p.values) f[k++] = v;
  }
  if (time) f[k++] = t;
  if (dt) f[k++] = dt_i;
  if (xi) {
    if (xi_prev.size() != reduced_dims) throw DataError("features: reduced state has the wrong size");
    f.segment(k, reduced_dims) = xi_prev;
  }
  return f;
}

json layout_to_json(const FeatureLayout& l) {
  return {{"mu", l.mu}, {"time", l.time}, {"dt", l.dt}, {"xi", l.xi}, {"param_dims", l.param_dims},
          {"reduced_dims", l.reduced_dims}};
}

FeatureLayout layout_from_json(const json& j) {
  FeatureLayout l;
  l.mu = j.at("mu").get<bool>();
  l.time = j.at("time").get<bool>();
  l.dt = j.at("dt").get<bool>();
  l.xi = j.at("xi").get<bool>();
  l.param_dims = j.at("param_dims").get<int>();
  l.reduced_dims = j.at("reduced_dims").get<int>();
  return l;
}

Vector Regressor::predict(const Vector& z) const {
  return std::visit([&](const auto& r) -> Vector { return r.predict(z); }, impl_);
}

Matrix Regressor::predict(const Matrix& z) const {
  return std::visit([&](const auto& r) -> Matrix { return r.predict(z); }, impl_);
}

int Regressor::n_features() const {
  return std::visit([](const auto& r) { return r.n_features(); }, impl_);
}

int Regressor::n_outputs() const {
  return std::visit([](const auto& r) { return r.n_outputs(); }, impl_);
}

json Regressor::to_json() const {
  return std::visit([](const auto& r) { return r.to_json(); }, impl_);
}

void RomModel::validate() const {
  const int nn = n();
  if (nn < 1) throw DataError("model: empty solution basis");
  if (basis.modes.rows() != dofs) throw DataError("model: V has " + std::to_string(basis.modes.rows()) + " rows, expected " + std::to_string(dofs));
  if (matrix_basis.modes.rows() != nn * nn)
    throw DataError("model: Phi has " + std::to_string(matrix_basis.modes.rows()) + " rows, expected n^2 = " +
                    std::to_string(nn * nn));
  if (r() < 1) throw DataError("model: empty matrix basis");
  if (features.reduced_dims != nn || features.param_dims != static_cast<int>(space.dim()))
    throw DataError("model: feature layout disagrees with basis or parameter space");
  if (features.size() < 1) throw DataError("model: feature layout selects no features");
  if (regressor.n_features() != features.size())
    throw DataError("model: regressor expects " + std::to_string(regressor.n_features()) + " features, layout has " +
                    std::to_string(features.size()));
  if (regressor.n_outputs() != r())
    throw DataError("model: regressor predicts " + std::to_string(regressor.n_outputs()) + " coefficients, R = " +
                    std::to_string(r()));
  if (feature_scaler.dims() != features.size() || target_scaler.dims() != r())
    throw DataError("model: scaler dimensions disagree with features or R");
  if (feature_lower.size() != features.size() || feature_upper.size() != features.size())
    throw DataError("model: feature support has the wrong size");
  if (reduced_reference_load.size() != nn) throw DataError("model: reduced reference load has the wrong size");
  if (kind == io::ProblemKind::kNonlinear && (ramp_times.size() < 2 || ramp_times.size() != ramp_factors.size()))
    throw DataError("model: nonlinear model without a valid training ramp");
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + tmp_suffix());
  io::write_text_file(tmp, content);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

void write_directory_atomically(const fs::path& dir, const std::function<void(const fs::path&)>& fill) {
  const fs::path target = dir.has_filename() ? dir : dir.parent_path();
  fs::path parent = target.parent_path();
  if (parent.empty()) parent = ".";
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw DataError("cannot create '" + parent.string() + "': " + ec.message());
  const fs::path tmp = parent / ("." + target.filename().string() + tmp_suffix());
  fs::remove_all(tmp);
  fs::create_directory(tmp);
  try {
    fill(tmp);
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  if (fs::exists(target)) {
    const fs::path old = parent / ("." + target.filename().string() + ".old" + tmp_suffix());
    fs::remove_all(old);
    fs::rename(target, old);
    fs::rename(tmp, target);
    fs::remove_all(old);
  } else {
    fs::rename(tmp, target);
  }
}

void save_model(const fs::path& dir, const RomModel& m) {
  m.validate();
  json meta = {
      {"format", "romforge-model"},
      {"version", kModelFormatVersion},
      {"kind", io::to_string(m.kind)},
      {"space", doe::space_to_json(m.space)},
      {"dofs", m.dofs},
      {"full_dofs", m.dof_layout.full_dofs},
      {"dofs_per_node", m.dof_layout.dofs_per_node},
      {"dof_classes", m.dof_layout.local_classes},
      {"bc", m.bc},
      {"basis",
       {{"n", m.n()},
        {"truncation_ratio", m.basis.truncation_ratio},
        {"spectrum", to_std(m.basis.spectrum)},
        {"full_spectrum", to_std(m.basis.full_spectrum)}}},
      {"matrix_basis",
       {{"R", m.r()},
        {"complete", m.complete_matrix_basis},
        {"spectrum", to_std(m.matrix_basis.spectrum)},
        {"full_spectrum", to_std(m.matrix_basis.full_spectrum)}}},
      {"features", layout_to_json(m.features)},
      {"feature_names", m.features.names(m.space)},
      {"feature_lower", to_std(m.feature_lower)},
      {"feature_upper", to_std(m.feature_upper)},
      {"regressor", to_string(m.regressor.kind())},
      {"provenance", m.provenance},
  };
  meta["reduced_load"] = to_std(m.reduced_reference_load);
  if (m.kind == io::ProblemKind::kNonlinear) meta["ramp"] = {{"times", m.ramp_times}, {"factors", m.ramp_factors}};
  const json scalers = {{"features", ml::scaler_to_json(m.feature_scaler)},
                        {"targets", ml::scaler_to_json(m.target_scaler)}};

  write_directory_atomically(dir, [&](const fs::path& tmp) {
    io::write_json_file(tmp / "meta.json", meta);
    io::write_dense(tmp / "V.mm", m.basis.modes);
    io::write_dense(tmp / "Phi.mm", m.matrix_basis.modes);
    io::write_json_file(tmp / "scaler.json", scalers);
    io::write_json_file(tmp / (m.regressor.kind() == RegressorKind::kForest ? "forest.json" : "pgd.json"),
                        m.regressor.to_json());
  });
}

RomModel load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("model bundle '" + dir.string() + "' does not exist");
  RomModel m;
  try {
    const json meta = io::read_json_file(dir / "meta.json");
    static const std::vector<std::string> known = {
        "format", "version", "kind", "space", "dofs", "full_dofs", "dofs_per_node", "dof_classes", "bc", "basis",
        "matrix_basis", "features", "feature_names", "feature_lower", "feature_upper", "regressor", "provenance", "ramp", "reduced_load"};
    for (const auto& [key, _] : meta.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw DataError("meta.json: unknown key '" + key + "'");
    if (meta.at("format").get<std::string>() != "romforge-model") throw DataError("meta.json: not a romforge model");
    const int version = meta.at("version").get<int>();
    if (version != kModelFormatVersion) throw DataError("meta.json: unsupported model version " + std::to_string(version));
    m.kind = io::problem_kind_from_string(meta.at("kind").get<std::string>());
    m.space = doe::space_from_json(meta.at("space"));
    m.dofs = meta.at("dofs").get<int>();
    m.dof_layout.full_dofs = meta.at("full_dofs").get<int>();
    m.dof_layout.dofs_per_node = meta.at("dofs_per_node").get<int>();
    m.dof_layout.local_classes = meta.at("dof_classes").get<std::vector<std::string>>();
    m.bc = meta.at("bc").get<std::vector<int>>();
    const auto& jb = meta.at("basis");
    m.basis.truncation_ratio = jb.at("truncation_ratio").get<double>();
    m.basis.spectrum = to_vector(jb.at("spectrum"));
    m.basis.full_spectrum = to_vector(jb.at("full_spectrum"));
    const auto& jm = meta.at("matrix_basis");
    m.complete_matrix_basis = jm.at("complete").get<bool>();
    m.matrix_basis.spectrum = to_vector(jm.at("spectrum"));
    m.matrix_basis.full_spectrum = to_vector(jm.at("full_spectrum"));
    m.features = layout_from_json(meta.at("features"));
    m.feature_lower = to_vector(meta.at("feature_lower"));
    m.feature_upper = to_vector(meta.at("feature_upper"));
    m.provenance = meta.at("provenance");
    if (meta.contains("ramp")) {
      const auto& jr = meta.at("ramp");
      m.ramp_times = jr.at("times").get<std::vector<double>>();
      m.ramp_factors = jr.at("factors").get<std::vector<double>>();
    }
    m.reduced_reference_load = to_vector(meta.at("reduced_load"));

    m.basis.modes = io::read_dense(dir / "V.mm");
    m.matrix_basis.modes = io::read_dense(dir / "Phi.mm");
    if (m.basis.modes.cols() != jb.at("n").get<int>() || m.matrix_basis.modes.cols() != jm.at("R").get<int>())
      throw DataError("meta.json: n or R disagrees with the stored bases");

    const json scalers = io::read_json_file(dir / "scaler.json");
    m.feature_scaler = ml::scaler_from_json(scalers.at("features"));
    m.target_scaler = ml::scaler_from_json(scalers.at("targets"));

    const auto kind = regressor_kind_from_string(meta.at("regressor").get<std::string>());
    if (kind == RegressorKind::kForest)
      m.regressor = Regressor(ml::RandomForest::from_json(io::read_json_file(dir / "forest.json")));
    else
      m.regressor = Regressor(ml::PgdRegressor::from_json(io::read_json_file(dir / "pgd.json")));
  } catch (const json::exception& e) {
    throw DataError("model bundle '" + dir.string() + "': " + e.what());
  } catch (const UsageError& e) {
    throw DataError("model bundle '" + dir.string() + "': " + e.what());
  }
  m.validate();
  return m;
}

}  // namespace romforge::rom
