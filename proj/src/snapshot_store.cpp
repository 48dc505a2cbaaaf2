#include "romforge/snapshot_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "romforge/error.hpp"
#include "romforge/matrix_market.hpp"

namespace romforge::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ProblemKind kind) { return kind == ProblemKind::kLinear ? "linear" : "nonlinear"; }

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "linear") return ProblemKind::kLinear;
  if (s == "nonlinear") return ProblemKind::kNonlinear;
  throw DataError("unknown problem kind '" + s + "' (expected linear or nonlinear)");
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::vector<std::string> SnapshotManifest::retained_classes() const {
  std::vector<std::string> out;
  std::size_t e = 0;
  for (int g = 0; g < layout.full_dofs; ++g) {
    if (e < bc.size() && bc[e] == g) {
      ++e;
      continue;
    }
    out.push_back(layout.local_classes[static_cast<std::size_t>(g % layout.dofs_per_node)]);
  }
  return out;
}

SnapshotBundle bundle_from_linear(const fom::LinearSystem& sys, const Vector& u) {
  SnapshotBundle b;
  b.displacements = u;
  b.loads = sys.load;
  b.stiffness = {sys.stiffness};
  return b;
}

SnapshotBundle bundle_from_trajectory(const fom::NonlinearTrajectory& traj) {
  SnapshotBundle b;
  const int steps = traj.steps();
  b.displacements = traj.displacements.rightCols(steps);
  b.loads = traj.loads.rightCols(steps);
  b.stiffness = traj.avg_stiffness;
  b.times = traj.times;
  return b;
}

void validate_manifest(const SnapshotManifest& m) {
  if (m.version != kManifestVersion)
    throw DataError("manifest: unsupported version " + std::to_string(m.version) + " (this build reads " +
                    std::to_string(kManifestVersion) + ")");
  m.space.validate();
  if (m.layout.dofs_per_node < 1 || static_cast<int>(m.layout.local_classes.size()) != m.layout.dofs_per_node)
    throw DataError("manifest: dof_classes must list one class per local DOF slot");
  if (m.layout.full_dofs < 1) throw DataError("manifest: full_dofs must be positive");
  for (std::size_t k = 0; k < m.bc.size(); ++k) {
    if (m.bc[k] < 0 || m.bc[k] >= m.layout.full_dofs)
      throw DataError("manifest: bc DOF " + std::to_string(m.bc[k]) + " out of range");
    if (k > 0 && m.bc[k] <= m.bc[k - 1]) throw DataError("manifest: bc list must be sorted and unique");
  }
  if (m.dofs != m.layout.full_dofs - static_cast<int>(m.bc.size()))
    throw DataError("manifest: dofs (" + std::to_string(m.dofs) + ") must equal full_dofs minus eliminated DOFs (" +
                    std::to_string(m.layout.full_dofs - static_cast<int>(m.bc.size())) + ")");
  std::set<std::string> ids;
  for (const auto& e : m.entries) {
    if (e.id.empty()) throw DataError("manifest: entry with empty id");
    if (!ids.insert(e.id).second) throw DataError("manifest: duplicate entry id '" + e.id + "'");
    if (e.params.dim() != m.space.dim())
      throw DataError("manifest: entry '" + e.id + "' has " + std::to_string(e.params.dim()) + " parameters, space has " +
                      std::to_string(m.space.dim()));
    if (e.steps < 1) throw DataError("manifest: entry '" + e.id + "' must have at least one step");
    if (m.kind == ProblemKind::kLinear && e.steps != 1)
      throw DataError("manifest: linear entry '" + e.id + "' must have exactly one step");
    if (e.path.empty()) throw DataError("manifest: entry '" + e.id + "' has no path");
  }
}

json manifest_to_json(const SnapshotManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json params = json::object();
    for (std::size_t k = 0; k < m.space.dim(); ++k) params[m.space.names[k]] = e.params.values[k];
    entries.push_back({{"id", e.id}, {"params", params}, {"path", e.path}, {"steps", e.steps}, {"corner", e.corner}});
  }
  return {{"version", m.version},
          {"problem_kind", to_string(m.kind)},
          {"space", doe::space_to_json(m.space)},
          {"full_dofs", m.layout.full_dofs},
          {"dofs_per_node", m.layout.dofs_per_node},
          {"dof_classes", m.layout.local_classes},
          {"bc", m.bc},
          {"dofs", m.dofs},
          {"entries", entries}};
}

SnapshotManifest manifest_from_json(const json& j, const fs::path& root) {
  static const std::set<std::string> kKeys = {"version", "problem_kind", "space", "full_dofs", "dofs_per_node",
                                              "dof_classes", "bc", "dofs", "entries"};
  SnapshotManifest m;
  m.root = root;
  try {
    if (!j.is_object()) throw DataError("manifest: top level must be an object");
    for (const auto& [key, _] : j.items())
      if (!kKeys.count(key)) throw DataError("manifest: unknown key '" + key + "'");
    m.version = j.at("version").get<int>();
    m.kind = problem_kind_from_string(j.at("problem_kind").get<std::string>());
    m.space = doe::space_from_json(j.at("space"));
    m.layout.full_dofs = j.at("full_dofs").get<int>();
    m.layout.dofs_per_node = j.at("dofs_per_node").get<int>();
    m.layout.local_classes = j.at("dof_classes").get<std::vector<std::string>>();
    m.bc = j.at("bc").get<std::vector<int>>();
    m.dofs = j.at("dofs").get<int>();
    for (const auto& ej : j.at("entries")) {
      ManifestEntry e;
      e.id = ej.at("id").get<std::string>();
      const auto& pj = ej.at("params");
      for (const auto& name : m.space.names) {
        if (!pj.contains(name)) throw DataError("manifest: entry '" + e.id + "' lacks parameter '" + name + "'");
        e.params.values.push_back(pj.at(name).get<double>());
      }
      e.path = ej.at("path").get<std::string>();
      e.steps = ej.at("steps").get<int>();
      e.corner = ej.value("corner", false);
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

SnapshotManifest load_manifest(const fs::path& where) {
  const fs::path path = fs::is_directory(where) ? where / "manifest.json" : where;
  if (!fs::exists(path)) throw DataError("manifest not found: " + path.string());
  SnapshotManifest m = manifest_from_json(read_json_file(path), path.parent_path());
  for (const auto& e : m.entries) {
    const fs::path dir = m.entry_dir(e);
    const fs::path u = dir / "u.mm";
    if (!fs::exists(u)) throw DataError("manifest: entry '" + e.id + "' missing " + u.string());
    const auto [rows, cols] = peek_dense_shape(u);
    if (rows != m.dofs)
      throw DataError("manifest: entry '" + e.id + "' has " + std::to_string(rows) + " DOFs, manifest declares " +
                      std::to_string(m.dofs));
    if (cols != e.steps)
      throw DataError("manifest: entry '" + e.id + "' stores " + std::to_string(cols) + " columns for " +
                      std::to_string(e.steps) + " steps");
    if (m.kind == ProblemKind::kNonlinear && !fs::exists(dir / "times.csv"))
      throw DataError("manifest: nonlinear entry '" + e.id + "' missing times.csv");
  }
  return m;
}

namespace {

Vector read_times(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<double> t;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line_no == 1) continue;  // header
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected step,t");
    try {
      t.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad time value");
    }
  }
  return Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
}

}  // namespace

SnapshotBundle read_bundle(const SnapshotManifest& m, const ManifestEntry& e) {
  const fs::path dir = m.entry_dir(e);
  SnapshotBundle b;
  b.displacements = read_dense(dir / "u.mm");
  b.loads = read_dense(dir / "f.mm");
  if (b.displacements.rows() != m.dofs || b.displacements.cols() != e.steps)
    throw DataError(dir.string() + ": u.mm shape does not match manifest");
  if (b.loads.rows() != m.dofs || b.loads.cols() != e.steps)
    throw DataError(dir.string() + ": f.mm shape does not match manifest");
  for (int s = 1; s <= e.steps; ++s) {
    SparseMatrix a = read_sparse(dir / ("A_" + std::to_string(s) + ".mtx"));
    if (a.rows() != m.dofs || a.cols() != m.dofs)
      throw DataError(dir.string() + ": A_" + std::to_string(s) + ".mtx has wrong dimension");
    b.stiffness.push_back(std::move(a));
  }
  if (m.kind == ProblemKind::kNonlinear) {
    Vector t = read_times(dir / "times.csv");
    if (t.size() != e.steps + 1)
      throw DataError(dir.string() + ": times.csv has " + std::to_string(t.size()) + " values, expected " +
                      std::to_string(e.steps + 1));
    if (t[0] != 0.0) throw DataError(dir.string() + ": times must start at 0");
    for (Eigen::Index i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1])) throw DataError(dir.string() + ": times must be strictly increasing");
    b.times = std::move(t);
  }
  return b;
}

void write_bundle(const fs::path& dir, const doe::ParameterSpace& space, const ManifestEntry& e,
                  const SnapshotBundle& b) {
  fs::create_directories(dir);
  json params = json::object();
  for (std::size_t k = 0; k < space.dim(); ++k) params[space.names[k]] = e.params.values[k];
  write_json_file(dir / "params.json", params);
  write_dense(dir / "u.mm", b.displacements);
  write_dense(dir / "f.mm", b.loads);
  for (std::size_t s = 0; s < b.stiffness.size(); ++s)
    write_sparse(dir / ("A_" + std::to_string(s + 1) + ".mtx"), b.stiffness[s]);
  if (b.times) {
    std::string csv = "step,t\n";
    for (Eigen::Index i = 0; i < b.times->size(); ++i) csv += std::to_string(i) + "," + format_double((*b.times)[i]) + "\n";
    write_text_file(dir / "times.csv", csv);
  }
}

SnapshotWriter::SnapshotWriter(fs::path root, ProblemKind kind, doe::ParameterSpace space, DofLayout layout,
                               std::vector<int> bc, int dofs) {
  manifest_.root = std::move(root);
  manifest_.kind = kind;
  manifest_.space = std::move(space);
  manifest_.layout = std::move(layout);
  manifest_.bc = std::move(bc);
  manifest_.dofs = dofs;
  fs::create_directories(manifest_.root);
}

void SnapshotWriter::add(const std::string& id, const doe::ParameterPoint& params, const SnapshotBundle& bundle,
                         bool corner) {
  if (bundle.displacements.rows() != manifest_.dofs)
    throw DataError("snapshot '" + id + "' has " + std::to_string(bundle.displacements.rows()) + " DOFs, expected " +
                    std::to_string(manifest_.dofs));
  ManifestEntry e{id, params, "snap_" + id, bundle.columns(), corner};
  write_bundle(manifest_.root / e.path, manifest_.space, e, bundle);
  std::lock_guard lock(mutex_);
  manifest_.entries.push_back(std::move(e));
}

SnapshotManifest SnapshotWriter::finish() {
  std::lock_guard lock(mutex_);
  std::sort(manifest_.entries.begin(), manifest_.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  validate_manifest(manifest_);
  write_json_file(manifest_.root / "manifest.json", manifest_to_json(manifest_));
  return manifest_;
}

}  // namespace romforge::io
